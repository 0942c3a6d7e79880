#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace guides {

/// Default merge / boundary tolerance in meters.
inline constexpr double kDefaultEpsilon = 0.01;

/// Planar coordinate in a projected CRS, meters.
struct Point2D {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2D&, const Point2D&) = default;
};

inline double distance(Point2D a, Point2D b) { return std::hypot(a.x - b.x, a.y - b.y); }

inline bool is_finite(Point2D p) { return std::isfinite(p.x) && std::isfinite(p.y); }

struct BBox {
    double min_x = std::numeric_limits<double>::infinity();
    double min_y = std::numeric_limits<double>::infinity();
    double max_x = -std::numeric_limits<double>::infinity();
    double max_y = -std::numeric_limits<double>::infinity();

    static BBox of(Point2D p) { return {p.x, p.y, p.x, p.y}; }
    static BBox of(std::span<const Point2D> pts);

    bool empty() const { return min_x > max_x || min_y > max_y; }
    void extend(Point2D p);
    void extend(const BBox& o);
    BBox expanded(double d) const { return {min_x - d, min_y - d, max_x + d, max_y + d}; }
    bool intersects(const BBox& o) const;
    bool contains(Point2D p) const;
    double width() const { return max_x - min_x; }
    double height() const { return max_y - min_y; }
    double diagonal() const { return empty() ? 0.0 : std::hypot(width(), height()); }
    double area() const { return empty() ? 0.0 : width() * height(); }
    /// Euclidean distance from p to the box; 0 when p is inside.
    double distance_to(Point2D p) const;
};

struct LineString {
    std::vector<Point2D> points;

    friend bool operator==(const LineString&, const LineString&) = default;
};

/// Closed ring: the first vertex is repeated as the last.
using Ring = std::vector<Point2D>;

/// Outer ring counter-clockwise, holes clockwise. Build with make_polygon().
struct PolygonGeometry {
    Ring outer;
    std::vector<Ring> holes;

    friend bool operator==(const PolygonGeometry&, const PolygonGeometry&) = default;
};

struct MultiPolygonGeometry {
    std::vector<PolygonGeometry> polygons;

    friend bool operator==(const MultiPolygonGeometry&, const MultiPolygonGeometry&) = default;
};

using Geometry = std::variant<Point2D, LineString, PolygonGeometry, MultiPolygonGeometry>;

enum class Location { inside, on_boundary, outside };

enum class SpatialOp { within, contains, crosses, intersects };

std::string to_string(Location loc);
std::string to_string(SpatialOp op);
SpatialOp spatial_op_from_string(const std::string& s);

/// Shoelace area; positive for counter-clockwise rings.
double signed_area(std::span<const Point2D> ring);

double area(const PolygonGeometry& poly);
double area(const MultiPolygonGeometry& mp);

/// Validates closure, vertex count and non-zero area, then orients the first
/// ring counter-clockwise and the remaining rings (holes) clockwise.
PolygonGeometry make_polygon(std::vector<Ring> rings);

/// Throws ValidationError when a ring is open, has fewer than three distinct
/// vertices, is collinear, or has the wrong orientation.
void validate_polygon(const PolygonGeometry& poly);

Location point_in_polygon(Point2D p, const PolygonGeometry& poly, double eps = kDefaultEpsilon);
Location point_in_multipolygon(Point2D p, const MultiPolygonGeometry& mp, double eps = kDefaultEpsilon);

/// True when p is inside or on the boundary of any constituent polygon.
bool multipolygon_contains(Point2D p, const MultiPolygonGeometry& mp, double eps = kDefaultEpsilon);

/// Membership of many points, one pass over the points against the whole
/// multipolygon (bounding boxes pre-computed once).
std::vector<bool> contains_single_pass(std::span<const Point2D> points,
                                       const MultiPolygonGeometry& mp,
                                       double eps = kDefaultEpsilon);

/// Same result computed polygon-major: outer loop over polygons, inner loop
/// over points still unresolved.
std::vector<bool> contains_per_polygon(std::span<const Point2D> points,
                                       const MultiPolygonGeometry& mp,
                                       double eps = kDefaultEpsilon);

double distance_point_to_segment(Point2D p, Point2D a, Point2D b);

/// Minimum distance from p to a polyline. Throws ArgumentError for chains
/// with fewer than two vertices.
double distance_point_to_chain(Point2D p, std::span<const Point2D> chain);

/// Parameter t in [0,1] of the projection of p onto segment ab.
double project_onto_segment(Point2D p, Point2D a, Point2D b);

BBox bbox_of(const Geometry& g);
BBox bbox_of(const MultiPolygonGeometry& mp);

/// Simple-features style predicate `a op b`. Supported pairs are
/// point/area, line/area and area/area in either order; areas are polygons
/// or multipolygons. Other pairs throw UnsupportedError.
bool predicate(const Geometry& a, const Geometry& b, SpatialOp op, double eps = kDefaultEpsilon);

/// Fraction of `a` (count for points, length for lines, area for areas)
/// lying inside or on `region`.
double fraction_inside(const Geometry& a, const MultiPolygonGeometry& region,
                       double eps = kDefaultEpsilon);

MultiPolygonGeometry to_multipolygon(const PolygonGeometry& poly);

/// Axis-aligned rectangle as a valid polygon.
PolygonGeometry rectangle(const BBox& box);

}  // namespace guides
