#include "guides/geometry.hpp"

#include <algorithm>
#include <cstddef>
#include <utility>

#include "guides/error.hpp"

namespace guides {

namespace {

double cross(Point2D a, Point2D b) { return a.x * b.y - a.y * b.x; }
Point2D sub(Point2D a, Point2D b) { return {a.x - b.x, a.y - b.y}; }
Point2D lerp(Point2D a, Point2D b, double t) { return {a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t}; }

std::size_t distinct_vertices(const Ring& ring) {
    std::vector<Point2D> pts(ring.begin(), ring.end());
    std::sort(pts.begin(), pts.end(), [](Point2D a, Point2D b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    return static_cast<std::size_t>(std::unique(pts.begin(), pts.end()) - pts.begin());
}

void check_ring_shape(const Ring& ring, const char* which) {
    if (ring.size() < 4) {
        throw ValidationError(std::string(which) + " ring needs at least 4 vertices (closed)");
    }
    if (!(ring.front() == ring.back())) {
        throw ValidationError(std::string(which) + " ring is not closed");
    }
    for (const auto& p : ring) {
        if (!is_finite(p)) throw ValidationError(std::string(which) + " ring has non-finite coordinate");
    }
    if (distinct_vertices(ring) < 3) {
        throw ValidationError(std::string(which) + " ring has fewer than 3 distinct vertices");
    }
    const BBox box = BBox::of(ring);
    const double scale = std::max(box.width(), box.height());
    if (std::abs(signed_area(ring)) <= 1e-12 * scale * scale) {
        throw ValidationError(std::string(which) + " ring is degenerate (collinear)");
    }
}

bool on_ring_boundary(Point2D p, const Ring& ring, double eps) {
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
        if (distance_point_to_segment(p, ring[i], ring[i + 1]) <= eps) return true;
    }
    return false;
}

// Even-odd crossing count of a rightward horizontal ray from p.
// Sets vertex_hit when the ray passes exactly through a vertex.
std::size_t ray_crossings(Point2D p, const Ring& ring, bool& vertex_hit) {
    std::size_t count = 0;
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
        const Point2D a = ring[i];
        const Point2D b = ring[i + 1];
        if (a.y == p.y && a.x > p.x) vertex_hit = true;
        if ((a.y > p.y) != (b.y > p.y)) {
            const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if (x > p.x) ++count;
        }
    }
    return count;
}

bool interior_by_ray(Point2D p, const PolygonGeometry& poly, double eps) {
    const BBox box = BBox::of(poly.outer);
    const double scale = std::max({box.width(), box.height(), 1.0});
    // Offsets stay well inside eps so the class of a non-boundary point is unchanged.
    const double step = eps > 0.0 ? eps * 1e-3 : scale * 1e-12;
    constexpr int kRetries = 8;
    std::size_t crossings = 0;
    for (int attempt = 0; attempt <= kRetries; ++attempt) {
        Point2D q = p;
        if (attempt > 0) {
            const int k = (attempt + 1) / 2;
            q.y += (attempt % 2 == 1 ? 1.0 : -1.0) * step * k;
        }
        bool hit = false;
        crossings = ray_crossings(q, poly.outer, hit);
        for (const auto& hole : poly.holes) crossings += ray_crossings(q, hole, hit);
        if (!hit) break;
    }
    return crossings % 2 == 1;
}

Location classify_polygon(Point2D p, const PolygonGeometry& poly, double eps) {
    if (on_ring_boundary(p, poly.outer, eps)) return Location::on_boundary;
    for (const auto& h : poly.holes) {
        if (on_ring_boundary(p, h, eps)) return Location::on_boundary;
    }
    return interior_by_ray(p, poly, eps) ? Location::inside : Location::outside;
}

struct RegionView {
    const MultiPolygonGeometry* mp;
    std::vector<BBox> boxes;
    double eps;

    RegionView(const MultiPolygonGeometry& region, double tolerance) : mp(&region), eps(tolerance) {
        boxes.reserve(region.polygons.size());
        for (const auto& poly : region.polygons) {
            validate_polygon(poly);
            boxes.push_back(BBox::of(poly.outer).expanded(eps));
        }
    }

    Location classify(Point2D p) const {
        bool boundary = false;
        for (std::size_t i = 0; i < mp->polygons.size(); ++i) {
            if (!boxes[i].contains(p)) continue;
            const Location loc = classify_polygon(p, mp->polygons[i], eps);
            if (loc == Location::inside) return Location::inside;
            if (loc == Location::on_boundary) boundary = true;
        }
        return boundary ? Location::on_boundary : Location::outside;
    }

    template <typename Fn>
    void for_each_ring_segment(const BBox& query, Fn&& fn) const {
        for (std::size_t i = 0; i < mp->polygons.size(); ++i) {
            if (!boxes[i].intersects(query)) continue;
            const auto& poly = mp->polygons[i];
            auto visit = [&](const Ring& ring) {
                for (std::size_t k = 0; k + 1 < ring.size(); ++k) fn(ring[k], ring[k + 1]);
            };
            visit(poly.outer);
            for (const auto& h : poly.holes) visit(h);
        }
    }
};

struct ChainClassification {
    bool any_inside = false;
    bool any_outside = false;
    bool any_boundary = false;
    double length_inside = 0.0;  // inside or on boundary
    double length_total = 0.0;
};

// Splits every segment of `chain` at its contacts with the region boundary
// and classifies the split points and the midpoint of each piece.
ChainClassification classify_chain(std::span<const Point2D> chain, const RegionView& region) {
    ChainClassification out;
    const double eps = region.eps;
    for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
        const Point2D p0 = chain[i];
        const Point2D p1 = chain[i + 1];
        const Point2D d = sub(p1, p0);
        const double len = std::hypot(d.x, d.y);
        if (len == 0.0) continue;
        std::vector<double> ts{0.0, 1.0};
        BBox seg_box = BBox::of(p0);
        seg_box.extend(p1);
        region.for_each_ring_segment(seg_box.expanded(eps), [&](Point2D q0, Point2D q1) {
            const Point2D e = sub(q1, q0);
            const double denom = cross(d, e);
            const Point2D w = sub(q0, p0);
            if (std::abs(denom) > 1e-15 * len * std::hypot(e.x, e.y)) {
                const double t = cross(w, e) / denom;
                const double s = cross(w, d) / denom;
                if (t >= 0.0 && t <= 1.0 && s >= 0.0 && s <= 1.0) ts.push_back(t);
            }
            for (const Point2D q : {q0, q1}) {
                if (distance_point_to_segment(q, p0, p1) <= eps) ts.push_back(project_onto_segment(q, p0, p1));
            }
        });
        std::sort(ts.begin(), ts.end());
        ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
        for (std::size_t k = 0; k < ts.size(); ++k) {
            const Location at = region.classify(lerp(p0, p1, ts[k]));
            if (at == Location::on_boundary) out.any_boundary = true;
            if (at == Location::inside) out.any_inside = true;
            if (k + 1 == ts.size()) break;
            const double piece = (ts[k + 1] - ts[k]) * len;
            if (piece <= 0.0) continue;
            const Location mid = region.classify(lerp(p0, p1, 0.5 * (ts[k] + ts[k + 1])));
            switch (mid) {
                case Location::inside:
                    out.any_inside = true;
                    out.length_inside += piece;
                    break;
                case Location::on_boundary:
                    out.any_boundary = true;
                    out.length_inside += piece;
                    break;
                case Location::outside:
                    out.any_outside = true;
                    break;
            }
            out.length_total += piece;
        }
    }
    return out;
}

// Boundary rings of an area geometry as chains.
std::vector<std::span<const Point2D>> boundary_chains(const MultiPolygonGeometry& mp) {
    std::vector<std::span<const Point2D>> out;
    for (const auto& poly : mp.polygons) {
        out.emplace_back(poly.outer);
        for (const auto& h : poly.holes) out.emplace_back(h);
    }
    return out;
}

ChainClassification classify_boundary(const MultiPolygonGeometry& a, const RegionView& b) {
    ChainClassification total;
    for (auto chain : boundary_chains(a)) {
        const auto c = classify_chain(chain, b);
        total.any_inside |= c.any_inside;
        total.any_outside |= c.any_outside;
        total.any_boundary |= c.any_boundary;
        total.length_inside += c.length_inside;
        total.length_total += c.length_total;
    }
    return total;
}

enum class Kind { point, line, area };

Kind kind_of(const Geometry& g) {
    switch (g.index()) {
        case 0: return Kind::point;
        case 1: return Kind::line;
        default: return Kind::area;
    }
}

const char* kind_name(const Geometry& g) {
    switch (g.index()) {
        case 0: return "point";
        case 1: return "linestring";
        case 2: return "polygon";
        default: return "multipolygon";
    }
}

MultiPolygonGeometry as_area(const Geometry& g) {
    if (const auto* p = std::get_if<PolygonGeometry>(&g)) return to_multipolygon(*p);
    return std::get<MultiPolygonGeometry>(g);
}

void check_line(const LineString& line) {
    if (line.points.size() < 2) throw ValidationError("linestring needs at least 2 vertices");
}

// `a op b` where b is an area and a is of equal or lower dimension.
bool predicate_against_area(const Geometry& a, const MultiPolygonGeometry& b, SpatialOp op, double eps) {
    const RegionView region(b, eps);
    switch (kind_of(a)) {
        case Kind::point: {
            const Location loc = region.classify(std::get<Point2D>(a));
            switch (op) {
                case SpatialOp::within: return loc == Location::inside;
                case SpatialOp::intersects: return loc != Location::outside;
                default: return false;
            }
        }
        case Kind::line: {
            const auto& line = std::get<LineString>(a);
            check_line(line);
            const auto c = classify_chain(line.points, region);
            switch (op) {
                case SpatialOp::within: return !c.any_outside && c.any_inside;
                case SpatialOp::crosses: return c.any_inside && c.any_outside;
                case SpatialOp::intersects: return c.any_inside || c.any_boundary;
                default: return false;
            }
        }
        case Kind::area: {
            const MultiPolygonGeometry am = as_area(a);
            const RegionView a_region(am, eps);
            const auto a_in_b = classify_boundary(am, region);
            const auto b_in_a = classify_boundary(b, a_region);
            switch (op) {
                case SpatialOp::within: return !a_in_b.any_outside && !b_in_a.any_inside;
                case SpatialOp::intersects:
                    return a_in_b.any_inside || a_in_b.any_boundary || b_in_a.any_inside ||
                           b_in_a.any_boundary;
                default: return false;  // crosses is not defined for two areas
            }
        }
    }
    return false;
}

}  // namespace

BBox BBox::of(std::span<const Point2D> pts) {
    BBox b;
    for (const auto& p : pts) b.extend(p);
    return b;
}

void BBox::extend(Point2D p) {
    min_x = std::min(min_x, p.x);
    min_y = std::min(min_y, p.y);
    max_x = std::max(max_x, p.x);
    max_y = std::max(max_y, p.y);
}

void BBox::extend(const BBox& o) {
    if (o.empty()) return;
    min_x = std::min(min_x, o.min_x);
    min_y = std::min(min_y, o.min_y);
    max_x = std::max(max_x, o.max_x);
    max_y = std::max(max_y, o.max_y);
}

bool BBox::intersects(const BBox& o) const {
    return !(o.min_x > max_x || o.max_x < min_x || o.min_y > max_y || o.max_y < min_y);
}

bool BBox::contains(Point2D p) const {
    return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y;
}

double BBox::distance_to(Point2D p) const {
    const double dx = std::max({min_x - p.x, 0.0, p.x - max_x});
    const double dy = std::max({min_y - p.y, 0.0, p.y - max_y});
    return std::hypot(dx, dy);
}

std::string to_string(Location loc) {
    switch (loc) {
        case Location::inside: return "inside";
        case Location::on_boundary: return "on_boundary";
        case Location::outside: return "outside";
    }
    return "outside";
}

std::string to_string(SpatialOp op) {
    switch (op) {
        case SpatialOp::within: return "within";
        case SpatialOp::contains: return "contains";
        case SpatialOp::crosses: return "crosses";
        case SpatialOp::intersects: return "intersects";
    }
    return "intersects";
}

SpatialOp spatial_op_from_string(const std::string& s) {
    if (s == "within") return SpatialOp::within;
    if (s == "contains") return SpatialOp::contains;
    if (s == "crosses") return SpatialOp::crosses;
    if (s == "intersects") return SpatialOp::intersects;
    throw ArgumentError("unknown spatial predicate '" + s + "'");
}

double signed_area(std::span<const Point2D> ring) {
    if (ring.size() < 3) return 0.0;
    double twice = 0.0;
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) twice += cross(ring[i], ring[i + 1]);
    if (!(ring.front() == ring.back())) twice += cross(ring.back(), ring.front());
    return 0.5 * twice;
}

double area(const PolygonGeometry& poly) {
    double a = std::abs(signed_area(poly.outer));
    for (const auto& h : poly.holes) a -= std::abs(signed_area(h));
    return a;
}

double area(const MultiPolygonGeometry& mp) {
    double a = 0.0;
    for (const auto& p : mp.polygons) a += area(p);
    return a;
}

PolygonGeometry make_polygon(std::vector<Ring> rings) {
    if (rings.empty()) throw ValidationError("polygon has no rings");
    for (std::size_t i = 0; i < rings.size(); ++i) check_ring_shape(rings[i], i == 0 ? "outer" : "hole");
    PolygonGeometry poly;
    poly.outer = std::move(rings.front());
    if (signed_area(poly.outer) < 0) std::reverse(poly.outer.begin(), poly.outer.end());
    for (std::size_t i = 1; i < rings.size(); ++i) {
        Ring hole = std::move(rings[i]);
        if (signed_area(hole) > 0) std::reverse(hole.begin(), hole.end());
        poly.holes.push_back(std::move(hole));
    }
    return poly;
}

void validate_polygon(const PolygonGeometry& poly) {
    check_ring_shape(poly.outer, "outer");
    if (signed_area(poly.outer) < 0) throw ValidationError("outer ring must be counter-clockwise");
    for (const auto& h : poly.holes) {
        check_ring_shape(h, "hole");
        if (signed_area(h) > 0) throw ValidationError("hole ring must be clockwise");
    }
}

Location point_in_polygon(Point2D p, const PolygonGeometry& poly, double eps) {
    validate_polygon(poly);
    return classify_polygon(p, poly, eps);
}

Location point_in_multipolygon(Point2D p, const MultiPolygonGeometry& mp, double eps) {
    return RegionView(mp, eps).classify(p);
}

bool multipolygon_contains(Point2D p, const MultiPolygonGeometry& mp, double eps) {
    return point_in_multipolygon(p, mp, eps) != Location::outside;
}

std::vector<bool> contains_single_pass(std::span<const Point2D> points, const MultiPolygonGeometry& mp,
                                       double eps) {
    const RegionView region(mp, eps);
    std::vector<bool> out(points.size(), false);
    for (std::size_t i = 0; i < points.size(); ++i) out[i] = region.classify(points[i]) != Location::outside;
    return out;
}

std::vector<bool> contains_per_polygon(std::span<const Point2D> points, const MultiPolygonGeometry& mp,
                                       double eps) {
    std::vector<bool> out(points.size(), false);
    for (const auto& poly : mp.polygons) {
        validate_polygon(poly);
        const BBox box = BBox::of(poly.outer).expanded(eps);
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (out[i] || !box.contains(points[i])) continue;
            out[i] = classify_polygon(points[i], poly, eps) != Location::outside;
        }
    }
    return out;
}

double project_onto_segment(Point2D p, Point2D a, Point2D b) {
    const Point2D d = sub(b, a);
    const double len2 = d.x * d.x + d.y * d.y;
    if (len2 == 0.0) return 0.0;
    const double t = ((p.x - a.x) * d.x + (p.y - a.y) * d.y) / len2;
    return std::clamp(t, 0.0, 1.0);
}

double distance_point_to_segment(Point2D p, Point2D a, Point2D b) {
    return distance(p, lerp(a, b, project_onto_segment(p, a, b)));
}

double distance_point_to_chain(Point2D p, std::span<const Point2D> chain) {
    if (chain.size() < 2) throw ArgumentError("chain needs at least 2 vertices");
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
        best = std::min(best, distance_point_to_segment(p, chain[i], chain[i + 1]));
    }
    return best;
}

BBox bbox_of(const MultiPolygonGeometry& mp) {
    BBox b;
    for (const auto& poly : mp.polygons) b.extend(BBox::of(poly.outer));
    return b;
}

BBox bbox_of(const Geometry& g) {
    return std::visit(
        [](const auto& v) -> BBox {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Point2D>) {
                return BBox::of(v);
            } else if constexpr (std::is_same_v<T, LineString>) {
                return BBox::of(v.points);
            } else if constexpr (std::is_same_v<T, PolygonGeometry>) {
                return BBox::of(v.outer);
            } else {
                return bbox_of(v);
            }
        },
        g);
}

bool predicate(const Geometry& a, const Geometry& b, SpatialOp op, double eps) {
    if (op == SpatialOp::contains) return predicate(b, a, SpatialOp::within, eps);
    const Kind ka = kind_of(a);
    const Kind kb = kind_of(b);
    if (kb != Kind::area && ka != Kind::area) {
        throw UnsupportedError(std::string("unsupported geometry pair ") + kind_name(a) + "/" + kind_name(b));
    }
    if (kb == Kind::area) {
        if (ka == Kind::area || ka == Kind::line || ka == Kind::point) {
            return predicate_against_area(a, as_area(b), op, eps);
        }
    }
    // a is an area, b is a point or line
    switch (op) {
        case SpatialOp::within: return false;  // an area is never within a point or line
        case SpatialOp::crosses:
        case SpatialOp::intersects: return predicate_against_area(b, as_area(a), op, eps);
        default: return false;
    }
}

double fraction_inside(const Geometry& a, const MultiPolygonGeometry& region, double eps) {
    const RegionView view(region, eps);
    switch (kind_of(a)) {
        case Kind::point:
            return view.classify(std::get<Point2D>(a)) != Location::outside ? 1.0 : 0.0;
        case Kind::line: {
            const auto& line = std::get<LineString>(a);
            check_line(line);
            const auto c = classify_chain(line.points, view);
            return c.length_total > 0.0 ? c.length_inside / c.length_total : 0.0;
        }
        case Kind::area: {
            // Cell-centre sampling over the bounding box of a.
            const MultiPolygonGeometry am = as_area(a);
            const RegionView self(am, 0.0);
            const BBox box = bbox_of(am);
            constexpr int kSamples = 64;
            std::size_t in_a = 0;
            std::size_t in_both = 0;
            for (int i = 0; i < kSamples; ++i) {
                for (int j = 0; j < kSamples; ++j) {
                    const Point2D p{box.min_x + (i + 0.5) * box.width() / kSamples,
                                    box.min_y + (j + 0.5) * box.height() / kSamples};
                    if (self.classify(p) == Location::outside) continue;
                    ++in_a;
                    if (view.classify(p) != Location::outside) ++in_both;
                }
            }
            return in_a == 0 ? 0.0 : static_cast<double>(in_both) / static_cast<double>(in_a);
        }
    }
    return 0.0;
}

MultiPolygonGeometry to_multipolygon(const PolygonGeometry& poly) {
    MultiPolygonGeometry mp;
    mp.polygons.push_back(poly);
    return mp;
}

PolygonGeometry rectangle(const BBox& box) {
    return make_polygon({Ring{{box.min_x, box.min_y},
                              {box.max_x, box.min_y},
                              {box.max_x, box.max_y},
                              {box.min_x, box.max_y},
                              {box.min_x, box.min_y}}});
}

}  // namespace guides
