#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "guides/geometry.hpp"
#include "guides/model.hpp"

namespace guides {

/// Uniform grid over entity bounding boxes. Cell size defaults to twice the
/// median bbox diagonal, falling back to a density-based size for point
/// sets. Immutable once built; rebuild after each commit.
class SpatialIndex {
public:
    struct Entry {
        std::string id;
        BBox box;
        std::string tag;  // layer id
    };

    struct Hit {
        std::string id;
        double distance = 0.0;
    };

    SpatialIndex() = default;
    explicit SpatialIndex(std::vector<Entry> entries, std::uint64_t revision = 0, double cell_size = 0.0);

    std::uint64_t revision() const { return revision_; }
    double cell_size() const { return cell_; }
    std::size_t size() const { return entries_.size(); }

    /// Ids whose boxes intersect `query`, sorted; optionally only one tag.
    std::vector<std::string> query(const BBox& query, std::optional<std::string_view> tag = std::nullopt) const;

    /// Entry with the smallest box distance to p (ties: smaller id), within max_radius.
    /// `accept`, when given, filters candidate ids.
    std::optional<Hit> nearest(Point2D p, double max_radius, std::optional<std::string_view> tag = std::nullopt,
                               const std::function<bool(const std::string&)>& accept = {}) const;

private:
    struct Cell {
        std::int64_t cx;
        std::int64_t cy;
    };
    std::int64_t cell_of(double v, double origin) const;
    static std::uint64_t key(std::int64_t cx, std::int64_t cy);

    std::vector<Entry> entries_;
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> grid_;
    BBox extent_;
    double cell_ = 1.0;
    std::uint64_t revision_ = 0;
};

/// Index of all nodes, tagged with their layer id.
SpatialIndex build_node_index(const InfrastructureNetwork& net);

/// Index of the edges of one layer (or all layers when empty).
SpatialIndex build_edge_index(const InfrastructureNetwork& net, std::string_view layer_id = {});

/// Index of all footprints, tagged with their layer id.
SpatialIndex build_footprint_index(const InfrastructureNetwork& net);

struct NearestNode {
    std::string node_id;
    double distance = 0.0;
};

/// Closest node of `layer_id` within `max_radius` (ties: smaller id).
/// Throws ArgumentError for a negative radius.
std::optional<NearestNode> nearest_node(const SpatialIndex& index, Point2D p, std::string_view layer_id,
                                        double max_radius);

}  // namespace guides
