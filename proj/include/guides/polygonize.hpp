#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "guides/geometry.hpp"
#include "guides/model.hpp"

namespace guides {

/// A bounded face of the planar embedding of one layer: a minimal closed
/// cycle, walked counter-clockwise.
struct FaceCycle {
    std::vector<std::string> node_ids;  // walk order, first node not repeated
    std::vector<std::string> edge_ids;
    Ring ring;                          // closed, includes polyline vertices
};

/// Ids of the bridge edges of a layer (edges on no cycle).
std::vector<std::string> bridge_edges(const InfrastructureNetwork& net, std::string_view layer_id);

/// Bounded faces of the layer after discarding bridges, in deterministic order.
std::vector<FaceCycle> bounded_faces(const InfrastructureNetwork& net, std::string_view layer_id);

struct PolygonizeResult {
    MultiPolygonGeometry polygons;
    std::vector<FaceCycle> cycles;        // parallel to polygons.polygons
    std::vector<std::string> open_nodes;  // layer nodes on no closed cycle, sorted
};

PolygonizeResult polygonize_layer(const InfrastructureNetwork& net, std::string_view layer_id);

}  // namespace guides
