#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "guides/geometry.hpp"
#include "guides/model.hpp"

namespace guides {

/// Property keys with this prefix are reserved for round-trip metadata.
inline constexpr std::string_view kReservedPrefix = "_guides_";
inline constexpr std::string_view kFlagsKey = "_guides_flags";
inline constexpr std::string_view kPeriodKey = "_guides_period";
inline constexpr std::string_view kNodeAKey = "_guides_node_a";
inline constexpr std::string_view kNodeBKey = "_guides_node_b";
inline constexpr std::string_view kLayerMember = "_guides_layer";

/// Raw polygon rings as read, before orientation is normalised.
struct RawPolygon {
    std::vector<Ring> rings;
};

struct RawMultiPolygon {
    std::vector<RawPolygon> polygons;
};

using FeatureGeometry = std::variant<Point2D, LineString, RawPolygon, RawMultiPolygon>;

struct FeatureRecord {
    std::size_t index = 0;  // position in the source FeatureCollection
    std::optional<std::string> id;
    FeatureGeometry geometry;
    Attributes properties;  // reserved keys removed
    std::string source_layer;
    std::vector<std::string> flag_ids;
    std::optional<TimeInterval> period;
    std::optional<std::pair<std::string, std::string>> endpoint_refs;
};

struct UnsupportedFeature {
    std::size_t index = 0;
    std::string geometry_type;
};

struct ParsedLayer {
    std::vector<FeatureRecord> features;
    std::vector<UnsupportedFeature> unsupported;
    std::optional<Layer> declared_layer;  // from the `_guides_layer` member, if any
};

/// Parses a GeoJSON FeatureCollection. Malformed JSON raises ParseError with
/// the byte offset; invalid features raise ValidationError naming the index.
/// Geographic CRS declarations are rejected.
ParsedLayer parse_layer(std::string_view document, const Layer& layer_meta);

struct LayerInput {
    Layer layer;
    std::vector<FeatureRecord> features;
};

struct BuildIssue {
    std::string layer_id;
    std::size_t feature_index = 0;
    std::string reason;
};

struct BuildResult {
    InfrastructureNetwork network;
    std::vector<BuildIssue> issues;
};

/// Points become nodes, linestrings become edges between (snapped or new)
/// endpoint nodes, and every edge is split at nodes lying within epsilon of
/// its interior. Polygons become footprints of their layer.
BuildResult build_network(const std::vector<LayerInput>& layers, double epsilon = kDefaultEpsilon);

/// FeatureCollection for one layer: nodes, then edges, then footprints, each
/// in id order. Flag references go under `_guides_flags`.
std::string export_layer(const InfrastructureNetwork& net, std::string_view layer_id);
nlohmann::json export_layer_json(const InfrastructureNetwork& net, std::string_view layer_id);
/// Same, restricted to the given entity ids when `only` is non-null.
nlohmann::json export_layer_json(const InfrastructureNetwork& net, std::string_view layer_id,
                                 const std::set<std::string>* only);

/// Nodes table needs columns id,x,y; edges table id,node_a,node_b. Other
/// columns become attributes. Dangling references raise ValidationError
/// listing every missing id.
InfrastructureNetwork load_tables(std::string_view nodes_csv, std::string_view edges_csv, const Layer& layer_meta,
                                  double epsilon = kDefaultEpsilon);

/// Header-first CSV with RFC 4180 quoting.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

/// Typed attribute value for a CSV cell: bool, integer, float, else string.
Scalar infer_scalar(std::string_view cell);

}  // namespace guides
