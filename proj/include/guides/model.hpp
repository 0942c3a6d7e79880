#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "guides/geometry.hpp"

namespace guides {

using Scalar = std::variant<bool, std::int64_t, double, std::string>;
using Attributes = std::map<std::string, Scalar, std::less<>>;

std::optional<double> as_number(const Scalar& s);
std::string scalar_to_string(const Scalar& s);
nlohmann::json scalar_to_json(const Scalar& s);
/// Throws TypeError for arrays, objects and null.
Scalar scalar_from_json(const nlohmann::json& j);

/// Inclusive range of calendar days, stored as days since 1970-01-01.
struct TimeInterval {
    std::int64_t first_day = 0;
    std::int64_t last_day = 0;

    bool contains(const TimeInterval& o) const { return first_day <= o.first_day && o.last_day <= last_day; }
    bool overlaps(const TimeInterval& o) const { return first_day <= o.last_day && o.first_day <= last_day; }
    std::int64_t length_days() const { return last_day - first_day + 1; }

    friend bool operator==(const TimeInterval&, const TimeInterval&) = default;
};

enum class Granularity { year, month, day };

std::int64_t days_from_civil(int year, unsigned month, unsigned day);

/// Parses "YYYY", "YYYY-MM", "YYYY-MM-DD" or "<period>/<period>" into the
/// covering day range. Anything finer than a day is rejected.
TimeInterval parse_period(std::string_view text);
std::optional<Granularity> period_granularity(std::string_view text);
std::string format_day(std::int64_t day);
std::string format_interval(const TimeInterval& iv);

enum class LayerKind { pipes, streets, buildings, census, rail, other };
enum class Sensitivity { public_, sensitive };
enum class TemporalResolution { none, day, month, year };

std::string to_string(LayerKind k);
std::string to_string(Sensitivity s);
std::string to_string(TemporalResolution r);
LayerKind layer_kind_from_string(std::string_view s);
Sensitivity sensitivity_from_string(std::string_view s);
TemporalResolution temporal_resolution_from_string(std::string_view s);

struct Layer {
    std::string id;
    std::string name;
    LayerKind kind = LayerKind::other;
    Sensitivity sensitivity = Sensitivity::public_;
    TemporalResolution temporal_resolution = TemporalResolution::none;
    std::optional<TimeInterval> valid_interval;

    friend bool operator==(const Layer&, const Layer&) = default;
};

struct Node {
    std::string id;
    Point2D position;
    std::string layer_id;
    Attributes attributes;
    std::vector<std::string> flag_ids;
    std::optional<TimeInterval> period;

    friend bool operator==(const Node&, const Node&) = default;
};

struct Edge {
    std::string id;
    std::string endpoint_a;
    std::string endpoint_b;
    std::string layer_id;
    Attributes attributes;
    /// Full vertex list including both endpoints; empty for straight segments.
    std::vector<Point2D> polyline;
    std::vector<std::string> flag_ids;
    std::optional<TimeInterval> period;

    const std::string& other(std::string_view node_id) const { return node_id == endpoint_a ? endpoint_b : endpoint_a; }

    friend bool operator==(const Edge&, const Edge&) = default;
};

/// Area feature (building outline, census block) attached to a layer.
struct Footprint {
    std::string id;
    std::string layer_id;
    MultiPolygonGeometry geometry;
    Attributes attributes;
    std::vector<std::string> flag_ids;
    std::optional<TimeInterval> period;

    friend bool operator==(const Footprint&, const Footprint&) = default;
};

namespace edit {
struct AddNode { Node node; };
struct RemoveNode { std::string id; };
struct ModifyNode { Node node; };
struct AddEdge { Edge edge; };
struct RemoveEdge { std::string id; };
struct ModifyEdge { Edge edge; };
struct AddFootprint { Footprint footprint; };
struct RemoveFootprint { std::string id; };
}  // namespace edit

using EditAction = std::variant<edit::AddNode, edit::RemoveNode, edit::ModifyNode, edit::AddEdge,
                                edit::RemoveEdge, edit::ModifyEdge, edit::AddFootprint, edit::RemoveFootprint>;
using EditBatch = std::vector<EditAction>;

/// Multi-layer planar graph. Every edge joins two distinct nodes of its own
/// layer; `revision` increases by one per committed batch.
class InfrastructureNetwork {
public:
    explicit InfrastructureNetwork(double epsilon = kDefaultEpsilon);

    double epsilon() const { return epsilon_; }
    std::uint64_t revision() const { return revision_; }

    const std::map<std::string, Layer>& layers() const { return layers_; }
    const std::map<std::string, Node>& nodes() const { return nodes_; }
    const std::map<std::string, Edge>& edges() const { return edges_; }
    const std::map<std::string, Footprint>& footprints() const { return footprints_; }

    const Layer& layer(std::string_view id) const;
    const Node& node(std::string_view id) const;
    const Edge& edge(std::string_view id) const;
    const Footprint& footprint(std::string_view id) const;
    const Node* find_node(std::string_view id) const;
    const Edge* find_edge(std::string_view id) const;
    bool has_layer(std::string_view id) const { return layers_.find(std::string(id)) != layers_.end(); }
    bool has_entity(std::string_view id) const;

    /// Edge ids incident to a node, sorted.
    const std::set<std::string>& incident_edges(std::string_view node_id) const;

    std::vector<const Node*> layer_nodes(std::string_view layer_id) const;
    std::vector<const Edge*> layer_edges(std::string_view layer_id) const;
    std::vector<const Footprint*> layer_footprints(std::string_view layer_id) const;

    /// Geometry of an edge as a vertex chain (polyline or the straight segment).
    std::vector<Point2D> edge_chain(const Edge& e) const;

    /// Construction-time mutators; they keep referential integrity and do not
    /// touch the revision.
    void add_layer(Layer layer);
    void add_node(Node node);
    void add_edge(Edge edge);
    void add_footprint(Footprint fp);

    /// Atomic commit of a batch. On any integrity violation the network is
    /// left untouched and IntegrityError names the first offending action.
    std::uint64_t apply_edit(const EditBatch& batch);

    /// An unused "<prefix><k>" id, deterministic in the network state;
    /// `reserved` holds ids already handed out for a pending batch.
    std::string unused_id(std::string_view prefix, const std::set<std::string>& reserved = {}) const;

    /// Only for deserialization of a saved network.
    void restore_revision(std::uint64_t revision) { revision_ = revision; }

private:
    void remove_edge_index(const Edge& e);
    void insert_edge_index(const Edge& e);

    double epsilon_;
    std::uint64_t revision_ = 0;
    std::map<std::string, Layer> layers_;
    std::map<std::string, Node> nodes_;
    std::map<std::string, Edge> edges_;
    std::map<std::string, Footprint> footprints_;
    std::map<std::string, std::set<std::string>, std::less<>> incident_;
};

/// Number of edges incident to the node (edges never leave the node's layer).
std::size_t node_degree(const InfrastructureNetwork& net, std::string_view node_id);

/// Degree-1 nodes of a layer in id order.
std::vector<std::string> end_nodes(const InfrastructureNetwork& net, std::string_view layer_id);

nlohmann::json to_json(const Layer& layer);
Layer layer_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Node& n);
Node node_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Edge& e);
Edge edge_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Footprint& f);
Footprint footprint_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EditAction& a);
EditAction edit_action_from_json(const nlohmann::json& j);
EditBatch edit_batch_from_json(const nlohmann::json& j);

nlohmann::json geometry_to_geojson(const Geometry& g);
nlohmann::json multipolygon_to_geojson(const MultiPolygonGeometry& mp);

/// Whole network, keys sorted; equal dumps mean equal networks.
nlohmann::json to_json(const InfrastructureNetwork& net);
InfrastructureNetwork network_from_json(const nlohmann::json& j);
std::string canonical_dump(const InfrastructureNetwork& net);

}  // namespace guides
