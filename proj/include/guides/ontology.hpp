#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "guides/access.hpp"
#include "guides/geometry.hpp"
#include "guides/model.hpp"
#include "guides/spatial_index.hpp"

namespace guides {

enum class ClassKind { domain, spatial, temporal };

std::string to_string(ClassKind k);
ClassKind class_kind_from_string(std::string_view s);

struct OntologyClass {
    std::string id;
    std::string name;
    std::optional<std::string> parent;
    ClassKind kind = ClassKind::domain;
    std::optional<Granularity> granularity;  // temporal classes only
};

struct OntologyInstance {
    std::string id;
    std::string class_id;
    std::string label;
    std::optional<std::string> footprint_ref;
    std::optional<Geometry> footprint;
    std::optional<TimeInterval> period;
    std::optional<std::string> payload_ref;  // network entity id
    std::optional<std::string> parent;       // instance of the parent class
};

/// Classes, instances and resolved footprints from one JSON document:
/// {"classes": [...], "instances": [...], "footprint_refs": {...}}.
class Ontology {
public:
    /// Footprint refs may point into `net` ({"network_entity": id}); domain
    /// instances without an explicit footprint take their payload's geometry.
    static Ontology load(const nlohmann::json& doc, const InfrastructureNetwork* net = nullptr);

    const std::map<std::string, OntologyClass>& classes() const { return classes_; }
    const std::map<std::string, OntologyInstance>& instances() const { return instances_; }
    const OntologyClass& cls(std::string_view id) const;
    const OntologyInstance& instance(std::string_view id) const;
    const OntologyInstance* find_instance(std::string_view id) const;
    const std::vector<std::string>& warnings() const { return warnings_; }

    /// Ancestor classes, root first.
    std::vector<std::string> class_ancestors(std::string_view class_id) const;
    std::vector<std::string> instances_of(std::string_view class_id) const;
    std::vector<std::string> children(std::string_view instance_id) const;

    nlohmann::json to_json() const;

private:
    std::map<std::string, OntologyClass> classes_;
    std::map<std::string, OntologyInstance> instances_;
    std::map<std::string, nlohmann::json> footprint_docs_;
    std::map<std::string, std::vector<std::string>> children_;
    std::vector<std::string> warnings_;
};

inline Ontology load_ontology(const nlohmann::json& doc, const InfrastructureNetwork* net = nullptr) {
    return Ontology::load(doc, net);
}

/// GeoJSON geometry (Point, LineString, Polygon, MultiPolygon) to a kernel geometry.
Geometry geometry_from_geojson(const nlohmann::json& g);

enum class HierarchyDirection { ancestors, descendants };

/// Instances reached through parent links, root first. Descendants are
/// listed level by level, ids sorted within a level.
std::vector<std::string> resolve_hierarchy(const Ontology& st, std::string_view instance_id, HierarchyDirection direction);

enum class MappingRelation { within, overlaps };
enum class MappingAxis { spatial, temporal };

std::string to_string(MappingRelation r);
std::string to_string(MappingAxis a);

struct InstanceMapping {
    std::string domain_instance_id;
    std::string st_instance_id;
    MappingRelation relation = MappingRelation::within;
    MappingAxis axis = MappingAxis::spatial;
    double confidence = 1.0;

    friend bool operator==(const InstanceMapping&, const InstanceMapping&) = default;
};

/// Spatial: within (1.0) when the spatial footprint contains the domain
/// footprint, overlaps (share inside, clamped to [0.01, 0.99]) when it only
/// partly does. Temporal: the same over periods. Spatial instances without a
/// footprint are skipped and reported through `warnings`.
std::vector<InstanceMapping> match_instances(const Ontology& domain, const Ontology& st, double eps = kDefaultEpsilon,
                                             std::vector<std::string>* warnings = nullptr);

/// Re-checks a mapping's relation against the current footprints/periods.
bool verify_mapping(const InstanceMapping& m, const Ontology& domain, const Ontology& st, double eps = kDefaultEpsilon);

nlohmann::json to_json(const InstanceMapping& m);

using QueryRegion = std::variant<PolygonGeometry, BBox, std::string>;

struct RegionTimeQuery {
    QueryRegion region;  // drawn polygon, bounding box or named spatial instance
    std::optional<TimeInterval> interval;
    std::set<LayerKind> layer_kinds;
    SpatialOp predicate = SpatialOp::within;
};

struct DeniedLayer {
    std::string layer_id;
    std::string reason;

    friend bool operator==(const DeniedLayer&, const DeniedLayer&) = default;
};

struct QueryResult {
    std::map<std::string, std::vector<std::string>> layers;  // layer id -> sorted entity ids
    std::vector<DeniedLayer> denied;
    MultiPolygonGeometry region;

    /// {"layers": {id: FeatureCollection}, "denied_layers": [...]}
    nlohmann::json to_geojson(const InfrastructureNetwork& net) const;
};

/// Geometry of a node, edge or footprint.
Geometry entity_geometry(const InfrastructureNetwork& net, std::string_view entity_id);
std::optional<TimeInterval> entity_period(const InfrastructureNetwork& net, std::string_view entity_id);

/// Query resolution over one network snapshot. Candidates come from the
/// mappings of the named region (and its descendants) plus a spatial index
/// over every entity; each candidate is verified against predicate and
/// interval. A feature without a period matches any interval.
class QueryEngine {
public:
    QueryEngine(const InfrastructureNetwork& net, const Ontology* st = nullptr, const Ontology* domain = nullptr,
                std::vector<InstanceMapping> mappings = {});

    MultiPolygonGeometry resolve_region(const QueryRegion& region) const;
    QueryResult run(const RegionTimeQuery& q, const AccessPolicy& policy, Role role) const;

private:
    const InfrastructureNetwork& net_;
    const Ontology* st_;
    const Ontology* domain_;
    std::vector<InstanceMapping> mappings_;
    SpatialIndex index_;
};

QueryResult integrated_query(const RegionTimeQuery& q, const InfrastructureNetwork& net, const Ontology* st,
                             const Ontology* domain, const std::vector<InstanceMapping>& mappings,
                             const AccessPolicy& policy, Role role);

struct ImpactResult {
    std::vector<std::string> blocks;
    double sum = 0.0;
};

/// Footprints of `census_layer` that contain or are crossed by the edge,
/// and the sum of their numeric `attribute_key`.
ImpactResult impact_query(const InfrastructureNetwork& net, std::string_view census_layer, std::string_view pipe_edge_id,
                          std::string_view attribute_key);

nlohmann::json to_json(const ImpactResult& r);

}  // namespace guides
