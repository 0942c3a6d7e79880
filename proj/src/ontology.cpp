#include "guides/ontology.hpp"

#include <algorithm>
#include <deque>

#include "guides/error.hpp"
#include "guides/ingest.hpp"

namespace guides {

using nlohmann::json;

std::string to_string(ClassKind k) {
    switch (k) {
        case ClassKind::domain: return "domain";
        case ClassKind::spatial: return "spatial";
        case ClassKind::temporal: return "temporal";
    }
    return "domain";
}

ClassKind class_kind_from_string(std::string_view s) {
    for (ClassKind k : {ClassKind::domain, ClassKind::spatial, ClassKind::temporal}) {
        if (to_string(k) == s) return k;
    }
    throw ArgumentError("unknown class kind '" + std::string(s) + "'");
}

std::string to_string(MappingRelation r) { return r == MappingRelation::within ? "within" : "overlaps"; }
std::string to_string(MappingAxis a) { return a == MappingAxis::spatial ? "spatial" : "temporal"; }

namespace {

std::optional<Granularity> granularity_named(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (s == "year") return Granularity::year;
    if (s == "month") return Granularity::month;
    if (s == "day") return Granularity::day;
    return std::nullopt;
}

std::string granularity_name(Granularity g) {
    switch (g) {
        case Granularity::year: return "year";
        case Granularity::month: return "month";
        case Granularity::day: return "day";
    }
    return "day";
}

Ring read_ring(const json& coords) {
    Ring ring;
    for (const auto& p : coords) ring.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    return ring;
}

PolygonGeometry read_polygon(const json& coords) {
    std::vector<Ring> rings;
    for (const auto& r : coords) rings.push_back(read_ring(r));
    return make_polygon(std::move(rings));
}

bool is_area(const Geometry& g) {
    return std::holds_alternative<PolygonGeometry>(g) || std::holds_alternative<MultiPolygonGeometry>(g);
}

MultiPolygonGeometry area_of(const Geometry& g) {
    if (const auto* p = std::get_if<PolygonGeometry>(&g)) return to_multipolygon(*p);
    return std::get<MultiPolygonGeometry>(g);
}

double clamp_confidence(double c) { return std::clamp(c, 0.01, 0.99); }

}  // namespace

Geometry geometry_from_geojson(const json& g) {
    const std::string type = g.at("type").get<std::string>();
    const json& c = g.at("coordinates");
    if (type == "Point") return Point2D{c.at(0).get<double>(), c.at(1).get<double>()};
    if (type == "LineString") return LineString{read_ring(c)};
    if (type == "Polygon") return read_polygon(c);
    if (type == "MultiPolygon") {
        MultiPolygonGeometry mp;
        for (const auto& p : c) mp.polygons.push_back(read_polygon(p));
        return mp;
    }
    throw UnsupportedError("unsupported geometry type '" + type + "'");
}

Geometry entity_geometry(const InfrastructureNetwork& net, std::string_view id) {
    if (const Node* n = net.find_node(id)) return n->position;
    if (const Edge* e = net.find_edge(id)) return LineString{net.edge_chain(*e)};
    auto it = net.footprints().find(std::string(id));
    if (it != net.footprints().end()) return it->second.geometry;
    throw NotFoundError("unknown entity '" + std::string(id) + "'");
}

std::optional<TimeInterval> entity_period(const InfrastructureNetwork& net, std::string_view id) {
    if (const Node* n = net.find_node(id)) return n->period;
    if (const Edge* e = net.find_edge(id)) return e->period;
    auto it = net.footprints().find(std::string(id));
    if (it != net.footprints().end()) return it->second.period;
    throw NotFoundError("unknown entity '" + std::string(id) + "'");
}

// ------------------------------------------------------------ loading

const OntologyClass& Ontology::cls(std::string_view id) const {
    auto it = classes_.find(std::string(id));
    if (it == classes_.end()) throw NotFoundError("unknown class '" + std::string(id) + "'");
    return it->second;
}

const OntologyInstance* Ontology::find_instance(std::string_view id) const {
    auto it = instances_.find(std::string(id));
    return it == instances_.end() ? nullptr : &it->second;
}

const OntologyInstance& Ontology::instance(std::string_view id) const {
    const auto* i = find_instance(id);
    if (!i) throw NotFoundError("unknown instance '" + std::string(id) + "'");
    return *i;
}

std::vector<std::string> Ontology::class_ancestors(std::string_view class_id) const {
    std::vector<std::string> out;
    const OntologyClass* c = &cls(class_id);
    while (c->parent) {
        out.push_back(*c->parent);
        c = &cls(*c->parent);
    }
    std::reverse(out.begin(), out.end());
    return out;
}

std::vector<std::string> Ontology::instances_of(std::string_view class_id) const {
    std::vector<std::string> out;
    for (const auto& [id, inst] : instances_) {
        if (inst.class_id == class_id) out.push_back(id);
    }
    return out;
}

std::vector<std::string> Ontology::children(std::string_view instance_id) const {
    auto it = children_.find(std::string(instance_id));
    return it == children_.end() ? std::vector<std::string>{} : it->second;
}

Ontology Ontology::load(const json& doc, const InfrastructureNetwork* net) {
    if (!doc.is_object()) throw ValidationError("ontology document must be a JSON object");
    Ontology o;
    for (const auto& c : doc.value("classes", json::array())) {
        OntologyClass k;
        k.id = c.at("id").get<std::string>();
        k.name = c.value("name", k.id);
        if (c.contains("parent") && !c["parent"].is_null()) k.parent = c["parent"].get<std::string>();
        k.kind = class_kind_from_string(c.value("kind", std::string("domain")));
        if (k.kind == ClassKind::temporal) {
            k.granularity = granularity_named(c.value("granularity", k.name));
            if (!k.granularity) {
                throw ValidationError("temporal class '" + k.id + "' must be Year, Month or Day");
            }
        }
        if (!o.classes_.emplace(k.id, k).second) throw ValidationError("duplicate class id '" + k.id + "'");
    }
    for (const auto& [id, c] : o.classes_) {
        if (c.parent && !o.classes_.count(*c.parent)) {
            throw ValidationError("class '" + id + "' has unknown parent '" + *c.parent + "'");
        }
    }
    // Cycle check: follow parents, report the loop.
    for (const auto& [id, c] : o.classes_) {
        std::vector<std::string> path{id};
        const OntologyClass* cur = &c;
        while (cur->parent) {
            auto loop = std::find(path.begin(), path.end(), *cur->parent);
            if (loop != path.end()) {
                std::string names;
                for (auto it = loop; it != path.end(); ++it) names += *it + " -> ";
                throw ValidationError("class hierarchy cycle: " + names + *cur->parent);
            }
            path.push_back(*cur->parent);
            cur = &o.classes_.at(*cur->parent);
        }
    }
    for (const auto& [id, c] : o.classes_) {
        if (c.kind != ClassKind::temporal || !c.parent) continue;
        const auto& p = o.classes_.at(*c.parent);
        const bool ok = p.kind == ClassKind::temporal &&
                        static_cast<int>(*p.granularity) + 1 == static_cast<int>(*c.granularity);
        if (!ok) throw ValidationError("temporal class '" + id + "' must sit directly under the next coarser level");
    }

    if (doc.contains("footprint_refs")) {
        for (auto it = doc["footprint_refs"].begin(); it != doc["footprint_refs"].end(); ++it) {
            o.footprint_docs_[it.key()] = it.value();
        }
    }
    auto resolve_ref = [&](const std::string& ref) -> std::optional<Geometry> {
        auto it = o.footprint_docs_.find(ref);
        if (it == o.footprint_docs_.end()) {
            if (net && net->has_entity(ref)) return entity_geometry(*net, ref);
            return std::nullopt;
        }
        const json& d = it->second;
        if (d.contains("network_entity")) {
            const auto eid = d["network_entity"].get<std::string>();
            if (!net || !net->has_entity(eid)) return std::nullopt;
            return entity_geometry(*net, eid);
        }
        return geometry_from_geojson(d.contains("geometry") ? d["geometry"] : d);
    };

    for (const auto& i : doc.value("instances", json::array())) {
        OntologyInstance inst;
        inst.id = i.at("id").get<std::string>();
        inst.class_id = i.at("class").get<std::string>();
        inst.label = i.value("label", inst.id);
        auto cit = o.classes_.find(inst.class_id);
        if (cit == o.classes_.end()) {
            throw ValidationError("instance '" + inst.id + "' has unknown class '" + inst.class_id + "'");
        }
        const OntologyClass& c = cit->second;
        if (i.contains("parent") && !i["parent"].is_null()) inst.parent = i["parent"].get<std::string>();
        if (i.contains("payload") && !i["payload"].is_null()) inst.payload_ref = i["payload"].get<std::string>();
        if (i.contains("footprint") && !i["footprint"].is_null()) {
            if (i["footprint"].is_string()) {
                inst.footprint_ref = i["footprint"].get<std::string>();
                inst.footprint = resolve_ref(*inst.footprint_ref);
                if (!inst.footprint) o.warnings_.push_back("instance '" + inst.id + "': footprint '" + *inst.footprint_ref + "' not resolvable");
            } else {
                inst.footprint = geometry_from_geojson(i["footprint"]);
            }
        }
        if (i.contains("period") && !i["period"].is_null()) {
            const auto text = i["period"].get<std::string>();
            inst.period = parse_period(text);
            if (c.kind == ClassKind::temporal && period_granularity(text) != c.granularity) {
                throw ValidationError("instance '" + inst.id + "': period '" + text + "' is not a " +
                                      granularity_name(*c.granularity));
            }
        }
        if (inst.payload_ref && net && net->has_entity(*inst.payload_ref)) {
            if (!inst.footprint) inst.footprint = entity_geometry(*net, *inst.payload_ref);
            if (!inst.period) inst.period = entity_period(*net, *inst.payload_ref);
        }
        switch (c.kind) {
            case ClassKind::temporal:
                if (!inst.period) throw ValidationError("temporal instance '" + inst.id + "' needs a period");
                break;
            case ClassKind::domain:
                if (!inst.payload_ref) throw ValidationError("domain instance '" + inst.id + "' needs a payload reference");
                break;
            case ClassKind::spatial:
                if (inst.footprint && !is_area(*inst.footprint)) {
                    throw ValidationError("spatial instance '" + inst.id + "' needs a polygon footprint");
                }
                if (!inst.footprint) o.warnings_.push_back("spatial instance '" + inst.id + "' has no footprint");
                break;
        }
        if (!o.instances_.emplace(inst.id, inst).second) throw ValidationError("duplicate instance id '" + inst.id + "'");
    }

    // Parent links: explicit ones are checked, missing ones inferred by
    // containment in an instance of the parent class.
    for (auto& [id, inst] : o.instances_) {
        const OntologyClass& c = o.classes_.at(inst.class_id);
        if (inst.parent) {
            const auto* p = o.find_instance(*inst.parent);
            if (!p) throw ValidationError("instance '" + id + "' has unknown parent '" + *inst.parent + "'");
            if (!c.parent || p->class_id != *c.parent) {
                throw ValidationError("instance '" + id + "': parent '" + *inst.parent + "' is not of class " +
                                      (c.parent ? "'" + *c.parent + "'" : "(none)"));
            }
            continue;
        }
        if (!c.parent) continue;
        for (const auto& cand : o.instances_of(*c.parent)) {
            const auto& p = o.instances_.at(cand);
            bool inside = false;
            if (c.kind == ClassKind::temporal) {
                inside = p.period && inst.period && p.period->contains(*inst.period);
            } else if (inst.footprint && p.footprint && is_area(*p.footprint)) {
                inside = predicate(*inst.footprint, *p.footprint, SpatialOp::within) ||
                         fraction_inside(*inst.footprint, area_of(*p.footprint)) >= 1.0;
            }
            if (inside) {
                inst.parent = cand;
                break;
            }
        }
    }
    for (const auto& [id, inst] : o.instances_) {
        if (inst.parent) o.children_[*inst.parent].push_back(id);
    }
    return o;
}

json Ontology::to_json() const {
    json classes = json::array();
    for (const auto& [id, c] : classes_) {
        json j = {{"id", c.id}, {"name", c.name}, {"kind", to_string(c.kind)}};
        if (c.parent) j["parent"] = *c.parent;
        if (c.granularity) j["granularity"] = granularity_name(*c.granularity);
        classes.push_back(j);
    }
    json instances = json::array();
    json refs = json::object();
    for (const auto& [id, i] : instances_) {
        json j = {{"id", i.id}, {"class", i.class_id}, {"label", i.label}};
        if (i.parent) j["parent"] = *i.parent;
        if (i.payload_ref) j["payload"] = *i.payload_ref;
        if (i.period) {
            const auto& g = classes_.at(i.class_id).granularity;
            const std::string first = format_day(i.period->first_day);
            j["period"] = !g || *g == Granularity::day ? format_interval(*i.period)
                          : *g == Granularity::year    ? first.substr(0, 4)
                                                       : first.substr(0, 7);
        }
        if (i.footprint_ref) {
            j["footprint"] = *i.footprint_ref;
            auto it = footprint_docs_.find(*i.footprint_ref);
            if (it != footprint_docs_.end()) refs[*i.footprint_ref] = it->second;
        } else if (i.footprint && !i.payload_ref) {
            j["footprint"] = geometry_to_geojson(*i.footprint);
        }
        instances.push_back(j);
    }
    return {{"classes", classes}, {"instances", instances}, {"footprint_refs", refs}};
}

// ------------------------------------------------------------ hierarchy

std::vector<std::string> resolve_hierarchy(const Ontology& st, std::string_view instance_id, HierarchyDirection direction) {
    const auto& start = st.instance(instance_id);
    std::vector<std::string> out;
    if (direction == HierarchyDirection::ancestors) {
        const OntologyInstance* cur = &start;
        while (cur->parent) {
            out.push_back(*cur->parent);
            cur = &st.instance(*cur->parent);
        }
        std::reverse(out.begin(), out.end());
        return out;
    }
    std::vector<std::string> level{start.id};
    while (!level.empty()) {
        std::vector<std::string> next;
        for (const auto& id : level) {
            for (const auto& child : st.children(id)) next.push_back(child);
        }
        std::sort(next.begin(), next.end());
        out.insert(out.end(), next.begin(), next.end());
        level = std::move(next);
    }
    return out;
}

// ------------------------------------------------------------ matching

namespace {

std::optional<InstanceMapping> spatial_relation(const OntologyInstance& d, const OntologyInstance& s, double eps) {
    if (!d.footprint || !s.footprint || !is_area(*s.footprint)) return std::nullopt;
    const auto region = area_of(*s.footprint);
    if (!bbox_of(*d.footprint).intersects(bbox_of(region))) return std::nullopt;
    const double share = fraction_inside(*d.footprint, region, eps);
    if (share >= 1.0 || predicate(*d.footprint, *s.footprint, SpatialOp::within, eps)) {
        return InstanceMapping{d.id, s.id, MappingRelation::within, MappingAxis::spatial, 1.0};
    }
    if (share > 0.0) return InstanceMapping{d.id, s.id, MappingRelation::overlaps, MappingAxis::spatial, clamp_confidence(share)};
    return std::nullopt;
}

std::optional<InstanceMapping> temporal_relation(const OntologyInstance& d, const OntologyInstance& t) {
    if (!d.period || !t.period) return std::nullopt;
    if (t.period->contains(*d.period)) return InstanceMapping{d.id, t.id, MappingRelation::within, MappingAxis::temporal, 1.0};
    if (!t.period->overlaps(*d.period)) return std::nullopt;
    const auto first = std::max(t.period->first_day, d.period->first_day);
    const auto last = std::min(t.period->last_day, d.period->last_day);
    const double share = static_cast<double>(last - first + 1) / static_cast<double>(d.period->length_days());
    return InstanceMapping{d.id, t.id, MappingRelation::overlaps, MappingAxis::temporal, clamp_confidence(share)};
}

}  // namespace

std::vector<InstanceMapping> match_instances(const Ontology& domain, const Ontology& st, double eps,
                                             std::vector<std::string>* warnings) {
    std::vector<const OntologyInstance*> spatial, temporal;
    for (const auto& [id, inst] : st.instances()) {
        const auto kind = st.cls(inst.class_id).kind;
        if (kind == ClassKind::spatial) {
            if (!inst.footprint) {
                if (warnings) warnings->push_back("spatial instance '" + id + "' skipped: no footprint");
                continue;
            }
            spatial.push_back(&inst);
        } else if (kind == ClassKind::temporal) {
            temporal.push_back(&inst);
        }
    }
    std::vector<InstanceMapping> out;
    for (const auto& [id, d] : domain.instances()) {
        if (domain.cls(d.class_id).kind != ClassKind::domain) continue;
        for (const auto* s : spatial) {
            if (auto m = spatial_relation(d, *s, eps)) out.push_back(*m);
        }
        for (const auto* t : temporal) {
            if (auto m = temporal_relation(d, *t)) out.push_back(*m);
        }
    }
    return out;
}

bool verify_mapping(const InstanceMapping& m, const Ontology& domain, const Ontology& st, double eps) {
    const auto* d = domain.find_instance(m.domain_instance_id);
    const auto* s = st.find_instance(m.st_instance_id);
    if (!d || !s) return false;
    const auto again = m.axis == MappingAxis::spatial ? spatial_relation(*d, *s, eps) : temporal_relation(*d, *s);
    return again && again->relation == m.relation;
}

json to_json(const InstanceMapping& m) {
    return {{"domain_instance", m.domain_instance_id},
            {"st_instance", m.st_instance_id},
            {"relation", to_string(m.relation)},
            {"axis", to_string(m.axis)},
            {"confidence", m.confidence}};
}

// ------------------------------------------------------------ queries

json QueryResult::to_geojson(const InfrastructureNetwork& net) const {
    json layers_json = json::object();
    for (const auto& [layer, ids] : layers) {
        const std::set<std::string> only(ids.begin(), ids.end());
        layers_json[layer] = export_layer_json(net, layer, &only);
    }
    json denied_json = json::array();
    for (const auto& d : denied) denied_json.push_back({{"layer", d.layer_id}, {"reason", d.reason}});
    return {{"layers", layers_json}, {"denied_layers", denied_json}};
}

QueryEngine::QueryEngine(const InfrastructureNetwork& net, const Ontology* st, const Ontology* domain,
                         std::vector<InstanceMapping> mappings)
    : net_(net), st_(st), domain_(domain), mappings_(std::move(mappings)) {
    std::vector<SpatialIndex::Entry> entries;
    for (const auto& [id, n] : net.nodes()) entries.push_back({id, BBox::of(n.position), n.layer_id});
    for (const auto& [id, e] : net.edges()) entries.push_back({id, BBox::of(net.edge_chain(e)), e.layer_id});
    for (const auto& [id, f] : net.footprints()) entries.push_back({id, bbox_of(f.geometry), f.layer_id});
    index_ = SpatialIndex(std::move(entries), net.revision());
}

MultiPolygonGeometry QueryEngine::resolve_region(const QueryRegion& region) const {
    if (const auto* poly = std::get_if<PolygonGeometry>(&region)) {
        validate_polygon(*poly);
        return to_multipolygon(*poly);
    }
    if (const auto* box = std::get_if<BBox>(&region)) {
        if (box->empty() || !(box->area() > 0.0)) throw ArgumentError("query bounding box has no area");
        return to_multipolygon(rectangle(*box));
    }
    const auto& name = std::get<std::string>(region);
    const OntologyInstance* inst = st_ ? st_->find_instance(name) : nullptr;
    if (!inst && st_) {
        for (const auto& [id, i] : st_->instances()) {
            if (i.label == name) {
                inst = &i;
                break;
            }
        }
    }
    if (!inst) throw NotFoundError("unknown region '" + name + "'");
    if (!inst->footprint || !is_area(*inst->footprint)) throw NotFoundError("region '" + name + "' has no area footprint");
    return area_of(*inst->footprint);
}

QueryResult QueryEngine::run(const RegionTimeQuery& q, const AccessPolicy& policy, Role role) const {
    if (q.layer_kinds.empty()) throw ArgumentError("query needs at least one layer kind");
    if (q.predicate == SpatialOp::contains) throw ArgumentError("query predicate must be within, crosses or intersects");
    QueryResult result;
    result.region = resolve_region(q.region);

    std::set<std::string> allowed;
    for (const auto& [id, layer] : net_.layers()) {
        if (!q.layer_kinds.count(layer.kind)) continue;
        const auto d = authorize(policy, role, Capability::read_public, layer);
        if (!d.allowed) {
            result.denied.push_back({id, d.reason});
            continue;
        }
        allowed.insert(id);
        result.layers[id];
    }

    std::set<std::string> candidates;
    for (const auto& id : index_.query(bbox_of(result.region))) candidates.insert(id);
    if (const auto* name = std::get_if<std::string>(&q.region); name && st_ && domain_) {
        std::set<std::string> regions{*name};
        if (st_->find_instance(*name)) {
            for (const auto& d : resolve_hierarchy(*st_, *name, HierarchyDirection::descendants)) regions.insert(d);
        }
        for (const auto& m : mappings_) {
            if (m.axis != MappingAxis::spatial || !regions.count(m.st_instance_id)) continue;
            const auto* d = domain_->find_instance(m.domain_instance_id);
            if (d && d->payload_ref && net_.has_entity(*d->payload_ref)) candidates.insert(*d->payload_ref);
        }
    }

    const Geometry region(result.region);
    for (const auto& id : candidates) {
        std::string layer;
        if (const Node* n = net_.find_node(id)) layer = n->layer_id;
        else if (const Edge* e = net_.find_edge(id)) layer = e->layer_id;
        else layer = net_.footprint(id).layer_id;
        if (!allowed.count(layer)) continue;
        if (q.interval) {
            const auto period = entity_period(net_, id);
            if (period && !period->overlaps(*q.interval)) continue;
        }
        if (predicate(entity_geometry(net_, id), region, q.predicate)) result.layers[layer].push_back(id);
    }
    for (auto& [layer, ids] : result.layers) std::sort(ids.begin(), ids.end());
    return result;
}

QueryResult integrated_query(const RegionTimeQuery& q, const InfrastructureNetwork& net, const Ontology* st,
                             const Ontology* domain, const std::vector<InstanceMapping>& mappings,
                             const AccessPolicy& policy, Role role) {
    return QueryEngine(net, st, domain, mappings).run(q, policy, role);
}

ImpactResult impact_query(const InfrastructureNetwork& net, std::string_view census_layer, std::string_view pipe_edge_id,
                          std::string_view attribute_key) {
    net.layer(census_layer);
    const Edge& edge = net.edge(pipe_edge_id);
    const Geometry line = LineString{net.edge_chain(edge)};
    const BBox box = bbox_of(line);
    ImpactResult r;
    for (const auto* f : net.layer_footprints(census_layer)) {
        if (!bbox_of(f->geometry).intersects(box)) continue;
        const Geometry block = f->geometry;
        if (!predicate(line, block, SpatialOp::within) && !predicate(line, block, SpatialOp::crosses)) continue;
        auto it = f->attributes.find(attribute_key);
        if (it == f->attributes.end()) {
            throw TypeError("block '" + f->id + "' has no attribute '" + std::string(attribute_key) + "'");
        }
        const auto v = as_number(it->second);
        if (!v) throw TypeError("attribute '" + std::string(attribute_key) + "' of block '" + f->id + "' is not numeric");
        r.blocks.push_back(f->id);
        r.sum += *v;
    }
    return r;
}

json to_json(const ImpactResult& r) { return {{"blocks", r.blocks}, {"sum", r.sum}}; }

}  // namespace guides
