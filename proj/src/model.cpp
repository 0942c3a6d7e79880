#include "guides/model.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <limits>

#include "guides/error.hpp"

namespace guides {

using nlohmann::json;

// ---------------------------------------------------------------- scalars

std::optional<double> as_number(const Scalar& s) {
    if (const auto* i = std::get_if<std::int64_t>(&s)) return static_cast<double>(*i);
    if (const auto* d = std::get_if<double>(&s)) return *d;
    return std::nullopt;
}

std::string scalar_to_string(const Scalar& s) {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, bool>) {
                return v ? "true" : "false";
            } else if constexpr (std::is_same_v<T, std::string>) {
                return v;
            } else {
                return json(v).dump();
            }
        },
        s);
}

json scalar_to_json(const Scalar& s) {
    return std::visit([](const auto& v) { return json(v); }, s);
}

Scalar scalar_from_json(const json& j) {
    switch (j.type()) {
        case json::value_t::boolean: return j.get<bool>();
        case json::value_t::number_integer: return j.get<std::int64_t>();
        case json::value_t::number_unsigned: {
            const auto u = j.get<std::uint64_t>();
            if (u > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
                return static_cast<double>(u);
            }
            return static_cast<std::int64_t>(u);
        }
        case json::value_t::number_float: return j.get<double>();
        case json::value_t::string: return j.get<std::string>();
        default: throw TypeError("attribute values must be scalar, got " + std::string(j.type_name()));
    }
}

// ------------------------------------------------------------------ time

std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
    y -= m <= 2 ? 1 : 0;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const auto yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

namespace {

struct Civil {
    int y;
    unsigned m;
    unsigned d;
};

Civil civil_from_days(std::int64_t z) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const auto doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp < 10 ? mp + 3 : mp - 9;
    const auto y = static_cast<int>(yoe + era * 400 + (m <= 2 ? 1 : 0));
    return {y, m, d};
}

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

unsigned days_in_month(int y, unsigned m) {
    static constexpr unsigned kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    return m == 2 && is_leap(y) ? 29 : kDays[m - 1];
}

int parse_int(std::string_view s, std::string_view whole) {
    int v = 0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || ptr != end || s.empty()) {
        throw ValidationError("invalid period '" + std::string(whole) + "'");
    }
    return v;
}

TimeInterval parse_single_period(std::string_view text, std::string_view whole) {
    if (text.find('T') != std::string_view::npos || text.find(':') != std::string_view::npos) {
        throw ValidationError("period '" + std::string(whole) + "' is finer than a day");
    }
    if (text.size() == 4) {
        const int y = parse_int(text, whole);
        return {days_from_civil(y, 1, 1), days_from_civil(y, 12, 31)};
    }
    if (text.size() == 7 && text[4] == '-') {
        const int y = parse_int(text.substr(0, 4), whole);
        const int m = parse_int(text.substr(5, 2), whole);
        if (m < 1 || m > 12) throw ValidationError("invalid month in period '" + std::string(whole) + "'");
        const auto um = static_cast<unsigned>(m);
        return {days_from_civil(y, um, 1), days_from_civil(y, um, days_in_month(y, um))};
    }
    if (text.size() == 10 && text[4] == '-' && text[7] == '-') {
        const int y = parse_int(text.substr(0, 4), whole);
        const int m = parse_int(text.substr(5, 2), whole);
        const int d = parse_int(text.substr(8, 2), whole);
        if (m < 1 || m > 12) throw ValidationError("invalid month in period '" + std::string(whole) + "'");
        const auto um = static_cast<unsigned>(m);
        if (d < 1 || static_cast<unsigned>(d) > days_in_month(y, um)) {
            throw ValidationError("invalid day in period '" + std::string(whole) + "'");
        }
        const auto day = days_from_civil(y, um, static_cast<unsigned>(d));
        return {day, day};
    }
    throw ValidationError("invalid period '" + std::string(whole) + "'");
}

}  // namespace

TimeInterval parse_period(std::string_view text) {
    const auto slash = text.find('/');
    if (slash == std::string_view::npos) return parse_single_period(text, text);
    const auto first = parse_single_period(text.substr(0, slash), text);
    const auto last = parse_single_period(text.substr(slash + 1), text);
    if (last.last_day < first.first_day) throw ValidationError("period '" + std::string(text) + "' ends before it starts");
    return {first.first_day, last.last_day};
}

std::optional<Granularity> period_granularity(std::string_view text) {
    if (text.find('/') != std::string_view::npos) return std::nullopt;
    switch (text.size()) {
        case 4: return Granularity::year;
        case 7: return Granularity::month;
        case 10: return Granularity::day;
        default: return std::nullopt;
    }
}

std::string format_day(std::int64_t day) {
    const Civil c = civil_from_days(day);
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", c.y, c.m, c.d);
    return buf;
}

std::string format_interval(const TimeInterval& iv) {
    if (iv.first_day == iv.last_day) return format_day(iv.first_day);
    return format_day(iv.first_day) + "/" + format_day(iv.last_day);
}

// ----------------------------------------------------------------- enums

std::string to_string(LayerKind k) {
    switch (k) {
        case LayerKind::pipes: return "pipes";
        case LayerKind::streets: return "streets";
        case LayerKind::buildings: return "buildings";
        case LayerKind::census: return "census";
        case LayerKind::rail: return "rail";
        case LayerKind::other: return "other";
    }
    return "other";
}

std::string to_string(Sensitivity s) { return s == Sensitivity::sensitive ? "sensitive" : "public"; }

std::string to_string(TemporalResolution r) {
    switch (r) {
        case TemporalResolution::none: return "none";
        case TemporalResolution::day: return "day";
        case TemporalResolution::month: return "month";
        case TemporalResolution::year: return "year";
    }
    return "none";
}

LayerKind layer_kind_from_string(std::string_view s) {
    for (auto k : {LayerKind::pipes, LayerKind::streets, LayerKind::buildings, LayerKind::census, LayerKind::rail,
                   LayerKind::other}) {
        if (to_string(k) == s) return k;
    }
    throw ArgumentError("unknown layer kind '" + std::string(s) + "'");
}

Sensitivity sensitivity_from_string(std::string_view s) {
    if (s == "public") return Sensitivity::public_;
    if (s == "sensitive") return Sensitivity::sensitive;
    throw ArgumentError("unknown sensitivity '" + std::string(s) + "'");
}

TemporalResolution temporal_resolution_from_string(std::string_view s) {
    for (auto r : {TemporalResolution::none, TemporalResolution::day, TemporalResolution::month,
                   TemporalResolution::year}) {
        if (to_string(r) == s) return r;
    }
    throw ArgumentError("unknown temporal resolution '" + std::string(s) + "'");
}

// --------------------------------------------------------------- network

InfrastructureNetwork::InfrastructureNetwork(double epsilon) : epsilon_(epsilon) {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw ArgumentError("epsilon must be a finite non-negative number");
}

const Layer& InfrastructureNetwork::layer(std::string_view id) const {
    auto it = layers_.find(std::string(id));
    if (it == layers_.end()) throw NotFoundError("unknown layer '" + std::string(id) + "'");
    return it->second;
}

const Node& InfrastructureNetwork::node(std::string_view id) const {
    if (const auto* n = find_node(id)) return *n;
    throw NotFoundError("unknown node '" + std::string(id) + "'");
}

const Edge& InfrastructureNetwork::edge(std::string_view id) const {
    if (const auto* e = find_edge(id)) return *e;
    throw NotFoundError("unknown edge '" + std::string(id) + "'");
}

const Footprint& InfrastructureNetwork::footprint(std::string_view id) const {
    auto it = footprints_.find(std::string(id));
    if (it == footprints_.end()) throw NotFoundError("unknown footprint '" + std::string(id) + "'");
    return it->second;
}

const Node* InfrastructureNetwork::find_node(std::string_view id) const {
    auto it = nodes_.find(std::string(id));
    return it == nodes_.end() ? nullptr : &it->second;
}

const Edge* InfrastructureNetwork::find_edge(std::string_view id) const {
    auto it = edges_.find(std::string(id));
    return it == edges_.end() ? nullptr : &it->second;
}

bool InfrastructureNetwork::has_entity(std::string_view id) const {
    const std::string key(id);
    return nodes_.count(key) || edges_.count(key) || footprints_.count(key);
}

const std::set<std::string>& InfrastructureNetwork::incident_edges(std::string_view node_id) const {
    static const std::set<std::string> kNone;
    auto it = incident_.find(node_id);
    return it == incident_.end() ? kNone : it->second;
}

std::vector<const Node*> InfrastructureNetwork::layer_nodes(std::string_view layer_id) const {
    std::vector<const Node*> out;
    for (const auto& [id, n] : nodes_) {
        if (n.layer_id == layer_id) out.push_back(&n);
    }
    return out;
}

std::vector<const Edge*> InfrastructureNetwork::layer_edges(std::string_view layer_id) const {
    std::vector<const Edge*> out;
    for (const auto& [id, e] : edges_) {
        if (e.layer_id == layer_id) out.push_back(&e);
    }
    return out;
}

std::vector<const Footprint*> InfrastructureNetwork::layer_footprints(std::string_view layer_id) const {
    std::vector<const Footprint*> out;
    for (const auto& [id, f] : footprints_) {
        if (f.layer_id == layer_id) out.push_back(&f);
    }
    return out;
}

std::vector<Point2D> InfrastructureNetwork::edge_chain(const Edge& e) const {
    if (!e.polyline.empty()) return e.polyline;
    return {node(e.endpoint_a).position, node(e.endpoint_b).position};
}

void InfrastructureNetwork::add_layer(Layer layer) {
    if (layer.id.empty()) throw ValidationError("layer id must not be empty");
    if (layers_.count(layer.id)) throw ValidationError("duplicate layer id '" + layer.id + "'");
    layers_.emplace(layer.id, std::move(layer));
}

void InfrastructureNetwork::insert_edge_index(const Edge& e) {
    incident_[e.endpoint_a].insert(e.id);
    incident_[e.endpoint_b].insert(e.id);
}

void InfrastructureNetwork::remove_edge_index(const Edge& e) {
    for (const auto& end : {e.endpoint_a, e.endpoint_b}) {
        auto it = incident_.find(end);
        if (it == incident_.end()) continue;
        it->second.erase(e.id);
        if (it->second.empty()) incident_.erase(it);
    }
}

namespace {

void check_node_shape(const Node& n, const InfrastructureNetwork& net) {
    if (n.id.empty()) throw ValidationError("node id must not be empty");
    if (!is_finite(n.position)) throw ValidationError("node '" + n.id + "' has non-finite coordinates");
    if (!net.has_layer(n.layer_id)) throw ValidationError("node '" + n.id + "' references unknown layer '" + n.layer_id + "'");
}

void check_edge_shape(const Edge& e, const InfrastructureNetwork& net) {
    if (e.id.empty()) throw ValidationError("edge id must not be empty");
    if (!net.has_layer(e.layer_id)) throw ValidationError("edge '" + e.id + "' references unknown layer '" + e.layer_id + "'");
    if (e.endpoint_a == e.endpoint_b) throw ValidationError("edge '" + e.id + "' is a self-loop");
    if (e.polyline.size() == 1) throw ValidationError("edge '" + e.id + "' polyline has a single vertex");
    for (const auto& p : e.polyline) {
        if (!is_finite(p)) throw ValidationError("edge '" + e.id + "' has non-finite coordinates");
    }
}

// Endpoint resolution, layer agreement and polyline/endpoint agreement.
std::optional<std::string> edge_endpoint_problem(const Edge& e, const InfrastructureNetwork& net) {
    const Node* a = net.find_node(e.endpoint_a);
    const Node* b = net.find_node(e.endpoint_b);
    if (!a) return "edge '" + e.id + "' references missing node '" + e.endpoint_a + "'";
    if (!b) return "edge '" + e.id + "' references missing node '" + e.endpoint_b + "'";
    if (a->layer_id != e.layer_id || b->layer_id != e.layer_id) {
        return "edge '" + e.id + "' joins nodes outside its layer '" + e.layer_id + "'";
    }
    if (!e.polyline.empty()) {
        const double eps = net.epsilon();
        if (distance(e.polyline.front(), a->position) > eps || distance(e.polyline.back(), b->position) > eps) {
            return "edge '" + e.id + "' polyline does not end at its endpoints";
        }
    }
    return std::nullopt;
}

void check_footprint_shape(const Footprint& f, const InfrastructureNetwork& net) {
    if (f.id.empty()) throw ValidationError("footprint id must not be empty");
    if (!net.has_layer(f.layer_id)) throw ValidationError("footprint '" + f.id + "' references unknown layer '" + f.layer_id + "'");
    if (f.geometry.polygons.empty()) throw ValidationError("footprint '" + f.id + "' has no polygons");
    for (const auto& p : f.geometry.polygons) validate_polygon(p);
}

}  // namespace

void InfrastructureNetwork::add_node(Node node) {
    check_node_shape(node, *this);
    if (nodes_.count(node.id)) throw ValidationError("duplicate node id '" + node.id + "'");
    nodes_.emplace(node.id, std::move(node));
}

void InfrastructureNetwork::add_edge(Edge edge) {
    check_edge_shape(edge, *this);
    if (edges_.count(edge.id)) throw ValidationError("duplicate edge id '" + edge.id + "'");
    if (auto problem = edge_endpoint_problem(edge, *this)) throw ValidationError(*problem);
    insert_edge_index(edge);
    edges_.emplace(edge.id, std::move(edge));
}

void InfrastructureNetwork::add_footprint(Footprint fp) {
    check_footprint_shape(fp, *this);
    if (footprints_.count(fp.id)) throw ValidationError("duplicate footprint id '" + fp.id + "'");
    footprints_.emplace(fp.id, std::move(fp));
}

std::uint64_t InfrastructureNetwork::apply_edit(const EditBatch& batch) {
    InfrastructureNetwork next = *this;
    // Deferred checks: edges whose endpoints may be resolved later in the batch.
    std::map<std::string, std::size_t> touched_edges;
    std::map<std::string, std::size_t> removed_nodes;
    std::map<std::string, std::size_t> moved_nodes;

    for (std::size_t i = 0; i < batch.size(); ++i) {
        try {
            std::visit(
                [&](const auto& action) {
                    using T = std::decay_t<decltype(action)>;
                    if constexpr (std::is_same_v<T, edit::AddNode>) {
                        check_node_shape(action.node, next);
                        if (next.nodes_.count(action.node.id)) {
                            throw ValidationError("node '" + action.node.id + "' already exists");
                        }
                        next.nodes_.emplace(action.node.id, action.node);
                        removed_nodes.erase(action.node.id);
                        moved_nodes[action.node.id] = i;
                    } else if constexpr (std::is_same_v<T, edit::RemoveNode>) {
                        if (!next.nodes_.erase(action.id)) throw ValidationError("node '" + action.id + "' does not exist");
                        removed_nodes[action.id] = i;
                        moved_nodes.erase(action.id);
                    } else if constexpr (std::is_same_v<T, edit::ModifyNode>) {
                        check_node_shape(action.node, next);
                        auto it = next.nodes_.find(action.node.id);
                        if (it == next.nodes_.end()) throw ValidationError("node '" + action.node.id + "' does not exist");
                        it->second = action.node;
                        moved_nodes[action.node.id] = i;
                    } else if constexpr (std::is_same_v<T, edit::AddEdge>) {
                        check_edge_shape(action.edge, next);
                        if (next.edges_.count(action.edge.id)) {
                            throw ValidationError("edge '" + action.edge.id + "' already exists");
                        }
                        next.insert_edge_index(action.edge);
                        next.edges_.emplace(action.edge.id, action.edge);
                        touched_edges[action.edge.id] = i;
                    } else if constexpr (std::is_same_v<T, edit::RemoveEdge>) {
                        auto it = next.edges_.find(action.id);
                        if (it == next.edges_.end()) throw ValidationError("edge '" + action.id + "' does not exist");
                        next.remove_edge_index(it->second);
                        next.edges_.erase(it);
                        touched_edges.erase(action.id);
                    } else if constexpr (std::is_same_v<T, edit::ModifyEdge>) {
                        check_edge_shape(action.edge, next);
                        auto it = next.edges_.find(action.edge.id);
                        if (it == next.edges_.end()) throw ValidationError("edge '" + action.edge.id + "' does not exist");
                        next.remove_edge_index(it->second);
                        it->second = action.edge;
                        next.insert_edge_index(it->second);
                        touched_edges[action.edge.id] = i;
                    } else if constexpr (std::is_same_v<T, edit::AddFootprint>) {
                        check_footprint_shape(action.footprint, next);
                        if (next.footprints_.count(action.footprint.id)) {
                            throw ValidationError("footprint '" + action.footprint.id + "' already exists");
                        }
                        next.footprints_.emplace(action.footprint.id, action.footprint);
                    } else if constexpr (std::is_same_v<T, edit::RemoveFootprint>) {
                        if (!next.footprints_.erase(action.id)) {
                            throw ValidationError("footprint '" + action.id + "' does not exist");
                        }
                    }
                },
                batch[i]);
        } catch (const ValidationError& e) {
            throw IntegrityError(std::string("action ") + std::to_string(i) + ": " + e.what(), i);
        }
    }

    // Every edge whose endpoints might have changed state is re-checked; the
    // blamed action is the later of the edge's own action and the node action.
    std::optional<std::pair<std::size_t, std::string>> first;
    auto consider = [&](const Edge& e, std::size_t own_index) {
        auto problem = edge_endpoint_problem(e, next);
        if (!problem) return;
        std::size_t blame = own_index;
        for (const auto& end : {e.endpoint_a, e.endpoint_b}) {
            if (auto r = removed_nodes.find(end); r != removed_nodes.end()) blame = std::max(blame, r->second);
            if (auto m = moved_nodes.find(end); m != moved_nodes.end()) blame = std::max(blame, m->second);
        }
        if (!first || blame < first->first) first = std::make_pair(blame, *problem);
    };
    for (const auto& [id, index] : touched_edges) consider(next.edges_.at(id), index);
    auto check_incident = [&](const std::map<std::string, std::size_t>& nodes) {
        for (const auto& [node_id, index] : nodes) {
            for (const auto& edge_id : next.incident_edges(node_id)) {
                if (!touched_edges.count(edge_id)) consider(next.edges_.at(edge_id), 0);
            }
        }
    };
    check_incident(removed_nodes);
    check_incident(moved_nodes);
    if (first) {
        throw IntegrityError("action " + std::to_string(first->first) + ": " + first->second, first->first);
    }

    next.revision_ = revision_ + 1;
    *this = std::move(next);
    return revision_;
}

std::string InfrastructureNetwork::unused_id(std::string_view prefix, const std::set<std::string>& reserved) const {
    std::size_t k = nodes_.size() + edges_.size() + footprints_.size() + reserved.size() + 1;
    for (;; ++k) {
        std::string candidate = std::string(prefix) + std::to_string(k);
        if (!has_entity(candidate) && !reserved.count(candidate)) return candidate;
    }
}

std::size_t node_degree(const InfrastructureNetwork& net, std::string_view node_id) {
    net.node(node_id);
    return net.incident_edges(node_id).size();
}

std::vector<std::string> end_nodes(const InfrastructureNetwork& net, std::string_view layer_id) {
    net.layer(layer_id);
    std::vector<std::string> out;
    for (const auto* n : net.layer_nodes(layer_id)) {
        if (net.incident_edges(n->id).size() == 1) out.push_back(n->id);
    }
    return out;
}

// ---------------------------------------------------------- serialization

namespace {

json attributes_to_json(const Attributes& attrs) {
    json j = json::object();
    for (const auto& [k, v] : attrs) j[k] = scalar_to_json(v);
    return j;
}

Attributes attributes_from_json(const json& j) {
    Attributes out;
    if (j.is_null()) return out;
    for (auto it = j.begin(); it != j.end(); ++it) out.emplace(it.key(), scalar_from_json(it.value()));
    return out;
}

json point_to_json(Point2D p) { return json::array({p.x, p.y}); }

Point2D point_from_json(const json& j) {
    if (!j.is_array() || j.size() < 2 || !j[0].is_number() || !j[1].is_number()) {
        throw ValidationError("coordinate must be an array of two numbers");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

json points_to_json(std::span<const Point2D> pts) {
    json arr = json::array();
    for (const auto& p : pts) arr.push_back(point_to_json(p));
    return arr;
}

std::vector<Point2D> points_from_json(const json& j) {
    std::vector<Point2D> out;
    for (const auto& p : j) out.push_back(point_from_json(p));
    return out;
}

json polygon_coordinates(const PolygonGeometry& poly) {
    json rings = json::array();
    rings.push_back(points_to_json(poly.outer));
    for (const auto& h : poly.holes) rings.push_back(points_to_json(h));
    return rings;
}

void put_optional_period(json& j, const std::optional<TimeInterval>& period) {
    if (period) j["period"] = format_interval(*period);
}

std::optional<TimeInterval> get_optional_period(const json& j) {
    if (!j.contains("period") || j["period"].is_null()) return std::nullopt;
    return parse_period(j["period"].get<std::string>());
}

}  // namespace

json geometry_to_geojson(const Geometry& g) {
    return std::visit(
        [](const auto& v) -> json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Point2D>) {
                return {{"type", "Point"}, {"coordinates", point_to_json(v)}};
            } else if constexpr (std::is_same_v<T, LineString>) {
                return {{"type", "LineString"}, {"coordinates", points_to_json(v.points)}};
            } else if constexpr (std::is_same_v<T, PolygonGeometry>) {
                return {{"type", "Polygon"}, {"coordinates", polygon_coordinates(v)}};
            } else {
                return multipolygon_to_geojson(v);
            }
        },
        g);
}

json multipolygon_to_geojson(const MultiPolygonGeometry& mp) {
    if (mp.polygons.size() == 1) return {{"type", "Polygon"}, {"coordinates", polygon_coordinates(mp.polygons[0])}};
    json polys = json::array();
    for (const auto& p : mp.polygons) polys.push_back(polygon_coordinates(p));
    return {{"type", "MultiPolygon"}, {"coordinates", polys}};
}

json to_json(const Layer& layer) {
    json j{{"id", layer.id},
           {"name", layer.name},
           {"kind", to_string(layer.kind)},
           {"sensitivity", to_string(layer.sensitivity)},
           {"temporal_resolution", to_string(layer.temporal_resolution)}};
    if (layer.valid_interval) j["valid_interval"] = format_interval(*layer.valid_interval);
    return j;
}

Layer layer_from_json(const json& j) {
    Layer l;
    l.id = j.at("id").get<std::string>();
    l.name = j.value("name", l.id);
    l.kind = layer_kind_from_string(j.value("kind", std::string("other")));
    l.sensitivity = sensitivity_from_string(j.value("sensitivity", std::string("public")));
    l.temporal_resolution = temporal_resolution_from_string(j.value("temporal_resolution", std::string("none")));
    if (j.contains("valid_interval") && !j["valid_interval"].is_null()) {
        l.valid_interval = parse_period(j["valid_interval"].get<std::string>());
    }
    return l;
}

json to_json(const Node& n) {
    json j{{"id", n.id},
           {"layer", n.layer_id},
           {"position", point_to_json(n.position)},
           {"attributes", attributes_to_json(n.attributes)},
           {"flags", n.flag_ids}};
    put_optional_period(j, n.period);
    return j;
}

Node node_from_json(const json& j) {
    Node n;
    n.id = j.at("id").get<std::string>();
    n.layer_id = j.at("layer").get<std::string>();
    n.position = point_from_json(j.at("position"));
    n.attributes = attributes_from_json(j.value("attributes", json::object()));
    n.flag_ids = j.value("flags", std::vector<std::string>{});
    n.period = get_optional_period(j);
    return n;
}

json to_json(const Edge& e) {
    json j{{"id", e.id},
           {"layer", e.layer_id},
           {"a", e.endpoint_a},
           {"b", e.endpoint_b},
           {"polyline", points_to_json(e.polyline)},
           {"attributes", attributes_to_json(e.attributes)},
           {"flags", e.flag_ids}};
    put_optional_period(j, e.period);
    return j;
}

Edge edge_from_json(const json& j) {
    Edge e;
    e.id = j.at("id").get<std::string>();
    e.layer_id = j.at("layer").get<std::string>();
    e.endpoint_a = j.at("a").get<std::string>();
    e.endpoint_b = j.at("b").get<std::string>();
    if (j.contains("polyline")) e.polyline = points_from_json(j["polyline"]);
    e.attributes = attributes_from_json(j.value("attributes", json::object()));
    e.flag_ids = j.value("flags", std::vector<std::string>{});
    e.period = get_optional_period(j);
    return e;
}

json to_json(const Footprint& f) {
    json j{{"id", f.id},
           {"layer", f.layer_id},
           {"geometry", multipolygon_to_geojson(f.geometry)},
           {"attributes", attributes_to_json(f.attributes)},
           {"flags", f.flag_ids}};
    put_optional_period(j, f.period);
    return j;
}

namespace {

PolygonGeometry polygon_from_coordinates(const json& rings) {
    std::vector<Ring> out;
    for (const auto& r : rings) out.push_back(points_from_json(r));
    return make_polygon(std::move(out));
}

}  // namespace

Footprint footprint_from_json(const json& j) {
    Footprint f;
    f.id = j.at("id").get<std::string>();
    f.layer_id = j.at("layer").get<std::string>();
    const json& g = j.at("geometry");
    const std::string type = g.at("type").get<std::string>();
    if (type == "Polygon") {
        f.geometry.polygons.push_back(polygon_from_coordinates(g.at("coordinates")));
    } else if (type == "MultiPolygon") {
        for (const auto& p : g.at("coordinates")) f.geometry.polygons.push_back(polygon_from_coordinates(p));
    } else {
        throw ValidationError("footprint geometry must be Polygon or MultiPolygon");
    }
    f.attributes = attributes_from_json(j.value("attributes", json::object()));
    f.flag_ids = j.value("flags", std::vector<std::string>{});
    f.period = get_optional_period(j);
    return f;
}

json to_json(const EditAction& a) {
    return std::visit(
        [](const auto& action) -> json {
            using T = std::decay_t<decltype(action)>;
            if constexpr (std::is_same_v<T, edit::AddNode>) {
                return {{"op", "add_node"}, {"node", to_json(action.node)}};
            } else if constexpr (std::is_same_v<T, edit::RemoveNode>) {
                return {{"op", "remove_node"}, {"id", action.id}};
            } else if constexpr (std::is_same_v<T, edit::ModifyNode>) {
                return {{"op", "modify_node"}, {"node", to_json(action.node)}};
            } else if constexpr (std::is_same_v<T, edit::AddEdge>) {
                return {{"op", "add_edge"}, {"edge", to_json(action.edge)}};
            } else if constexpr (std::is_same_v<T, edit::RemoveEdge>) {
                return {{"op", "remove_edge"}, {"id", action.id}};
            } else if constexpr (std::is_same_v<T, edit::ModifyEdge>) {
                return {{"op", "modify_edge"}, {"edge", to_json(action.edge)}};
            } else if constexpr (std::is_same_v<T, edit::AddFootprint>) {
                return {{"op", "add_footprint"}, {"footprint", to_json(action.footprint)}};
            } else {
                return {{"op", "remove_footprint"}, {"id", action.id}};
            }
        },
        a);
}

EditAction edit_action_from_json(const json& j) {
    const std::string op = j.at("op").get<std::string>();
    if (op == "add_node") return edit::AddNode{node_from_json(j.at("node"))};
    if (op == "remove_node") return edit::RemoveNode{j.at("id").get<std::string>()};
    if (op == "modify_node") return edit::ModifyNode{node_from_json(j.at("node"))};
    if (op == "add_edge") return edit::AddEdge{edge_from_json(j.at("edge"))};
    if (op == "remove_edge") return edit::RemoveEdge{j.at("id").get<std::string>()};
    if (op == "modify_edge") return edit::ModifyEdge{edge_from_json(j.at("edge"))};
    if (op == "add_footprint") return edit::AddFootprint{footprint_from_json(j.at("footprint"))};
    if (op == "remove_footprint") return edit::RemoveFootprint{j.at("id").get<std::string>()};
    throw ArgumentError("unknown edit op '" + op + "'");
}

EditBatch edit_batch_from_json(const json& j) {
    if (!j.is_array()) throw ArgumentError("edit batch must be an array");
    EditBatch batch;
    for (const auto& a : j) batch.push_back(edit_action_from_json(a));
    return batch;
}

json to_json(const InfrastructureNetwork& net) {
    json layers = json::array();
    for (const auto& [id, l] : net.layers()) layers.push_back(to_json(l));
    json nodes = json::array();
    for (const auto& [id, n] : net.nodes()) nodes.push_back(to_json(n));
    json edges = json::array();
    for (const auto& [id, e] : net.edges()) edges.push_back(to_json(e));
    json footprints = json::array();
    for (const auto& [id, f] : net.footprints()) footprints.push_back(to_json(f));
    return {{"epsilon", net.epsilon()},
            {"revision", net.revision()},
            {"layers", layers},
            {"nodes", nodes},
            {"edges", edges},
            {"footprints", footprints}};
}

InfrastructureNetwork network_from_json(const json& j) {
    InfrastructureNetwork net(j.value("epsilon", kDefaultEpsilon));
    for (const auto& l : j.at("layers")) net.add_layer(layer_from_json(l));
    for (const auto& n : j.at("nodes")) net.add_node(node_from_json(n));
    for (const auto& e : j.at("edges")) net.add_edge(edge_from_json(e));
    if (j.contains("footprints")) {
        for (const auto& f : j["footprints"]) net.add_footprint(footprint_from_json(f));
    }
    net.restore_revision(j.value("revision", std::uint64_t{0}));
    return net;
}

std::string canonical_dump(const InfrastructureNetwork& net) { return to_json(net).dump(); }

}  // namespace guides
