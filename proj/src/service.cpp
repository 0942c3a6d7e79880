#include "guides/service.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "guides/error.hpp"
#include "guides/ingest.hpp"

namespace guides {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NotFoundError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
    const auto tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw NotFoundError("cannot write '" + tmp + "'");
        out << text;
    }
    fs::rename(tmp, path);
}

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string resolve_path(const json& j, const char* key, const std::string& base) {
    if (!j.contains(key) || j[key].is_null()) return {};
    fs::path p = j[key].get<std::string>();
    if (p.is_relative() && !base.empty()) p = fs::path(base) / p;
    return p.string();
}

Response error_response(const Error& e) {
    return {http_status(e.code()), {{"error", e.code()}, {"message", e.what()}}};
}

json parse_body(const std::string& body) {
    if (body.empty()) return json::object();
    try {
        return json::parse(body);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("request body: ") + e.what(), e.byte);
    }
}

QueryRegion region_from_json(const json& r) {
    if (r.is_string()) return r.get<std::string>();
    if (r.is_array()) {
        if (r.size() != 4) throw ArgumentError("bbox must be [min_x, min_y, max_x, max_y]");
        const BBox b{r[0].get<double>(), r[1].get<double>(), r[2].get<double>(), r[3].get<double>()};
        if (!(b.max_x > b.min_x && b.max_y > b.min_y)) throw ArgumentError("bbox has no area");
        return b;
    }
    if (r.is_object() && r.value("type", "") == "Polygon") {
        if (!r.contains("coordinates") || !r["coordinates"].is_array() || r["coordinates"].empty()) {
            throw ValidationError("polygon region needs coordinates");
        }
        auto g = geometry_from_geojson(r);
        return std::get<PolygonGeometry>(g);
    }
    throw ArgumentError("region must be a bbox array, a GeoJSON Polygon or a region name");
}

std::set<std::string> batch_layers(const EditBatch& batch, const InfrastructureNetwork& net) {
    std::set<std::string> out;
    auto of = [&](const std::string& id) {
        if (const Node* n = net.find_node(id)) out.insert(n->layer_id);
        else if (const Edge* e = net.find_edge(id)) out.insert(e->layer_id);
        else if (net.footprints().count(id)) out.insert(net.footprint(id).layer_id);
    };
    for (const auto& a : batch) {
        std::visit(
            [&](const auto& act) {
                using T = std::decay_t<decltype(act)>;
                if constexpr (std::is_same_v<T, edit::AddNode> || std::is_same_v<T, edit::ModifyNode>) {
                    out.insert(act.node.layer_id);
                    of(act.node.id);
                } else if constexpr (std::is_same_v<T, edit::AddEdge> || std::is_same_v<T, edit::ModifyEdge>) {
                    out.insert(act.edge.layer_id);
                    of(act.edge.id);
                } else if constexpr (std::is_same_v<T, edit::AddFootprint>) {
                    out.insert(act.footprint.layer_id);
                } else {
                    of(act.id);
                }
            },
            a);
    }
    return out;
}

bool can_read(const AccessPolicy& policy, Role role, const Layer& layer) {
    return authorize(policy, role, Capability::read_public, layer).allowed;
}

}  // namespace

int http_status(const std::string& code) {
    if (code == "argument" || code == "validation" || code == "parse" || code == "type") return 400;
    if (code == "unauthorized") return 403;
    if (code == "not_found") return 404;
    if (code == "conflict" || code == "integrity") return 409;
    if (code == "unsupported") return 422;
    return 500;
}

void set_listen(ServiceConfig& cfg, std::string_view listen) {
    const auto colon = listen.rfind(':');
    if (colon == std::string_view::npos) throw ArgumentError("listen address must be host:port");
    const std::string port(listen.substr(colon + 1));
    char* end = nullptr;
    const long p = std::strtol(port.c_str(), &end, 10);
    if (port.empty() || *end != '\0' || p < 0 || p > 65535) throw ArgumentError("bad port in '" + std::string(listen) + "'");
    if (colon > 0) cfg.host = std::string(listen.substr(0, colon));
    cfg.port = static_cast<int>(p);
}

void apply_env_overrides(ServiceConfig& cfg) {
    if (const char* v = std::getenv("GUIDES_LISTEN"); v && *v) set_listen(cfg, v);
}

ServiceConfig service_config_from_json(const json& j, const std::string& base_dir) {
    ServiceConfig cfg;
    if (j.contains("listen")) set_listen(cfg, j["listen"].get<std::string>());
    cfg.dataset_path = resolve_path(j, "dataset", base_dir);
    cfg.ledger_path = resolve_path(j, "ledger", base_dir);
    cfg.spatial_ontology_path = resolve_path(j, "spatial_ontology", base_dir);
    cfg.domain_ontology_path = resolve_path(j, "domain_ontology", base_dir);
    if (j.contains("policy")) cfg.policy = AccessPolicy::from_json(j["policy"]);
    if (j.contains("tokens")) {
        for (auto it = j["tokens"].begin(); it != j["tokens"].end(); ++it) {
            cfg.tokens[it.key()] = role_from_string(it.value().get<std::string>());
        }
    }
    if (j.contains("area_cap_km2")) {
        const double km2 = j["area_cap_km2"].get<double>();
        if (!(km2 > 0)) throw ArgumentError("area_cap_km2 must be positive");
        cfg.area_cap_m2 = km2 * 1e6;
    }
    cfg.persist = j.value("persist", false);
    return cfg;
}

ServiceConfig load_service_config(const std::string& path) {
    const auto text = read_text(path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(path + ": " + e.what(), e.byte);
    }
    return service_config_from_json(j, fs::path(path).parent_path().string());
}

Snapshot::Snapshot(InfrastructureNetwork n, RepairLedger l, const Ontology* st, std::optional<Ontology> d)
    : network(std::move(n)),
      ledger(std::move(l)),
      domain(std::move(d)),
      mappings(st && domain ? match_instances(*domain, *st) : std::vector<InstanceMapping>{}),
      engine(network, st, domain ? &*domain : nullptr, mappings) {}

Service::Service(InfrastructureNetwork net, ServiceConfig cfg, RepairLedger ledger, std::optional<Ontology> spatial,
                 std::optional<json> domain_doc)
    : cfg_(std::move(cfg)), spatial_(std::move(spatial)), domain_doc_(std::move(domain_doc)) {
    publish(std::move(net), std::move(ledger));
}

std::unique_ptr<Service> Service::from_config(const ServiceConfig& cfg) {
    if (cfg.dataset_path.empty()) throw ArgumentError("config names no dataset");
    auto net = network_from_json(json::parse(read_text(cfg.dataset_path)));
    RepairLedger ledger;
    if (!cfg.ledger_path.empty() && fs::exists(cfg.ledger_path)) {
        ledger = RepairLedger::from_json(json::parse(read_text(cfg.ledger_path)));
    }
    std::optional<Ontology> st;
    if (!cfg.spatial_ontology_path.empty()) st = Ontology::load(json::parse(read_text(cfg.spatial_ontology_path)));
    std::optional<json> domain;
    if (!cfg.domain_ontology_path.empty()) domain = json::parse(read_text(cfg.domain_ontology_path));
    return std::make_unique<Service>(std::move(net), cfg, std::move(ledger), std::move(st), std::move(domain));
}

std::shared_ptr<const Snapshot> Service::publish(InfrastructureNetwork net, RepairLedger ledger) {
    std::optional<Ontology> domain;
    if (domain_doc_) domain = Ontology::load(*domain_doc_, &net);
    auto snap = std::make_shared<const Snapshot>(std::move(net), std::move(ledger), spatial_ ? &*spatial_ : nullptr,
                                                 std::move(domain));
    {
        std::lock_guard lock(read_mutex_);
        current_ = snap;
    }
    return snap;
}

std::shared_ptr<const Snapshot> Service::snapshot() const {
    std::lock_guard lock(read_mutex_);
    return current_;
}

Role Service::role_for(std::string_view token) const {
    auto it = cfg_.tokens.find(std::string(token));
    return it == cfg_.tokens.end() ? Role::public_ : it->second;
}

void Service::save() const {
    const auto snap = snapshot();
    if (!cfg_.dataset_path.empty()) write_text(cfg_.dataset_path, canonical_dump(snap->network) + "\n");
    if (!cfg_.ledger_path.empty()) write_text(cfg_.ledger_path, snap->ledger.to_json().dump(2) + "\n");
}

Response Service::handle(const Request& req) {
    try {
        const auto& p = req.path;
        if (req.method == "GET" && p == "/health") return health();
        if (req.method == "GET" && (p == "/layers" || p.rfind("/layers/", 0) == 0)) return layers(req);
        if (req.method == "POST" && p == "/query") return query(req);
        if (req.method == "POST" && p == "/impact") return impact(req);
        if (req.method == "POST" && p == "/update") return update(req);
        if (req.method == "GET" && p == "/flags") return flags(req);
        const std::string prefix = "/flags/";
        const std::string suffix = "/resolve";
        if (req.method == "POST" && p.size() > prefix.size() + suffix.size() && p.rfind(prefix, 0) == 0 &&
            p.compare(p.size() - suffix.size(), suffix.size(), suffix) == 0) {
            return resolve(req, std::string_view(p).substr(prefix.size(), p.size() - prefix.size() - suffix.size()));
        }
        return {404, {{"error", "not_found"}, {"message", "no route " + req.method + " " + p}}};
    } catch (const Error& e) {
        return error_response(e);
    } catch (const json::exception& e) {
        return {400, {{"error", "argument"}, {"message", e.what()}}};
    } catch (const std::exception& e) {
        return {500, {{"error", "internal"}, {"message", e.what()}}};
    }
}

Response Service::health() const {
    const auto snap = snapshot();
    return {200, {{"status", "ok"}, {"revision", snap->network.revision()}}};
}

Response Service::layers(const Request& req) const {
    const auto snap = snapshot();
    const Role role = role_for(req.token);
    const auto& net = snap->network;
    if (req.path != "/layers") {
        const std::string id = req.path.substr(std::string("/layers/").size());
        const Layer& layer = net.layer(id);
        const auto d = authorize(cfg_.policy, role, Capability::read_public, layer);
        if (!d.allowed) return {403, {{"error", "unauthorized"}, {"reason", d.reason}, {"layer", id}}};
        json fc = export_layer_json(net, id);
        fc["revision"] = net.revision();
        return {200, fc};
    }
    json list = json::array();
    for (const auto& [id, layer] : net.layers()) {
        json j = to_json(layer);
        const auto d = authorize(cfg_.policy, role, Capability::read_public, layer);
        j["access"] = d.allowed ? "allowed" : "denied";
        if (!d.allowed) j["reason"] = d.reason;
        list.push_back(j);
    }
    return {200, {{"revision", net.revision()}, {"layers", list}}};
}

Response Service::query(const Request& req) const {
    const auto snap = snapshot();
    const json body = parse_body(req.body);
    if (!body.contains("region")) throw ArgumentError("query needs a region");
    RegionTimeQuery q;
    q.region = region_from_json(body["region"]);
    if (body.contains("interval") && !body["interval"].is_null()) q.interval = parse_period(body["interval"].get<std::string>());
    for (const auto& k : body.value("layer_kinds", json::array())) q.layer_kinds.insert(layer_kind_from_string(k.get<std::string>()));
    if (body.contains("predicate")) q.predicate = spatial_op_from_string(body["predicate"].get<std::string>());
    const double region_area = area(snap->engine.resolve_region(q.region));
    if (region_area > cfg_.area_cap_m2) {
        return {400,
                {{"error", "argument"},
                 {"message", "region area exceeds the limit of " + std::to_string(cfg_.area_cap_m2 / 1e6) + " km2"},
                 {"limit_m2", cfg_.area_cap_m2},
                 {"area_m2", region_area}}};
    }
    const auto result = snap->engine.run(q, cfg_.policy, role_for(req.token));
    json out = result.to_geojson(snap->network);
    out["revision"] = snap->network.revision();
    return {200, out};
}

Response Service::impact(const Request& req) const {
    const auto snap = snapshot();
    const json body = parse_body(req.body);
    const auto census = body.at("census_layer").get<std::string>();
    const auto edge_id = body.at("edge").get<std::string>();
    const auto key = body.value("attribute", std::string("low_income"));
    const Role role = role_for(req.token);
    const auto& net = snap->network;
    for (const auto* layer : {&net.layer(census), &net.layer(net.edge(edge_id).layer_id)}) {
        const auto d = authorize(cfg_.policy, role, Capability::read_public, *layer);
        if (!d.allowed) return {403, {{"error", "unauthorized"}, {"reason", d.reason}, {"layer", layer->id}}};
    }
    json out = to_json(impact_query(net, census, edge_id, key));
    out["revision"] = net.revision();
    return {200, out};
}

Response Service::update(const Request& req) {
    const json body = parse_body(req.body);
    const auto batch = edit_batch_from_json(body.contains("actions") ? body["actions"] : body);
    if (batch.empty()) throw ArgumentError("empty edit batch");
    const Role role = role_for(req.token);
    std::lock_guard lock(write_mutex_);
    const auto snap = snapshot();
    const auto touched = batch_layers(batch, snap->network);
    for (const auto& id : touched) {
        if (!snap->network.has_layer(id)) continue;  // apply_edit reports it
        const auto d = authorize(cfg_.policy, role, Capability::update, snap->network.layer(id));
        if (!d.allowed) return {403, {{"error", "unauthorized"}, {"reason", d.reason}, {"layer", id}}};
    }
    InfrastructureNetwork net = snap->network;
    RepairLedger ledger = snap->ledger;
    try {
        net.apply_edit(batch);
    } catch (const IntegrityError& e) {
        return {409,
                {{"error", "integrity"},
                 {"message", e.what()},
                 {"action_index", e.action_index()},
                 {"revision", snap->network.revision()}}};
    }
    const auto flag_id = ledger.record_manual(batch, touched.empty() ? "" : *touched.begin(), role, net.revision(), utc_now());
    const auto rev = net.revision();
    publish(std::move(net), std::move(ledger));
    if (cfg_.persist) save();
    return {200, {{"revision", rev}, {"flag_id", flag_id}}};
}

Response Service::flags(const Request& req) const {
    const auto snap = snapshot();
    FlagFilter filter;
    if (auto it = req.params.find("status"); it != req.params.end()) filter.status = flag_status_from_string(it->second);
    if (auto it = req.params.find("rule"); it != req.params.end()) filter.rule = rule_from_string(it->second);
    if (auto it = req.params.find("layer"); it != req.params.end()) filter.layer_id = it->second;
    const Role role = role_for(req.token);
    const auto& net = snap->network;
    json list = json::array();
    for (const auto& f : snap->ledger.list(filter)) {
        if (net.has_layer(f.layer_id) && !can_read(cfg_.policy, role, net.layer(f.layer_id))) continue;
        json j = to_json(f);
        if (f.suggestion_id) j["suggestion"] = to_json(snap->ledger.suggestion(*f.suggestion_id));
        list.push_back(j);
    }
    return {200, {{"revision", net.revision()}, {"flags", list}}};
}

Response Service::resolve(const Request& req, std::string_view flag_id) {
    const json body = parse_body(req.body);
    const auto decision = flag_status_from_string(body.at("decision").get<std::string>());
    const Role role = role_for(req.token);
    std::lock_guard lock(write_mutex_);
    const auto snap = snapshot();
    const Flag& current = snap->ledger.flag(flag_id);
    if (snap->network.has_layer(current.layer_id) && !can_read(cfg_.policy, role, snap->network.layer(current.layer_id))) {
        throw NotFoundError("unknown flag '" + std::string(flag_id) + "'");
    }
    InfrastructureNetwork net = snap->network;
    RepairLedger ledger = snap->ledger;
    const Flag f = ledger.resolve(net, flag_id, decision, role, utc_now(), cfg_.policy);
    const auto rev = net.revision();
    publish(std::move(net), std::move(ledger));
    if (cfg_.persist) save();
    return {200, {{"revision", rev}, {"flag", to_json(f)}}};
}

}  // namespace guides
