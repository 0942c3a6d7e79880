#include "guides/repair.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "guides/error.hpp"
#include "guides/polygonize.hpp"
#include "guides/spatial_index.hpp"

namespace guides {

using nlohmann::json;

// ------------------------------------------------------------ enums

namespace {

template <typename E, std::size_t N>
E enum_from(std::string_view s, const E (&all)[N], const char* what) {
    for (E e : all) {
        if (to_string(e) == s) return e;
    }
    throw ArgumentError(std::string("unknown ") + what + " '" + std::string(s) + "'");
}

constexpr Rule kRules[] = {Rule::duplicate_nodes, Rule::symbol_circle, Rule::dangling_end, Rule::valve_degree,
                           Rule::open_boundary,   Rule::inferred_edge, Rule::manual};
constexpr FlagStatus kStatuses[] = {FlagStatus::open, FlagStatus::accepted, FlagStatus::rejected};
constexpr RepairAction kActions[] = {RepairAction::merge_nodes, RepairAction::replace_symbol, RepairAction::add_edge,
                                     RepairAction::connect_boundary};

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(3);
    os << std::fixed << v;
    return os.str();
}

std::string join(const std::vector<std::string>& items, const char* sep = ", ") {
    std::string out;
    for (const auto& s : items) out += (out.empty() ? "" : sep) + s;
    return out;
}

std::set<std::string> neighbours(const InfrastructureNetwork& net, const std::string& node_id) {
    std::set<std::string> out;
    for (const auto& eid : net.incident_edges(node_id)) out.insert(net.edge(eid).other(node_id));
    return out;
}

void add_flags(std::vector<std::string>& target, const std::vector<std::string>& flags) {
    for (const auto& f : flags) {
        if (std::find(target.begin(), target.end(), f) == target.end()) target.push_back(f);
    }
}

std::string local_flag(std::size_t i) { return "#" + std::to_string(i); }
std::string local_suggestion(std::size_t i) { return "#s" + std::to_string(i); }

}  // namespace

std::string to_string(Rule r) {
    switch (r) {
        case Rule::duplicate_nodes: return "duplicate_nodes";
        case Rule::symbol_circle: return "symbol_circle";
        case Rule::dangling_end: return "dangling_end";
        case Rule::valve_degree: return "valve_degree";
        case Rule::open_boundary: return "open_boundary";
        case Rule::inferred_edge: return "inferred_edge";
        case Rule::manual: return "manual";
    }
    return "manual";
}

std::string to_string(FlagStatus s) {
    switch (s) {
        case FlagStatus::open: return "open";
        case FlagStatus::accepted: return "accepted";
        case FlagStatus::rejected: return "rejected";
    }
    return "open";
}

std::string to_string(RepairAction a) {
    switch (a) {
        case RepairAction::merge_nodes: return "merge_nodes";
        case RepairAction::replace_symbol: return "replace_symbol";
        case RepairAction::add_edge: return "add_edge";
        case RepairAction::connect_boundary: return "connect_boundary";
    }
    return "add_edge";
}

Rule rule_from_string(std::string_view s) { return enum_from(s, kRules, "rule"); }
FlagStatus flag_status_from_string(std::string_view s) { return enum_from(s, kStatuses, "flag status"); }
RepairAction repair_action_from_string(std::string_view s) { return enum_from(s, kActions, "repair action"); }

void Detection::append(Detection other) {
    const std::size_t flag_offset = flags.size();
    const std::size_t sugg_offset = suggestions.size();
    auto remap_flag = [&](const std::string& id) { return local_flag(std::stoul(id.substr(1)) + flag_offset); };
    auto remap_sugg = [&](const std::string& id) { return local_suggestion(std::stoul(id.substr(2)) + sugg_offset); };
    for (auto& f : other.flags) {
        f.id = remap_flag(f.id);
        if (f.suggestion_id) f.suggestion_id = remap_sugg(*f.suggestion_id);
        flags.push_back(std::move(f));
    }
    for (auto& s : other.suggestions) {
        s.id = remap_sugg(s.id);
        for (auto& f : s.flag_ids) f = remap_flag(f);
        suggestions.push_back(std::move(s));
    }
}

namespace {

// Builder that keeps flag/suggestion cross references consistent.
class DetectionBuilder {
public:
    std::string flag(Flag f) {
        f.id = local_flag(out_.flags.size());
        out_.flags.push_back(std::move(f));
        return out_.flags.back().id;
    }

    std::string suggestion(RepairSuggestion s) {
        s.id = local_suggestion(out_.suggestions.size());
        out_.suggestions.push_back(std::move(s));
        return out_.suggestions.back().id;
    }

    void link(const std::string& flag_id, const std::string& suggestion_id) {
        auto& f = out_.flags.at(std::stoul(flag_id.substr(1)));
        auto& s = out_.suggestions.at(std::stoul(suggestion_id.substr(2)));
        f.suggestion_id = suggestion_id;
        s.flag_ids.push_back(flag_id);
    }

    Detection take() { return std::move(out_); }

private:
    Detection out_;
};

}  // namespace

// ------------------------------------------------------------ detectors

Detection detect_duplicate_nodes(const InfrastructureNetwork& net, std::string_view layer_id) {
    net.layer(layer_id);
    const double eps = net.epsilon();
    const auto nodes = net.layer_nodes(layer_id);
    const double cell = std::max(eps, 1e-9);
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> grid;
    auto cell_of = [&](double v) { return static_cast<std::int64_t>(std::floor(v / cell)); };
    auto key = [](std::int64_t x, std::int64_t y) {
        return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(x)) << 32) | static_cast<std::uint32_t>(y);
    };
    for (std::size_t i = 0; i < nodes.size(); ++i) grid[key(cell_of(nodes[i]->position.x), cell_of(nodes[i]->position.y))].push_back(i);

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto cx = cell_of(nodes[i]->position.x);
        const auto cy = cell_of(nodes[i]->position.y);
        for (std::int64_t dx = -1; dx <= 1; ++dx) {
            for (std::int64_t dy = -1; dy <= 1; ++dy) {
                auto it = grid.find(key(cx + dx, cy + dy));
                if (it == grid.end()) continue;
                for (auto j : it->second) {
                    if (j <= i) continue;
                    if (distance(nodes[i]->position, nodes[j]->position) <= eps) pairs.emplace_back(i, j);
                }
            }
        }
    }
    std::sort(pairs.begin(), pairs.end());

    std::vector<std::size_t> parent(nodes.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (const auto& [i, j] : pairs) parent[find(i)] = find(j);

    std::map<std::size_t, std::vector<std::string>> clusters;
    for (const auto& [i, j] : pairs) {
        clusters[find(i)].push_back(nodes[i]->id);
        clusters[find(i)].push_back(nodes[j]->id);
    }
    // Order clusters by their smallest member for stable output.
    std::map<std::string, std::vector<std::string>> by_survivor;
    std::map<std::size_t, std::string> root_survivor;
    for (auto& [root, members] : clusters) {
        std::sort(members.begin(), members.end());
        members.erase(std::unique(members.begin(), members.end()), members.end());
        root_survivor[root] = members.front();
        by_survivor[members.front()] = members;
    }

    DetectionBuilder b;
    std::map<std::string, std::string> suggestion_of;
    for (const auto& [survivor, members] : by_survivor) {
        RepairSuggestion s;
        s.action = RepairAction::merge_nodes;
        s.layer_id = std::string(layer_id);
        s.rule = Rule::duplicate_nodes;
        s.context_layers = {std::string(layer_id)};
        s.node_ids = members;
        s.geometry = {net.node(survivor).position};
        suggestion_of[survivor] = b.suggestion(std::move(s));
    }
    std::vector<std::pair<std::string, std::string>> named;
    for (const auto& [i, j] : pairs) {
        const auto& a = nodes[i]->id;
        const auto& c = nodes[j]->id;
        named.emplace_back(std::min(a, c), std::max(a, c));
    }
    std::sort(named.begin(), named.end());
    for (const auto& [a, c] : named) {
        Flag f;
        f.rule = Rule::duplicate_nodes;
        f.layer_id = std::string(layer_id);
        f.target = a;
        f.related = {c};
        f.detail = "node " + a + " co-located with " + c + " (distance " + fmt(distance(net.node(a).position, net.node(c).position)) + " m)";
        const std::string fid = b.flag(std::move(f));
        std::size_t idx = 0;
        for (; idx < nodes.size() && nodes[idx]->id != a; ++idx) {
        }
        b.link(fid, suggestion_of.at(root_survivor.at(find(idx))));
    }
    return b.take();
}

Detection detect_symbol_circles(const InfrastructureNetwork& net, std::string_view layer_id, const SymbolParams& params) {
    net.layer(layer_id);
    DetectionBuilder b;
    for (const auto& face : bounded_faces(net, layer_id)) {
        std::set<std::string> distinct(face.node_ids.begin(), face.node_ids.end());
        if (distinct.size() != face.node_ids.size() || distinct.size() < params.min_nodes) continue;
        Point2D c{0, 0};
        for (const auto& id : face.node_ids) {
            c.x += net.node(id).position.x;
            c.y += net.node(id).position.y;
        }
        c.x /= static_cast<double>(face.node_ids.size());
        c.y /= static_cast<double>(face.node_ids.size());
        std::vector<double> radii;
        for (const auto& id : face.node_ids) radii.push_back(distance(net.node(id).position, c));
        const double mean = std::accumulate(radii.begin(), radii.end(), 0.0) / static_cast<double>(radii.size());
        if (!(mean > 0.0) || mean > params.max_radius) continue;
        double worst = 0.0;
        for (double r : radii) worst = std::max(worst, std::abs(r - mean));
        if (worst > params.radial_tolerance * mean) continue;

        std::set<std::string> cycle_edges(face.edge_ids.begin(), face.edge_ids.end());
        std::set<std::string> attachments;
        for (const auto& id : distinct) {
            for (const auto& eid : net.incident_edges(id)) {
                if (cycle_edges.count(eid)) continue;
                const auto& other = net.edge(eid).other(id);
                if (!distinct.count(other)) attachments.insert(other);
            }
        }
        RepairSuggestion s;
        s.action = RepairAction::replace_symbol;
        s.layer_id = std::string(layer_id);
        s.rule = Rule::symbol_circle;
        s.context_layers = {std::string(layer_id)};
        s.node_ids.assign(distinct.begin(), distinct.end());
        s.edge_ids.assign(cycle_edges.begin(), cycle_edges.end());
        s.attachments.assign(attachments.begin(), attachments.end());
        s.point = c;
        s.geometry = {c};
        const std::string sid = b.suggestion(std::move(s));

        Flag f;
        f.rule = Rule::symbol_circle;
        f.layer_id = std::string(layer_id);
        f.target = *distinct.begin();
        f.related.assign(std::next(distinct.begin()), distinct.end());
        f.detail = std::to_string(distinct.size()) + "-node circle, mean radius " + fmt(mean) + " m, max deviation " +
                   fmt(100.0 * worst / mean) + "%, " + std::to_string(attachments.size()) + " attachment(s)";
        b.link(b.flag(std::move(f)), sid);
    }
    return b.take();
}

Detection check_valve_degree(const InfrastructureNetwork& net, std::string_view layer_id) {
    net.layer(layer_id);
    DetectionBuilder b;
    for (const auto* n : net.layer_nodes(layer_id)) {
        auto it = n->attributes.find("type");
        if (it == n->attributes.end()) continue;
        const auto* type = std::get_if<std::string>(&it->second);
        if (!type || *type != "valve") continue;
        const auto degree = net.incident_edges(n->id).size();
        if (degree >= 2) continue;
        Flag f;
        f.rule = Rule::valve_degree;
        f.layer_id = std::string(layer_id);
        f.target = n->id;
        f.detail = "valve with " + std::to_string(degree) + " connection(s), expected at least 2";
        b.flag(std::move(f));
    }
    return b.take();
}

std::vector<std::string> dangling_end_nodes(const InfrastructureNetwork& net, std::string_view layer_id,
                                            const MultiPolygonGeometry& footprints) {
    std::vector<std::string> out;
    for (const auto& id : end_nodes(net, layer_id)) {
        if (!footprints.polygons.empty() && multipolygon_contains(net.node(id).position, footprints, net.epsilon())) {
            continue;
        }
        out.push_back(id);
    }
    return out;
}

Detection detect_dangling_ends(const InfrastructureNetwork& net, std::string_view layer_id,
                               const MultiPolygonGeometry& footprints) {
    DetectionBuilder b;
    for (const auto& id : dangling_end_nodes(net, layer_id, footprints)) {
        Flag f;
        f.rule = Rule::dangling_end;
        f.layer_id = std::string(layer_id);
        f.target = id;
        f.detail = "degree-1 node outside every building footprint";
        b.flag(std::move(f));
    }
    return b.take();
}

// ------------------------------------------------------------ inference

namespace {

class Corridor {
public:
    Corridor(const InfrastructureNetwork& net, std::string_view streets, double half_width, double spacing)
        : half_width_(half_width), spacing_(spacing) {
        std::vector<SpatialIndex::Entry> entries;
        for (const auto* e : net.layer_edges(streets)) {
            chains_.emplace(e->id, net.edge_chain(*e));
            entries.push_back({e->id, BBox::of(chains_.at(e->id)), ""});
        }
        index_ = SpatialIndex(std::move(entries));
    }

    bool near_street(Point2D p) const {
        for (const auto& id : index_.query(BBox::of(p).expanded(half_width_))) {
            if (distance_point_to_chain(p, chains_.at(id)) <= half_width_) return true;
        }
        return false;
    }

    bool contains(Point2D a, Point2D b) const {
        const double len = distance(a, b);
        const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(len / spacing_)));
        for (std::size_t k = 0; k <= n; ++k) {
            const double t = static_cast<double>(k) / static_cast<double>(n);
            if (!near_street({a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t})) return false;
        }
        return true;
    }

private:
    double half_width_;
    double spacing_;
    std::map<std::string, std::vector<Point2D>> chains_;
    SpatialIndex index_;
};

}  // namespace

bool within_corridor(const InfrastructureNetwork& net, std::string_view streets_layer, Point2D a, Point2D b,
                     double half_width, double spacing) {
    net.layer(streets_layer);
    if (half_width <= 0.0 || spacing <= 0.0) throw ArgumentError("corridor width and spacing must be positive");
    return Corridor(net, streets_layer, half_width, spacing).contains(a, b);
}

Detection infer_missing_edges(const InfrastructureNetwork& net, std::string_view pipes_layer,
                              std::optional<std::string_view> streets_layer, const InferenceParams& params,
                              const std::vector<std::string>& dangling_ends, const MultiPolygonGeometry& footprints) {
    if (!(params.search_radius > 0.0)) throw ArgumentError("search radius R must be positive");
    if (!(params.corridor_half_width > 0.0)) throw ArgumentError("corridor half-width W must be positive");
    if (!(params.sample_spacing > 0.0)) throw ArgumentError("sample spacing must be positive");
    net.layer(pipes_layer);
    std::optional<Corridor> corridor;
    if (streets_layer) corridor.emplace(net, *streets_layer, params.corridor_half_width, params.sample_spacing);

    std::vector<SpatialIndex::Entry> entries;
    for (const auto* n : net.layer_nodes(pipes_layer)) entries.push_back({n->id, BBox::of(n->position), ""});
    const SpatialIndex index(std::move(entries));

    // Working adjacency: the network plus edges suggested in earlier passes.
    std::map<std::string, std::set<std::string>> adj;
    for (const auto* n : net.layer_nodes(pipes_layer)) adj[n->id] = neighbours(net, n->id);

    DetectionBuilder b;
    std::set<std::pair<std::string, std::string>> suggested;
    std::set<std::string> attempted;
    std::vector<std::string> ends;
    for (const auto& id : dangling_ends) {
        const Node& n = net.node(id);
        if (n.layer_id == pipes_layer) ends.push_back(id);
    }
    std::sort(ends.begin(), ends.end());
    ends.erase(std::unique(ends.begin(), ends.end()), ends.end());

    for (int pass = 0; pass < params.max_passes && !ends.empty(); ++pass) {
        std::map<std::string, std::pair<std::string, double>> choice;
        for (const auto& end : ends) {
            attempted.insert(end);
            if (adj.at(end).size() != 1) continue;
            const Point2D p = net.node(end).position;
            std::vector<std::pair<double, std::string>> cands;
            for (const auto& id : index.query(BBox::of(p).expanded(params.search_radius))) {
                if (id == end || adj.at(end).count(id)) continue;
                const double d = distance(p, net.node(id).position);
                if (d <= params.search_radius) cands.emplace_back(d, id);
            }
            std::sort(cands.begin(), cands.end());
            for (const auto& [d, id] : cands) {
                if (corridor && !corridor->contains(p, net.node(id).position)) continue;
                choice.emplace(end, std::make_pair(id, d));
                break;
            }
        }
        std::vector<std::string> touched;
        for (const auto& [end, pick] : choice) {
            const auto& [target, d] = pick;
            const auto key = std::make_pair(std::min(end, target), std::max(end, target));
            if (!suggested.insert(key).second) continue;  // mutual choice already suggested
            const bool mutual = choice.count(target) && choice.at(target).first == end;
            RepairSuggestion s;
            s.action = RepairAction::add_edge;
            s.layer_id = std::string(pipes_layer);
            s.rule = Rule::inferred_edge;
            s.context_layers = {std::string(pipes_layer)};
            if (streets_layer) s.context_layers.emplace_back(*streets_layer);
            s.node_ids = {end, target};
            s.geometry = {net.node(end).position, net.node(target).position};
            const std::string sid = b.suggestion(std::move(s));
            Flag f;
            f.rule = Rule::inferred_edge;
            f.layer_id = std::string(pipes_layer);
            f.target = end;
            f.related = {target};
            f.detail = "dangling end " + end + " reconnected to " + target + " (" + fmt(d) + " m" +
                       (mutual ? ", mutual" : "") + (streets_layer ? ", inside street corridor" : "") + ")";
            b.link(b.flag(std::move(f)), sid);
            adj[end].insert(target);
            adj[target].insert(end);
            touched.push_back(target);
        }
        // Targets that were isolated now have degree one and get their own pass.
        std::vector<std::string> next;
        for (const auto& t : touched) {
            if (attempted.count(t) || adj.at(t).size() != 1) continue;
            const Point2D pos = net.node(t).position;
            if (!footprints.polygons.empty() && multipolygon_contains(pos, footprints, net.epsilon())) continue;
            next.push_back(t);
        }
        std::sort(next.begin(), next.end());
        next.erase(std::unique(next.begin(), next.end()), next.end());
        ends = std::move(next);
    }
    return b.take();
}

Detection repair_building_boundaries(const InfrastructureNetwork& net, std::string_view buildings_layer) {
    const auto poly = polygonize_layer(net, buildings_layer);
    std::vector<SpatialIndex::Entry> entries;
    for (const auto* n : net.layer_nodes(buildings_layer)) entries.push_back({n->id, BBox::of(n->position), ""});
    const SpatialIndex index(std::move(entries));

    DetectionBuilder b;
    std::map<std::pair<std::string, std::string>, std::string> by_pair;
    for (const auto& id : poly.open_nodes) {
        Flag f;
        f.rule = Rule::open_boundary;
        f.layer_id = std::string(buildings_layer);
        f.target = id;
        const auto nb = neighbours(net, id);
        std::optional<SpatialIndex::Hit> hit;
        if (nb.size() <= 1) {
            const Point2D p = net.node(id).position;
            hit = index.nearest(p, std::numeric_limits<double>::infinity(), std::nullopt,
                                [&](const std::string& cand) { return cand != id && !nb.count(cand); });
        }
        if (!hit) {
            f.detail = nb.size() <= 1 ? "building boundary node on no closed cycle; no connection candidate"
                                      : "building boundary node on no closed cycle";
            b.flag(std::move(f));
            continue;
        }
        f.related = {hit->id};
        f.detail = "open building boundary at " + id + "; nearest node " + hit->id + " at " + fmt(hit->distance) + " m";
        const std::string fid = b.flag(std::move(f));
        const auto key = std::make_pair(std::min(id, hit->id), std::max(id, hit->id));
        auto it = by_pair.find(key);
        if (it == by_pair.end()) {
            RepairSuggestion s;
            s.action = RepairAction::connect_boundary;
            s.layer_id = std::string(buildings_layer);
            s.rule = Rule::open_boundary;
            s.context_layers = {std::string(buildings_layer)};
            s.node_ids = {id, hit->id};
            s.geometry = {net.node(id).position, net.node(hit->id).position};
            it = by_pair.emplace(key, b.suggestion(std::move(s))).first;
        }
        b.link(fid, it->second);
    }
    return b.take();
}

// ------------------------------------------------------------ edit builders

namespace {

struct Plan {
    EditBatch batch;
    std::vector<std::string> notes;
};

Plan plan_merge(const InfrastructureNetwork& net, const RepairSuggestion& s) {
    if (s.node_ids.size() < 2) throw ArgumentError("merge needs at least two nodes");
    for (const auto& id : s.node_ids) {
        if (!net.find_node(id)) throw ConflictError("suggestion " + s.id + " is stale: node " + id + " no longer exists");
    }
    std::vector<std::string> cluster = s.node_ids;
    std::sort(cluster.begin(), cluster.end());
    const std::string& survivor_id = cluster.front();
    const std::set<std::string> members(cluster.begin(), cluster.end());
    Plan plan;

    Node survivor = net.node(survivor_id);
    for (std::size_t i = 1; i < cluster.size(); ++i) {
        for (const auto& [key, value] : net.node(cluster[i]).attributes) {
            auto it = survivor.attributes.find(key);
            if (it == survivor.attributes.end()) {
                survivor.attributes.emplace(key, value);
            } else if (!(it->second == value)) {
                plan.notes.push_back("attribute '" + key + "' conflict: kept " + scalar_to_string(it->second) + " from " +
                                     survivor_id + ", dropped " + scalar_to_string(value) + " from " + cluster[i]);
            }
        }
    }
    add_flags(survivor.flag_ids, s.flag_ids);

    std::set<std::string> incident;
    for (const auto& id : cluster) {
        for (const auto& eid : net.incident_edges(id)) incident.insert(eid);
    }
    auto map_end = [&](const std::string& id) { return members.count(id) ? survivor_id : id; };
    std::map<std::pair<std::string, std::string>, std::vector<std::string>> groups;
    for (const auto& eid : incident) {
        const Edge& e = net.edge(eid);
        const auto a = map_end(e.endpoint_a);
        const auto b = map_end(e.endpoint_b);
        if (a == b) {
            plan.batch.push_back(edit::RemoveEdge{eid});
            plan.notes.push_back("edge " + eid + " became a self-loop and was removed");
            continue;
        }
        groups[{std::min(a, b), std::max(a, b)}].push_back(eid);
    }
    for (const auto& [ends, ids] : groups) {
        // Edges in `ids` are sorted; the smallest id survives.
        for (std::size_t k = 1; k < ids.size(); ++k) {
            plan.batch.push_back(edit::RemoveEdge{ids[k]});
            plan.notes.push_back("edge " + ids[k] + " duplicated " + ids[0] + " and was removed");
        }
        Edge kept = net.edge(ids[0]);
        const auto a = map_end(kept.endpoint_a);
        const auto b = map_end(kept.endpoint_b);
        if (a == kept.endpoint_a && b == kept.endpoint_b) continue;
        kept.endpoint_a = a;
        kept.endpoint_b = b;
        if (!kept.polyline.empty()) {
            kept.polyline.front() = a == survivor_id ? survivor.position : kept.polyline.front();
            kept.polyline.back() = b == survivor_id ? survivor.position : kept.polyline.back();
        }
        add_flags(kept.flag_ids, s.flag_ids);
        plan.batch.push_back(edit::ModifyEdge{std::move(kept)});
    }
    plan.batch.push_back(edit::ModifyNode{std::move(survivor)});
    for (std::size_t i = 1; i < cluster.size(); ++i) plan.batch.push_back(edit::RemoveNode{cluster[i]});
    return plan;
}

Plan plan_symbol(const InfrastructureNetwork& net, const RepairSuggestion& s) {
    if (!s.point) throw ArgumentError("replace_symbol suggestion has no centroid");
    const std::set<std::string> cycle(s.node_ids.begin(), s.node_ids.end());
    for (const auto& id : s.node_ids) {
        if (!net.find_node(id)) throw ConflictError("suggestion " + s.id + " is stale: node " + id + " no longer exists");
    }
    for (const auto& id : s.edge_ids) {
        const Edge* e = net.find_edge(id);
        if (!e || !cycle.count(e->endpoint_a) || !cycle.count(e->endpoint_b)) {
            throw ConflictError("suggestion " + s.id + " is stale: cycle edge " + id + " changed");
        }
    }
    Plan plan;
    Node centre;
    centre.id = net.unused_id("n");
    centre.layer_id = s.layer_id;
    centre.position = *s.point;
    centre.attributes = {{"Is_manhole", std::int64_t{1}}};
    centre.flag_ids = s.flag_ids;
    plan.batch.push_back(edit::AddNode{centre});

    const std::set<std::string> cycle_edges(s.edge_ids.begin(), s.edge_ids.end());
    std::set<std::string> incident;
    for (const auto& id : cycle) {
        for (const auto& eid : net.incident_edges(id)) incident.insert(eid);
    }
    for (const auto& eid : incident) {
        const Edge& e = net.edge(eid);
        const bool a_in = cycle.count(e.endpoint_a) > 0;
        const bool b_in = cycle.count(e.endpoint_b) > 0;
        if (cycle_edges.count(eid) || (a_in && b_in)) {
            plan.batch.push_back(edit::RemoveEdge{eid});
            continue;
        }
        Edge moved = e;
        if (a_in) moved.endpoint_a = centre.id;
        if (b_in) moved.endpoint_b = centre.id;
        if (!moved.polyline.empty()) {
            if (a_in) moved.polyline.front() = centre.position;
            if (b_in) moved.polyline.back() = centre.position;
        }
        add_flags(moved.flag_ids, s.flag_ids);
        plan.batch.push_back(edit::ModifyEdge{std::move(moved)});
        plan.notes.push_back("edge " + eid + " re-attached to " + centre.id);
    }
    for (const auto& id : cycle) plan.batch.push_back(edit::RemoveNode{id});
    return plan;
}

Plan plan_connect(const InfrastructureNetwork& net, const RepairSuggestion& s) {
    if (s.node_ids.size() != 2) throw ArgumentError("connection suggestion needs two nodes");
    const auto& a = s.node_ids[0];
    const auto& b = s.node_ids[1];
    for (const auto& id : s.node_ids) {
        if (!net.find_node(id)) throw ConflictError("suggestion " + s.id + " is stale: node " + id + " no longer exists");
    }
    if (neighbours(net, a).count(b)) throw ConflictError("suggestion " + s.id + " is stale: " + a + " and " + b + " are already connected");
    Edge e;
    e.id = net.unused_id("e");
    e.endpoint_a = a;
    e.endpoint_b = b;
    e.layer_id = s.layer_id;
    e.flag_ids = s.flag_ids;
    return {{edit::AddEdge{std::move(e)}}, {}};
}

Plan plan_for(const InfrastructureNetwork& net, const RepairSuggestion& s) {
    switch (s.action) {
        case RepairAction::merge_nodes: return plan_merge(net, s);
        case RepairAction::replace_symbol: return plan_symbol(net, s);
        case RepairAction::add_edge:
        case RepairAction::connect_boundary: return plan_connect(net, s);
    }
    throw ArgumentError("unknown repair action");
}

}  // namespace

EditBatch merge_duplicate_nodes(const InfrastructureNetwork& net, const RepairSuggestion& s) { return plan_merge(net, s).batch; }
EditBatch replace_symbol(const InfrastructureNetwork& net, const RepairSuggestion& s) { return plan_symbol(net, s).batch; }
EditBatch connect_nodes(const InfrastructureNetwork& net, const RepairSuggestion& s) { return plan_connect(net, s).batch; }
EditBatch suggestion_batch(const InfrastructureNetwork& net, const RepairSuggestion& s) { return plan_for(net, s).batch; }

// ------------------------------------------------------------ ledger

namespace {

std::uint64_t numeric_suffix(const std::string& id) {
    std::size_t i = id.size();
    while (i > 0 && std::isdigit(static_cast<unsigned char>(id[i - 1]))) --i;
    return i == id.size() ? 0 : std::stoull(id.substr(i));
}

std::string content_key(const RepairSuggestion& s) {
    std::vector<std::string> nodes = s.node_ids;
    if (s.action == RepairAction::add_edge || s.action == RepairAction::connect_boundary) std::sort(nodes.begin(), nodes.end());
    const bool connect = s.action == RepairAction::add_edge || s.action == RepairAction::connect_boundary;
    return std::string(connect ? "connect" : to_string(s.action)) + "|" + s.layer_id + "|" + join(nodes, ",") + "|" +
           join(s.edge_ids, ",");
}

std::string flag_key(const Flag& f) {
    auto related = f.related;
    std::sort(related.begin(), related.end());
    return to_string(f.rule) + "|" + f.layer_id + "|" + f.target + "|" + join(related, ",");
}

// Touched entity ids per kind for a batch.
struct Touched {
    std::set<std::string> nodes;
    std::set<std::string> edges;
    std::set<std::string> footprints;
};

Touched touched_by(const EditBatch& batch) {
    Touched t;
    for (const auto& action : batch) {
        std::visit(
            [&](const auto& a) {
                using T = std::decay_t<decltype(a)>;
                if constexpr (std::is_same_v<T, edit::AddNode> || std::is_same_v<T, edit::ModifyNode>) t.nodes.insert(a.node.id);
                else if constexpr (std::is_same_v<T, edit::RemoveNode>) t.nodes.insert(a.id);
                else if constexpr (std::is_same_v<T, edit::AddEdge> || std::is_same_v<T, edit::ModifyEdge>) t.edges.insert(a.edge.id);
                else if constexpr (std::is_same_v<T, edit::RemoveEdge>) t.edges.insert(a.id);
                else if constexpr (std::is_same_v<T, edit::AddFootprint>) t.footprints.insert(a.footprint.id);
                else if constexpr (std::is_same_v<T, edit::RemoveFootprint>) t.footprints.insert(a.id);
            },
            action);
    }
    return t;
}

json snapshot(const InfrastructureNetwork& net, const Touched& t) {
    json out = {{"nodes", json::object()}, {"edges", json::object()}, {"footprints", json::object()}};
    for (const auto& id : t.nodes) {
        const Node* n = net.find_node(id);
        out["nodes"][id] = n ? to_json(*n) : json();
    }
    for (const auto& id : t.edges) {
        const Edge* e = net.find_edge(id);
        out["edges"][id] = e ? to_json(*e) : json();
    }
    for (const auto& id : t.footprints) {
        auto it = net.footprints().find(id);
        out["footprints"][id] = it != net.footprints().end() ? to_json(it->second) : json();
    }
    return out;
}

Touched touched_from(const json& snap) {
    Touched t;
    for (auto it = snap["nodes"].begin(); it != snap["nodes"].end(); ++it) t.nodes.insert(it.key());
    for (auto it = snap["edges"].begin(); it != snap["edges"].end(); ++it) t.edges.insert(it.key());
    for (auto it = snap["footprints"].begin(); it != snap["footprints"].end(); ++it) t.footprints.insert(it.key());
    return t;
}

// Batch restoring `before` from `after`.
EditBatch inverse(const json& before, const json& after) {
    EditBatch remove_edges, remove_footprints, nodes, edges, footprints, remove_nodes;
    for (auto it = before["edges"].begin(); it != before["edges"].end(); ++it) {
        const json& b = it.value();
        const json& a = after["edges"][it.key()];
        if (b.is_null() && !a.is_null()) remove_edges.push_back(edit::RemoveEdge{it.key()});
        else if (!b.is_null() && a.is_null()) edges.push_back(edit::AddEdge{edge_from_json(b)});
        else if (!b.is_null() && b != a) edges.push_back(edit::ModifyEdge{edge_from_json(b)});
    }
    for (auto it = before["footprints"].begin(); it != before["footprints"].end(); ++it) {
        const json& b = it.value();
        const json& a = after["footprints"][it.key()];
        if (!a.is_null()) remove_footprints.push_back(edit::RemoveFootprint{it.key()});
        if (!b.is_null()) footprints.push_back(edit::AddFootprint{footprint_from_json(b)});
    }
    for (auto it = before["nodes"].begin(); it != before["nodes"].end(); ++it) {
        const json& b = it.value();
        const json& a = after["nodes"][it.key()];
        if (b.is_null() && !a.is_null()) remove_nodes.push_back(edit::RemoveNode{it.key()});
        else if (!b.is_null() && a.is_null()) nodes.push_back(edit::AddNode{node_from_json(b)});
        else if (!b.is_null() && b != a) nodes.push_back(edit::ModifyNode{node_from_json(b)});
    }
    EditBatch out;
    for (auto* part : {&remove_edges, &remove_footprints, &nodes, &edges, &footprints, &remove_nodes}) {
        out.insert(out.end(), part->begin(), part->end());
    }
    return out;
}

}  // namespace

const Flag& RepairLedger::flag(std::string_view id) const {
    auto it = flags_.find(std::string(id));
    if (it == flags_.end()) throw NotFoundError("unknown flag '" + std::string(id) + "'");
    return it->second;
}

const RepairSuggestion& RepairLedger::suggestion(std::string_view id) const {
    auto it = suggestions_.find(std::string(id));
    if (it == suggestions_.end()) throw NotFoundError("unknown suggestion '" + std::string(id) + "'");
    return it->second;
}

std::string RepairLedger::next_flag_id() { return "F" + std::to_string(++flag_counter_); }
std::string RepairLedger::next_suggestion_id() { return "S" + std::to_string(++suggestion_counter_); }

CommitResult RepairLedger::commit(Detection d, std::uint64_t revision) {
    std::set<std::string> known_suggestions;
    for (const auto& [id, s] : suggestions_) known_suggestions.insert(content_key(s));
    std::set<std::string> known_flags;
    for (const auto& [id, f] : flags_) {
        if (!f.suggestion_id && f.status != FlagStatus::accepted) known_flags.insert(flag_key(f));
    }

    CommitResult result;
    std::map<std::string, std::string> sugg_ids;  // local -> ledger
    std::set<std::string> dropped;                // local suggestion ids
    for (auto& s : d.suggestions) {
        if (!known_suggestions.insert(content_key(s)).second) {
            dropped.insert(s.id);
            continue;
        }
        sugg_ids[s.id] = next_suggestion_id();
    }
    std::map<std::string, std::string> flag_ids;
    for (auto& f : d.flags) {
        if (f.suggestion_id && dropped.count(*f.suggestion_id)) continue;
        if (!f.suggestion_id && !known_flags.insert(flag_key(f)).second) continue;
        const std::string local = f.id;
        f.id = next_flag_id();
        flag_ids[local] = f.id;
        if (f.suggestion_id) f.suggestion_id = sugg_ids.at(*f.suggestion_id);
        f.created_rev = revision;
        f.status = FlagStatus::open;
        result.flag_ids.push_back(f.id);
        flags_.emplace(f.id, f);
    }
    for (auto& s : d.suggestions) {
        if (dropped.count(s.id)) continue;
        s.id = sugg_ids.at(s.id);
        for (auto& fid : s.flag_ids) fid = flag_ids.at(fid);
        s.created_rev = revision;
        result.suggestion_ids.push_back(s.id);
        suggestions_.emplace(s.id, std::move(s));
    }
    return result;
}

std::uint64_t RepairLedger::apply(InfrastructureNetwork& net, std::string_view suggestion_id) {
    auto it = suggestions_.find(std::string(suggestion_id));
    if (it == suggestions_.end()) throw NotFoundError("unknown suggestion '" + std::string(suggestion_id) + "'");
    RepairSuggestion& s = it->second;
    for (const auto& fid : s.flag_ids) {
        if (flags_.at(fid).status != FlagStatus::open) {
            throw ConflictError("suggestion " + s.id + " was already resolved (flag " + fid + " is " +
                                to_string(flags_.at(fid).status) + ")");
        }
    }
    if (s.applied) throw ConflictError("suggestion " + s.id + " is already applied");

    Plan plan = plan_for(net, s);
    const Touched touched = touched_by(plan.batch);
    const json before = snapshot(net, touched);
    std::uint64_t rev = 0;
    try {
        rev = net.apply_edit(plan.batch);
    } catch (const IntegrityError& e) {
        throw ConflictError("suggestion " + s.id + " cannot be applied: " + e.what());
    }
    const json after = snapshot(net, touched);
    s.applied = true;
    s.undo = inverse(before, after);
    s.applied_state = after;
    s.created_ids.clear();
    for (const auto& kind : {"nodes", "edges", "footprints"}) {
        for (auto e = before[kind].begin(); e != before[kind].end(); ++e) {
            if (e.value().is_null()) s.created_ids.push_back(e.key());
        }
    }
    for (const auto& fid : s.flag_ids) {
        Flag& f = flags_.at(fid);
        for (const auto& note : plan.notes) {
            if (f.detail.find(note) == std::string::npos) f.detail += "; " + note;
        }
    }
    return rev;
}

std::uint64_t RepairLedger::revert(InfrastructureNetwork& net, std::string_view suggestion_id) {
    auto it = suggestions_.find(std::string(suggestion_id));
    if (it == suggestions_.end()) throw NotFoundError("unknown suggestion '" + std::string(suggestion_id) + "'");
    RepairSuggestion& s = it->second;
    if (!s.applied) throw ConflictError("suggestion " + s.id + " is not applied");
    const json current = snapshot(net, touched_from(s.applied_state));
    if (current != s.applied_state) {
        throw ConflictError("suggestion " + s.id + " cannot be reverted: later edits changed the entities it touched");
    }
    std::uint64_t rev = 0;
    try {
        rev = net.apply_edit(s.undo);
    } catch (const IntegrityError& e) {
        throw ConflictError("suggestion " + s.id + " cannot be reverted: " + e.what());
    }
    s.applied = false;
    s.undo.clear();
    s.applied_state = json();
    s.created_ids.clear();
    return rev;
}

Flag RepairLedger::resolve(InfrastructureNetwork& net, std::string_view flag_id, FlagStatus decision, Role actor,
                           std::string timestamp, const AccessPolicy& policy) {
    const Flag& current = flag(flag_id);
    if (decision == FlagStatus::open) throw ArgumentError("decision must be accepted or rejected");
    const Layer* layer = net.has_layer(current.layer_id) ? &net.layer(current.layer_id) : nullptr;
    Layer fallback;
    fallback.id = current.layer_id;
    const auto verdict = authorize(policy, actor, Capability::resolve_flags, layer ? *layer : fallback);
    if (!verdict.allowed) {
        throw AuthorizationError("role " + to_string(actor) + " may not resolve flags on layer '" + current.layer_id +
                                 "' (" + verdict.reason + ")");
    }
    if (current.status != FlagStatus::open) {
        throw ConflictError("flag " + current.id + " is already " + to_string(current.status));
    }
    std::vector<std::string> group{current.id};
    if (current.suggestion_id) {
        const std::string sid = *current.suggestion_id;
        const RepairSuggestion& s = suggestion(sid);
        if (decision == FlagStatus::accepted && !s.applied) apply(net, sid);
        if (decision == FlagStatus::rejected && s.applied) revert(net, sid);
        group = s.flag_ids;
    }
    for (const auto& fid : group) {
        Flag& f = flags_.at(fid);
        f.status = decision;
        f.resolved_by = to_string(actor);
        f.resolved_at = timestamp;
    }
    return flags_.at(std::string(flag_id));
}

std::string RepairLedger::record_manual(const EditBatch& batch, std::string_view layer_id, Role actor,
                                        std::uint64_t revision, std::string timestamp) {
    const Touched t = touched_by(batch);
    std::vector<std::string> ids;
    ids.insert(ids.end(), t.nodes.begin(), t.nodes.end());
    ids.insert(ids.end(), t.edges.begin(), t.edges.end());
    ids.insert(ids.end(), t.footprints.begin(), t.footprints.end());
    Flag f;
    f.id = next_flag_id();
    f.rule = Rule::manual;
    f.layer_id = std::string(layer_id);
    if (!ids.empty()) {
        f.target = ids.front();
        f.related.assign(ids.begin() + 1, ids.end());
    }
    f.status = FlagStatus::accepted;
    f.detail = "manual edit of " + std::to_string(batch.size()) + " action(s) by " + to_string(actor);
    f.created_rev = revision;
    f.resolved_by = to_string(actor);
    f.resolved_at = std::move(timestamp);
    flags_.emplace(f.id, f);
    return f.id;
}

std::vector<Flag> RepairLedger::list(const FlagFilter& filter) const {
    std::vector<Flag> out;
    for (const auto& [id, f] : flags_) {
        if (filter.status && f.status != *filter.status) continue;
        if (filter.rule && f.rule != *filter.rule) continue;
        if (filter.layer_id && f.layer_id != *filter.layer_id) continue;
        out.push_back(f);
    }
    std::sort(out.begin(), out.end(), [](const Flag& a, const Flag& b) { return numeric_suffix(a.id) < numeric_suffix(b.id); });
    return out;
}

Flag resolve_flag(InfrastructureNetwork& net, RepairLedger& ledger, std::string_view flag_id, FlagStatus decision,
                  Role actor, std::string timestamp) {
    return ledger.resolve(net, flag_id, decision, actor, std::move(timestamp));
}

// ------------------------------------------------------------ JSON

namespace {

json optional_string(const std::optional<std::string>& s) { return s ? json(*s) : json(); }

std::optional<std::string> read_optional_string(const json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return j[key].get<std::string>();
}

}  // namespace

json to_json(const Flag& f) {
    return {{"id", f.id},
            {"rule", to_string(f.rule)},
            {"layer", f.layer_id},
            {"target", f.target},
            {"related", f.related},
            {"status", to_string(f.status)},
            {"detail", f.detail},
            {"suggestion", optional_string(f.suggestion_id)},
            {"created_rev", f.created_rev},
            {"resolved_by", optional_string(f.resolved_by)},
            {"resolved_at", optional_string(f.resolved_at)}};
}

Flag flag_from_json(const json& j) {
    Flag f;
    f.id = j.at("id").get<std::string>();
    f.rule = rule_from_string(j.at("rule").get<std::string>());
    f.layer_id = j.at("layer").get<std::string>();
    f.target = j.at("target").get<std::string>();
    f.related = j.value("related", std::vector<std::string>{});
    f.status = flag_status_from_string(j.at("status").get<std::string>());
    f.detail = j.value("detail", std::string{});
    f.suggestion_id = read_optional_string(j, "suggestion");
    f.created_rev = j.value("created_rev", std::uint64_t{0});
    f.resolved_by = read_optional_string(j, "resolved_by");
    f.resolved_at = read_optional_string(j, "resolved_at");
    return f;
}

json to_json(const RepairSuggestion& s) {
    json geometry;
    if (s.geometry.size() == 1) geometry = geometry_to_geojson(s.geometry.front());
    else if (s.geometry.size() >= 2) geometry = geometry_to_geojson(LineString{s.geometry});
    json undo = json::array();
    for (const auto& a : s.undo) undo.push_back(to_json(a));
    return {{"id", s.id},
            {"action", to_string(s.action)},
            {"layer", s.layer_id},
            {"provenance", {{"rule", to_string(s.rule)}, {"context_layers", s.context_layers}}},
            {"nodes", s.node_ids},
            {"edges", s.edge_ids},
            {"attachments", s.attachments},
            {"point", s.point ? json::array({s.point->x, s.point->y}) : json()},
            {"geometry", geometry},
            {"flags", s.flag_ids},
            {"created_rev", s.created_rev},
            {"applied", s.applied},
            {"created_ids", s.created_ids},
            {"undo", undo},
            {"applied_state", s.applied_state}};
}

RepairSuggestion suggestion_from_json(const json& j) {
    RepairSuggestion s;
    s.id = j.at("id").get<std::string>();
    s.action = repair_action_from_string(j.at("action").get<std::string>());
    s.layer_id = j.at("layer").get<std::string>();
    s.rule = rule_from_string(j.at("provenance").at("rule").get<std::string>());
    s.context_layers = j.at("provenance").value("context_layers", std::vector<std::string>{});
    s.node_ids = j.value("nodes", std::vector<std::string>{});
    s.edge_ids = j.value("edges", std::vector<std::string>{});
    s.attachments = j.value("attachments", std::vector<std::string>{});
    if (j.contains("point") && j["point"].is_array()) s.point = Point2D{j["point"][0].get<double>(), j["point"][1].get<double>()};
    if (j.contains("geometry") && j["geometry"].is_object()) {
        const auto& g = j["geometry"];
        if (g["type"] == "Point") {
            s.geometry = {{g["coordinates"][0].get<double>(), g["coordinates"][1].get<double>()}};
        } else {
            for (const auto& p : g["coordinates"]) s.geometry.push_back({p[0].get<double>(), p[1].get<double>()});
        }
    }
    s.flag_ids = j.value("flags", std::vector<std::string>{});
    s.created_rev = j.value("created_rev", std::uint64_t{0});
    s.applied = j.value("applied", false);
    s.created_ids = j.value("created_ids", std::vector<std::string>{});
    if (j.contains("undo")) {
        for (const auto& a : j["undo"]) s.undo.push_back(edit_action_from_json(a));
    }
    s.applied_state = j.value("applied_state", json());
    return s;
}

json RepairLedger::to_json() const {
    json flags = json::array();
    for (const auto& f : list()) flags.push_back(guides::to_json(f));
    std::vector<const RepairSuggestion*> ordered;
    for (const auto& [id, s] : suggestions_) ordered.push_back(&s);
    std::sort(ordered.begin(), ordered.end(),
              [](const auto* a, const auto* b) { return numeric_suffix(a->id) < numeric_suffix(b->id); });
    json suggestions = json::array();
    for (const auto* s : ordered) suggestions.push_back(guides::to_json(*s));
    return {{"ledger_version", kVersion},
            {"flag_counter", flag_counter_},
            {"suggestion_counter", suggestion_counter_},
            {"flags", flags},
            {"suggestions", suggestions}};
}

RepairLedger RepairLedger::from_json(const json& j) {
    const int version = j.value("ledger_version", 0);
    if (version != kVersion) {
        throw ValidationError("unsupported ledger_version " + std::to_string(version) + " (expected " +
                              std::to_string(kVersion) + ")");
    }
    RepairLedger ledger;
    for (const auto& f : j.at("flags")) {
        Flag flag = flag_from_json(f);
        ledger.flags_.emplace(flag.id, std::move(flag));
    }
    for (const auto& s : j.at("suggestions")) {
        RepairSuggestion sugg = suggestion_from_json(s);
        ledger.suggestions_.emplace(sugg.id, std::move(sugg));
    }
    ledger.flag_counter_ = j.value("flag_counter", std::uint64_t{0});
    ledger.suggestion_counter_ = j.value("suggestion_counter", std::uint64_t{0});
    for (const auto& [id, f] : ledger.flags_) ledger.flag_counter_ = std::max(ledger.flag_counter_, numeric_suffix(id));
    for (const auto& [id, s] : ledger.suggestions_) {
        ledger.suggestion_counter_ = std::max(ledger.suggestion_counter_, numeric_suffix(id));
    }
    return ledger;
}

}  // namespace guides
