#include "guides/synth.hpp"

#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "guides/error.hpp"
#include "guides/polygonize.hpp"

namespace guides {

using nlohmann::json;

GridParams reference_grid() {
    GridParams g;
    g.rows = 10;
    g.cols = 10;
    g.block = 100.0;
    g.subdivisions = 4;
    g.short_stub_fraction = 0.23;
    g.hydrant_fraction = 0.045;
    return g;
}

namespace {

// Uniform [0, 1) from the raw engine output, independent of the standard
// library's distribution implementations.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

struct Builder {
    SyntheticScene& scene;
    int street_nodes = 0;
    int pipe_nodes = 0;
    int street_edges = 0;
    int pipe_edges = 0;
    int building_nodes = 0;
    int building_edges = 0;

    InfrastructureNetwork& net() { return scene.network; }

    std::pair<std::string, std::string> chain_node(Point2D p) {
        const std::string s = "s" + std::to_string(street_nodes++);
        const std::string q = "p" + std::to_string(pipe_nodes++);
        net().add_node({s, p, "streets"});
        net().add_node({q, p, "pipes"});
        return {s, q};
    }

    std::string pipe_node(Point2D p) {
        const std::string q = "p" + std::to_string(pipe_nodes++);
        net().add_node({q, p, "pipes"});
        return q;
    }

    std::string pipe_edge(const std::string& a, const std::string& b) {
        const std::string id = "pe" + std::to_string(pipe_edges++);
        net().add_edge({id, a, b, "pipes"});
        return id;
    }

    void street_edge(const std::string& a, const std::string& b) {
        net().add_edge({"se" + std::to_string(street_edges++), a, b, "streets"});
    }

    void building(const std::vector<Point2D>& corners) {
        std::vector<std::string> ids;
        for (const auto& c : corners) {
            ids.push_back("b" + std::to_string(building_nodes++));
            net().add_node({ids.back(), c, "buildings"});
        }
        for (std::size_t i = 0; i < ids.size(); ++i) {
            net().add_edge({"be" + std::to_string(building_edges++), ids[i], ids[(i + 1) % ids.size()], "buildings"});
        }
    }
};

}  // namespace

SyntheticScene generate_scene(std::uint64_t seed, const GridParams& g) {
    if (g.rows < 2 || g.cols < 2) throw ArgumentError("grid needs at least 2 rows and 2 columns");
    if (!(g.block > 0) || g.subdivisions < 1 || !(g.building_width > 0) || !(g.building_depth > 0) || g.setback < 0) {
        throw ArgumentError("grid dimensions must be positive");
    }
    if (g.setback + g.building_depth > g.block / 2 || g.building_width > g.block - 2 * (g.setback + g.building_depth)) {
        throw ArgumentError("buildings do not fit in a block");
    }
    SyntheticScene scene;
    scene.seed = seed;
    scene.grid = g;
    auto& net = scene.network;
    net.add_layer({"streets", "Streets", LayerKind::streets});
    net.add_layer({"pipes", "Water pipes", LayerKind::pipes, Sensitivity::sensitive});
    net.add_layer({"buildings", "Buildings", LayerKind::buildings});

    Builder b{scene};
    std::mt19937_64 rng(seed);
    const int s = g.subdivisions;
    const double unit_len = g.block / s;
    // Lattice position -> (street node, pipe node).
    std::map<std::pair<int, int>, std::pair<std::string, std::string>> lattice;
    auto at = [&](int i, int j) -> const std::pair<std::string, std::string>& {
        auto it = lattice.find({i, j});
        if (it == lattice.end()) it = lattice.emplace(std::make_pair(i, j), b.chain_node({i * unit_len, j * unit_len})).first;
        return it->second;
    };
    for (int r = 0; r < g.rows; ++r) {
        for (int c = 0; c < g.cols; ++c) at(c * s, r * s);
    }
    scene.intersections = lattice.size();
    auto segment = [&](int i0, int j0, int di, int dj) {
        for (int k = 0; k < s; ++k) {
            const auto& u = at(i0 + k * di, j0 + k * dj);
            const auto& v = at(i0 + (k + 1) * di, j0 + (k + 1) * dj);
            b.street_edge(u.first, v.first);
            scene.main_edges.insert(b.pipe_edge(u.second, v.second));
        }
    };
    for (int r = 0; r < g.rows; ++r) {
        for (int c = 0; c + 1 < g.cols; ++c) segment(c * s, r * s, 1, 0);
    }
    for (int c = 0; c < g.cols; ++c) {
        for (int r = 0; r + 1 < g.rows; ++r) segment(c * s, r * s, 0, 1);
    }

    std::set<std::pair<int, int>> served;
    for (int r = 0; r + 1 < g.rows; ++r) {
        for (int c = 0; c + 1 < g.cols; ++c) {
            struct Side {
                int i0, j0, di, dj;  // lattice start and direction along the street
                double nx, ny;       // inward normal
            };
            const Side sides[] = {{c * s, r * s, 1, 0, 0, 1},
                                  {c * s, (r + 1) * s, 1, 0, 0, -1},
                                  {c * s, r * s, 0, 1, 1, 0},
                                  {(c + 1) * s, r * s, 0, 1, -1, 0}};
            for (const auto& side : sides) {
                const Point2D start{side.i0 * unit_len, side.j0 * unit_len};
                const Point2D m{start.x + side.di * g.block / 2, start.y + side.dj * g.block / 2};
                auto offset = [&](double along, double in) {
                    return Point2D{m.x + side.di * along + side.nx * in, m.y + side.dj * along + side.ny * in};
                };
                const double hw = g.building_width / 2;
                b.building({offset(-hw, g.setback), offset(hw, g.setback), offset(hw, g.setback + g.building_depth),
                            offset(-hw, g.setback + g.building_depth)});
                const int k = s / 2;
                const std::pair<int, int> attach{side.i0 + k * side.di, side.j0 + k * side.dj};
                served.insert(attach);
                const bool short_stub = unit(rng) < g.short_stub_fraction;
                const Point2D end = short_stub ? offset(0, g.short_stub_offset) : offset(0, g.setback + 3.0);
                scene.service_edges.insert(b.pipe_edge(lattice.at(attach).second, b.pipe_node(end)));
            }
        }
    }

    if (g.hydrant_fraction > 0) {
        for (const auto& [pos, ids] : lattice) {
            const bool horizontal = pos.second % s == 0;
            const bool vertical = pos.first % s == 0;
            if ((horizontal && vertical) || served.count(pos)) continue;
            if (unit(rng) >= g.hydrant_fraction) continue;
            const double sign = unit(rng) < 0.5 ? -1.0 : 1.0;
            const Point2D p = net.node(ids.second).position;
            const Point2D end = horizontal ? Point2D{p.x, p.y + sign * g.hydrant_offset} : Point2D{p.x + sign * g.hydrant_offset, p.y};
            scene.service_edges.insert(b.pipe_edge(ids.second, b.pipe_node(end)));
        }
    }
    return scene;
}

CorruptedScene corrupt_scene(const SyntheticScene& scene, double p, std::uint64_t seed, bool include_service) {
    if (!(p > 0.0 && p < 1.0)) throw ArgumentError("removal fraction must be in (0, 1)");
    std::vector<std::string> pool(scene.main_edges.begin(), scene.main_edges.end());
    if (include_service) pool.insert(pool.end(), scene.service_edges.begin(), scene.service_edges.end());
    std::sort(pool.begin(), pool.end());
    const auto count = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(p * static_cast<double>(pool.size()) - 1e-9)));
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng() % (pool.size() - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(count);
    std::sort(pool.begin(), pool.end());

    CorruptedScene out{scene.network, {}};
    EditBatch batch;
    for (const auto& id : pool) {
        const Edge& e = scene.network.edge(id);
        out.removed.push_back({id, e.endpoint_a, e.endpoint_b, scene.network.node(e.endpoint_a).position,
                               scene.network.node(e.endpoint_b).position});
        batch.push_back(edit::RemoveEdge{id});
    }
    out.network.apply_edit(batch);
    return out;
}

EvaluationReport evaluate_inference(const InfrastructureNetwork& corrupted, const std::vector<RepairSuggestion>& suggestions,
                                    const std::vector<RemovedEdge>& removed, double tol) {
    EvaluationReport r;
    r.removed = removed.size();
    std::vector<bool> matched(removed.size(), false);
    for (const auto& s : suggestions) {
        if (s.action != RepairAction::add_edge || s.node_ids.size() != 2) continue;
        ++r.suggested;
        const Point2D a = corrupted.node(s.node_ids[0]).position;
        const Point2D b = corrupted.node(s.node_ids[1]).position;
        bool tp = false;
        for (std::size_t i = 0; i < removed.size() && !tp; ++i) {
            if (matched[i]) continue;
            const auto& e = removed[i];
            if ((distance(a, e.a) <= tol && distance(b, e.b) <= tol) || (distance(a, e.b) <= tol && distance(b, e.a) <= tol)) {
                matched[i] = tp = true;
            }
        }
        tp ? ++r.true_positives : ++r.false_positives;
    }
    r.precision = r.suggested ? static_cast<double>(r.true_positives) / static_cast<double>(r.suggested) : 1.0;
    r.recall = r.removed ? static_cast<double>(r.true_positives) / static_cast<double>(r.removed) : 0.0;
    return r;
}

EvaluationReport run_trial(const TrialConfig& config, bool constraint) {
    const auto scene = generate_scene(config.seed, config.grid);
    const auto corrupted = corrupt_scene(scene, config.p, config.seed);
    const auto footprints = polygonize_layer(corrupted.network, "buildings").polygons;
    const auto ends = dangling_end_nodes(corrupted.network, "pipes", footprints);
    const auto detection = infer_missing_edges(corrupted.network, "pipes",
                                               constraint ? std::optional<std::string_view>("streets") : std::nullopt,
                                               config.inference, ends, footprints);
    auto report = evaluate_inference(corrupted.network, detection.suggestions, corrupted.removed, config.matching_tolerance);
    report.seed = config.seed;
    report.p = config.p;
    report.params = config.inference;
    report.constraint = constraint;
    return report;
}

json to_json(const GridParams& g) {
    return {{"rows", g.rows},
            {"cols", g.cols},
            {"block", g.block},
            {"subdivisions", g.subdivisions},
            {"building_width", g.building_width},
            {"building_depth", g.building_depth},
            {"setback", g.setback},
            {"short_stub_fraction", g.short_stub_fraction},
            {"short_stub_offset", g.short_stub_offset},
            {"hydrant_fraction", g.hydrant_fraction},
            {"hydrant_offset", g.hydrant_offset}};
}

GridParams grid_params_from_json(const json& j) {
    GridParams g;
    g.rows = j.value("rows", g.rows);
    g.cols = j.value("cols", g.cols);
    g.block = j.value("block", g.block);
    g.subdivisions = j.value("subdivisions", g.subdivisions);
    g.building_width = j.value("building_width", g.building_width);
    g.building_depth = j.value("building_depth", g.building_depth);
    g.setback = j.value("setback", g.setback);
    g.short_stub_fraction = j.value("short_stub_fraction", g.short_stub_fraction);
    g.short_stub_offset = j.value("short_stub_offset", g.short_stub_offset);
    g.hydrant_fraction = j.value("hydrant_fraction", g.hydrant_fraction);
    g.hydrant_offset = j.value("hydrant_offset", g.hydrant_offset);
    return g;
}

json to_json(const EvaluationReport& r) {
    return {{"seed", r.seed},
            {"p", r.p},
            {"params",
             {{"R", r.params.search_radius},
              {"W", r.params.corridor_half_width},
              {"sample_spacing", r.params.sample_spacing},
              {"max_passes", r.params.max_passes}}},
            {"constraint", r.constraint},
            {"removed", r.removed},
            {"suggested", r.suggested},
            {"true_positives", r.true_positives},
            {"false_positives", r.false_positives},
            {"precision", r.precision},
            {"recall", r.recall}};
}

std::string csv_header() { return "seed,p,R,W,constraint,TP,FP,removed,precision,recall"; }

std::string csv_row(const EvaluationReport& r) {
    std::ostringstream os;
    os.precision(6);
    os << r.seed << ',' << r.p << ',' << r.params.search_radius << ',' << r.params.corridor_half_width << ','
       << (r.constraint ? "streets" : "none") << ',' << r.true_positives << ',' << r.false_positives << ',' << r.removed
       << ',' << r.precision << ',' << r.recall;
    return os.str();
}

}  // namespace guides
