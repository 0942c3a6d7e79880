#include "guides/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "guides/error.hpp"
#include "guides/ingest.hpp"
#include "guides/polygonize.hpp"

namespace guides {

using nlohmann::json;
namespace fs = std::filesystem;

std::string to_string(Stage s) {
    switch (s) {
        case Stage::convert: return "convert";
        case Stage::detect: return "detect";
        case Stage::repair: return "repair";
        case Stage::eval: return "eval";
    }
    return "convert";
}

Stage stage_from_string(std::string_view s) {
    for (Stage st : {Stage::convert, Stage::detect, Stage::repair, Stage::eval}) {
        if (to_string(st) == s) return st;
    }
    throw ArgumentError("unknown stage '" + std::string(s) + "'");
}

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NotFoundError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void require_positive(double v, const char* name) {
    if (!(v > 0)) throw ArgumentError(std::string(name) + " must be positive");
}

// Closed building cycles plus any polygon footprints of the layer.
MultiPolygonGeometry building_area(const InfrastructureNetwork& net, const std::string& layer) {
    MultiPolygonGeometry out;
    if (!net.has_layer(layer)) return out;
    out = polygonize_layer(net, layer).polygons;
    for (const auto* f : net.layer_footprints(layer)) {
        for (const auto& p : f->geometry.polygons) out.polygons.push_back(p);
    }
    return out;
}

struct Stats {
    std::size_t applied = 0;
    std::size_t skipped = 0;  // stale by the time they were applied
};

void apply_all(InfrastructureNetwork& net, RepairLedger& ledger, const CommitResult& committed, Stats& stats) {
    for (const auto& sid : committed.suggestion_ids) {
        try {
            ledger.apply(net, sid);
            ++stats.applied;
        } catch (const ConflictError&) {
            ++stats.skipped;
        }
    }
}

Detection duplicates(const InfrastructureNetwork& net, const PipelineConfig& cfg) {
    Detection d;
    for (const auto& l : {cfg.pipes_layer, cfg.streets_layer}) {
        if (net.has_layer(l)) d.append(detect_duplicate_nodes(net, l));
    }
    return d;
}

Detection symbols(const InfrastructureNetwork& net, const PipelineConfig& cfg) {
    Detection d;
    if (!net.has_layer(cfg.pipes_layer)) return d;
    d.append(detect_symbol_circles(net, cfg.pipes_layer, cfg.symbol));
    d.append(check_valve_degree(net, cfg.pipes_layer));
    return d;
}

Detection dangling(const InfrastructureNetwork& net, const PipelineConfig& cfg) {
    Detection d;
    if (!net.has_layer(cfg.pipes_layer)) return d;
    const auto area = building_area(net, cfg.buildings_layer);
    d.append(detect_dangling_ends(net, cfg.pipes_layer, area));
    const auto ends = dangling_end_nodes(net, cfg.pipes_layer, area);
    const std::optional<std::string_view> streets =
        net.has_layer(cfg.streets_layer) ? std::optional<std::string_view>(cfg.streets_layer) : std::nullopt;
    d.append(infer_missing_edges(net, cfg.pipes_layer, streets, cfg.inference, ends, area));
    return d;
}

Detection boundaries(const InfrastructureNetwork& net, const PipelineConfig& cfg) {
    Detection d;
    if (net.has_layer(cfg.buildings_layer) && !net.layer_edges(cfg.buildings_layer).empty()) {
        d.append(repair_building_boundaries(net, cfg.buildings_layer));
    }
    return d;
}

json layer_counts(const InfrastructureNetwork& net) {
    json out = json::object();
    for (const auto& [id, layer] : net.layers()) {
        out[id] = {{"nodes", net.layer_nodes(id).size()},
                   {"edges", net.layer_edges(id).size()},
                   {"footprints", net.layer_footprints(id).size()}};
    }
    return out;
}

json flag_counts(const RepairLedger& ledger) {
    json out = json::object();
    for (const auto& [id, f] : ledger.flags()) {
        const auto key = to_string(f.rule);
        out[key] = out.value(key, 0) + 1;
    }
    return out;
}

PipelineResult run_eval(const PipelineConfig& cfg) {
    const SyntheticSpec spec = cfg.synthetic.value_or(SyntheticSpec{});
    TrialConfig trial;
    trial.grid = spec.grid;
    trial.seed = cfg.seed;
    trial.p = spec.p;
    trial.inference = cfg.inference;
    trial.matching_tolerance = cfg.epsilon;
    const auto without = run_trial(trial, false);
    const auto with = run_trial(trial, true);
    PipelineResult r;
    r.artifacts["evaluation.csv"] = csv_header() + "\n" + csv_row(without) + "\n" + csv_row(with) + "\n";
    const json eval = {{"grid", to_json(spec.grid)}, {"without_constraint", to_json(without)}, {"with_constraint", to_json(with)}};
    r.artifacts["evaluation.json"] = eval.dump(2) + "\n";
    r.summary = {{"summary_version", kSummaryVersion}, {"stage", "eval"}, {"seed", cfg.seed}, {"evaluation", eval}};
    r.artifacts["summary.json"] = r.summary.dump(2) + "\n";
    return r;
}

}  // namespace

PipelineConfig pipeline_config_from_json(const json& j, const std::string& base_dir) {
    if (!j.is_object() || j.empty()) throw ArgumentError("empty pipeline configuration");
    PipelineConfig cfg;
    for (const auto& l : j.value("layers", json::array())) {
        LayerSource src;
        src.layer = layer_from_json(l);
        fs::path p = l.at("path").get<std::string>();
        if (p.is_relative() && !base_dir.empty()) p = fs::path(base_dir) / p;
        src.path = p.string();
        cfg.layers.push_back(std::move(src));
    }
    cfg.epsilon = j.value("epsilon", cfg.epsilon);
    if (j.contains("inference")) {
        const auto& i = j["inference"];
        cfg.inference.search_radius = i.value("search_radius", cfg.inference.search_radius);
        cfg.inference.corridor_half_width = i.value("corridor_half_width", cfg.inference.corridor_half_width);
        cfg.inference.sample_spacing = i.value("sample_spacing", cfg.inference.sample_spacing);
        cfg.inference.max_passes = i.value("max_passes", cfg.inference.max_passes);
    }
    if (j.contains("symbol")) {
        const auto& s = j["symbol"];
        cfg.symbol.min_nodes = s.value("min_nodes", cfg.symbol.min_nodes);
        cfg.symbol.radial_tolerance = s.value("radial_tolerance", cfg.symbol.radial_tolerance);
        cfg.symbol.max_radius = s.value("max_radius", cfg.symbol.max_radius);
    }
    cfg.pipes_layer = j.value("pipes_layer", cfg.pipes_layer);
    cfg.streets_layer = j.value("streets_layer", cfg.streets_layer);
    cfg.buildings_layer = j.value("buildings_layer", cfg.buildings_layer);
    if (j.contains("output_dir")) {
        fs::path p = j["output_dir"].get<std::string>();
        if (p.is_relative() && !base_dir.empty()) p = fs::path(base_dir) / p;
        cfg.output_dir = p.string();
    }
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("synthetic")) {
        SyntheticSpec s;
        s.p = j["synthetic"].value("p", s.p);
        if (j["synthetic"].contains("grid")) s.grid = grid_params_from_json(j["synthetic"]["grid"]);
        cfg.synthetic = s;
    }
    return cfg;
}

PipelineConfig load_pipeline_config(const std::string& path) {
    const auto text = read_file(path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(path + ": " + e.what(), e.byte);
    }
    return pipeline_config_from_json(j, fs::path(path).parent_path().string());
}

void validate(const PipelineConfig& cfg) {
    require_positive(cfg.epsilon, "epsilon");
    require_positive(cfg.inference.search_radius, "inference.search_radius");
    require_positive(cfg.inference.corridor_half_width, "inference.corridor_half_width");
    require_positive(cfg.inference.sample_spacing, "inference.sample_spacing");
    require_positive(cfg.inference.max_passes, "inference.max_passes");
    require_positive(static_cast<double>(cfg.symbol.min_nodes), "symbol.min_nodes");
    require_positive(cfg.symbol.radial_tolerance, "symbol.radial_tolerance");
    require_positive(cfg.symbol.max_radius, "symbol.max_radius");
    if (cfg.synthetic && !(cfg.synthetic->p > 0 && cfg.synthetic->p < 1)) throw ArgumentError("synthetic.p must be in (0, 1)");
    for (const auto& l : cfg.layers) {
        if (!fs::exists(l.path)) throw NotFoundError("input not found: " + l.path);
    }
}

PipelineResult run_pipeline(const PipelineConfig& cfg, Stage stage) {
    validate(cfg);
    if (stage == Stage::eval) return run_eval(cfg);
    if (cfg.layers.empty()) throw ArgumentError("configuration lists no input layers");

    std::vector<LayerInput> inputs;
    json unsupported = json::array();
    for (const auto& src : cfg.layers) {
        const auto text = read_file(src.path);
        ParsedLayer parsed;
        try {
            parsed = parse_layer(text, src.layer);
        } catch (const ParseError& e) {
            throw ParseError(src.path + ": " + e.what(), e.byte_offset());
        } catch (const ValidationError& e) {
            throw ValidationError(src.path + ": " + e.what());
        }
        for (const auto& u : parsed.unsupported) {
            unsupported.push_back({{"layer", src.layer.id}, {"feature", u.index}, {"geometry_type", u.geometry_type}});
        }
        inputs.push_back({src.layer, std::move(parsed.features)});
    }
    auto built = build_network(inputs, cfg.epsilon);
    PipelineResult r{{}, {}, std::move(built.network), {}};
    json issues = json::array();
    for (const auto& i : built.issues) issues.push_back({{"layer", i.layer_id}, {"feature", i.feature_index}, {"reason", i.reason}});

    Stats stats;
    if (stage == Stage::detect) {
        Detection all;
        all.append(duplicates(r.network, cfg));
        all.append(symbols(r.network, cfg));
        all.append(dangling(r.network, cfg));
        all.append(boundaries(r.network, cfg));
        r.ledger.commit(std::move(all), r.network.revision());
    } else if (stage == Stage::repair) {
        for (auto step : {duplicates, symbols, dangling, boundaries}) {
            const auto committed = r.ledger.commit(step(r.network, cfg), r.network.revision());
            apply_all(r.network, r.ledger, committed, stats);
        }
    }

    for (const auto& [id, layer] : r.network.layers()) r.artifacts[id + ".geojson"] = export_layer(r.network, id);
    r.artifacts["network.json"] = canonical_dump(r.network) + "\n";
    if (stage != Stage::convert) r.artifacts["ledger.json"] = r.ledger.to_json().dump(2) + "\n";
    r.summary = {{"summary_version", kSummaryVersion},
                 {"stage", to_string(stage)},
                 {"revision", r.network.revision()},
                 {"layers", layer_counts(r.network)},
                 {"build_issues", issues},
                 {"unsupported_features", unsupported}};
    if (stage != Stage::convert) {
        r.summary["flags_by_rule"] = flag_counts(r.ledger);
        r.summary["flags"] = r.ledger.flags().size();
        r.summary["suggestions"] = r.ledger.suggestions().size();
        r.summary["applied"] = stats.applied;
        r.summary["skipped_stale"] = stats.skipped;
    }
    r.artifacts["summary.json"] = r.summary.dump(2) + "\n";
    return r;
}

void write_artifacts(const PipelineResult& result, const std::string& output_dir) {
    if (output_dir.empty()) throw ArgumentError("no output directory");
    fs::create_directories(output_dir);
    for (const auto& [name, content] : result.artifacts) {
        std::ofstream out(fs::path(output_dir) / name, std::ios::binary | std::ios::trunc);
        if (!out) throw NotFoundError("cannot write " + (fs::path(output_dir) / name).string());
        out << content;
    }
}

}  // namespace guides
