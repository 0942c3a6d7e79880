#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "guides/model.hpp"
#include "guides/repair.hpp"
#include "guides/synth.hpp"

namespace guides {

inline constexpr int kSummaryVersion = 1;

struct LayerSource {
    Layer layer;
    std::string path;  // GeoJSON FeatureCollection
};

struct SyntheticSpec {
    GridParams grid = reference_grid();
    double p = 0.2;
};

enum class Stage { convert, detect, repair, eval };

std::string to_string(Stage s);
Stage stage_from_string(std::string_view s);

struct PipelineConfig {
    std::vector<LayerSource> layers;
    double epsilon = kDefaultEpsilon;
    InferenceParams inference;
    SymbolParams symbol;
    std::string pipes_layer = "pipes";
    std::string streets_layer = "streets";
    std::string buildings_layer = "buildings";
    std::string output_dir;
    std::uint64_t seed = 42;
    std::optional<SyntheticSpec> synthetic;
};

/// {"layers": [{"id", "path", "kind", "sensitivity", ...}], "epsilon",
///  "inference": {"search_radius", "corridor_half_width", "sample_spacing", "max_passes"},
///  "symbol": {"min_nodes", "radial_tolerance", "max_radius"},
///  "pipes_layer", "streets_layer", "buildings_layer", "output_dir", "seed",
///  "synthetic": {"p", "grid": {...}}}
/// Relative paths resolve against `base_dir`. Throws ArgumentError for an
/// empty document; parameter ranges are checked by validate().
PipelineConfig pipeline_config_from_json(const nlohmann::json& j, const std::string& base_dir = {});
PipelineConfig load_pipeline_config(const std::string& path);

/// Checks that inputs exist and parameters are positive; NotFoundError names
/// the first missing path.
void validate(const PipelineConfig& cfg);

struct PipelineResult {
    std::map<std::string, std::string> artifacts;  // file name -> content
    nlohmann::json summary;
    InfrastructureNetwork network;
    RepairLedger ledger;
};

/// convert: ingest and re-export each layer. detect: every rule on the
/// ingested network, nothing applied. repair: rules run in order
/// (duplicates, symbols, dangling ends and inference, building boundaries),
/// each group's suggestions applied before the next group is detected; all
/// flags stay open. eval: the synthetic inference trial with and without the
/// street constraint. The artifacts carry no timestamps.
PipelineResult run_pipeline(const PipelineConfig& cfg, Stage stage);

/// Writes the artifacts into cfg.output_dir (created if missing).
void write_artifacts(const PipelineResult& result, const std::string& output_dir);

}  // namespace guides
