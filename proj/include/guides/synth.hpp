#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "guides/model.hpp"
#include "guides/repair.hpp"

namespace guides {

struct GridParams {
    int rows = 10;
    int cols = 10;
    double block = 100.0;
    int subdivisions = 1;  // pipe/street nodes per block side
    double building_width = 30.0;
    double building_depth = 20.0;
    double setback = 12.0;
    /// Fraction of service stubs that stop short of their building.
    double short_stub_fraction = 0.0;
    double short_stub_offset = 10.0;
    /// Fraction of free interior chain nodes carrying a hydrant lead.
    double hydrant_fraction = 0.0;
    double hydrant_offset = 5.0;
};

/// Calibrated stand-in for the street/pipe experiment (10x10, 100 m blocks).
GridParams reference_grid();

struct SyntheticScene {
    std::uint64_t seed = 0;
    GridParams grid;
    InfrastructureNetwork network;  // layers "streets", "pipes", "buildings"
    std::set<std::string> main_edges;     // pipe chain edges under streets
    std::set<std::string> service_edges;  // stubs and hydrant leads
    std::size_t intersections = 0;
};

SyntheticScene generate_scene(std::uint64_t seed, const GridParams& grid = {});

struct RemovedEdge {
    std::string id;
    std::string node_a;
    std::string node_b;
    Point2D a;
    Point2D b;

    friend bool operator==(const RemovedEdge&, const RemovedEdge&) = default;
};

struct CorruptedScene {
    InfrastructureNetwork network;
    std::vector<RemovedEdge> removed;  // sorted by id
};

/// Removes ceil(p * pool) pipe edges uniformly at random. The pool is the
/// main chain unless include_service is set.
CorruptedScene corrupt_scene(const SyntheticScene& scene, double p, std::uint64_t seed, bool include_service = false);

struct EvaluationReport {
    std::uint64_t seed = 0;
    double p = 0.0;
    InferenceParams params;
    bool constraint = false;
    std::size_t removed = 0;
    std::size_t suggested = 0;
    std::size_t true_positives = 0;
    std::size_t false_positives = 0;
    double precision = 1.0;
    double recall = 0.0;
};

/// Matches add_edge suggestions against the removed set; each removed edge
/// matches at most one suggestion.
EvaluationReport evaluate_inference(const InfrastructureNetwork& corrupted, const std::vector<RepairSuggestion>& suggestions,
                                    const std::vector<RemovedEdge>& removed, double matching_tolerance);

struct TrialConfig {
    GridParams grid = reference_grid();
    std::uint64_t seed = 42;
    double p = 0.2;
    InferenceParams inference;
    double matching_tolerance = kDefaultEpsilon;
};

/// Generate, corrupt, detect dangling ends, infer and evaluate.
EvaluationReport run_trial(const TrialConfig& config, bool constraint);

nlohmann::json to_json(const GridParams& g);
GridParams grid_params_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EvaluationReport& r);
std::string csv_header();
std::string csv_row(const EvaluationReport& r);

}  // namespace guides
