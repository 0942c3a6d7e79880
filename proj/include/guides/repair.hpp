#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "guides/access.hpp"
#include "guides/geometry.hpp"
#include "guides/model.hpp"

namespace guides {

enum class Rule { duplicate_nodes, symbol_circle, dangling_end, valve_degree, open_boundary, inferred_edge, manual };
enum class FlagStatus { open, accepted, rejected };
enum class RepairAction { merge_nodes, replace_symbol, add_edge, connect_boundary };

std::string to_string(Rule r);
std::string to_string(FlagStatus s);
std::string to_string(RepairAction a);
Rule rule_from_string(std::string_view s);
FlagStatus flag_status_from_string(std::string_view s);
RepairAction repair_action_from_string(std::string_view s);

struct Flag {
    std::string id;
    Rule rule = Rule::manual;
    std::string layer_id;
    std::string target;                // node or edge id
    std::vector<std::string> related;  // other entities involved (pair partner, proposed target)
    FlagStatus status = FlagStatus::open;
    std::string detail;
    std::optional<std::string> suggestion_id;
    std::uint64_t created_rev = 0;
    std::optional<std::string> resolved_by;
    std::optional<std::string> resolved_at;

    friend bool operator==(const Flag&, const Flag&) = default;
};

struct RepairSuggestion {
    std::string id;
    RepairAction action = RepairAction::add_edge;
    std::string layer_id;
    Rule rule = Rule::manual;                 // provenance: producing rule
    std::vector<std::string> context_layers;  // provenance: layers consulted
    /// merge_nodes: the cluster, sorted (survivor first); replace_symbol: the
    /// cycle; add_edge / connect_boundary: [from, to].
    std::vector<std::string> node_ids;
    std::vector<std::string> edge_ids;     // replace_symbol: cycle edges
    std::vector<std::string> attachments;  // replace_symbol: external neighbours
    std::optional<Point2D> point;          // replace_symbol: centroid
    std::vector<Point2D> geometry;         // proposed geometry, for display
    std::vector<std::string> flag_ids;
    std::uint64_t created_rev = 0;

    bool applied = false;
    std::vector<std::string> created_ids;
    EditBatch undo;
    nlohmann::json applied_state;  // touched entities right after application
};

/// Output of a detector. Ids are local to the detection ("#0", "#1", ...)
/// until RepairLedger::commit assigns ledger ids.
struct Detection {
    std::vector<Flag> flags;
    std::vector<RepairSuggestion> suggestions;

    void append(Detection other);
};

struct SymbolParams {
    std::size_t min_nodes = 6;
    double radial_tolerance = 0.05;  // relative to the mean radius
    double max_radius = 3.0;
};

struct InferenceParams {
    double search_radius = 50.0;
    double corridor_half_width = 8.0;
    double sample_spacing = 1.0;
    int max_passes = 10;
};

Detection detect_duplicate_nodes(const InfrastructureNetwork& net, std::string_view layer_id);
Detection detect_symbol_circles(const InfrastructureNetwork& net, std::string_view layer_id, const SymbolParams& params = {});
Detection check_valve_degree(const InfrastructureNetwork& net, std::string_view layer_id);

/// Degree-1 nodes of the layer outside (not inside or on) the footprints.
std::vector<std::string> dangling_end_nodes(const InfrastructureNetwork& net, std::string_view layer_id,
                                            const MultiPolygonGeometry& footprints);
Detection detect_dangling_ends(const InfrastructureNetwork& net, std::string_view layer_id,
                               const MultiPolygonGeometry& footprints);

/// True when every sample of segment a-b (spacing at most `spacing`) lies
/// within `half_width` of some edge of the streets layer.
bool within_corridor(const InfrastructureNetwork& net, std::string_view streets_layer, Point2D a, Point2D b,
                     double half_width, double spacing = 1.0);

/// add_edge suggestions for the given dangling ends. Runs passes on a
/// working copy until no end changes or `max_passes` is reached.
Detection infer_missing_edges(const InfrastructureNetwork& net, std::string_view pipes_layer,
                              std::optional<std::string_view> streets_layer, const InferenceParams& params,
                              const std::vector<std::string>& dangling_ends, const MultiPolygonGeometry& footprints = {});

/// open_boundary flags for nodes on no closed building cycle; nodes of
/// degree at most one also get a connect_boundary suggestion.
Detection repair_building_boundaries(const InfrastructureNetwork& net, std::string_view buildings_layer);

/// Edit batches for a suggestion against the current network. Each touched
/// or created entity carries the suggestion's flag ids. Throw ConflictError
/// when the suggestion no longer matches the network.
EditBatch merge_duplicate_nodes(const InfrastructureNetwork& net, const RepairSuggestion& s);
EditBatch replace_symbol(const InfrastructureNetwork& net, const RepairSuggestion& s);
EditBatch connect_nodes(const InfrastructureNetwork& net, const RepairSuggestion& s);
EditBatch suggestion_batch(const InfrastructureNetwork& net, const RepairSuggestion& s);

struct FlagFilter {
    std::optional<FlagStatus> status;
    std::optional<Rule> rule;
    std::optional<std::string> layer_id;
};

struct CommitResult {
    std::vector<std::string> flag_ids;
    std::vector<std::string> suggestion_ids;
};

/// The persistent record of flags and suggestions for one network.
class RepairLedger {
public:
    static constexpr int kVersion = 1;

    const std::map<std::string, Flag>& flags() const { return flags_; }
    const std::map<std::string, RepairSuggestion>& suggestions() const { return suggestions_; }
    const Flag& flag(std::string_view id) const;
    const RepairSuggestion& suggestion(std::string_view id) const;

    /// Adds new findings. A suggestion already present (any status) is
    /// dropped together with its flags; a flag without suggestion is dropped
    /// when an unresolved or rejected flag with the same rule, target and
    /// related ids exists.
    CommitResult commit(Detection d, std::uint64_t revision);

    /// Applies an open suggestion; flags stay open. Returns the new revision.
    std::uint64_t apply(InfrastructureNetwork& net, std::string_view suggestion_id);

    /// Reverts an applied suggestion. ConflictError when later edits touched
    /// the same entities.
    std::uint64_t revert(InfrastructureNetwork& net, std::string_view suggestion_id);

    /// Accept applies the suggestion (if not yet), reject reverts it (if
    /// applied). All flags sharing the suggestion are resolved together.
    Flag resolve(InfrastructureNetwork& net, std::string_view flag_id, FlagStatus decision, Role actor,
                 std::string timestamp, const AccessPolicy& policy = AccessPolicy::standard());

    /// Records an already committed manual edit as an accepted manual flag.
    std::string record_manual(const EditBatch& batch, std::string_view layer_id, Role actor, std::uint64_t revision,
                              std::string timestamp);

    std::vector<Flag> list(const FlagFilter& filter = {}) const;

    nlohmann::json to_json() const;
    static RepairLedger from_json(const nlohmann::json& j);

private:
    std::string next_flag_id();
    std::string next_suggestion_id();

    std::map<std::string, Flag> flags_;
    std::map<std::string, RepairSuggestion> suggestions_;
    std::uint64_t flag_counter_ = 0;
    std::uint64_t suggestion_counter_ = 0;
};

/// Convenience free function mirroring RepairLedger::resolve.
Flag resolve_flag(InfrastructureNetwork& net, RepairLedger& ledger, std::string_view flag_id, FlagStatus decision,
                  Role actor, std::string timestamp = {});

nlohmann::json to_json(const Flag& f);
Flag flag_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RepairSuggestion& s);
RepairSuggestion suggestion_from_json(const nlohmann::json& j);

}  // namespace guides
