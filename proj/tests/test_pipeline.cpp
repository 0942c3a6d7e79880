#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "guides/error.hpp"
#include "guides/geometry.hpp"
#include "guides/pipeline.hpp"
#include "oracles.hpp"

using namespace guides;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kData = GUIDES_DATA_DIR;

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

PipelineConfig fixture_config() {
    auto cfg = load_pipeline_config((kData / "pipeline.json").string());
    cfg.output_dir.clear();
    return cfg;
}

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("guides_pipeline_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    return p;
}

using Lines = std::vector<std::vector<Point2D>>;

Lines raw_lines(const std::string& layer) {
    Lines out;
    const auto doc = json::parse(slurp(kData / (layer + ".geojson")));
    for (const auto& f : doc["features"]) {
        if (f["geometry"]["type"] != "LineString") continue;
        std::vector<Point2D> pts;
        for (const auto& c : f["geometry"]["coordinates"]) pts.push_back({c[0].get<double>(), c[1].get<double>()});
        out.push_back(pts);
    }
    return out;
}

// A line endpoint is loose when nothing else in the layer touches it: no
// other endpoint and no other line's interior within eps.
std::vector<Point2D> loose_endpoints(const Lines& lines, double eps) {
    std::vector<Point2D> out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        for (const Point2D p : {lines[i].front(), lines[i].back()}) {
            bool touched = false;
            for (std::size_t j = 0; j < lines.size() && !touched; ++j) {
                if (j == i) continue;
                for (std::size_t k = 0; k + 1 < lines[j].size() && !touched; ++k) {
                    touched = oracle::seg_dist(p, lines[j][k], lines[j][k + 1]) <= eps;
                }
            }
            if (!touched) out.push_back(p);
        }
    }
    return out;
}

std::set<std::pair<long, long>> keys(const std::vector<Point2D>& pts) {
    std::set<std::pair<long, long>> out;
    for (const auto p : pts) out.insert({std::lround(p.x * 1000), std::lround(p.y * 1000)});
    return out;
}

std::vector<Point2D> flagged_positions(const PipelineResult& r, Rule rule) {
    std::vector<Point2D> out;
    for (const auto& [id, f] : r.ledger.flags()) {
        if (f.rule == rule) out.push_back(r.network.node(f.target).position);
    }
    return out;
}

std::size_t count_rule(const PipelineResult& r, Rule rule) {
    std::size_t n = 0;
    for (const auto& [id, f] : r.ledger.flags()) n += f.rule == rule;
    return n;
}

}  // namespace

TEST(Pipeline, DetectOnFixtureMatchesOracles) {
    const auto cfg = fixture_config();
    const auto r = run_pipeline(cfg, Stage::detect);

    // The doubled valve is the only pair closer than eps.
    ASSERT_EQ(count_rule(r, Rule::duplicate_nodes), 1u);
    for (const auto& [id, f] : r.ledger.flags()) {
        if (f.rule != Rule::duplicate_nodes) continue;
        std::set<std::string> pair{f.target};
        pair.insert(f.related.begin(), f.related.end());
        EXPECT_EQ(pair, (std::set<std::string>{"v1", "v1_dup"}));
    }

    ASSERT_EQ(count_rule(r, Rule::symbol_circle), 1u);
    for (const auto& [id, s] : r.ledger.suggestions()) {
        if (s.action != RepairAction::replace_symbol) continue;
        EXPECT_EQ(s.edge_ids.size(), 12u);
        EXPECT_EQ(s.attachments.size(), 3u);
        ASSERT_TRUE(s.point);
        EXPECT_NEAR(s.point->x, 250.0, 1e-9);
        EXPECT_NEAR(s.point->y, 2.0, 1e-9);
    }

    // Dangling ends: loose endpoints outside the closed building square.
    const std::vector<std::vector<Point2D>> square{{{20, 20}, {50, 20}, {50, 50}, {20, 50}, {20, 20}}};
    std::vector<Point2D> expected;
    for (const auto p : loose_endpoints(raw_lines("pipes"), cfg.epsilon)) {
        if (!oracle::in_polygon(p, square)) expected.push_back(p);
    }
    EXPECT_EQ(keys(flagged_positions(r, Rule::dangling_end)), keys(expected));
    EXPECT_EQ(keys(expected).count({80000, 30000}), 1u);  // the open stub

    // The main gap is bridged by an inferred edge.
    bool gap = false;
    for (const auto& [id, f] : r.ledger.flags()) {
        if (f.rule != Rule::inferred_edge) continue;
        const auto a = r.network.node(f.target).position;
        const auto b = r.network.node(f.related.at(0)).position;
        gap |= keys({a, b}) == keys({{120, 2}, {140, 2}});
    }
    EXPECT_TRUE(gap);

    // Open boundary: every node of the broken outline and none of the square.
    std::vector<Point2D> broken;
    for (const auto& l : raw_lines("buildings")) {
        if (!oracle::in_polygon(l.front(), {{{0, 0}, {100, 0}, {100, 100}, {0, 100}, {0, 0}}})) {
            broken.push_back(l.front());
            broken.push_back(l.back());
        }
    }
    EXPECT_EQ(keys(flagged_positions(r, Rule::open_boundary)), keys(broken));

    // Nothing applied, and the summary agrees with the ledger.
    EXPECT_EQ(r.network.revision(), 0u);
    EXPECT_EQ(r.summary["applied"], 0);
    EXPECT_EQ(r.summary["flags"], r.ledger.flags().size());
    EXPECT_EQ(r.summary["suggestions"], r.ledger.suggestions().size());
    std::size_t total = 0;
    for (const auto& [rule, n] : r.summary["flags_by_rule"].items()) {
        EXPECT_EQ(n, count_rule(r, rule_from_string(rule))) << rule;
        total += n.get<std::size_t>();
    }
    EXPECT_EQ(total, r.ledger.flags().size());
    EXPECT_EQ(r.summary["summary_version"], kSummaryVersion);
}

TEST(Pipeline, RepairAppliesAndLeavesFlagsOpen) {
    const auto r = run_pipeline(fixture_config(), Stage::repair);
    EXPECT_GT(r.summary["applied"].get<int>(), 0);
    EXPECT_EQ(r.network.revision(), r.summary["revision"].get<std::uint64_t>());

    for (const auto& [id, f] : r.ledger.flags()) EXPECT_EQ(f.status, FlagStatus::open) << id;

    // Symbol gone: one node at the centre with the three attachments.
    for (const auto* e : r.network.layer_edges("pipes")) EXPECT_NE(e->id.rfind("mh", 0), 0u) << e->id;
    std::size_t centres = 0;
    for (const auto* n : r.network.layer_nodes("pipes")) {
        if (distance(n->position, {250, 2}) < 1e-6) {
            ++centres;
            EXPECT_EQ(r.network.incident_edges(n->id).size(), 3u);
        }
    }
    EXPECT_EQ(centres, 1u);

    // Duplicate merged.
    EXPECT_NE(r.network.has_entity("v1"), r.network.has_entity("v1_dup"));

    // Gap bridged.
    bool bridged = false;
    for (const auto* e : r.network.layer_edges("pipes")) {
        const auto a = r.network.node(e->endpoint_a).position;
        const auto b = r.network.node(e->endpoint_b).position;
        bridged |= keys({a, b}) == keys({{120, 2}, {140, 2}});
    }
    EXPECT_TRUE(bridged);

    // Broken outline closed: every building node now has degree two.
    for (const auto* n : r.network.layer_nodes("buildings")) {
        EXPECT_EQ(r.network.incident_edges(n->id).size(), 2u) << n->id;
    }
}

TEST(Pipeline, ArtifactsAreDeterministic) {
    for (const auto stage : {Stage::convert, Stage::detect, Stage::repair}) {
        const auto a = run_pipeline(fixture_config(), stage);
        const auto b = run_pipeline(fixture_config(), stage);
        ASSERT_EQ(a.artifacts.size(), b.artifacts.size());
        for (const auto& [name, content] : a.artifacts) {
            EXPECT_EQ(content, b.artifacts.at(name)) << to_string(stage) << " " << name;
        }
    }
    const auto d1 = scratch("det1"), d2 = scratch("det2");
    write_artifacts(run_pipeline(fixture_config(), Stage::repair), d1.string());
    write_artifacts(run_pipeline(fixture_config(), Stage::repair), d2.string());
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(d1)) {
        ++files;
        EXPECT_EQ(slurp(entry.path()), slurp(d2 / entry.path().filename())) << entry.path();
    }
    EXPECT_GE(files, 6u);
    fs::remove_all(d1);
    fs::remove_all(d2);
}

TEST(Pipeline, ConvertRoundTrips) {
    const auto r = run_pipeline(fixture_config(), Stage::convert);
    ASSERT_TRUE(r.artifacts.count("network.json"));
    const auto reloaded = network_from_json(json::parse(r.artifacts.at("network.json")));
    EXPECT_EQ(canonical_dump(reloaded), canonical_dump(r.network));
    for (const auto& layer : {"streets", "pipes", "buildings", "census"}) {
        ASSERT_TRUE(r.artifacts.count(std::string(layer) + ".geojson")) << layer;
        const auto fc = json::parse(r.artifacts.at(std::string(layer) + ".geojson"));
        EXPECT_EQ(fc["type"], "FeatureCollection");
    }
    // Census polygons keep their attributes.
    const auto census = json::parse(r.artifacts.at("census.geojson"));
    double sum = 0;
    for (const auto& f : census["features"]) sum += f["properties"]["low_income"].get<double>();
    EXPECT_EQ(sum, 750.0);
}

TEST(Pipeline, EvalSeed42) {
    auto cfg = fixture_config();
    const auto r = run_pipeline(cfg, Stage::eval);
    const auto& csv = r.artifacts.at("evaluation.csv");
    std::istringstream in(csv);
    std::vector<std::string> rows;
    for (std::string line; std::getline(in, line);) rows.push_back(line);
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0], csv_header());
    EXPECT_EQ(rows[1].rfind("42,0.2,", 0), 0u);

    const auto& ev = r.summary["evaluation"];
    for (const auto* mode : {"without_constraint", "with_constraint"}) {
        const auto& m = ev[mode];
        const double tp = m["true_positives"], fp = m["false_positives"], removed = m["removed"];
        EXPECT_DOUBLE_EQ(m["precision"].get<double>(), tp / (tp + fp)) << mode;
        EXPECT_DOUBLE_EQ(m["recall"].get<double>(), tp / removed) << mode;
    }
    const double without = ev["without_constraint"]["precision"], with = ev["with_constraint"]["precision"];
    EXPECT_GE(with - without, 0.15);
    EXPECT_GE(with, 0.85);
    EXPECT_EQ(ev["without_constraint"]["recall"], ev["with_constraint"]["recall"]);
}

TEST(Pipeline, ConfigErrors) {
    EXPECT_THROW(pipeline_config_from_json(json::object()), ArgumentError);

    auto j = json::parse(slurp(kData / "pipeline.json"));
    j["layers"][1]["path"] = "nowhere/pipes.geojson";
    const auto cfg = pipeline_config_from_json(j, kData.string());
    try {
        run_pipeline(cfg, Stage::detect);
        FAIL() << "missing input accepted";
    } catch (const NotFoundError& e) {
        EXPECT_NE(std::string(e.what()).find("nowhere/pipes.geojson"), std::string::npos) << e.what();
    }

    auto bad = json::parse(slurp(kData / "pipeline.json"));
    bad["epsilon"] = -1;
    EXPECT_THROW(validate(pipeline_config_from_json(bad, kData.string())), ArgumentError);

    const auto broken = scratch("broken");
    fs::create_directories(broken);
    std::ofstream(broken / "p.json") << "{\"layers\": [";
    EXPECT_THROW(load_pipeline_config((broken / "p.json").string()), ParseError);
    fs::remove_all(broken);
}

namespace {

int run_cli(const std::string& args, const fs::path& out = {}) {
    std::string cmd = std::string("\"") + GUIDES_CLI + "\" " + args;
    cmd += out.empty() ? " >/dev/null 2>&1" : " >\"" + out.string() + "\" 2>/dev/null";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Cli, ExitCodes) {
    const auto dir = scratch("cli");
    fs::create_directories(dir);
    const auto cfg = (kData / "pipeline.json").string();

    EXPECT_EQ(run_cli("detect -c \"" + cfg + "\" -o \"" + (dir / "out").string() + "\"", dir / "summary.txt"), 0);
    const auto summary = json::parse(slurp(dir / "summary.txt"));
    EXPECT_EQ(summary["stage"], "detect");
    EXPECT_EQ(summary, json::parse(slurp(dir / "out" / "summary.json")));

    EXPECT_EQ(run_cli(""), 1);
    EXPECT_EQ(run_cli("detect"), 1);
    EXPECT_EQ(run_cli("frobnicate"), 1);
    std::ofstream(dir / "empty.json") << "{}";
    EXPECT_EQ(run_cli("detect -c \"" + (dir / "empty.json").string() + "\""), 1);
    EXPECT_EQ(run_cli("detect -c \"" + (dir / "absent.json").string() + "\""), 2);
    std::ofstream(dir / "bad.json") << "{\"layers\":";
    EXPECT_EQ(run_cli("detect -c \"" + (dir / "bad.json").string() + "\""), 2);
    EXPECT_EQ(run_cli("--help"), 0);

    // Query and impact against the converted network.
    ASSERT_EQ(run_cli("convert -c \"" + cfg + "\" -o \"" + (dir / "conv").string() + "\""), 0);
    const auto net = (dir / "conv" / "network.json").string();
    EXPECT_EQ(run_cli("impact -d \"" + net + "\" --edge pm3", dir / "impact.txt"), 0);
    // pm3 runs from the manhole to x=300, inside the third block only.
    const auto impact = json::parse(slurp(dir / "impact.txt"));
    EXPECT_EQ(impact["blocks"], json::array({"cb3"}));
    EXPECT_EQ(impact["sum"], 400.0);
    EXPECT_EQ(run_cli("query -d \"" + net + "\" --bbox 0,0,10,10 --kinds pipes --role public", dir / "q.txt"), 0);
    const auto q = json::parse(slurp(dir / "q.txt"));
    ASSERT_EQ(q["denied_layers"].size(), 1u);
    EXPECT_EQ(q["denied_layers"][0]["layer"], "pipes");
    EXPECT_EQ(run_cli("query -d \"" + net + "\" --bbox 0,0,0,10 --kinds pipes"), 1);
    EXPECT_EQ(run_cli("impact -d \"" + net + "\" --edge nope"), 2);
    fs::remove_all(dir);
}
