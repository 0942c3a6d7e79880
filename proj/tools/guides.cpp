// guides: command-line driver for the cleaning pipeline, queries, flag
// resolution and the HTTP service.
//
// Exit codes: 0 success, 1 usage, 2 input error, 3 internal error.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "guides/error.hpp"
#include "guides/ontology.hpp"
#include "guides/pipeline.hpp"
#include "guides/service.hpp"

using namespace guides;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

enum Exit { ok = 0, usage = 1, input = 2, internal = 3 };

json read_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NotFoundError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return json::parse(ss.str());
    } catch (const json::parse_error& e) {
        throw ParseError(path + ": " + e.what(), e.byte);
    }
}

void write_json(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw NotFoundError("cannot write '" + path + "'");
    out << text;
}

struct PipelineArgs {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<double> epsilon;
    std::optional<double> radius;
    std::optional<double> width;
    std::optional<double> p;
};

void add_pipeline_options(CLI::App* cmd, PipelineArgs& a, bool config_required) {
    auto* c = cmd->add_option("-c,--config", a.config, "pipeline configuration (JSON)");
    if (config_required) c->required();
    cmd->add_option("-o,--out", a.out, "output directory (overrides output_dir)");
    cmd->add_option("--seed", a.seed, "random seed");
    cmd->add_option("--epsilon", a.epsilon, "merge tolerance in metres");
    cmd->add_option("--radius", a.radius, "inference search radius R in metres");
    cmd->add_option("--width", a.width, "street corridor half-width W in metres");
    cmd->add_option("--p", a.p, "synthetic removal fraction (eval)");
}

int run_stage(Stage stage, const PipelineArgs& a) {
    PipelineConfig cfg;
    if (!a.config.empty()) cfg = load_pipeline_config(a.config);
    if (!a.out.empty()) cfg.output_dir = a.out;
    if (a.seed) cfg.seed = *a.seed;
    if (a.epsilon) cfg.epsilon = *a.epsilon;
    if (a.radius) cfg.inference.search_radius = *a.radius;
    if (a.width) cfg.inference.corridor_half_width = *a.width;
    if (a.p) {
        if (!cfg.synthetic) cfg.synthetic = SyntheticSpec{};
        cfg.synthetic->p = *a.p;
    }
    const auto result = run_pipeline(cfg, stage);
    if (!cfg.output_dir.empty()) write_artifacts(result, cfg.output_dir);
    std::cout << result.summary.dump(2) << "\n";
    return ok;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, sep);) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

HttpFrontend* g_frontend = nullptr;

void on_signal(int) {
    if (g_frontend) g_frontend->stop();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"guides: clean, repair and query multi-layer infrastructure networks"};
    app.require_subcommand(1);

    PipelineArgs convert_args, detect_args, repair_args, eval_args;
    add_pipeline_options(app.add_subcommand("convert", "ingest GeoJSON layers and export the network"), convert_args, true);
    add_pipeline_options(app.add_subcommand("detect", "run every detection rule; nothing is applied"), detect_args, true);
    add_pipeline_options(app.add_subcommand("repair", "detect and apply suggestions; flags stay open"), repair_args, true);
    add_pipeline_options(app.add_subcommand("eval", "synthetic edge-inference experiment"), eval_args, false);

    auto* serve = app.add_subcommand("serve", "run the HTTP service");
    std::string serve_config, serve_listen;
    serve->add_option("-c,--config", serve_config, "service configuration (JSON)")->required();
    serve->add_option("--listen", serve_listen, "host:port (overrides config and GUIDES_LISTEN)");

    auto* query = app.add_subcommand("query", "region/time query over a network dump");
    std::string q_dataset, q_bbox, q_polygon, q_region, q_kinds, q_interval, q_predicate = "within", q_role = "public";
    std::string q_spatial, q_domain;
    query->add_option("-d,--dataset", q_dataset, "network JSON")->required();
    auto* bbox_opt = query->add_option("--bbox", q_bbox, "min_x,min_y,max_x,max_y");
    auto* poly_opt = query->add_option("--polygon", q_polygon, "file holding a GeoJSON Polygon");
    auto* region_opt = query->add_option("--region", q_region, "named spatial instance (needs --spatial-ontology)");
    bbox_opt->excludes(poly_opt)->excludes(region_opt);
    poly_opt->excludes(region_opt);
    query->add_option("--kinds", q_kinds, "comma-separated layer kinds")->required();
    query->add_option("--interval", q_interval, "period, e.g. 2015 or 2015-01/2015-06");
    query->add_option("--predicate", q_predicate, "within, crosses or intersects");
    query->add_option("--role", q_role, "admin, planner, crew or public");
    query->add_option("--spatial-ontology", q_spatial, "spatial/temporal ontology JSON");
    query->add_option("--domain-ontology", q_domain, "domain ontology JSON");

    auto* impact = app.add_subcommand("impact", "census blocks touched by a pipe edge");
    std::string i_dataset, i_census = "census", i_edge, i_attr = "low_income";
    impact->add_option("-d,--dataset", i_dataset, "network JSON")->required();
    impact->add_option("--census", i_census, "census layer id");
    impact->add_option("--edge", i_edge, "pipe edge id")->required();
    impact->add_option("--attribute", i_attr, "numeric block attribute");

    auto* resolve = app.add_subcommand("resolve", "accept or reject a flag");
    std::string r_dataset, r_ledger, r_flag, r_decision, r_role = "crew";
    resolve->add_option("-d,--dataset", r_dataset, "network JSON (rewritten)")->required();
    resolve->add_option("-l,--ledger", r_ledger, "ledger JSON (rewritten)")->required();
    resolve->add_option("--flag", r_flag, "flag id")->required();
    resolve->add_option("--decision", r_decision, "accepted or rejected")->required()->check(CLI::IsMember({"accepted", "rejected"}));
    resolve->add_option("--role", r_role, "acting role");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? ok : usage;
    }

    try {
        if (app.got_subcommand("convert")) return run_stage(Stage::convert, convert_args);
        if (app.got_subcommand("detect")) return run_stage(Stage::detect, detect_args);
        if (app.got_subcommand("repair")) return run_stage(Stage::repair, repair_args);
        if (app.got_subcommand("eval")) return run_stage(Stage::eval, eval_args);

        if (app.got_subcommand("serve")) {
            auto cfg = load_service_config(serve_config);
            apply_env_overrides(cfg);
            if (!serve_listen.empty()) set_listen(cfg, serve_listen);
            auto service = Service::from_config(cfg);
            HttpFrontend http(*service);
            const int port = http.bind(cfg.host, cfg.port);
            g_frontend = &http;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::cerr << "listening on " << cfg.host << ":" << port << "\n";
            http.listen();
            g_frontend = nullptr;
            return ok;
        }

        if (app.got_subcommand("query")) {
            const auto net = network_from_json(read_json(q_dataset));
            std::optional<Ontology> st, domain;
            if (!q_spatial.empty()) st = Ontology::load(read_json(q_spatial));
            if (!q_domain.empty()) domain = Ontology::load(read_json(q_domain), &net);
            std::vector<InstanceMapping> mappings;
            if (st && domain) mappings = match_instances(*domain, *st);
            RegionTimeQuery q;
            if (!q_bbox.empty()) {
                const auto v = split(q_bbox, ',');
                if (v.size() != 4) throw ArgumentError("--bbox needs four numbers");
                q.region = BBox{std::stod(v[0]), std::stod(v[1]), std::stod(v[2]), std::stod(v[3])};
            } else if (!q_polygon.empty()) {
                q.region = std::get<PolygonGeometry>(geometry_from_geojson(read_json(q_polygon)));
            } else if (!q_region.empty()) {
                q.region = q_region;
            } else {
                throw ArgumentError("one of --bbox, --polygon or --region is required");
            }
            for (const auto& k : split(q_kinds, ',')) q.layer_kinds.insert(layer_kind_from_string(k));
            if (!q_interval.empty()) q.interval = parse_period(q_interval);
            q.predicate = spatial_op_from_string(q_predicate);
            const QueryEngine engine(net, st ? &*st : nullptr, domain ? &*domain : nullptr, mappings);
            const auto result = engine.run(q, AccessPolicy::standard(), role_from_string(q_role));
            auto out = result.to_geojson(net);
            out["revision"] = net.revision();
            std::cout << out.dump(2) << "\n";
            return ok;
        }

        if (app.got_subcommand("impact")) {
            const auto net = network_from_json(read_json(i_dataset));
            std::cout << to_json(impact_query(net, i_census, i_edge, i_attr)).dump(2) << "\n";
            return ok;
        }

        if (app.got_subcommand("resolve")) {
            auto net = network_from_json(read_json(r_dataset));
            auto ledger = RepairLedger::from_json(read_json(r_ledger));
            const auto f = resolve_flag(net, ledger, r_flag, flag_status_from_string(r_decision), role_from_string(r_role));
            write_json(r_dataset, canonical_dump(net) + "\n");
            write_json(r_ledger, ledger.to_json().dump(2) + "\n");
            std::cout << to_json(f).dump(2) << "\n";
            return ok;
        }
    } catch (const ArgumentError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return usage;
    } catch (const Error& e) {
        std::cerr << e.code() << ": " << e.what() << "\n";
        return input;
    } catch (const json::exception& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return input;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return internal;
    }
    return usage;
}
