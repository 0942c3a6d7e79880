#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include <httplib.h>

#include "guides/error.hpp"
#include "guides/service.hpp"
#include "service_suite.hpp"

using namespace guides;
using nlohmann::json;

namespace {

Response call(Service& s, const std::string& method, const std::string& path, const std::string& token,
              const json& body = nullptr, std::map<std::string, std::string> params = {}) {
    Request r{method, path, token, std::move(params), body.is_null() ? "" : body.dump()};
    return s.handle(r);
}

json bbox_query(std::vector<std::string> kinds) {
    return {{"region", {0, 0, 1000, 1000}}, {"layer_kinds", kinds}, {"predicate", "intersects"}};
}

std::set<std::string> feature_ids(const json& fc) {
    std::set<std::string> out;
    for (const auto& f : fc["features"]) out.insert(f["id"].get<std::string>());
    return out;
}

}  // namespace

TEST(ServiceQuery, CrewSeesBothLayers) {
    auto svc = oracle::fixture_service();
    const auto r = call(*svc, "POST", "/query", "crew-t", bbox_query({"pipes", "buildings"}));
    ASSERT_EQ(r.status, 200) << r.body.dump();
    EXPECT_TRUE(r.body["layers"].contains("pipes"));
    EXPECT_TRUE(r.body["layers"].contains("mains"));
    EXPECT_TRUE(r.body["layers"].contains("buildings"));
    EXPECT_TRUE(r.body["denied_layers"].empty());
    EXPECT_EQ(r.body["revision"], svc->snapshot()->network.revision());

    // Linear-scan oracle over the snapshot.
    const auto snap = svc->snapshot();
    std::set<std::string> want;
    for (const auto* f : snap->network.layer_footprints("buildings")) {
        if (predicate(f->geometry, Geometry(rectangle(BBox{0, 0, 1000, 1000})), SpatialOp::intersects)) want.insert(f->id);
    }
    EXPECT_EQ(feature_ids(r.body["layers"]["buildings"]), want);
}

TEST(ServiceQuery, PublicGetsDenialNotice) {
    auto svc = oracle::fixture_service();
    const auto r = call(*svc, "POST", "/query", "pub-t", bbox_query({"pipes", "buildings"}));
    ASSERT_EQ(r.status, 200);
    EXPECT_FALSE(r.body["layers"].contains("mains"));
    EXPECT_TRUE(r.body["layers"].contains("buildings"));
    ASSERT_EQ(r.body["denied_layers"].size(), 1u);
    EXPECT_EQ(r.body["denied_layers"][0]["layer"], "mains");
    EXPECT_EQ(r.body["denied_layers"][0]["reason"], "sensitive_layer");
    // Unknown tokens are public.
    EXPECT_EQ(call(*svc, "POST", "/query", "who", bbox_query({"pipes"})).body["denied_layers"].size(), 1u);
}

TEST(ServiceQuery, MalformedAndOversizedRegions) {
    auto svc = oracle::fixture_service();
    json two = {{"region", {{"type", "Polygon"}, {"coordinates", {{{0, 0}, {10, 0}, {0, 0}}}}}}, {"layer_kinds", {"pipes"}}};
    EXPECT_EQ(call(*svc, "POST", "/query", "crew-t", two).status, 400);
    json flat = {{"region", {0, 0, 0, 10}}, {"layer_kinds", {"pipes"}}};
    EXPECT_EQ(call(*svc, "POST", "/query", "crew-t", flat).status, 400);
    json none = {{"region", {0, 0, 10, 10}}, {"layer_kinds", json::array()}};
    EXPECT_EQ(call(*svc, "POST", "/query", "crew-t", none).status, 400);
    json big = {{"region", {0, 0, 6000, 5000}}, {"layer_kinds", {"pipes"}}};
    const auto r = call(*svc, "POST", "/query", "crew-t", big);
    EXPECT_EQ(r.status, 400);
    EXPECT_DOUBLE_EQ(r.body["limit_m2"].get<double>(), 25e6);
    EXPECT_EQ(call(*svc, "POST", "/query", "crew-t", json(nullptr)).status, 400);
    Request garbage{"POST", "/query", "crew-t", {}, "{not json"};
    EXPECT_EQ(svc->handle(garbage).status, 400);
    json named = {{"region", "Narnia"}, {"layer_kinds", {"pipes"}}};
    EXPECT_EQ(call(*svc, "POST", "/query", "crew-t", named).status, 404);
}

TEST(ServiceUpdate, CrewAddsEdge) {
    auto svc = oracle::fixture_service();
    const auto rev = svc->snapshot()->network.revision();
    json batch = {{"actions",
                   {{{"op", "add_edge"}, {"edge", {{"id", "new1"}, {"a", "pn0"}, {"b", "pn2"}, {"layer", "pipes"}}}}}}};
    const auto r = call(*svc, "POST", "/update", "crew-t", batch);
    ASSERT_EQ(r.status, 200) << r.body.dump();
    EXPECT_EQ(r.body["revision"], rev + 1);
    const auto snap = svc->snapshot();
    EXPECT_NE(snap->network.find_edge("new1"), nullptr);
    const auto& f = snap->ledger.flag(r.body["flag_id"].get<std::string>());
    EXPECT_EQ(f.rule, Rule::manual);
    EXPECT_EQ(f.status, FlagStatus::accepted);
    EXPECT_EQ(*f.resolved_by, "crew");
    const auto list = call(*svc, "GET", "/flags", "crew-t", nullptr, {{"rule", "manual"}});
    EXPECT_EQ(list.body["flags"].size(), 1u);
}

TEST(ServiceUpdate, PublicDeniedAndIntegrityRejected) {
    auto svc = oracle::fixture_service();
    const auto rev = svc->snapshot()->network.revision();
    json batch = {{"actions", {{{"op", "remove_node"}, {"id", "pn0"}}}}};
    EXPECT_EQ(call(*svc, "POST", "/update", "pub-t", batch).status, 403);
    EXPECT_EQ(call(*svc, "POST", "/update", "plan-t", batch).status, 403);
    json bad = {{"actions",
                 {{{"op", "add_edge"}, {"edge", {{"id", "x"}, {"a", "pn0"}, {"b", "ghost"}, {"layer", "pipes"}}}}}}};
    const auto r = call(*svc, "POST", "/update", "crew-t", bad);
    EXPECT_EQ(r.status, 409);
    EXPECT_EQ(r.body["action_index"], 0);
    EXPECT_EQ(svc->snapshot()->network.revision(), rev);
    EXPECT_EQ(svc->snapshot()->ledger.list(FlagFilter{std::nullopt, Rule::manual, std::nullopt}).size(), 0u);
}

TEST(ServiceFlags, FilterAndResolve) {
    auto svc = oracle::fixture_service();
    const auto r = call(*svc, "GET", "/flags", "crew-t", nullptr, {{"status", "open"}, {"rule", "inferred_edge"}});
    ASSERT_EQ(r.status, 200);
    ASSERT_FALSE(r.body["flags"].empty());
    for (const auto& f : r.body["flags"]) {
        EXPECT_EQ(f["rule"], "inferred_edge");
        EXPECT_EQ(f["status"], "open");
        ASSERT_TRUE(f.contains("suggestion"));
        EXPECT_EQ(f["suggestion"]["geometry"]["type"], "LineString");
    }
    const std::string id = r.body["flags"][0]["id"];
    const auto rev = svc->snapshot()->network.revision();
    EXPECT_EQ(call(*svc, "POST", "/flags/" + id + "/resolve", "plan-t", {{"decision", "accepted"}}).status, 403);
    const auto ok = call(*svc, "POST", "/flags/" + id + "/resolve", "crew-t", {{"decision", "accepted"}});
    ASSERT_EQ(ok.status, 200) << ok.body.dump();
    EXPECT_EQ(ok.body["flag"]["status"], "accepted");
    EXPECT_EQ(ok.body["revision"], rev + 1);
    EXPECT_EQ(call(*svc, "POST", "/flags/" + id + "/resolve", "crew-t", {{"decision", "accepted"}}).status, 409);
    EXPECT_EQ(call(*svc, "POST", "/flags/F999999/resolve", "crew-t", {{"decision", "accepted"}}).status, 404);
    EXPECT_EQ(call(*svc, "POST", "/flags/" + id + "/resolve", "crew-t", {{"decision", "maybe"}}).status, 400);
}

TEST(ServiceFlags, PublicSeesNoSensitiveFlags) {
    auto svc = oracle::fixture_service();
    const auto all = call(*svc, "GET", "/flags", "crew-t", nullptr, {{"layer", "mains"}});
    EXPECT_FALSE(all.body["flags"].empty());
    const auto pub = call(*svc, "GET", "/flags", "pub-t", nullptr, {{"layer", "mains"}});
    EXPECT_TRUE(pub.body["flags"].empty());
    const std::string id = all.body["flags"][0]["id"];
    EXPECT_EQ(call(*svc, "POST", "/flags/" + id + "/resolve", "pub-t", {{"decision", "rejected"}}).status, 404);
}

TEST(ServiceLayers, ListAndFetch) {
    auto svc = oracle::fixture_service();
    const auto list = call(*svc, "GET", "/layers", "pub-t");
    ASSERT_EQ(list.status, 200);
    for (const auto& l : list.body["layers"]) {
        EXPECT_EQ(l["access"], l["id"] == "mains" ? "denied" : "allowed") << l.dump();
    }
    EXPECT_EQ(call(*svc, "GET", "/layers/mains", "pub-t").status, 403);
    const auto mains = call(*svc, "GET", "/layers/mains", "plan-t");
    ASSERT_EQ(mains.status, 200);
    EXPECT_EQ(mains.body["type"], "FeatureCollection");
    EXPECT_EQ(call(*svc, "GET", "/layers/nope", "plan-t").status, 404);
    EXPECT_EQ(call(*svc, "GET", "/nowhere", "plan-t").status, 404);
    EXPECT_EQ(call(*svc, "GET", "/health", "").body["status"], "ok");
}

TEST(ServiceImpact, Endpoint) {
    auto svc = oracle::fixture_service();
    // me edges are sensitive: public is refused, planners get the sum.
    EXPECT_EQ(call(*svc, "POST", "/impact", "pub-t", {{"census_layer", "census"}, {"edge", "me0"}}).status, 403);
    const auto r = call(*svc, "POST", "/impact", "plan-t", {{"census_layer", "census"}, {"edge", "me0"}});
    ASSERT_EQ(r.status, 200) << r.body.dump();
    const auto snap = svc->snapshot();
    const auto expect = impact_query(snap->network, "census", "me0", "low_income");
    EXPECT_EQ(r.body["blocks"], json(expect.blocks));
    EXPECT_DOUBLE_EQ(r.body["sum"].get<double>(), expect.sum);
    EXPECT_FALSE(expect.blocks.empty());
}

TEST(ServiceAccess, FuzzNoLeaks) {
    auto svc = oracle::fixture_service(4, 300);
    const auto res = oracle::run_access_fuzz(*svc, 2024, 10000);
    EXPECT_EQ(res.cases, 10000);
    EXPECT_EQ(res.leaks, 0);
    EXPECT_GT(res.denials, 100);
}

TEST(ServiceConfig, ParseAndEnvOverride) {
    const json j = {{"listen", "0.0.0.0:9000"},
                    {"dataset", "net.json"},
                    {"tokens", {{"abc", "crew"}}},
                    {"area_cap_km2", 4}};
    auto cfg = service_config_from_json(j, "/data");
    EXPECT_EQ(cfg.host, "0.0.0.0");
    EXPECT_EQ(cfg.port, 9000);
    EXPECT_EQ(cfg.dataset_path, "/data/net.json");
    EXPECT_EQ(cfg.tokens.at("abc"), Role::crew);
    EXPECT_DOUBLE_EQ(cfg.area_cap_m2, 4e6);
    ::setenv("GUIDES_LISTEN", "127.0.0.2:7070", 1);
    apply_env_overrides(cfg);
    ::unsetenv("GUIDES_LISTEN");
    EXPECT_EQ(cfg.host, "127.0.0.2");
    EXPECT_EQ(cfg.port, 7070);
    EXPECT_THROW(set_listen(cfg, "nonsense"), ArgumentError);
    EXPECT_THROW(service_config_from_json({{"tokens", {{"t", "emperor"}}}}), ArgumentError);
    const json bad_policy = {{"policy", {{"public", {{{"capability", "update"}}}}}}};
    EXPECT_THROW(service_config_from_json(bad_policy), Error);
}

TEST(ServiceConfig, FromFilesAndPersist) {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "guides_service_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    auto src = oracle::fixture_service();
    {
        std::ofstream(dir / "net.json") << canonical_dump(src->snapshot()->network);
        std::ofstream(dir / "ledger.json") << src->snapshot()->ledger.to_json().dump();
        std::ofstream(dir / "config.json")
            << json{{"dataset", "net.json"}, {"ledger", "ledger.json"}, {"persist", true}, {"tokens", {{"c", "crew"}}}}.dump();
    }
    auto svc = Service::from_config(load_service_config((dir / "config.json").string()));
    EXPECT_EQ(canonical_dump(svc->snapshot()->network), canonical_dump(src->snapshot()->network));
    json batch = {{"actions", {{{"op", "remove_edge"}, {"id", "pe0"}}}}};
    ASSERT_EQ(call(*svc, "POST", "/update", "c", batch).status, 200);
    auto again = Service::from_config(load_service_config((dir / "config.json").string()));
    EXPECT_EQ(again->snapshot()->network.find_edge("pe0"), nullptr);
    EXPECT_EQ(again->snapshot()->ledger.list(FlagFilter{std::nullopt, Rule::manual, std::nullopt}).size(), 1u);
    fs::remove_all(dir);
}

TEST(ServiceConcurrency, ReadersSeeOneRevisionPerResponse) {
    auto svc = oracle::fixture_service(6, 400);
    std::atomic<bool> done{false};
    std::atomic<int> bad{0};
    std::vector<std::thread> readers;
    for (int t = 0; t < 4; ++t) {
        readers.emplace_back([&] {
            std::uint64_t last = 0;
            while (!done) {
                const auto r = call(*svc, "POST", "/query", "crew-t", bbox_query({"pipes"}));
                const auto rev = r.body["revision"].get<std::uint64_t>();
                // Every returned pipe edge must exist at that revision: edges
                // are only removed, never re-added, by the writer below.
                const auto removed = rev;  // pe0..pe<rev-1> are gone
                for (const auto& f : r.body["layers"]["pipes"]["features"]) {
                    const std::string id = f["id"];
                    if (id.rfind("pe", 0) == 0 && std::stoull(id.substr(2)) < removed) ++bad;
                }
                if (rev < last) ++bad;
                last = rev;
            }
        });
    }
    for (int k = 0; k < 20; ++k) {
        json batch = {{"actions", {{{"op", "remove_edge"}, {"id", "pe" + std::to_string(k)}}}}};
        ASSERT_EQ(call(*svc, "POST", "/update", "crew-t", batch).status, 200);
    }
    done = true;
    for (auto& t : readers) t.join();
    EXPECT_EQ(bad, 0);
}

TEST(ServiceHttp, EndToEnd) {
    auto svc = oracle::fixture_service();
    HttpFrontend http(*svc);
    const int port = http.bind("127.0.0.1", 0);
    std::thread server([&] { http.listen(); });
    httplib::Client client("127.0.0.1", port);
    client.set_connection_timeout(5);
    auto health = client.Get("/health");
    ASSERT_TRUE(health);
    EXPECT_EQ(health->status, 200);
    httplib::Headers h{{"Authorization", "Bearer pub-t"}};
    auto q = client.Post("/query", h, bbox_query({"pipes"}).dump(), "application/json");
    ASSERT_TRUE(q);
    EXPECT_EQ(q->status, 200);
    const auto body = json::parse(q->body);
    EXPECT_EQ(body["denied_layers"][0]["layer"], "mains");
    auto flags = client.Get("/flags?status=open&rule=inferred_edge", httplib::Headers{{"X-Guides-Token", "crew-t"}});
    ASSERT_TRUE(flags);
    EXPECT_FALSE(json::parse(flags->body)["flags"].empty());
    http.stop();
    server.join();
}
