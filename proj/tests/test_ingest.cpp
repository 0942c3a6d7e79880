#include <gtest/gtest.h>

#include <random>

#include "guides/error.hpp"
#include "guides/ingest.hpp"
#include "oracles.hpp"

using namespace guides;

namespace {

const Layer kPipes{"pipes", "Water pipes", LayerKind::pipes, Sensitivity::sensitive};

std::string collection(const std::string& features) {
    return R"({"type":"FeatureCollection","features":[)" + features + "]}";
}

std::string point(double x, double y, const std::string& extra = "") {
    return R"({"type":"Feature",)" + extra + R"("geometry":{"type":"Point","coordinates":[)" + std::to_string(x) + "," +
           std::to_string(y) + R"(]},"properties":{}})";
}

std::string line(std::vector<Point2D> pts, const std::string& extra = "") {
    std::string coords;
    for (const auto& p : pts) coords += (coords.empty() ? "" : ",") + ("[" + std::to_string(p.x) + "," + std::to_string(p.y) + "]");
    return R"({"type":"Feature",)" + extra + R"("geometry":{"type":"LineString","coordinates":[)" + coords +
           R"(]},"properties":{}})";
}

BuildResult build(const std::string& doc, double eps = kDefaultEpsilon) {
    auto parsed = parse_layer(doc, kPipes);
    return build_network({{kPipes, parsed.features}}, eps);
}

// No node lies within eps of the interior of a same-layer edge.
void expect_no_interior_nodes(const InfrastructureNetwork& net) {
    for (const auto& [eid, e] : net.edges()) {
        const auto chain = net.edge_chain(e);
        for (const auto& [nid, n] : net.nodes()) {
            if (n.layer_id != e.layer_id || nid == e.endpoint_a || nid == e.endpoint_b) continue;
            const auto& a = net.node(e.endpoint_a).position;
            const auto& b = net.node(e.endpoint_b).position;
            if (distance(n.position, a) <= net.epsilon() || distance(n.position, b) <= net.epsilon()) continue;
            EXPECT_GT(distance_point_to_chain(n.position, chain), net.epsilon()) << nid << " on " << eid;
        }
    }
}

}  // namespace

TEST(ParseLayer, Basics) {
    auto one = parse_layer(collection(point(1, 2)), kPipes);
    ASSERT_EQ(one.features.size(), 1u);
    EXPECT_TRUE(std::holds_alternative<Point2D>(one.features[0].geometry));
    EXPECT_TRUE(parse_layer(collection(""), kPipes).features.empty());
    EXPECT_THROW(parse_layer(collection(line({{0, 0}})), kPipes), ValidationError);
}

TEST(ParseLayer, MalformedJsonCarriesOffset) {
    try {
        parse_layer(R"({"type":"FeatureCollection","features":[}})", kPipes);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.byte_offset(), 41u);
    }
}

TEST(ParseLayer, OpenRingNamesFeature) {
    const std::string open_ring =
        R"({"type":"Feature","geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,1]]]},"properties":{}})";
    try {
        parse_layer(collection(point(0, 0) + "," + open_ring), kPipes);
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("feature 1"), std::string::npos);
    }
}

TEST(ParseLayer, UnsupportedKindsReported) {
    const std::string mls =
        R"({"type":"Feature","geometry":{"type":"MultiLineString","coordinates":[[[0,0],[1,1]]]},"properties":{}})";
    auto parsed = parse_layer(collection(mls + "," + point(0, 0)), kPipes);
    ASSERT_EQ(parsed.unsupported.size(), 1u);
    EXPECT_EQ(parsed.unsupported[0].geometry_type, "MultiLineString");
    EXPECT_EQ(parsed.unsupported[0].index, 0u);
    EXPECT_EQ(parsed.features.size(), 1u);
}

TEST(ParseLayer, PropertiesAndGeographicCrs) {
    const std::string f =
        R"({"type":"Feature","id":7,"geometry":{"type":"Point","coordinates":[0,0]},"properties":{"type":"valve","d":0.5,"n":3,"ok":true,"tags":[1,2]}})";
    auto parsed = parse_layer(collection(f), kPipes);
    const auto& props = parsed.features[0].properties;
    EXPECT_EQ(*parsed.features[0].id, "7");
    EXPECT_EQ(std::get<std::string>(props.at("type")), "valve");
    EXPECT_EQ(std::get<double>(props.at("d")), 0.5);
    EXPECT_EQ(std::get<std::int64_t>(props.at("n")), 3);
    EXPECT_EQ(std::get<bool>(props.at("ok")), true);
    EXPECT_EQ(std::get<std::string>(props.at("tags")), "[1,2]");
    const std::string geo =
        R"({"type":"FeatureCollection","crs":{"type":"name","properties":{"name":"urn:ogc:def:crs:OGC:1.3:CRS84"}},"features":[]})";
    EXPECT_THROW(parse_layer(geo, kPipes), ValidationError);
}

TEST(BuildNetwork, SplitsAtInteriorPoint) {
    auto r = build(collection(line({{0, 0}, {10, 0}}) + "," + point(5, 0, R"("id":"P",)")));
    const auto& net = r.network;
    EXPECT_EQ(net.nodes().size(), 3u);
    EXPECT_EQ(net.edges().size(), 2u);
    EXPECT_EQ(node_degree(net, "P"), 2u);
    // Oracle: the point is at distance 0 from the original segment.
    EXPECT_LE(oracle::seg_dist({5, 0}, {0, 0}, {10, 0}), kDefaultEpsilon);
    expect_no_interior_nodes(net);
}

TEST(BuildNetwork, PlainLineAndSharedEndpoint) {
    auto r = build(collection(line({{0, 0}, {10, 0}})));
    EXPECT_EQ(r.network.nodes().size(), 2u);
    EXPECT_EQ(r.network.edges().size(), 1u);

    r = build(collection(line({{0, 0}, {10, 0}}) + "," + line({{10, 0}, {10, 10}})));
    EXPECT_EQ(r.network.nodes().size(), 3u);
    EXPECT_EQ(r.network.edges().size(), 2u);
    r = build(collection(line({{0, 0}, {10, 0}}) + "," + line({{10.004, 0.003}, {10, 10}})));
    EXPECT_EQ(r.network.nodes().size(), 3u);
}

TEST(BuildNetwork, MultipleSplitsOrderedAlongPolyline) {
    auto r = build(collection(line({{0, 0}, {10, 0}, {10, 10}}, R"("id":"L",)") + "," + point(10, 7, R"("id":"q",)") + "," +
                              point(3, 0, R"("id":"p",)")));
    const auto& net = r.network;
    EXPECT_EQ(net.edges().size(), 3u);
    EXPECT_EQ(net.edge("L").endpoint_b, "p");
    EXPECT_EQ(net.edge("L_1").endpoint_a, "p");
    EXPECT_EQ(net.edge("L_1").endpoint_b, "q");
    EXPECT_EQ(net.edge_chain(net.edge("L_1")).size(), 3u);
    expect_no_interior_nodes(net);
}

TEST(BuildNetwork, ZeroLengthAndClosedLines) {
    auto r = build(collection(line({{1, 1}, {1, 1}}) + "," + line({{0, 0}, {4, 0}, {4, 4}, {0, 0}})));
    ASSERT_EQ(r.issues.size(), 1u);
    EXPECT_EQ(r.issues[0].feature_index, 0u);
    EXPECT_EQ(r.network.edges().size(), 2u);
    for (const auto& [id, e] : r.network.edges()) EXPECT_NE(e.endpoint_a, e.endpoint_b);
}

TEST(BuildNetwork, GeneratedIdsAvoidExplicitOnes) {
    auto r = build(collection(point(0, 0, R"("id":"n1",)") + "," + line({{5, 5}, {6, 6}})));
    EXPECT_EQ(r.network.nodes().size(), 3u);
    EXPECT_TRUE(r.network.find_node("n1"));
    EXPECT_EQ(r.network.node("n1").position, (Point2D{0, 0}));
    EXPECT_THROW(build(collection(point(0, 0, R"("id":"a",)") + "," + point(1, 0, R"("id":"a",)"))), ValidationError);
}

TEST(BuildNetwork, RandomNoInteriorNodesAndIdempotent) {
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<int> c(0, 20);
    for (int trial = 0; trial < 30; ++trial) {
        std::string feats;
        for (int k = 0; k < 8; ++k) {
            // Axis-aligned lines on an integer lattice, so interior points are exact.
            const int x = c(rng);
            const int y = c(rng);
            const int len = 1 + c(rng) / 2;
            const bool horizontal = k % 2 == 0;
            const Point2D b = horizontal ? Point2D{double(x + len), double(y)} : Point2D{double(x), double(y + len)};
            feats += (feats.empty() ? "" : ",") + line({{double(x), double(y)}, b});
        }
        for (int k = 0; k < 6; ++k) feats += "," + point(c(rng), c(rng));
        auto first = build(collection(feats));
        expect_no_interior_nodes(first.network);
        auto again = build(export_layer(first.network, "pipes"));
        EXPECT_EQ(canonical_dump(again.network), canonical_dump(first.network)) << "trial " << trial;
    }
}

TEST(ExportLayer, RoundTripAndReservedKeys) {
    InfrastructureNetwork net;
    net.add_layer(kPipes);
    Node m{"m1", {0.1, 0.2}, "pipes"};
    m.attributes = {{"Is_manhole", std::int64_t{1}}};
    m.flag_ids = {"f3"};
    m.period = parse_period("2015-06");
    net.add_node(m);
    net.add_node({"m2", {10.123456789012, 0.2}, "pipes"});
    net.add_node({"m3", {20, 5}, "pipes"});
    net.add_edge({"a", "m1", "m2", "pipes"});
    Edge b{"b", "m3", "m2", "pipes"};
    b.polyline = {{20, 5}, {15, 7}, {10.123456789012, 0.2}};
    net.add_edge(b);

    const auto doc = export_layer_json(net, "pipes");
    bool saw_manhole = false;
    for (const auto& f : doc["features"]) {
        if (f["id"] == "m1") {
            EXPECT_EQ(f["properties"]["Is_manhole"], 1);
            EXPECT_EQ(f["properties"]["_guides_flags"], nlohmann::json::array({"f3"}));
            saw_manhole = true;
        }
    }
    EXPECT_TRUE(saw_manhole);

    auto parsed = parse_layer(doc.dump(), kPipes);
    ASSERT_TRUE(parsed.declared_layer);
    EXPECT_EQ(*parsed.declared_layer, kPipes);
    auto rebuilt = build_network({{kPipes, parsed.features}});
    EXPECT_EQ(canonical_dump(rebuilt.network), canonical_dump(net));

    InfrastructureNetwork empty;
    empty.add_layer(kPipes);
    EXPECT_TRUE(export_layer_json(empty, "pipes")["features"].empty());
    EXPECT_THROW(export_layer(empty, "roads"), NotFoundError);
}

TEST(LoadTables, RowsAttributesAndErrors) {
    const std::string nodes = "id,x,y,valve_type\nA,0,0,gate\nB,3.5,0,\n";
    auto net = load_tables(nodes, "id,node_a,node_b,diameter\nE1,A,B,150\n", kPipes);
    EXPECT_EQ(net.nodes().size(), 2u);
    EXPECT_EQ(net.edges().size(), 1u);
    EXPECT_EQ(std::get<std::string>(net.node("A").attributes.at("valve_type")), "gate");
    EXPECT_FALSE(net.node("B").attributes.count("valve_type"));
    EXPECT_EQ(std::get<std::int64_t>(net.edge("E1").attributes.at("diameter")), 150);

    try {
        load_tables(nodes, "id,node_a,node_b\nE1,A,Z\n", kPipes);
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("Z"), std::string::npos);
    }
    try {
        load_tables("id,x,y\nA,0,0\nA,1,1\nB,2,2\nB,3,3\n", "id,node_a,node_b\n", kPipes);
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("A, B"), std::string::npos);
    }
    try {
        load_tables("id,x\nA,0\n", "id,node_a,node_b\n", kPipes);
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("'y'"), std::string::npos);
    }
}

TEST(LoadTables, CsvQuotingAndScalars) {
    auto rows = parse_csv("a,b\n\"x, y\",\"say \"\"hi\"\"\"\r\n");
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[1][0], "x, y");
    EXPECT_EQ(rows[1][1], "say \"hi\"");
    EXPECT_EQ(std::get<std::int64_t>(infer_scalar("-4")), -4);
    EXPECT_EQ(std::get<double>(infer_scalar("2.5")), 2.5);
    EXPECT_EQ(std::get<bool>(infer_scalar("true")), true);
    EXPECT_EQ(std::get<std::string>(infer_scalar("12a")), "12a");
}
