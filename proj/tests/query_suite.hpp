#pragma once

// Random multi-layer scene plus a linear-scan query oracle. Shared by the
// ontology tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "guides/access.hpp"
#include "guides/model.hpp"
#include "guides/ontology.hpp"

namespace oracle {

using guides::BBox;
using guides::Point2D;

inline guides::Layer make_layer(const std::string& id, guides::LayerKind kind,
                                guides::Sensitivity s = guides::Sensitivity::public_) {
    guides::Layer l;
    l.id = id;
    l.name = id;
    l.kind = kind;
    l.sensitivity = s;
    return l;
}

inline guides::MultiPolygonGeometry box_footprint(double x0, double y0, double x1, double y1) {
    return guides::to_multipolygon(guides::rectangle(BBox{x0, y0, x1, y1}));
}

// Pipes (nodes + straight or bent edges), a rail layer and building
// footprints, roughly n features over a 1 km square. A third of the pipe
// features carry a monthly period in 2014..2016.
inline guides::InfrastructureNetwork random_scene(std::uint64_t seed, int n) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1000.0);
    std::uniform_real_distribution<double> step(-40.0, 40.0);
    std::uniform_int_distribution<int> month(0, 35);
    guides::InfrastructureNetwork net;
    net.add_layer(make_layer("pipes", guides::LayerKind::pipes));
    net.add_layer(make_layer("rail", guides::LayerKind::rail));
    net.add_layer(make_layer("buildings", guides::LayerKind::buildings));
    auto period = [&]() -> std::optional<guides::TimeInterval> {
        if (rng() % 3 != 0) return std::nullopt;
        const int m = month(rng);
        char buf[16];
        std::snprintf(buf, sizeof buf, "%04d-%02d", 2014 + m / 12, m % 12 + 1);
        return guides::parse_period(buf);
    };
    const int per = std::max(1, n / 4);
    for (int k = 0; k < per; ++k) {
        guides::Node a{"pn" + std::to_string(2 * k), {u(rng), u(rng)}, "pipes"};
        a.period = period();
        guides::Node b{"pn" + std::to_string(2 * k + 1), {a.position.x + step(rng), a.position.y + step(rng)}, "pipes"};
        guides::Edge e{"pe" + std::to_string(k), a.id, b.id, "pipes"};
        if (k % 2 == 0) {
            e.polyline = {a.position, {a.position.x + step(rng), a.position.y + step(rng)}, b.position};
        }
        e.period = period();
        net.add_node(a);
        net.add_node(b);
        net.add_edge(e);
    }
    for (int k = 0; k < per / 2; ++k) {
        guides::Node a{"rn" + std::to_string(2 * k), {u(rng), u(rng)}, "rail"};
        guides::Node b{"rn" + std::to_string(2 * k + 1), {a.position.x + step(rng), a.position.y + step(rng)}, "rail"};
        net.add_node(a);
        net.add_node(b);
        net.add_edge({"re" + std::to_string(k), a.id, b.id, "rail"});
    }
    std::uniform_real_distribution<double> side(5.0, 30.0);
    for (int k = 0; k < per; ++k) {
        const double x = u(rng);
        const double y = u(rng);
        guides::Footprint f{"bf" + std::to_string(k), "buildings", box_footprint(x, y, x + side(rng), y + side(rng))};
        f.period = period();
        net.add_footprint(f);
    }
    return net;
}

inline bool in_box(Point2D p, const BBox& r) { return r.min_x < p.x && p.x < r.max_x && r.min_y < p.y && p.y < r.max_y; }

inline double orient(Point2D a, Point2D b, Point2D c) { return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x); }

inline bool segments_cross(Point2D a, Point2D b, Point2D c, Point2D d) {
    return (orient(a, b, c) > 0) != (orient(a, b, d) > 0) && (orient(c, d, a) > 0) != (orient(c, d, b) > 0);
}

inline bool segment_hits_box(Point2D a, Point2D b, const BBox& r) {
    if (in_box(a, r) || in_box(b, r)) return true;
    const Point2D c[4] = {{r.min_x, r.min_y}, {r.max_x, r.min_y}, {r.max_x, r.max_y}, {r.min_x, r.max_y}};
    for (int i = 0; i < 4; ++i) {
        if (segments_cross(a, b, c[i], c[(i + 1) % 4])) return true;
    }
    return false;
}

inline double boundary_distance(Point2D p, const BBox& r) {
    const double dx = std::max({r.min_x - p.x, 0.0, p.x - r.max_x});
    const double dy = std::max({r.min_y - p.y, 0.0, p.y - r.max_y});
    if (dx > 0 || dy > 0) return std::hypot(dx, dy);
    return std::min({p.x - r.min_x, r.max_x - p.x, p.y - r.min_y, r.max_y - p.y});
}

// Linear scan over every feature of the scene against a rectangular region.
// Features with a vertex within `margin` of the region boundary are left
// out of the result and reported through `boundary`; the library resolves
// those with its own tolerance.
inline std::map<std::string, std::vector<std::string>> scan(const guides::InfrastructureNetwork& net, const BBox& r,
                                                           guides::SpatialOp op,
                                                           const std::optional<guides::TimeInterval>& interval,
                                                           const std::set<std::string>& layers,
                                                           std::set<std::string>* boundary = nullptr,
                                                           double margin = 2 * guides::kDefaultEpsilon) {
    using guides::SpatialOp;
    auto near = [&](const std::string& id, const std::vector<Point2D>& pts) {
        for (auto p : pts) {
            if (boundary_distance(p, r) < margin) {
                if (boundary) boundary->insert(id);
                return true;
            }
        }
        return false;
    };
    std::map<std::string, std::vector<std::string>> out;
    for (const auto& l : layers) out[l];
    auto keep_time = [&](const std::optional<guides::TimeInterval>& p) {
        return !interval || !p || (p->first_day <= interval->last_day && interval->first_day <= p->last_day);
    };
    for (const auto& [id, n] : net.nodes()) {
        if (!layers.count(n.layer_id) || !keep_time(n.period) || near(id, {n.position})) continue;
        if (op != SpatialOp::crosses && in_box(n.position, r)) out[n.layer_id].push_back(id);
    }
    for (const auto& [id, e] : net.edges()) {
        if (!layers.count(e.layer_id) || !keep_time(e.period)) continue;
        std::vector<Point2D> chain = e.polyline;
        if (chain.empty()) chain = {net.node(e.endpoint_a).position, net.node(e.endpoint_b).position};
        if (near(id, chain)) continue;
        const bool all_in = std::all_of(chain.begin(), chain.end(), [&](Point2D p) { return in_box(p, r); });
        bool hit = false;
        for (std::size_t i = 0; i + 1 < chain.size(); ++i) hit = hit || segment_hits_box(chain[i], chain[i + 1], r);
        const bool match = op == SpatialOp::within ? all_in : op == SpatialOp::intersects ? hit : hit && !all_in;
        if (match) out[e.layer_id].push_back(id);
    }
    for (const auto& [id, f] : net.footprints()) {
        if (!layers.count(f.layer_id) || !keep_time(f.period)) continue;
        const auto& ring = f.geometry.polygons.front().outer;
        if (near(id, ring)) continue;
        BBox fb{ring[0].x, ring[0].y, ring[0].x, ring[0].y};
        for (auto p : ring) {
            fb.min_x = std::min(fb.min_x, p.x);
            fb.min_y = std::min(fb.min_y, p.y);
            fb.max_x = std::max(fb.max_x, p.x);
            fb.max_y = std::max(fb.max_y, p.y);
        }
        const bool within = r.min_x < fb.min_x && fb.max_x < r.max_x && r.min_y < fb.min_y && fb.max_y < r.max_y;
        const bool hit = fb.min_x < r.max_x && r.min_x < fb.max_x && fb.min_y < r.max_y && r.min_y < fb.max_y;
        const bool match = op == SpatialOp::within ? within : op == SpatialOp::intersects ? hit : false;
        if (match) out[f.layer_id].push_back(id);
    }
    for (auto& [l, ids] : out) std::sort(ids.begin(), ids.end());
    return out;
}

struct QueryCaseResult {
    int queries = 0;
    int mismatches = 0;
    int boundary_features = 0;  // excluded from comparison
};

// Random rectangles, all three predicates, with and without an interval.
inline QueryCaseResult run_query_case(std::uint64_t seed, int features, int queries) {
    using guides::SpatialOp;
    const auto net = random_scene(seed, features);
    const guides::QueryEngine engine(net);
    const auto policy = guides::AccessPolicy::standard();
    std::mt19937_64 rng(seed * 7 + 1);
    std::uniform_real_distribution<double> u(-50.0, 1050.0);
    QueryCaseResult res;
    const std::set<std::string> all{"pipes", "rail", "buildings"};
    for (int q = 0; q < queries; ++q) {
        double x0 = u(rng), x1 = u(rng), y0 = u(rng), y1 = u(rng);
        if (x0 > x1) std::swap(x0, x1);
        if (y0 > y1) std::swap(y0, y1);
        if (x1 - x0 < 1.0 || y1 - y0 < 1.0) continue;
        const BBox r{x0, y0, x1, y1};
        for (SpatialOp op : {SpatialOp::within, SpatialOp::crosses, SpatialOp::intersects}) {
            for (bool timed : {false, true}) {
                guides::RegionTimeQuery query;
                query.region = r;
                query.predicate = op;
                query.layer_kinds = {guides::LayerKind::pipes, guides::LayerKind::rail, guides::LayerKind::buildings};
                if (timed) query.interval = guides::parse_period("2015-03/2015-08");
                auto got = engine.run(query, policy, guides::Role::planner).layers;
                std::set<std::string> boundary;
                const auto want = scan(net, r, op, query.interval, all, &boundary);
                for (auto& [layer, ids] : got) {
                    std::erase_if(ids, [&](const std::string& id) { return boundary.count(id) > 0; });
                }
                ++res.queries;
                res.boundary_features += static_cast<int>(boundary.size());
                if (got != want) ++res.mismatches;
            }
        }
    }
    return res;
}

}  // namespace oracle
