#include "guides/polygonize.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace guides {

namespace {

struct LayerGraph {
    std::vector<std::string> node_ids;
    std::map<std::string, std::size_t, std::less<>> index;
    struct Link {
        std::size_t a;
        std::size_t b;
        const Edge* edge;
    };
    std::vector<Link> links;
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adj;  // (neighbor, link)
};

LayerGraph layer_graph(const InfrastructureNetwork& net, std::string_view layer_id) {
    LayerGraph g;
    for (const auto* n : net.layer_nodes(layer_id)) {
        g.index.emplace(n->id, g.node_ids.size());
        g.node_ids.push_back(n->id);
    }
    g.adj.resize(g.node_ids.size());
    for (const auto* e : net.layer_edges(layer_id)) {
        const auto a = g.index.at(e->endpoint_a);
        const auto b = g.index.at(e->endpoint_b);
        g.adj[a].emplace_back(b, g.links.size());
        g.adj[b].emplace_back(a, g.links.size());
        g.links.push_back({a, b, e});
    }
    return g;
}

std::vector<bool> find_bridges(const LayerGraph& g) {
    const std::size_t n = g.node_ids.size();
    constexpr std::size_t kUnset = static_cast<std::size_t>(-1);
    std::vector<std::size_t> disc(n, kUnset);
    std::vector<std::size_t> low(n, 0);
    std::vector<bool> bridge(g.links.size(), false);
    std::size_t timer = 0;
    struct Frame {
        std::size_t node;
        std::size_t parent_link;
        std::size_t next;
    };
    for (std::size_t root = 0; root < n; ++root) {
        if (disc[root] != kUnset) continue;
        std::vector<Frame> stack{{root, kUnset, 0}};
        disc[root] = low[root] = timer++;
        while (!stack.empty()) {
            Frame& f = stack.back();
            if (f.next < g.adj[f.node].size()) {
                const auto [to, link] = g.adj[f.node][f.next++];
                if (link == f.parent_link) continue;
                if (disc[to] == kUnset) {
                    disc[to] = low[to] = timer++;
                    stack.push_back({to, link, 0});
                } else {
                    low[f.node] = std::min(low[f.node], disc[to]);
                }
            } else {
                const Frame done = f;
                stack.pop_back();
                if (!stack.empty()) {
                    Frame& parent = stack.back();
                    low[parent.node] = std::min(low[parent.node], low[done.node]);
                    if (low[done.node] > disc[parent.node]) bridge[done.parent_link] = true;
                }
            }
        }
    }
    return bridge;
}

}  // namespace

std::vector<std::string> bridge_edges(const InfrastructureNetwork& net, std::string_view layer_id) {
    net.layer(layer_id);
    const LayerGraph g = layer_graph(net, layer_id);
    const auto bridge = find_bridges(g);
    std::vector<std::string> out;
    for (std::size_t i = 0; i < g.links.size(); ++i) {
        if (bridge[i]) out.push_back(g.links[i].edge->id);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<FaceCycle> bounded_faces(const InfrastructureNetwork& net, std::string_view layer_id) {
    net.layer(layer_id);
    const LayerGraph g = layer_graph(net, layer_id);
    const auto bridge = find_bridges(g);

    // Half-edges 2i (a->b) and 2i+1 (b->a) for every non-bridge link i.
    struct HalfEdge {
        std::size_t from;
        std::size_t to;
        std::size_t link;
        bool forward;
        std::vector<Point2D> points;  // oriented chain from -> to
        double angle;
    };
    std::vector<HalfEdge> half;
    for (std::size_t i = 0; i < g.links.size(); ++i) {
        if (bridge[i]) continue;
        auto chain = net.edge_chain(*g.links[i].edge);
        auto reversed = chain;
        std::reverse(reversed.begin(), reversed.end());
        auto angle_of = [](const std::vector<Point2D>& c) {
            Point2D dir{c[1].x - c[0].x, c[1].y - c[0].y};
            for (std::size_t k = 1; k < c.size() && dir.x == 0.0 && dir.y == 0.0; ++k) {
                dir = {c[k].x - c[0].x, c[k].y - c[0].y};
            }
            return std::atan2(dir.y, dir.x);
        };
        const double fa = angle_of(chain);
        const double ra = angle_of(reversed);
        half.push_back({g.links[i].a, g.links[i].b, i, true, std::move(chain), fa});
        half.push_back({g.links[i].b, g.links[i].a, i, false, std::move(reversed), ra});
    }

    std::vector<std::vector<std::size_t>> outgoing(g.node_ids.size());
    for (std::size_t h = 0; h < half.size(); ++h) outgoing[half[h].from].push_back(h);
    std::vector<std::size_t> position(half.size(), 0);
    for (auto& out : outgoing) {
        std::sort(out.begin(), out.end(), [&](std::size_t x, std::size_t y) {
            if (half[x].angle != half[y].angle) return half[x].angle < half[y].angle;
            return half[x].link < half[y].link;
        });
        for (std::size_t k = 0; k < out.size(); ++k) position[out[k]] = k;
    }
    auto next_half = [&](std::size_t h) {
        const std::size_t twin = h ^ 1U;
        const auto& around = outgoing[half[h].to];
        const std::size_t k = position[twin];
        return around[(k + around.size() - 1) % around.size()];
    };

    std::vector<FaceCycle> faces;
    std::vector<bool> used(half.size(), false);
    for (std::size_t start = 0; start < half.size(); ++start) {
        if (used[start]) continue;
        FaceCycle face;
        std::size_t h = start;
        while (!used[h]) {
            used[h] = true;
            const HalfEdge& he = half[h];
            face.node_ids.push_back(g.node_ids[he.from]);
            face.edge_ids.push_back(g.links[he.link].edge->id);
            face.ring.insert(face.ring.end(), he.points.begin(), he.points.end() - 1);
            h = next_half(h);
        }
        if (face.ring.empty()) continue;
        face.ring.push_back(face.ring.front());
        const BBox box = BBox::of(face.ring);
        const double scale = std::max(box.width(), box.height());
        if (signed_area(face.ring) > 1e-9 * scale * scale) faces.push_back(std::move(face));
    }
    return faces;
}

PolygonizeResult polygonize_layer(const InfrastructureNetwork& net, std::string_view layer_id) {
    PolygonizeResult result;
    std::set<std::string> on_cycle;
    for (auto& face : bounded_faces(net, layer_id)) {
        try {
            result.polygons.polygons.push_back(make_polygon({face.ring}));
        } catch (const std::exception&) {
            continue;  // degenerate walk; its nodes stay open
        }
        on_cycle.insert(face.node_ids.begin(), face.node_ids.end());
        result.cycles.push_back(std::move(face));
    }
    for (const auto* n : net.layer_nodes(layer_id)) {
        if (!on_cycle.count(n->id)) result.open_nodes.push_back(n->id);
    }
    return result;
}

}  // namespace guides
