#pragma once

// Randomized duplicate-merge harness shared by the unit tests and the
// acceptance binary.

#include <functional>
#include <random>
#include <string>

#include "guides/repair.hpp"
#include "oracles.hpp"

namespace oracle {

struct MergeCase {
    bool ok = true;
    std::string failure;
    std::size_t injected = 0;
    std::size_t suggestions = 0;
};

// Random layer, then co-located copies (pairs and triples) that steal some
// of the original's edges. All merge suggestions are accepted as crew.
inline MergeCase run_merge_case(std::uint64_t seed) {
    using namespace guides;
    std::mt19937_64 rng(seed);
    InfrastructureNetwork net(0.01);
    net.add_layer({"pipes", "pipes", LayerKind::pipes});
    std::uniform_real_distribution<double> coord(0.0, 200.0);
    std::uniform_int_distribution<int> count(8, 40);
    const int n = count(rng);
    std::vector<std::string> ids;
    for (int i = 0; i < n; ++i) {
        ids.push_back("n" + std::to_string(i));
        net.add_node({ids.back(), {coord(rng), coord(rng)}, "pipes"});
    }
    int edge_no = 0;
    auto add_edge = [&](const std::string& a, const std::string& b) {
        net.add_edge({"e" + std::to_string(edge_no++), a, b, "pipes"});
    };
    for (int i = 1; i < n; ++i) {
        if (rng() % 5 == 0) continue;  // leave some components apart
        add_edge(ids[static_cast<std::size_t>(i)], ids[rng() % static_cast<std::size_t>(i)]);
    }
    for (int k = 0; k < n / 3; ++k) {
        const auto a = ids[rng() % ids.size()];
        const auto b = ids[rng() % ids.size()];
        if (a != b) add_edge(a, b);
    }

    MergeCase out;
    // Inject copies: each copy sits within eps/2 of the original.
    std::uniform_real_distribution<double> jitter(-0.003, 0.003);
    const int inject = 1 + static_cast<int>(rng() % 6);
    for (int k = 0; k < inject; ++k) {
        const auto base = ids[rng() % ids.size()];
        const int copies = rng() % 3 == 0 ? 2 : 1;
        for (int c = 0; c < copies; ++c) {
            const std::string dup = "d" + std::to_string(k) + "_" + std::to_string(c);
            const Point2D p = net.node(base).position;
            net.add_node({dup, {p.x + jitter(rng), p.y + jitter(rng)}, "pipes"});
            ++out.injected;
            const auto other = ids[rng() % ids.size()];
            if (other != base) add_edge(dup, other);
            if (rng() % 2) add_edge(dup, base);
        }
    }

    // Contracted graph: pairwise eps clusters, representative = smallest id.
    std::map<std::string, std::string> rep;
    std::vector<std::string> all;
    for (const auto& [id, node] : net.nodes()) all.push_back(id);
    for (const auto& id : all) rep[id] = id;
    std::function<std::string(const std::string&)> find = [&](const std::string& x) {
        return rep[x] == x ? x : rep[x] = find(rep[x]);
    };
    for (std::size_t i = 0; i < all.size(); ++i) {
        for (std::size_t j = i + 1; j < all.size(); ++j) {
            if (distance(net.node(all[i]).position, net.node(all[j]).position) <= net.epsilon()) {
                auto ri = find(all[i]);
                auto rj = find(all[j]);
                if (ri != rj) rep[std::max(ri, rj)] = std::min(ri, rj);
            }
        }
    }
    std::map<std::string, std::set<std::string>> contracted;
    for (const auto& id : all) contracted[find(id)];
    for (const auto& [id, e] : net.edges()) {
        const auto a = find(e.endpoint_a);
        const auto b = find(e.endpoint_b);
        if (a == b) continue;
        contracted[a].insert(b);
        contracted[b].insert(a);
    }

    RepairLedger ledger;
    const auto committed = ledger.commit(detect_duplicate_nodes(net, "pipes"), net.revision());
    out.suggestions = committed.suggestion_ids.size();
    for (const auto& sid : committed.suggestion_ids) {
        ledger.resolve(net, ledger.suggestion(sid).flag_ids.front(), FlagStatus::accepted, Role::crew, "t");
    }

    std::vector<const Node*> left = net.layer_nodes("pipes");
    for (std::size_t i = 0; i < left.size() && out.ok; ++i) {
        for (std::size_t j = i + 1; j < left.size(); ++j) {
            if (distance(left[i]->position, left[j]->position) <= net.epsilon()) {
                out.ok = false;
                out.failure = "nodes " + left[i]->id + " and " + left[j]->id + " still within eps";
                break;
            }
        }
    }
    const auto merged = adjacency(net, "pipes");
    if (out.ok && merged != contracted) {
        out.ok = false;
        out.failure = "merged adjacency differs from contracted graph";
    }
    if (out.ok) {
        for (const auto& [id, nb] : contracted) {
            if (reachable(contracted, id) != reachable(merged, id)) {
                out.ok = false;
                out.failure = "reachability from " + id + " differs";
                break;
            }
        }
    }
    if (out.ok) {
        for (const auto& f : ledger.list()) {
            if (f.status != FlagStatus::accepted) {
                out.ok = false;
                out.failure = "flag " + f.id + " not accepted";
                break;
            }
        }
    }
    return out;
}

}  // namespace oracle
