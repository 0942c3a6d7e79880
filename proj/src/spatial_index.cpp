#include "guides/spatial_index.hpp"

#include <algorithm>
#include <cmath>

#include "guides/error.hpp"

namespace guides {

SpatialIndex::SpatialIndex(std::vector<Entry> entries, std::uint64_t revision, double cell_size)
    : entries_(std::move(entries)), revision_(revision) {
    for (const auto& e : entries_) extent_.extend(e.box);
    if (cell_size <= 0.0) {
        std::vector<double> diagonals;
        diagonals.reserve(entries_.size());
        for (const auto& e : entries_) diagonals.push_back(e.box.diagonal());
        if (!diagonals.empty()) {
            auto mid = diagonals.begin() + static_cast<std::ptrdiff_t>(diagonals.size() / 2);
            std::nth_element(diagonals.begin(), mid, diagonals.end());
            cell_size = 2.0 * *mid;
        }
        if (cell_size <= 0.0 && !entries_.empty() && !extent_.empty()) {
            // Point data: about two entries per cell on average.
            const double area = std::max(extent_.area(), extent_.diagonal() * extent_.diagonal() * 1e-3);
            cell_size = std::sqrt(2.0 * area / static_cast<double>(entries_.size()));
        }
        if (!(cell_size > 0.0) || !std::isfinite(cell_size)) cell_size = 1.0;
    }
    cell_ = cell_size;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const BBox& b = entries_[i].box;
        const auto x0 = cell_of(b.min_x, extent_.min_x);
        const auto x1 = cell_of(b.max_x, extent_.min_x);
        const auto y0 = cell_of(b.min_y, extent_.min_y);
        const auto y1 = cell_of(b.max_y, extent_.min_y);
        for (auto cx = x0; cx <= x1; ++cx) {
            for (auto cy = y0; cy <= y1; ++cy) grid_[key(cx, cy)].push_back(i);
        }
    }
}

std::int64_t SpatialIndex::cell_of(double v, double origin) const {
    return static_cast<std::int64_t>(std::floor((v - origin) / cell_));
}

std::uint64_t SpatialIndex::key(std::int64_t cx, std::int64_t cy) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(cx)) << 32) |
           static_cast<std::uint32_t>(cy);
}

std::vector<std::string> SpatialIndex::query(const BBox& q, std::optional<std::string_view> tag) const {
    std::vector<std::string> out;
    if (entries_.empty() || q.empty() || !q.intersects(extent_)) return out;
    const auto x0 = std::max<std::int64_t>(cell_of(q.min_x, extent_.min_x), 0);
    const auto x1 = std::min(cell_of(q.max_x, extent_.min_x), cell_of(extent_.max_x, extent_.min_x));
    const auto y0 = std::max<std::int64_t>(cell_of(q.min_y, extent_.min_y), 0);
    const auto y1 = std::min(cell_of(q.max_y, extent_.min_y), cell_of(extent_.max_y, extent_.min_y));
    std::vector<std::size_t> hits;
    for (auto cx = x0; cx <= x1; ++cx) {
        for (auto cy = y0; cy <= y1; ++cy) {
            auto it = grid_.find(key(cx, cy));
            if (it == grid_.end()) continue;
            hits.insert(hits.end(), it->second.begin(), it->second.end());
        }
    }
    std::sort(hits.begin(), hits.end());
    hits.erase(std::unique(hits.begin(), hits.end()), hits.end());
    for (auto i : hits) {
        const Entry& e = entries_[i];
        if (tag && e.tag != *tag) continue;
        if (e.box.intersects(q)) out.push_back(e.id);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::optional<SpatialIndex::Hit> SpatialIndex::nearest(Point2D p, double max_radius,
                                                       std::optional<std::string_view> tag,
                                                       const std::function<bool(const std::string&)>& accept) const {
    if (max_radius < 0.0) throw ArgumentError("search radius must be non-negative");
    if (entries_.empty()) return std::nullopt;
    const auto cx0 = cell_of(p.x, extent_.min_x);
    const auto cy0 = cell_of(p.y, extent_.min_y);
    const auto gx1 = cell_of(extent_.max_x, extent_.min_x);
    const auto gy1 = cell_of(extent_.max_y, extent_.min_y);
    std::int64_t kmax = std::max({std::abs(cx0), std::abs(gx1 - cx0), std::abs(cy0), std::abs(gy1 - cy0)});
    if (std::isfinite(max_radius)) {
        kmax = std::min<std::int64_t>(kmax, static_cast<std::int64_t>(std::ceil(max_radius / cell_)) + 1);
    }

    std::optional<Hit> best;
    auto visit_cell = [&](std::int64_t cx, std::int64_t cy) {
        if (cx < 0 || cy < 0 || cx > gx1 || cy > gy1) return;
        auto it = grid_.find(key(cx, cy));
        if (it == grid_.end()) return;
        for (auto i : it->second) {
            const Entry& e = entries_[i];
            if (tag && e.tag != *tag) continue;
            const double d = e.box.distance_to(p);
            if (d > max_radius) continue;
            if (best && (d > best->distance || (d == best->distance && e.id >= best->id))) continue;
            if (accept && !accept(e.id)) continue;
            best = Hit{e.id, d};
        }
    };
    for (std::int64_t k = 0; k <= kmax; ++k) {
        if (k == 0) {
            visit_cell(cx0, cy0);
        } else {
            const auto xlo = std::max<std::int64_t>(cx0 - k, 0);
            const auto xhi = std::min(cx0 + k, gx1);
            const auto ylo = std::max<std::int64_t>(cy0 - k + 1, 0);
            const auto yhi = std::min(cy0 + k - 1, gy1);
            for (auto cx = xlo; cx <= xhi; ++cx) {
                visit_cell(cx, cy0 - k);
                visit_cell(cx, cy0 + k);
            }
            for (auto cy = ylo; cy <= yhi; ++cy) {
                visit_cell(cx0 - k, cy);
                visit_cell(cx0 + k, cy);
            }
        }
        // Anything in ring k+1 is at least k cells away.
        if (best && best->distance < static_cast<double>(k) * cell_) break;
    }
    return best;
}

SpatialIndex build_node_index(const InfrastructureNetwork& net) {
    std::vector<SpatialIndex::Entry> entries;
    entries.reserve(net.nodes().size());
    for (const auto& [id, n] : net.nodes()) entries.push_back({id, BBox::of(n.position), n.layer_id});
    return SpatialIndex(std::move(entries), net.revision());
}

SpatialIndex build_edge_index(const InfrastructureNetwork& net, std::string_view layer_id) {
    std::vector<SpatialIndex::Entry> entries;
    for (const auto& [id, e] : net.edges()) {
        if (!layer_id.empty() && e.layer_id != layer_id) continue;
        const auto chain = net.edge_chain(e);
        entries.push_back({id, BBox::of(chain), e.layer_id});
    }
    return SpatialIndex(std::move(entries), net.revision());
}

SpatialIndex build_footprint_index(const InfrastructureNetwork& net) {
    std::vector<SpatialIndex::Entry> entries;
    for (const auto& [id, f] : net.footprints()) entries.push_back({id, bbox_of(f.geometry), f.layer_id});
    return SpatialIndex(std::move(entries), net.revision());
}

std::optional<NearestNode> nearest_node(const SpatialIndex& index, Point2D p, std::string_view layer_id,
                                        double max_radius) {
    if (max_radius < 0.0) throw ArgumentError("max_radius must be non-negative");
    auto hit = index.nearest(p, max_radius, layer_id);
    if (!hit) return std::nullopt;
    return NearestNode{hit->id, hit->distance};
}

}  // namespace guides
