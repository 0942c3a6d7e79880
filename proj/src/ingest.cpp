#include "guides/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

#include "guides/error.hpp"
#include "guides/spatial_index.hpp"

namespace guides {

using nlohmann::json;

namespace {

std::string feature_label(std::size_t index) { return "feature " + std::to_string(index); }

Point2D read_position(const json& j, std::size_t index) {
    if (!j.is_array() || j.size() < 2 || !j[0].is_number() || !j[1].is_number()) {
        throw ValidationError(feature_label(index) + ": position must be [x, y]");
    }
    Point2D p{j[0].get<double>(), j[1].get<double>()};
    if (!is_finite(p)) throw ValidationError(feature_label(index) + ": non-finite coordinate");
    return p;
}

std::vector<Point2D> read_positions(const json& j, std::size_t index) {
    if (!j.is_array()) throw ValidationError(feature_label(index) + ": coordinates must be an array");
    std::vector<Point2D> out;
    out.reserve(j.size());
    for (const auto& p : j) out.push_back(read_position(p, index));
    return out;
}

RawPolygon read_polygon(const json& coords, std::size_t index) {
    if (!coords.is_array() || coords.empty()) throw ValidationError(feature_label(index) + ": polygon has no rings");
    RawPolygon poly;
    for (const auto& r : coords) {
        Ring ring = read_positions(r, index);
        if (ring.size() < 4) throw ValidationError(feature_label(index) + ": polygon ring has fewer than 4 vertices");
        if (!(ring.front() == ring.back())) throw ValidationError(feature_label(index) + ": polygon ring is not closed");
        poly.rings.push_back(std::move(ring));
    }
    return poly;
}

bool is_geographic_crs(const json& crs) {
    const std::string text = crs.dump();
    for (const char* marker : {"4326", "CRS84", "4269", "4258"}) {
        if (text.find(marker) != std::string::npos) return true;
    }
    return false;
}

std::optional<std::string> id_from_json(const json& j) {
    if (j.is_string()) return j.get<std::string>();
    if (j.is_number_integer() || j.is_number_unsigned()) return j.dump();
    if (j.is_number_float()) return j.dump();
    return std::nullopt;
}

}  // namespace

ParsedLayer parse_layer(std::string_view document, const Layer& layer_meta) {
    json doc;
    try {
        doc = json::parse(document.begin(), document.end());
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what(), e.byte);
    }
    if (!doc.is_object() || doc.value("type", std::string{}) != "FeatureCollection") {
        throw ValidationError("document is not a GeoJSON FeatureCollection");
    }
    if (doc.contains("crs") && is_geographic_crs(doc["crs"])) {
        throw ValidationError("geographic (lon/lat) coordinates are not supported; supply a projected CRS in meters");
    }
    ParsedLayer out;
    if (doc.contains(kLayerMember) && doc[kLayerMember].is_object()) {
        out.declared_layer = layer_from_json(doc[kLayerMember]);
    }
    if (!doc.contains("features") || !doc["features"].is_array()) {
        throw ValidationError("FeatureCollection has no features array");
    }
    const auto& features = doc["features"];
    for (std::size_t i = 0; i < features.size(); ++i) {
        const json& f = features[i];
        if (!f.is_object() || f.value("type", std::string{}) != "Feature") {
            throw ValidationError(feature_label(i) + ": not a Feature");
        }
        const json& g = f.contains("geometry") ? f["geometry"] : json();
        if (!g.is_object()) throw ValidationError(feature_label(i) + ": missing geometry");
        const std::string type = g.value("type", std::string{});
        FeatureRecord rec;
        rec.index = i;
        rec.source_layer = layer_meta.id;
        if (f.contains("id")) rec.id = id_from_json(f["id"]);
        if (type == "Point") {
            rec.geometry = read_position(g.at("coordinates"), i);
        } else if (type == "LineString") {
            LineString line{read_positions(g.at("coordinates"), i)};
            if (line.points.size() < 2) throw ValidationError(feature_label(i) + ": linestring has fewer than 2 vertices");
            rec.geometry = std::move(line);
        } else if (type == "Polygon") {
            rec.geometry = read_polygon(g.at("coordinates"), i);
        } else if (type == "MultiPolygon") {
            RawMultiPolygon mp;
            for (const auto& p : g.at("coordinates")) mp.polygons.push_back(read_polygon(p, i));
            if (mp.polygons.empty()) throw ValidationError(feature_label(i) + ": empty multipolygon");
            rec.geometry = std::move(mp);
        } else {
            out.unsupported.push_back({i, type});
            continue;
        }
        const json props = f.contains("properties") && f["properties"].is_object() ? f["properties"] : json::object();
        for (auto it = props.begin(); it != props.end(); ++it) {
            const std::string& key = it.key();
            const json& v = it.value();
            if (key == kFlagsKey) {
                for (const auto& flag : v) rec.flag_ids.push_back(flag.get<std::string>());
            } else if (key == kPeriodKey) {
                rec.period = parse_period(v.get<std::string>());
            } else if (key == kNodeAKey || key == kNodeBKey) {
                continue;
            } else if (key.rfind(kReservedPrefix, 0) == 0) {
                continue;
            } else if (v.is_null()) {
                continue;
            } else if (v.is_array() || v.is_object()) {
                rec.properties.emplace(key, v.dump());
            } else {
                rec.properties.emplace(key, scalar_from_json(v));
            }
        }
        if (props.contains(kNodeAKey) && props.contains(kNodeBKey)) {
            rec.endpoint_refs = std::make_pair(props[kNodeAKey].get<std::string>(), props[kNodeBKey].get<std::string>());
        }
        out.features.push_back(std::move(rec));
    }
    return out;
}

// ------------------------------------------------------------ build

namespace {

// Hash grid for snapping endpoints to nodes created so far.
class SnapGrid {
public:
    explicit SnapGrid(double eps) : cell_(std::max(eps, 1e-9) * 2.0), eps_(eps) {}

    void insert(const std::string& id, Point2D p) { cells_[key(cell(p.x), cell(p.y))].emplace_back(id, p); }

    std::optional<std::string> nearest_within(Point2D p) const {
        std::optional<std::string> best;
        double best_d = 0.0;
        const auto cx = cell(p.x);
        const auto cy = cell(p.y);
        for (std::int64_t dx = -1; dx <= 1; ++dx) {
            for (std::int64_t dy = -1; dy <= 1; ++dy) {
                auto it = cells_.find(key(cx + dx, cy + dy));
                if (it == cells_.end()) continue;
                for (const auto& [id, q] : it->second) {
                    const double d = distance(p, q);
                    if (d > eps_) continue;
                    if (!best || d < best_d || (d == best_d && id < *best)) {
                        best = id;
                        best_d = d;
                    }
                }
            }
        }
        return best;
    }

private:
    std::int64_t cell(double v) const { return static_cast<std::int64_t>(std::floor(v / cell_)); }
    static std::uint64_t key(std::int64_t x, std::int64_t y) {
        return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(x)) << 32) | static_cast<std::uint32_t>(y);
    }

    double cell_;
    double eps_;
    std::unordered_map<std::uint64_t, std::vector<std::pair<std::string, Point2D>>> cells_;
};

class IdSource {
public:
    explicit IdSource(std::set<std::string> taken) : taken_(std::move(taken)) {}

    std::string next(const std::string& prefix) {
        auto& counter = counters_[prefix];
        for (;;) {
            std::string id = prefix + std::to_string(++counter);
            if (taken_.insert(id).second) return id;
        }
    }

    std::string derived(const std::string& base, std::size_t k) {
        for (;; ++k) {
            std::string id = base + "_" + std::to_string(k);
            if (taken_.insert(id).second) return id;
        }
    }

private:
    std::set<std::string> taken_;
    std::map<std::string, std::size_t> counters_;
};

struct PendingEdge {
    std::string id;
    std::string a;
    std::string b;
    std::vector<Point2D> chain;  // full vertex list, endpoints at node positions
    const FeatureRecord* source;
};

bool zero_length(const std::vector<Point2D>& pts, double eps) {
    for (const auto& p : pts) {
        if (distance(p, pts.front()) > eps) return false;
    }
    return true;
}

// Cumulative arc length position of the projection of p onto the chain.
double chain_position(Point2D p, const std::vector<Point2D>& chain, std::size_t& segment, double& t) {
    double best = std::numeric_limits<double>::infinity();
    double along = 0.0;
    double result = 0.0;
    for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
        const double tt = project_onto_segment(p, chain[i], chain[i + 1]);
        const Point2D q{chain[i].x + (chain[i + 1].x - chain[i].x) * tt, chain[i].y + (chain[i + 1].y - chain[i].y) * tt};
        const double d = distance(p, q);
        const double seg_len = distance(chain[i], chain[i + 1]);
        if (d < best) {
            best = d;
            result = along + tt * seg_len;
            segment = i;
            t = tt;
        }
        along += seg_len;
    }
    return result;
}

Edge make_edge(const std::string& id, const std::string& a, const std::string& b, std::vector<Point2D> chain,
               const FeatureRecord& src, const std::string& layer) {
    Edge e;
    e.id = id;
    e.endpoint_a = a;
    e.endpoint_b = b;
    e.layer_id = layer;
    e.attributes = src.properties;
    e.flag_ids = src.flag_ids;
    e.period = src.period;
    if (chain.size() > 2) e.polyline = std::move(chain);
    return e;
}

}  // namespace

BuildResult build_network(const std::vector<LayerInput>& layers, double epsilon) {
    BuildResult result{InfrastructureNetwork(epsilon), {}};
    InfrastructureNetwork& net = result.network;
    for (const auto& in : layers) net.add_layer(in.layer);

    std::set<std::string> explicit_ids;
    for (const auto& in : layers) {
        for (const auto& f : in.features) {
            if (f.id) explicit_ids.insert(*f.id);
        }
    }
    IdSource ids(explicit_ids);

    for (const auto& in : layers) {
        const std::string& layer_id = in.layer.id;
        SnapGrid snap(epsilon);

        auto add_node = [&](std::optional<std::string> id, Point2D p, const FeatureRecord* src) {
            Node n;
            n.id = id ? *id : ids.next("n");
            n.position = p;
            n.layer_id = layer_id;
            if (src) {
                n.attributes = src->properties;
                n.flag_ids = src->flag_ids;
                n.period = src->period;
            }
            net.add_node(n);
            snap.insert(n.id, p);
            return n.id;
        };

        for (const auto& f : in.features) {
            if (const auto* p = std::get_if<Point2D>(&f.geometry)) {
                if (f.id && net.find_node(*f.id)) {
                    throw ValidationError("layer '" + layer_id + "': duplicate node id '" + *f.id + "'");
                }
                add_node(f.id, *p, &f);
            }
        }

        auto resolve_endpoint = [&](Point2D p, const std::optional<std::string>& ref) -> std::string {
            if (ref) {
                const Node* n = net.find_node(*ref);
                if (n && n->layer_id == layer_id && distance(n->position, p) <= epsilon) return n->id;
            }
            if (auto hit = snap.nearest_within(p)) return *hit;
            return add_node(std::nullopt, p, nullptr);
        };

        std::vector<PendingEdge> pending;
        for (const auto& f : in.features) {
            const auto* line = std::get_if<LineString>(&f.geometry);
            if (!line) continue;
            if (zero_length(line->points, epsilon)) {
                result.issues.push_back({layer_id, f.index, "zero-length linestring not loaded"});
                continue;
            }
            std::vector<Point2D> chain = line->points;
            const std::string a =
                resolve_endpoint(chain.front(), f.endpoint_refs ? std::optional(f.endpoint_refs->first) : std::nullopt);
            const std::string b =
                resolve_endpoint(chain.back(), f.endpoint_refs ? std::optional(f.endpoint_refs->second) : std::nullopt);
            const std::string edge_id = f.id ? *f.id : ids.next("e");
            chain.front() = net.node(a).position;
            chain.back() = net.node(b).position;
            if (a == b) {
                // Closed linestring: split at the vertex farthest from the start.
                std::size_t far = 1;
                for (std::size_t k = 1; k + 1 < chain.size(); ++k) {
                    if (distance(chain[k], chain.front()) > distance(chain[far], chain.front())) far = k;
                }
                const std::string mid = resolve_endpoint(chain[far], std::nullopt);
                if (mid == a) {
                    result.issues.push_back({layer_id, f.index, "self-loop linestring not loaded"});
                    continue;
                }
                std::vector<Point2D> first(chain.begin(), chain.begin() + static_cast<std::ptrdiff_t>(far) + 1);
                std::vector<Point2D> second(chain.begin() + static_cast<std::ptrdiff_t>(far), chain.end());
                first.back() = second.front() = net.node(mid).position;
                pending.push_back({edge_id, a, mid, std::move(first), &f});
                pending.push_back({ids.derived(edge_id, 1), mid, a, std::move(second), &f});
                continue;
            }
            pending.push_back({edge_id, a, b, std::move(chain), &f});
        }

        // Split every pending edge at nodes lying on its interior.
        std::vector<SpatialIndex::Entry> entries;
        for (const auto* n : net.layer_nodes(layer_id)) entries.push_back({n->id, BBox::of(n->position), layer_id});
        const SpatialIndex index(std::move(entries));
        for (auto& pe : pending) {
            const Point2D pa = net.node(pe.a).position;
            const Point2D pb = net.node(pe.b).position;
            struct Cut {
                double along;
                std::string node;
                std::size_t segment;
                double t;
            };
            std::vector<Cut> cuts;
            for (const auto& id : index.query(BBox::of(pe.chain).expanded(epsilon))) {
                if (id == pe.a || id == pe.b) continue;
                const Point2D p = net.node(id).position;
                if (distance(p, pa) <= epsilon || distance(p, pb) <= epsilon) continue;
                if (distance_point_to_chain(p, pe.chain) > epsilon) continue;
                Cut c{0.0, id, 0, 0.0};
                c.along = chain_position(p, pe.chain, c.segment, c.t);
                cuts.push_back(c);
            }
            std::sort(cuts.begin(), cuts.end(), [](const Cut& x, const Cut& y) {
                return x.along < y.along || (x.along == y.along && x.node < y.node);
            });
            std::vector<Cut> kept;
            for (const auto& c : cuts) {
                if (!kept.empty() && distance(net.node(kept.back().node).position, net.node(c.node).position) <= epsilon) {
                    continue;  // co-located with the previous cut: leave it to duplicate detection
                }
                kept.push_back(c);
            }

            std::string from = pe.a;
            std::vector<Point2D> piece{pa};
            std::size_t next_vertex = 1;
            std::size_t piece_no = 0;
            auto emit = [&](const std::string& to, std::vector<Point2D> pts) {
                const std::string id = piece_no == 0 ? pe.id : ids.derived(pe.id, piece_no);
                ++piece_no;
                net.add_edge(make_edge(id, from, to, std::move(pts), *pe.source, layer_id));
                from = to;
            };
            for (const auto& c : kept) {
                while (next_vertex <= c.segment) piece.push_back(pe.chain[next_vertex++]);
                const Point2D at = net.node(c.node).position;
                if (!(piece.back() == at)) piece.push_back(at);
                // A cut exactly on a vertex consumes it.
                if (next_vertex < pe.chain.size() - 1 && distance(pe.chain[next_vertex], at) == 0.0) ++next_vertex;
                emit(c.node, std::move(piece));
                piece = {at};
            }
            while (next_vertex < pe.chain.size()) piece.push_back(pe.chain[next_vertex++]);
            piece.back() = pb;
            emit(pe.b, std::move(piece));
        }

        for (const auto& f : in.features) {
            MultiPolygonGeometry mp;
            try {
                if (const auto* rp = std::get_if<RawPolygon>(&f.geometry)) {
                    mp.polygons.push_back(make_polygon(rp->rings));
                } else if (const auto* rm = std::get_if<RawMultiPolygon>(&f.geometry)) {
                    for (const auto& p : rm->polygons) mp.polygons.push_back(make_polygon(p.rings));
                } else {
                    continue;
                }
            } catch (const ValidationError& e) {
                result.issues.push_back({layer_id, f.index, std::string("invalid polygon: ") + e.what()});
                continue;
            }
            Footprint fp;
            fp.id = f.id ? *f.id : ids.next("f");
            if (net.footprints().count(fp.id)) {
                throw ValidationError("layer '" + layer_id + "': duplicate footprint id '" + fp.id + "'");
            }
            fp.layer_id = layer_id;
            fp.geometry = std::move(mp);
            fp.attributes = f.properties;
            fp.flag_ids = f.flag_ids;
            fp.period = f.period;
            net.add_footprint(std::move(fp));
        }
    }
    return result;
}

// ------------------------------------------------------------ export

json export_layer_json(const InfrastructureNetwork& net, std::string_view layer_id) {
    return export_layer_json(net, layer_id, nullptr);
}

json export_layer_json(const InfrastructureNetwork& net, std::string_view layer_id, const std::set<std::string>* only) {
    const Layer& layer = net.layer(layer_id);
    auto keep = [&](const std::string& id) { return !only || only->count(id) > 0; };
    json features = json::array();
    auto props_of = [](const Attributes& attrs, const std::vector<std::string>& flags,
                       const std::optional<TimeInterval>& period) {
        json props = json::object();
        for (const auto& [k, v] : attrs) props[k] = scalar_to_json(v);
        if (!flags.empty()) props[std::string(kFlagsKey)] = flags;
        if (period) props[std::string(kPeriodKey)] = format_interval(*period);
        return props;
    };
    for (const auto* n : net.layer_nodes(layer_id)) {
        if (!keep(n->id)) continue;
        features.push_back({{"type", "Feature"},
                            {"id", n->id},
                            {"geometry", geometry_to_geojson(n->position)},
                            {"properties", props_of(n->attributes, n->flag_ids, n->period)}});
    }
    for (const auto* e : net.layer_edges(layer_id)) {
        if (!keep(e->id)) continue;
        json props = props_of(e->attributes, e->flag_ids, e->period);
        props[std::string(kNodeAKey)] = e->endpoint_a;
        props[std::string(kNodeBKey)] = e->endpoint_b;
        features.push_back({{"type", "Feature"},
                            {"id", e->id},
                            {"geometry", geometry_to_geojson(LineString{net.edge_chain(*e)})},
                            {"properties", props}});
    }
    for (const auto* f : net.layer_footprints(layer_id)) {
        if (!keep(f->id)) continue;
        features.push_back({{"type", "Feature"},
                            {"id", f->id},
                            {"geometry", multipolygon_to_geojson(f->geometry)},
                            {"properties", props_of(f->attributes, f->flag_ids, f->period)}});
    }
    return {{"type", "FeatureCollection"}, {std::string(kLayerMember), to_json(layer)}, {"features", features}};
}

std::string export_layer(const InfrastructureNetwork& net, std::string_view layer_id) {
    return export_layer_json(net, layer_id).dump();
}

// ------------------------------------------------------------ CSV tables

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string cell;
    bool quoted = false;
    bool any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    cell.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cell.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                quoted = true;
                any = true;
                break;
            case ',':
                row.push_back(std::move(cell));
                cell.clear();
                any = true;
                break;
            case '\r':
                break;
            case '\n':
                if (any || !cell.empty()) {
                    row.push_back(std::move(cell));
                    rows.push_back(std::move(row));
                }
                row.clear();
                cell.clear();
                any = false;
                break;
            default:
                cell.push_back(c);
                any = true;
        }
    }
    if (quoted) throw ParseError("unterminated quoted CSV field", text.size());
    if (any || !cell.empty()) {
        row.push_back(std::move(cell));
        rows.push_back(std::move(row));
    }
    return rows;
}

Scalar infer_scalar(std::string_view cell) {
    if (cell == "true") return true;
    if (cell == "false") return false;
    std::int64_t i = 0;
    auto [ip, iec] = std::from_chars(cell.data(), cell.data() + cell.size(), i);
    if (iec == std::errc{} && ip == cell.data() + cell.size() && !cell.empty()) return i;
    double d = 0.0;
    auto [dp, dec] = std::from_chars(cell.data(), cell.data() + cell.size(), d);
    if (dec == std::errc{} && dp == cell.data() + cell.size() && !cell.empty() && std::isfinite(d)) return d;
    return std::string(cell);
}

namespace {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name, const char* table) const {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) {
            throw ValidationError(std::string(table) + " table is missing required column '" + name + "'");
        }
        return static_cast<std::size_t>(it - header.begin());
    }
};

Table read_table(std::string_view text, const char* name) {
    auto rows = parse_csv(text);
    if (rows.empty()) throw ValidationError(std::string(name) + " table has no header");
    Table t;
    t.header = std::move(rows.front());
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() != t.header.size()) {
            throw ValidationError(std::string(name) + " table row " + std::to_string(i) + " has " +
                                  std::to_string(rows[i].size()) + " fields, expected " + std::to_string(t.header.size()));
        }
        t.rows.push_back(std::move(rows[i]));
    }
    return t;
}

void check_unique(const Table& t, std::size_t col, const char* name) {
    std::set<std::string> seen;
    std::set<std::string> dups;
    for (const auto& r : t.rows) {
        if (!seen.insert(r[col]).second) dups.insert(r[col]);
    }
    if (!dups.empty()) {
        std::string list;
        for (const auto& d : dups) list += (list.empty() ? "" : ", ") + d;
        throw ValidationError(std::string("duplicate id in ") + name + " table: " + list);
    }
}

double parse_coordinate(const std::string& s, const std::string& id) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size() || !std::isfinite(v)) {
        throw ValidationError("node '" + id + "' has invalid coordinate '" + s + "'");
    }
    return v;
}

Attributes row_attributes(const Table& t, const std::vector<std::string>& row, std::set<std::size_t> skip,
                          std::optional<TimeInterval>& period) {
    Attributes attrs;
    for (std::size_t c = 0; c < t.header.size(); ++c) {
        if (skip.count(c) || row[c].empty()) continue;
        if (t.header[c] == kPeriodKey) {
            period = parse_period(row[c]);
            continue;
        }
        attrs.emplace(t.header[c], infer_scalar(row[c]));
    }
    return attrs;
}

}  // namespace

InfrastructureNetwork load_tables(std::string_view nodes_csv, std::string_view edges_csv, const Layer& layer_meta,
                                  double epsilon) {
    const Table nodes = read_table(nodes_csv, "nodes");
    const Table edges = read_table(edges_csv, "edges");
    const auto nid = nodes.column("id", "nodes");
    const auto nx = nodes.column("x", "nodes");
    const auto ny = nodes.column("y", "nodes");
    const auto eid = edges.column("id", "edges");
    const auto ea = edges.column("node_a", "edges");
    const auto eb = edges.column("node_b", "edges");
    check_unique(nodes, nid, "nodes");
    check_unique(edges, eid, "edges");

    InfrastructureNetwork net(epsilon);
    net.add_layer(layer_meta);
    for (const auto& r : nodes.rows) {
        Node n;
        n.id = r[nid];
        n.layer_id = layer_meta.id;
        n.position = {parse_coordinate(r[nx], n.id), parse_coordinate(r[ny], n.id)};
        n.attributes = row_attributes(nodes, r, {nid, nx, ny}, n.period);
        net.add_node(std::move(n));
    }
    std::set<std::string> dangling;
    for (const auto& r : edges.rows) {
        for (auto c : {ea, eb}) {
            if (!net.find_node(r[c])) dangling.insert(r[c]);
        }
    }
    if (!dangling.empty()) {
        std::string list;
        for (const auto& d : dangling) list += (list.empty() ? "" : ", ") + d;
        throw ValidationError("edges reference missing node ids: " + list);
    }
    for (const auto& r : edges.rows) {
        Edge e;
        e.id = r[eid];
        e.layer_id = layer_meta.id;
        e.endpoint_a = r[ea];
        e.endpoint_b = r[eb];
        e.attributes = row_attributes(edges, r, {eid, ea, eb}, e.period);
        net.add_edge(std::move(e));
    }
    return net;
}

}  // namespace guides
