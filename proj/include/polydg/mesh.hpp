#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "polydg/errors.hpp"
#include "polydg/geometry.hpp"

namespace polydg {

enum class EdgeKind { interior, boundary };

/// A straight mesh edge. For interior edges `normal` points from `minus_cell` (the lower
/// cell index) to `plus_cell`; for boundary edges it is the outward normal.
struct Edge {
    std::array<std::size_t, 2> vertices{};
    std::size_t minus_cell = 0;
    std::optional<std::size_t> plus_cell;
    Vec2 normal;
    double length = 0.0;
    EdgeKind kind = EdgeKind::boundary;

    bool is_boundary() const { return kind == EdgeKind::boundary; }
};

struct MeshQualityReport {
    double h = 0.0;
    double min_h_K = 0.0;
    double quasi_uniformity = 0.0; ///< min_K h_K / h
    double min_edge_to_cell_ratio = 0.0; ///< min over edges E and their cells K of h_E / h_K
    bool has_hanging_nodes = false;
};

/// Immutable polygonal partition with edge topology. Cells are CCW vertex loops;
/// they may be non-convex and may carry collinear vertices.
class PolyMesh {
public:
    PolyMesh() = default;

    /// Validates the cells and builds edges. Throws GeometryError or TopologyError.
    PolyMesh(std::vector<Vec2> vertices, std::vector<std::vector<std::size_t>> cells)
        : vertices_(std::move(vertices)), cells_(std::move(cells))
    {
        validate_cells();
        build_topology();
    }

    std::size_t num_vertices() const { return vertices_.size(); }
    std::size_t num_cells() const { return cells_.size(); }
    std::size_t num_edges() const { return edges_.size(); }

    const std::vector<Vec2>& vertices() const { return vertices_; }
    const std::vector<std::vector<std::size_t>>& cells() const { return cells_; }
    const std::vector<Edge>& edges() const { return edges_; }
    const Edge& edge(std::size_t e) const { return edges_[e]; }

    /// Edge ids bounding cell `c`, in loop order.
    const std::vector<std::size_t>& cell_edges(std::size_t c) const { return cell_edges_[c]; }

    std::vector<Vec2> cell_polygon(std::size_t c) const
    {
        std::vector<Vec2> p;
        p.reserve(cells_[c].size());
        for (auto v : cells_[c]) p.push_back(vertices_[v]);
        return p;
    }

    double cell_area(std::size_t c) const { return areas_[c]; }
    double cell_diameter(std::size_t c) const { return diameters_[c]; }
    Vec2 cell_centroid(std::size_t c) const { return centroids_[c]; }

    double h() const { return h_; }
    double total_area() const
    {
        double s = 0.0;
        for (double a : areas_) s += a;
        return s;
    }
    bool has_hanging_nodes() const { return hanging_; }

    std::size_t num_interior_edges() const
    {
        return static_cast<std::size_t>(
            std::count_if(edges_.begin(), edges_.end(), [](const Edge& e) { return !e.is_boundary(); }));
    }

    /// FNV-1a hash over vertex coordinates and cell loops.
    std::uint64_t fingerprint() const
    {
        std::uint64_t h = 1469598103934665603ULL;
        auto mix = [&h](const void* data, std::size_t n) {
            const auto* b = static_cast<const unsigned char*>(data);
            for (std::size_t i = 0; i < n; ++i) {
                h ^= b[i];
                h *= 1099511628211ULL;
            }
        };
        for (const Vec2& v : vertices_) {
            mix(&v.x, sizeof(double));
            mix(&v.y, sizeof(double));
        }
        for (const auto& c : cells_) {
            const std::uint64_t n = c.size();
            mix(&n, sizeof n);
            for (auto v : c) {
                const std::uint64_t vv = v;
                mix(&vv, sizeof vv);
            }
        }
        return h;
    }

private:
    void validate_cells()
    {
        if (cells_.empty()) throw GeometryError("mesh has no cells");
        areas_.resize(cells_.size());
        diameters_.resize(cells_.size());
        centroids_.resize(cells_.size());
        h_ = 0.0;
        for (std::size_t c = 0; c < cells_.size(); ++c) {
            const auto& loop = cells_[c];
            if (loop.size() < 3) throw GeometryError("cell " + std::to_string(c) + " has fewer than 3 vertices");
            for (auto v : loop)
                if (v >= vertices_.size())
                    throw GeometryError("cell " + std::to_string(c) + " references missing vertex " + std::to_string(v));
            const auto poly = cell_polygon(c);
            if (!is_simple(poly)) throw GeometryError("cell " + std::to_string(c) + " is not a simple polygon");
            areas_[c] = signed_area(poly);
            if (!(areas_[c] > 0.0))
                throw GeometryError("cell " + std::to_string(c) + " is not counter-clockwise with positive area");
            diameters_[c] = diameter(poly);
            centroids_[c] = centroid(poly);
            h_ = std::max(h_, diameters_[c]);
        }
    }

    // Uniform bucket grid over the vertex bounding box, used to find vertices that
    // lie inside a neighbouring cell's side (hanging nodes).
    struct VertexGrid {
        Vec2 lo;
        double size = 1.0;
        std::size_t nx = 1, ny = 1;
        std::vector<std::vector<std::size_t>> buckets;

        std::size_t ix(double x) const
        {
            return std::min(nx - 1, static_cast<std::size_t>(std::max(0.0, (x - lo.x) / size)));
        }
        std::size_t iy(double y) const
        {
            return std::min(ny - 1, static_cast<std::size_t>(std::max(0.0, (y - lo.y) / size)));
        }
    };

    VertexGrid make_grid() const
    {
        VertexGrid g;
        Vec2 lo = vertices_[0], hi = vertices_[0];
        for (const Vec2& v : vertices_) {
            lo = {std::min(lo.x, v.x), std::min(lo.y, v.y)};
            hi = {std::max(hi.x, v.x), std::max(hi.y, v.y)};
        }
        double mean_side = 0.0;
        std::size_t sides = 0;
        for (const auto& loop : cells_)
            for (std::size_t i = 0; i < loop.size(); ++i, ++sides)
                mean_side += distance(vertices_[loop[i]], vertices_[loop[(i + 1) % loop.size()]]);
        mean_side /= static_cast<double>(std::max<std::size_t>(sides, 1));
        g.lo = lo;
        g.size = std::max(mean_side, 1e-12);
        g.nx = static_cast<std::size_t>((hi.x - lo.x) / g.size) + 1;
        g.ny = static_cast<std::size_t>((hi.y - lo.y) / g.size) + 1;
        g.buckets.resize(g.nx * g.ny);
        for (std::size_t v = 0; v < vertices_.size(); ++v)
            g.buckets[g.iy(vertices_[v].y) * g.nx + g.ix(vertices_[v].x)].push_back(v);
        return g;
    }

    void build_topology()
    {
        const VertexGrid grid = make_grid();
        struct Use {
            std::size_t cell;
            bool forward; // traversal a->b with a < b
        };
        std::map<std::pair<std::size_t, std::size_t>, std::size_t> edge_of;
        std::vector<std::vector<Use>> uses;
        std::vector<std::pair<std::size_t, std::size_t>> keys;
        cell_edges_.assign(cells_.size(), {});
        hanging_ = false;

        for (std::size_t c = 0; c < cells_.size(); ++c) {
            const auto& loop = cells_[c];
            for (std::size_t i = 0; i < loop.size(); ++i) {
                const std::size_t a = loop[i], b = loop[(i + 1) % loop.size()];
                const Vec2 pa = vertices_[a], pb = vertices_[b];
                // vertices lying strictly inside this side split it
                std::vector<std::pair<double, std::size_t>> inner;
                const std::size_t x0 = grid.ix(std::min(pa.x, pb.x)), x1 = grid.ix(std::max(pa.x, pb.x));
                const std::size_t y0 = grid.iy(std::min(pa.y, pb.y)), y1 = grid.iy(std::max(pa.y, pb.y));
                for (std::size_t yy = y0; yy <= y1; ++yy)
                    for (std::size_t xx = x0; xx <= x1; ++xx)
                        for (std::size_t v : grid.buckets[yy * grid.nx + xx]) {
                            if (v == a || v == b) continue;
                            if (on_segment_interior(vertices_[v], pa, pb)) {
                                const double t = dot(vertices_[v] - pa, pb - pa) / dot(pb - pa, pb - pa);
                                inner.emplace_back(t, v);
                            }
                        }
                std::sort(inner.begin(), inner.end());
                if (!inner.empty()) hanging_ = true;
                std::vector<std::size_t> chain{a};
                for (const auto& [t, v] : inner) chain.push_back(v);
                chain.push_back(b);
                for (std::size_t s = 0; s + 1 < chain.size(); ++s) {
                    const std::size_t p = chain[s], q = chain[s + 1];
                    const auto key = std::minmax(p, q);
                    auto [it, inserted] = edge_of.try_emplace({key.first, key.second}, uses.size());
                    if (inserted) {
                        uses.emplace_back();
                        keys.emplace_back(p, q);
                    }
                    uses[it->second].push_back({c, p < q});
                    cell_edges_[c].push_back(it->second);
                }
            }
        }

        edges_.resize(uses.size());
        for (std::size_t e = 0; e < uses.size(); ++e) {
            const auto& u = uses[e];
            const auto [p, q] = keys[e];
            if (u.size() > 2)
                throw TopologyError("edge (" + std::to_string(p) + "," + std::to_string(q) + ") is shared by " +
                                        std::to_string(u.size()) + " cells",
                                    p, q);
            if (u.size() == 2 && (u[0].forward == u[1].forward || u[0].cell == u[1].cell))
                throw TopologyError("edge (" + std::to_string(p) + "," + std::to_string(q) +
                                        ") is traversed twice in the same direction (overlapping cells)",
                                    p, q);
            Edge& edge = edges_[e];
            // keys[e] holds the traversal order of the first (lowest-index) cell
            edge.vertices = {p, q};
            edge.minus_cell = u[0].cell;
            const Vec2 d = vertices_[q] - vertices_[p];
            edge.length = norm(d);
            edge.normal = Vec2{d.y, -d.x} * (1.0 / edge.length);
            if (u.size() == 2) {
                edge.plus_cell = u[1].cell;
                edge.kind = EdgeKind::interior;
            }
        }
    }

    std::vector<Vec2> vertices_;
    std::vector<std::vector<std::size_t>> cells_;
    std::vector<Edge> edges_;
    std::vector<std::vector<std::size_t>> cell_edges_;
    std::vector<double> areas_;
    std::vector<double> diameters_;
    std::vector<Vec2> centroids_;
    double h_ = 0.0;
    bool hanging_ = false;
};

inline MeshQualityReport quality_report(const PolyMesh& mesh)
{
    MeshQualityReport r;
    r.h = mesh.h();
    r.min_h_K = mesh.h();
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) r.min_h_K = std::min(r.min_h_K, mesh.cell_diameter(c));
    r.quasi_uniformity = r.min_h_K / r.h;
    r.min_edge_to_cell_ratio = 1.0;
    for (const Edge& e : mesh.edges()) {
        r.min_edge_to_cell_ratio = std::min(r.min_edge_to_cell_ratio, e.length / mesh.cell_diameter(e.minus_cell));
        if (e.plus_cell)
            r.min_edge_to_cell_ratio = std::min(r.min_edge_to_cell_ratio, e.length / mesh.cell_diameter(*e.plus_cell));
    }
    r.has_hanging_nodes = mesh.has_hanging_nodes();
    return r;
}

// ---------------------------------------------------------------------------
// JSON mesh files: { "vertices": [[x,y],...], "cells": [[i0,i1,...],...] }

inline nlohmann::json mesh_to_json(const PolyMesh& mesh, const nlohmann::json& meta = nullptr)
{
    nlohmann::json j;
    auto& verts = j["vertices"] = nlohmann::json::array();
    for (const Vec2& v : mesh.vertices()) verts.push_back({v.x, v.y});
    j["cells"] = mesh.cells();
    if (!meta.is_null()) j["meta"] = meta;
    return j;
}

inline PolyMesh mesh_from_json(const nlohmann::json& j)
{
    if (!j.is_object() || !j.contains("vertices") || !j.contains("cells"))
        throw ParseError("mesh JSON needs \"vertices\" and \"cells\" arrays");
    std::vector<Vec2> vertices;
    for (const auto& v : j.at("vertices")) {
        if (!v.is_array() || v.size() != 2) throw ParseError("mesh vertex must be an [x, y] pair");
        vertices.push_back({v[0].get<double>(), v[1].get<double>()});
    }
    auto cells = j.at("cells").get<std::vector<std::vector<std::size_t>>>();
    return PolyMesh(std::move(vertices), std::move(cells));
}

inline void write_mesh(const PolyMesh& mesh, const std::string& path, const nlohmann::json& meta = nullptr)
{
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open " + path + " for writing");
    out << mesh_to_json(mesh, meta).dump() << '\n';
}

inline PolyMesh read_mesh(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open mesh file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
    return mesh_from_json(j);
}

} // namespace polydg
