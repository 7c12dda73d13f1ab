#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "polydg/errors.hpp"
#include "polydg/geometry.hpp"
#include "polydg/mesh.hpp"

namespace polydg {

enum class Domain { unit_square, unit_disk };

inline double domain_area(Domain d) { return d == Domain::unit_square ? 1.0 : std::numbers::pi; }

/// Axis-aligned nx-by-ny quadrilateral grid of the unit square.
inline PolyMesh generate_quad_grid(std::size_t nx, std::size_t ny)
{
    if (nx < 1 || ny < 1) throw InvalidParameter("quad grid needs at least one cell per direction");
    std::vector<Vec2> v;
    for (std::size_t j = 0; j <= ny; ++j)
        for (std::size_t i = 0; i <= nx; ++i)
            v.push_back({static_cast<double>(i) / static_cast<double>(nx), static_cast<double>(j) / static_cast<double>(ny)});
    auto id = [nx](std::size_t i, std::size_t j) { return j * (nx + 1) + i; };
    std::vector<std::vector<std::size_t>> cells;
    for (std::size_t j = 0; j < ny; ++j)
        for (std::size_t i = 0; i < nx; ++i) cells.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});
    return PolyMesh(std::move(v), std::move(cells));
}

namespace detail {

inline std::vector<Vec2> grid_vertices(std::size_t n)
{
    std::vector<Vec2> v;
    v.reserve((n + 1) * (n + 1));
    for (std::size_t j = 0; j <= n; ++j)
        for (std::size_t i = 0; i <= n; ++i)
            v.push_back({static_cast<double>(i) / static_cast<double>(n), static_cast<double>(j) / static_cast<double>(n)});
    return v;
}

// Splits the 2x2 sub-quad block with lower-left grid index (i0, j0) into an L-shaped
// cell and the complementary square. The missing corner alternates between the
// lower-left and upper-right on a checkerboard of blocks. Loops list every grid
// vertex on their boundary, so blocks conform to each other.
inline void append_l_block(std::size_t n, std::size_t i0, std::size_t j0, bool flip,
                           std::vector<std::vector<std::size_t>>& cells)
{
    auto id = [n](std::size_t i, std::size_t j) { return j * (n + 1) + i; };
    const std::size_t perim[8] = {id(i0, j0),         id(i0 + 1, j0),     id(i0 + 2, j0),     id(i0 + 2, j0 + 1),
                                  id(i0 + 2, j0 + 2), id(i0 + 1, j0 + 2), id(i0, j0 + 2),     id(i0, j0 + 1)};
    const std::size_t center = id(i0 + 1, j0 + 1);
    const std::size_t c = flip ? 4 : 0;
    std::vector<std::size_t> l_cell(perim, perim + 8);
    l_cell[c] = center;
    cells.push_back(std::move(l_cell));
    cells.push_back({perim[c], perim[(c + 1) % 8], center, perim[(c + 7) % 8]});
}

} // namespace detail

/// Tiling of the unit square where each 2x2 block of the n-by-n sub-quad grid is split
/// into a non-convex L-hexagon (three sub-quads) and its complementary square.
/// Nominal mesh size 2/n; the cells of neighbouring blocks meet conformingly.
inline PolyMesh generate_structured_nonconvex(std::size_t n)
{
    if (n < 2 || n % 2 != 0) throw InvalidParameter("non-convex family needs an even subdivision count >= 2");
    std::vector<std::vector<std::size_t>> cells;
    for (std::size_t J = 0; J < n / 2; ++J)
        for (std::size_t I = 0; I < n / 2; ++I) detail::append_l_block(n, 2 * I, 2 * J, (I + J) % 2 == 1, cells);
    return PolyMesh(detail::grid_vertices(n), std::move(cells));
}

/// Left half: n x n/2 axis-aligned quads. Right half: the L-block pattern of
/// generate_structured_nonconvex. L cells touching x = 1/2 span two quad sides with a
/// single edge, so the quad vertices in between are hanging nodes.
inline PolyMesh generate_mixed(std::size_t n)
{
    if (n < 4 || n % 4 != 0) throw InvalidParameter("mixed family needs a subdivision count divisible by 4");
    auto id = [n](std::size_t i, std::size_t j) { return j * (n + 1) + i; };
    const std::size_t half = n / 2;
    std::vector<std::vector<std::size_t>> cells;
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < half; ++i) cells.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});
    for (std::size_t J = 0; J < n / 2; ++J)
        for (std::size_t I = half / 2; I < n / 2; ++I) {
            const std::size_t first = cells.size();
            detail::append_l_block(n, 2 * I, 2 * J, (I + J) % 2 == 1, cells);
            if (2 * I != half) continue;
            // drop straight-through vertices on the interface line from the coarse side
            for (std::size_t c = first; c < cells.size(); ++c) {
                auto& loop = cells[c];
                std::vector<std::size_t> kept;
                for (std::size_t k = 0; k < loop.size(); ++k) {
                    const std::size_t prev = loop[(k + loop.size() - 1) % loop.size()];
                    const std::size_t next = loop[(k + 1) % loop.size()];
                    auto col = [n](std::size_t v) { return v % (n + 1); };
                    const bool interface_straight = col(loop[k]) == half && col(prev) == half && col(next) == half;
                    if (!interface_straight) kept.push_back(loop[k]);
                }
                loop = std::move(kept);
            }
        }
    return PolyMesh(detail::grid_vertices(n), std::move(cells));
}

// ---------------------------------------------------------------------------
// Clipped Voronoi meshes

struct VoronoiOptions {
    std::size_t n_seeds = 64;
    Domain domain = Domain::unit_square;
    int lloyd_iters = 3;
    std::uint64_t seed = 1;
};

/// Number of seeds giving a nominal mesh size h: round(|domain| / h^2).
inline std::size_t seeds_for_mesh_size(Domain domain, double h)
{
    return static_cast<std::size_t>(std::lround(domain_area(domain) / (h * h)));
}

namespace detail {

// Keep the part of a convex polygon on the side of `seed` of the bisector of (seed, other).
inline std::vector<Vec2> clip_bisector(const std::vector<Vec2>& poly, Vec2 seed, Vec2 other)
{
    const Vec2 d = other - seed;
    const double c = 0.5 * (dot(other, other) - dot(seed, seed)); // inside: dot(x, d) <= c
    std::vector<Vec2> out;
    out.reserve(poly.size() + 1);
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 a = poly[i], b = poly[(i + 1) % n];
        const double fa = dot(a, d) - c, fb = dot(b, d) - c;
        if (fa <= 0.0) out.push_back(a);
        if ((fa < 0.0 && fb > 0.0) || (fa > 0.0 && fb < 0.0)) out.push_back(a + (fa / (fa - fb)) * (b - a));
    }
    return out;
}

// Intersection of a convex CCW polygon with the unit disk. Arcs of the circle are
// replaced by points every `arc_step` radians, or by the bare chord if arc_step <= 0.
inline std::vector<Vec2> clip_disk(const std::vector<Vec2>& poly, double arc_step)
{
    const std::size_t n = poly.size();
    std::vector<Vec2> out;
    std::vector<bool> exit_flag;
    auto inside = [](Vec2 p) { return dot(p, p) <= 1.0; };
    bool any_crossing = false;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 a = poly[i], b = poly[(i + 1) % n];
        if (inside(a)) {
            out.push_back(a);
            exit_flag.push_back(false);
        }
        const Vec2 d = b - a;
        const double qa = dot(d, d), qb = 2.0 * dot(a, d), qc = dot(a, a) - 1.0;
        const double disc = qb * qb - 4.0 * qa * qc;
        if (disc <= 0.0 || qa == 0.0) continue;
        const double sq = std::sqrt(disc);
        // numerically stable roots
        const double q = -0.5 * (qb + std::copysign(sq, qb));
        double t1 = q / qa, t2 = qc / q;
        if (t1 > t2) std::swap(t1, t2);
        if (t1 > 0.0 && t1 < 1.0 && !inside(a)) {
            out.push_back(a + t1 * d);
            exit_flag.push_back(false);
            any_crossing = true;
        }
        if (t2 > 0.0 && t2 < 1.0 && (inside(a) || (t1 > 0.0 && t1 < 1.0))) {
            Vec2 p = a + t2 * d;
            out.push_back(p);
            exit_flag.push_back(true);
            any_crossing = true;
        }
    }
    if (!any_crossing) {
        if (out.size() == n) return out;
        throw GeometryError("Voronoi cell encloses the whole disk; use more seeds");
    }
    if (arc_step <= 0.0) return out;
    std::vector<Vec2> with_arcs;
    for (std::size_t i = 0; i < out.size(); ++i) {
        with_arcs.push_back(out[i]);
        if (!exit_flag[i]) continue;
        const Vec2 p = out[i], q = out[(i + 1) % out.size()];
        const double a0 = std::atan2(p.y, p.x);
        double sweep = std::atan2(q.y, q.x) - a0;
        while (sweep <= 0.0) sweep += 2.0 * std::numbers::pi;
        const int pieces = static_cast<int>(std::ceil(sweep / arc_step));
        for (int s = 1; s < pieces; ++s) {
            const double ang = a0 + sweep * s / pieces;
            with_arcs.push_back({std::cos(ang), std::sin(ang)});
        }
    }
    return with_arcs;
}

class SeedGrid {
public:
    SeedGrid(const std::vector<Vec2>& seeds, Vec2 lo, Vec2 hi, double spacing) : seeds_(seeds), lo_(lo), size_(spacing)
    {
        nx_ = static_cast<std::size_t>((hi.x - lo.x) / size_) + 1;
        ny_ = static_cast<std::size_t>((hi.y - lo.y) / size_) + 1;
        buckets_.resize(nx_ * ny_);
        for (std::size_t s = 0; s < seeds.size(); ++s) buckets_[index(seeds[s])].push_back(s);
    }

    // Bisector-clips `cell` against seeds in growing rings of buckets until no
    // farther seed can cut it.
    std::vector<Vec2> clip_cell(std::size_t s, std::vector<Vec2> cell) const
    {
        const Vec2 p = seeds_[s];
        const long cx = static_cast<long>(ix(p.x)), cy = static_cast<long>(iy(p.y));
        const long max_ring = static_cast<long>(std::max(nx_, ny_));
        for (long r = 0; r <= max_ring; ++r) {
            double radius = 0.0;
            for (const Vec2& v : cell) radius = std::max(radius, distance(v, p));
            if (r >= 2 && static_cast<double>(r - 1) * size_ > 2.0 * radius) break;
            for (long by = cy - r; by <= cy + r; ++by)
                for (long bx = cx - r; bx <= cx + r; ++bx) {
                    if (std::max(std::abs(bx - cx), std::abs(by - cy)) != r) continue;
                    if (bx < 0 || by < 0 || bx >= static_cast<long>(nx_) || by >= static_cast<long>(ny_)) continue;
                    for (std::size_t o : buckets_[static_cast<std::size_t>(by) * nx_ + static_cast<std::size_t>(bx)]) {
                        if (o == s) continue;
                        cell = clip_bisector(cell, p, seeds_[o]);
                        if (cell.size() < 3) throw GeometryError("degenerate Voronoi cell");
                    }
                }
        }
        return cell;
    }

private:
    std::size_t ix(double x) const
    {
        return std::min(nx_ - 1, static_cast<std::size_t>(std::max(0.0, (x - lo_.x) / size_)));
    }
    std::size_t iy(double y) const
    {
        return std::min(ny_ - 1, static_cast<std::size_t>(std::max(0.0, (y - lo_.y) / size_)));
    }
    std::size_t index(Vec2 p) const { return iy(p.y) * nx_ + ix(p.x); }

    const std::vector<Vec2>& seeds_;
    Vec2 lo_;
    double size_;
    std::size_t nx_ = 1, ny_ = 1;
    std::vector<std::vector<std::size_t>> buckets_;
};

inline std::vector<std::vector<Vec2>> voronoi_cells(const std::vector<Vec2>& seeds, Domain domain, double arc_step)
{
    const double spacing = std::sqrt(domain_area(domain) / static_cast<double>(seeds.size()));
    const Vec2 lo = domain == Domain::unit_square ? Vec2{0.0, 0.0} : Vec2{-1.0, -1.0};
    const Vec2 hi{1.0, 1.0};
    const SeedGrid grid(seeds, lo, hi, spacing);
    const std::vector<Vec2> box{lo, {hi.x, lo.y}, hi, {lo.x, hi.y}};
    std::vector<std::vector<Vec2>> cells(seeds.size());
    for (std::size_t s = 0; s < seeds.size(); ++s) {
        auto cell = grid.clip_cell(s, box);
        if (domain == Domain::unit_disk) cell = clip_disk(cell, arc_step);
        cells[s] = std::move(cell);
    }
    return cells;
}

inline double min_pair_distance(const std::vector<Vec2>& pts)
{
    std::vector<Vec2> sorted = pts;
    std::sort(sorted.begin(), sorted.end(), [](Vec2 a, Vec2 b) { return a.x < b.x; });
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < sorted.size(); ++i)
        for (std::size_t j = i + 1; j < sorted.size() && sorted[j].x - sorted[i].x < best; ++j)
            best = std::min(best, distance(sorted[i], sorted[j]));
    return best;
}

enum class VertexClass { interior = 0, boundary = 1, corner = 2 };

inline VertexClass classify(Vec2 p, Domain domain)
{
    constexpr double tol = 1e-9;
    if (domain == Domain::unit_disk) return std::abs(norm(p) - 1.0) < tol ? VertexClass::boundary : VertexClass::interior;
    const bool onx = std::abs(p.x) < tol || std::abs(p.x - 1.0) < tol;
    const bool ony = std::abs(p.y) < tol || std::abs(p.y - 1.0) < tol;
    if (onx && ony) return VertexClass::corner;
    return (onx || ony) ? VertexClass::boundary : VertexClass::interior;
}

// Welds cell vertices closer than `weld_tol` and collapses sides shorter than
// `collapse_tol` into a single vertex (kept on the boundary when one end lies there).
inline PolyMesh assemble_cells(const std::vector<std::vector<Vec2>>& polys, Domain domain, double weld_tol,
                               double collapse_tol)
{
    std::vector<Vec2> points;
    std::vector<std::vector<std::size_t>> loops;
    {
        // weld through a hash grid with bucket size >> tolerance
        const double bucket = std::max(collapse_tol, 1e3 * weld_tol);
        std::unordered_map<std::int64_t, std::vector<std::size_t>> grid;
        auto key = [bucket](long bx, long by) { return (static_cast<std::int64_t>(bx) << 32) ^ (by & 0xffffffffL); };
        for (const auto& poly : polys) {
            std::vector<std::size_t> loop;
            for (const Vec2& p : poly) {
                const long bx = static_cast<long>(std::floor(p.x / bucket)), by = static_cast<long>(std::floor(p.y / bucket));
                std::size_t found = points.size();
                for (long dy = -1; dy <= 1 && found == points.size(); ++dy)
                    for (long dx = -1; dx <= 1 && found == points.size(); ++dx) {
                        auto it = grid.find(key(bx + dx, by + dy));
                        if (it == grid.end()) continue;
                        for (std::size_t q : it->second)
                            if (distance(points[q], p) <= weld_tol) {
                                found = q;
                                break;
                            }
                    }
                if (found == points.size()) {
                    points.push_back(p);
                    grid[key(bx, by)].push_back(found);
                }
                if (loop.empty() || loop.back() != found) loop.push_back(found);
            }
            while (loop.size() > 1 && loop.front() == loop.back()) loop.pop_back();
            loops.push_back(std::move(loop));
        }
    }

    // union-find over short sides
    std::vector<std::size_t> parent(points.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&parent](std::size_t a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    };
    bool collapsed = false;
    for (const auto& loop : loops)
        for (std::size_t i = 0; i < loop.size(); ++i) {
            const std::size_t a = loop[i], b = loop[(i + 1) % loop.size()];
            if (distance(points[a], points[b]) < collapse_tol) {
                const std::size_t ra = find(a), rb = find(b);
                if (ra != rb) {
                    parent[std::max(ra, rb)] = std::min(ra, rb);
                    collapsed = true;
                }
            }
        }
    if (collapsed) {
        std::vector<std::vector<std::size_t>> groups(points.size());
        for (std::size_t p = 0; p < points.size(); ++p) groups[find(p)].push_back(p);
        for (const auto& g : groups) {
            if (g.size() < 2) continue;
            int best = -1;
            for (std::size_t p : g) best = std::max(best, static_cast<int>(classify(points[p], domain)));
            Vec2 avg{};
            int count = 0;
            for (std::size_t p : g)
                if (static_cast<int>(classify(points[p], domain)) == best) {
                    avg += points[p];
                    ++count;
                }
            avg *= 1.0 / count;
            if (best == static_cast<int>(VertexClass::boundary) && domain == Domain::unit_disk) avg *= 1.0 / norm(avg);
            for (std::size_t p : g) points[p] = avg;
        }
        for (auto& loop : loops) {
            std::vector<std::size_t> out;
            for (std::size_t v : loop) {
                const std::size_t r = find(v);
                if (out.empty() || out.back() != r) out.push_back(r);
            }
            while (out.size() > 1 && out.front() == out.back()) out.pop_back();
            loop = std::move(out);
        }
    }

    // compact vertex numbering in order of first use
    std::vector<std::size_t> remap(points.size(), static_cast<std::size_t>(-1));
    std::vector<Vec2> verts;
    for (auto& loop : loops)
        for (auto& v : loop) {
            if (remap[v] == static_cast<std::size_t>(-1)) {
                remap[v] = verts.size();
                verts.push_back(points[v]);
            }
            v = remap[v];
        }
    return PolyMesh(std::move(verts), std::move(loops));
}

} // namespace detail

/// Voronoi partition of the unit square or disk after `lloyd_iters` centroidal
/// relaxation sweeps. Disk cells end in straight chords between the points where
/// Voronoi edges meet the circle. Deterministic for a given RNG seed.
inline PolyMesh generate_voronoi(const VoronoiOptions& opt)
{
    if (opt.n_seeds < 4) throw InvalidParameter("Voronoi meshes need at least 4 seeds");
    if (opt.lloyd_iters < 0) throw InvalidParameter("lloyd_iters must be non-negative");
    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto draw = [&]() -> Vec2 {
        if (opt.domain == Domain::unit_square) return {unit(rng), unit(rng)};
        for (;;) {
            const Vec2 p{2.0 * unit(rng) - 1.0, 2.0 * unit(rng) - 1.0};
            if (dot(p, p) < 0.98) return p;
        }
    };
    std::vector<Vec2> seeds(opt.n_seeds);
    for (auto& s : seeds) s = draw();

    const double spacing = std::sqrt(domain_area(opt.domain) / static_cast<double>(opt.n_seeds));
    const double dup_tol = 1e-9 * spacing;
    for (int attempt = 0; detail::min_pair_distance(seeds) < dup_tol; ++attempt) {
        if (attempt > 10) throw GeometryError("could not separate duplicate Voronoi seeds");
        warn("duplicate Voronoi seeds; re-jittering");
        std::normal_distribution<double> jitter(0.0, 1e-3 * spacing);
        for (auto& s : seeds) {
            s += Vec2{jitter(rng), jitter(rng)};
            if (opt.domain == Domain::unit_square) s = {std::clamp(s.x, 0.0, 1.0), std::clamp(s.y, 0.0, 1.0)};
            else if (norm(s) > 0.99) s *= 0.99 / norm(s);
        }
    }

    const double arc_step = std::min(0.05, 0.1 * spacing);
    for (int it = 0; it < opt.lloyd_iters; ++it) {
        const auto cells = detail::voronoi_cells(seeds, opt.domain, arc_step);
        for (std::size_t s = 0; s < seeds.size(); ++s) seeds[s] = centroid(cells[s]);
    }
    const auto cells = detail::voronoi_cells(seeds, opt.domain, 0.0);
    return detail::assemble_cells(cells, opt.domain, 1e-10, 1e-3 * spacing);
}

} // namespace polydg
