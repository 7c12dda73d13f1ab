#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "oracles.hpp"
#include "polydg/polydg.hpp"

using namespace polydg;

namespace {

double shoelace_total(const PolyMesh& m)
{
    double s = 0.0;
    for (std::size_t c = 0; c < m.num_cells(); ++c) s += oracle::polygon_monomial_integral(m.cell_polygon(c), 0, 0);
    return s;
}

void expect_edge_invariants(const PolyMesh& m)
{
    for (const Edge& e : m.edges()) {
        EXPECT_NEAR(norm(e.normal), 1.0, 1e-12);
        const Vec2 a = m.vertices()[e.vertices[0]], b = m.vertices()[e.vertices[1]];
        EXPECT_NEAR(e.length, distance(a, b), 1e-15);
        EXPECT_LE(e.length, m.cell_diameter(e.minus_cell) * (1 + 1e-12));
        if (e.plus_cell) {
            EXPECT_LE(e.length, m.cell_diameter(*e.plus_cell) * (1 + 1e-12));
            // normal points from the minus cell towards the plus cell
            const Vec2 mid = 0.5 * (a + b);
            EXPECT_GT(dot(e.normal, m.cell_centroid(*e.plus_cell) - mid) - dot(e.normal, m.cell_centroid(e.minus_cell) - mid), 0.0);
            EXPECT_LT(e.minus_cell, *e.plus_cell);
        }
    }
}

} // namespace

TEST(StructuredNonconvex, EightSubdivisionsGive32CellsOfTheTwoAreas)
{
    const PolyMesh m = generate_structured_nonconvex(8);
    ASSERT_EQ(m.num_cells(), 32u);
    int big = 0, small = 0;
    for (std::size_t c = 0; c < m.num_cells(); ++c) {
        const double a = oracle::polygon_monomial_integral(m.cell_polygon(c), 0, 0);
        if (std::abs(a - 3.0 / 64.0) < 1e-14) ++big;
        else if (std::abs(a - 1.0 / 64.0) < 1e-14) ++small;
        EXPECT_NEAR(m.cell_area(c), a, 1e-15);
    }
    EXPECT_EQ(big, 16);
    EXPECT_EQ(small, 16);
    EXPECT_NEAR(shoelace_total(m), 1.0, 1e-12);
    EXPECT_FALSE(m.has_hanging_nodes());
    expect_edge_invariants(m);
}

TEST(StructuredNonconvex, SmallestInstanceTilesTheSquare)
{
    const PolyMesh m = generate_structured_nonconvex(2);
    EXPECT_EQ(m.num_cells(), 2u);
    EXPECT_NEAR(m.total_area(), 1.0, 1e-14);
}

TEST(StructuredNonconvex, RefinementHalvesHAndKeepsQuasiUniformity)
{
    const PolyMesh m8 = generate_structured_nonconvex(8), m16 = generate_structured_nonconvex(16),
                   m32 = generate_structured_nonconvex(32);
    EXPECT_NEAR(m8.h() / m16.h(), 2.0, 1e-12);
    EXPECT_NEAR(m16.h() / m32.h(), 2.0, 1e-12);
    const double r8 = quality_report(m8).quasi_uniformity;
    EXPECT_GT(r8, 0.0);
    EXPECT_LE(r8, 1.0);
    EXPECT_NEAR(quality_report(m16).quasi_uniformity, r8, 1e-12);
    EXPECT_NEAR(quality_report(m32).quasi_uniformity, r8, 1e-12);
}

TEST(StructuredNonconvex, RejectsOddOrTinyCounts)
{
    EXPECT_THROW(generate_structured_nonconvex(7), InvalidParameter);
    EXPECT_THROW(generate_structured_nonconvex(0), InvalidParameter);
}

TEST(Mixed, CellCountAndHangingNodes)
{
    const PolyMesh m = generate_mixed(8);
    EXPECT_EQ(m.num_cells(), 48u); // 32 quads + 16 L-block cells
    EXPECT_TRUE(m.has_hanging_nodes());
    EXPECT_NEAR(shoelace_total(m), 1.0, 1e-12);
    expect_edge_invariants(m);
    // every edge is a segment between two listed vertices, so interface vertices are endpoints
    std::size_t interface_edges = 0;
    for (const Edge& e : m.edges()) {
        const Vec2 a = m.vertices()[e.vertices[0]], b = m.vertices()[e.vertices[1]];
        if (std::abs(a.x - 0.5) < 1e-14 && std::abs(b.x - 0.5) < 1e-14) {
            ++interface_edges;
            EXPECT_NEAR(e.length, 1.0 / 8.0, 1e-14);
        }
    }
    EXPECT_EQ(interface_edges, 8u);
}

TEST(Mixed, FourSubdivisionsTileTheSquare) { EXPECT_NEAR(shoelace_total(generate_mixed(4)), 1.0, 1e-10); }

TEST(Voronoi, SixtyFourSeedsOnTheSquare)
{
    VoronoiOptions o;
    o.n_seeds = 64;
    o.lloyd_iters = 3;
    const PolyMesh m = generate_voronoi(o);
    EXPECT_EQ(m.num_cells(), 64u);
    EXPECT_NEAR(m.total_area(), 1.0, 1e-10);
    expect_edge_invariants(m);
    for (std::size_t c = 0; c < m.num_cells(); ++c) {
        // convex: every turn is a left turn
        const auto p = m.cell_polygon(c);
        for (std::size_t i = 0; i < p.size(); ++i)
            EXPECT_GE(cross(p[(i + 1) % p.size()] - p[i], p[(i + 2) % p.size()] - p[(i + 1) % p.size()]), -1e-12);
    }
}

TEST(Voronoi, QuasiUniformityGateOverTenSeeds)
{
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        VoronoiOptions o;
        o.n_seeds = 64;
        o.lloyd_iters = 3;
        o.seed = seed;
        EXPECT_GE(quality_report(generate_voronoi(o)).quasi_uniformity, 0.2) << "seed " << seed;
    }
}

TEST(Voronoi, FourSeedsApproachFourSquares)
{
    VoronoiOptions o;
    o.n_seeds = 4;
    o.lloyd_iters = 200;
    const PolyMesh m = generate_voronoi(o);
    ASSERT_EQ(m.num_cells(), 4u);
    EXPECT_NEAR(m.h(), std::sqrt(2.0) / 2.0, 1e-3);
    for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(m.cell_area(c), 0.25, 1e-3);
}

TEST(Voronoi, DiskAreaConvergesLikeHSquared)
{
    std::vector<double> hs, gaps;
    for (std::size_t n : {64u, 256u, 1024u}) {
        VoronoiOptions o;
        o.n_seeds = n;
        o.domain = Domain::unit_disk;
        o.lloyd_iters = 20;
        const PolyMesh m = generate_voronoi(o);
        EXPECT_LT(m.total_area(), std::numbers::pi);
        hs.push_back(m.h());
        gaps.push_back(std::numbers::pi - m.total_area());
        for (const Edge& e : m.edges())
            if (e.is_boundary())
                for (auto v : e.vertices) EXPECT_NEAR(norm(m.vertices()[v]), 1.0, 1e-9);
    }
    // chord area deficit scales with the squared boundary edge length
    const double rate = std::log(gaps[0] / gaps[2]) / std::log(hs[0] / hs[2]);
    EXPECT_GT(rate, 1.6);
}

TEST(Voronoi, SameSeedSameMesh)
{
    VoronoiOptions o;
    o.n_seeds = 100;
    o.seed = 7;
    EXPECT_EQ(generate_voronoi(o).fingerprint(), generate_voronoi(o).fingerprint());
    VoronoiOptions p = o;
    p.seed = 8;
    EXPECT_NE(generate_voronoi(o).fingerprint(), generate_voronoi(p).fingerprint());
}

TEST(Topology, TwoByTwoQuadGrid)
{
    const PolyMesh m = generate_quad_grid(2, 2);
    EXPECT_EQ(m.num_edges(), 12u);
    EXPECT_EQ(m.num_interior_edges(), 4u);
    EXPECT_DOUBLE_EQ(quality_report(m).quasi_uniformity, 1.0);
}

TEST(Topology, SingleTriangle)
{
    const PolyMesh m({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}});
    EXPECT_EQ(m.num_edges(), 3u);
    EXPECT_EQ(m.num_interior_edges(), 0u);
    // outward normals
    for (const Edge& e : m.edges()) {
        const Vec2 mid = 0.5 * (m.vertices()[e.vertices[0]] + m.vertices()[e.vertices[1]]);
        EXPECT_GT(dot(e.normal, mid - m.cell_centroid(0)), 0.0);
    }
}

TEST(Topology, HangingNodeSplitsTheCoarseSide)
{
    // one coarse cell on the left, two fine cells on the right; vertex 5 hangs
    const std::vector<Vec2> v{{0, 0}, {1, 0}, {2, 0}, {2, 1}, {2, 2}, {1, 1}, {1, 2}, {0, 2}};
    const PolyMesh m(v, {{0, 1, 6, 7}, {1, 2, 3, 5}, {5, 3, 4, 6}});
    EXPECT_TRUE(m.has_hanging_nodes());
    // the coarse side from (1,0) to (1,2) is covered by two interior edges
    int coarse_side = 0;
    for (const Edge& e : m.edges())
        if (!e.is_boundary() && m.vertices()[e.vertices[0]].x == 1.0 && m.vertices()[e.vertices[1]].x == 1.0) {
            EXPECT_EQ(e.minus_cell, 0u);
            EXPECT_NEAR(e.length, 1.0, 1e-14);
            ++coarse_side;
        }
    EXPECT_EQ(coarse_side, 2);
    EXPECT_EQ(m.cell_edges(0).size(), 5u);
}

TEST(Topology, NonManifoldEdgeReportsTheOffendingVertices)
{
    const std::vector<Vec2> v{{0, 0}, {1, 0}, {0.5, 1}, {0.5, -1}, {0.6, 0.9}};
    try {
        PolyMesh m(v, {{0, 1, 2}, {0, 3, 1}, {0, 1, 4}});
        FAIL() << "expected a topology error";
    } catch (const TopologyError& e) {
        const auto [a, b] = e.offending_edge();
        EXPECT_EQ(std::min(a, b), 0u);
        EXPECT_EQ(std::max(a, b), 1u);
    }
}

TEST(Topology, NormalFlipsWhenCellLabelsSwap)
{
    const PolyMesh a = generate_quad_grid(2, 1);
    const PolyMesh b(a.vertices(), {a.cells()[1], a.cells()[0]});
    ASSERT_EQ(a.num_interior_edges(), 1u);
    auto interior = [](const PolyMesh& m) {
        for (const Edge& e : m.edges())
            if (!e.is_boundary()) return e.normal;
        return Vec2{};
    };
    EXPECT_NEAR(interior(a).x, -interior(b).x, 1e-15);
    EXPECT_NEAR(interior(a).y, -interior(b).y, 1e-15);
}

TEST(Validation, RejectsBadCells)
{
    EXPECT_THROW(PolyMesh({{0, 0}, {1, 0}}, {{0, 1}}), GeometryError);
    EXPECT_THROW(PolyMesh({{0, 0}, {1, 0}, {0, 1}}, {{0, 2, 1}}), GeometryError); // clockwise
    EXPECT_THROW(PolyMesh({{0, 0}, {1, 1}, {1, 0}, {0, 1}}, {{0, 1, 2, 3}}), GeometryError); // bow tie
    EXPECT_THROW(PolyMesh({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 5}}), GeometryError);
}

TEST(MeshJson, RoundTripRebuildsEdges)
{
    const PolyMesh m = generate_mixed(4);
    const PolyMesh r = mesh_from_json(nlohmann::json::parse(mesh_to_json(m).dump()));
    EXPECT_EQ(r.fingerprint(), m.fingerprint());
    EXPECT_EQ(r.num_edges(), m.num_edges());
    EXPECT_THROW(mesh_from_json(nlohmann::json::parse(R"({"vertices": [[0,0]]})")), ParseError);
}

TEST(Families, AreaTelescopesForEveryFamily)
{
    for (MeshFamily f : {MeshFamily::quad, MeshFamily::nonconvex, MeshFamily::mixed, MeshFamily::voronoi}) {
        const PolyMesh m = make_family_mesh(f, 0.125);
        EXPECT_NEAR(m.total_area(), 1.0, 1e-10) << to_string(f);
        EXPECT_NEAR(shoelace_total(m), 1.0, 1e-10) << to_string(f);
    }
}
