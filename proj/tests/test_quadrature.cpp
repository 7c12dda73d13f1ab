#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "polydg/polydg.hpp"

using namespace polydg;

namespace {

const std::vector<Vec2> l_hexagon{{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}};

double integrate(const QuadratureRule& r, const std::function<double(Vec2)>& f)
{
    double s = 0.0;
    for (std::size_t q = 0; q < r.size(); ++q) s += r.weights[q] * f(r.points[q]);
    return s;
}

double triangle_area(const Triangle& t) { return 0.5 * orient(t[0], t[1], t[2]); }

} // namespace

TEST(Triangulation, ConvexQuadGivesTwoTriangles)
{
    const std::vector<Vec2> q{{0, 0}, {1, 0}, {1.2, 1}, {0, 0.8}};
    const auto tris = triangulate_polygon(q);
    EXPECT_EQ(tris.size(), 2u);
}

TEST(Triangulation, LHexagonGivesFourTrianglesWithTheShoelaceArea)
{
    const auto tris = triangulate_polygon(l_hexagon);
    EXPECT_EQ(tris.size(), 4u);
    double a = 0.0;
    for (const auto& t : tris) {
        EXPECT_GT(triangle_area(t), 0.0);
        a += triangle_area(t);
    }
    EXPECT_NEAR(a, oracle::polygon_monomial_integral(l_hexagon, 0, 0), 1e-12);
}

TEST(Triangulation, TriangleIsItself)
{
    const std::vector<Vec2> t{{0, 0}, {1, 0}, {0, 1}};
    const auto tris = triangulate_polygon(t);
    ASSERT_EQ(tris.size(), 1u);
    EXPECT_NEAR(triangle_area(tris[0]), 0.5, 1e-15);
}

TEST(Triangulation, CollinearVerticesAreHandled)
{
    // a square with its side midpoints kept, as in the loops of the non-convex family
    const auto loop = std::vector<Vec2>{{0, 0}, {1, 0}, {2, 0}, {2, 1}, {2, 2}, {1, 2}, {0, 2}, {0, 1}};
    double a = 0.0;
    for (const auto& t : triangulate_polygon(loop)) a += triangle_area(t);
    EXPECT_NEAR(a, 4.0, 1e-12);
}

TEST(Triangulation, SelfIntersectingInputThrows)
{
    const std::vector<Vec2> bow{{0, 0}, {1, 1}, {1, 0}, {0, 1}};
    EXPECT_THROW(triangulate_polygon(bow), GeometryError);
}

TEST(VolumeRule, UnitSquareXSquaredYSquared)
{
    const std::vector<Vec2> sq{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    const QuadratureRule r = volume_rule(sq, 4);
    EXPECT_NEAR(integrate(r, [](Vec2 p) { return p.x * p.x * p.y * p.y; }), 1.0 / 9.0, 1e-13);
}

TEST(VolumeRule, WeightsSumToTheCellArea)
{
    for (const PolyMesh& m : {generate_structured_nonconvex(4), generate_mixed(4), make_family_mesh(MeshFamily::voronoi, 0.25)})
        for (std::size_t c = 0; c < m.num_cells(); ++c) {
            const auto poly = m.cell_polygon(c);
            const QuadratureRule r = volume_rule(poly, 6);
            EXPECT_NEAR(r.weight_sum(), m.cell_area(c), 1e-12 * m.cell_area(c));
            for (double w : r.weights) EXPECT_GT(w, 0.0);
        }
}

TEST(VolumeRule, FirstMomentsOfTheLHexagon)
{
    const QuadratureRule r = volume_rule(l_hexagon, 1);
    const double area = oracle::polygon_monomial_integral(l_hexagon, 0, 0);
    const Vec2 c = centroid(l_hexagon);
    EXPECT_NEAR(integrate(r, [](Vec2 p) { return p.x + p.y; }), area * (c.x + c.y), 1e-12);
    EXPECT_NEAR(integrate(r, [](Vec2 p) { return p.x; }), oracle::polygon_monomial_integral(l_hexagon, 1, 0), 1e-12);
}

TEST(VolumeRule, RandomPolynomialsAreIntegratedExactly)
{
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0.0, 1.0);
    const std::vector<std::vector<Vec2>> polys{
        l_hexagon,
        {{0.1, 0.2}, {0.9, 0.1}, {1.1, 0.7}, {0.5, 1.3}, {-0.2, 0.8}},
        {{0, 0}, {3, 0}, {3, 1}, {2, 1}, {2, 0.4}, {1, 0.4}, {1, 1}, {0, 1}},
    };
    for (int d : {0, 1, 2, 4, 6, 8, 12}) {
        for (const auto& poly : polys) {
            const QuadratureRule r = volume_rule(poly, d);
            EXPECT_GE(r.exact_degree, d);
            double exact = 0.0, approx = 0.0, scale = 0.0;
            for (int a = 0; a <= d; ++a)
                for (int b = 0; a + b <= d; ++b) {
                    const double c = g(rng);
                    exact += c * oracle::polygon_monomial_integral(poly, a, b);
                    approx += c * integrate(r, [a, b](Vec2 p) { return std::pow(p.x, a) * std::pow(p.y, b); });
                    scale += std::abs(c * oracle::polygon_monomial_integral(poly, a, b));
                }
            EXPECT_NEAR(approx, exact, 1e-11 * std::max(1.0, scale)) << "degree " << d;
        }
    }
}

TEST(VolumeRule, TriangulationIndependence)
{
    // the same square split along either diagonal
    const Triangle a1{{{0, 0}, {1, 0}, {1, 1}}}, a2{{{0, 0}, {1, 1}, {0, 1}}};
    const Triangle b1{{{0, 0}, {1, 0}, {0, 1}}}, b2{{{1, 0}, {1, 1}, {0, 1}}};
    auto f = [](Vec2 p) { return std::exp(p.x) * std::cos(2 * p.y) + std::pow(p.x * p.y, 3); };
    const double ia = integrate(triangle_rule(a1, 16), f) + integrate(triangle_rule(a2, 16), f);
    const double ib = integrate(triangle_rule(b1, 16), f) + integrate(triangle_rule(b2, 16), f);
    EXPECT_NEAR(ia, ib, 1e-12);
}

TEST(VolumeRule, UnsupportedDegreeThrows) { EXPECT_THROW(volume_rule(l_hexagon, max_quadrature_degree + 1), InvalidParameter); }

TEST(EdgeRule, CubicOnTheUnitSegment)
{
    const QuadratureRule r = edge_rule({0, 0}, {1, 0}, 3);
    EXPECT_NEAR(integrate(r, [](Vec2 p) { return p.x * p.x * p.x; }), 0.25, 1e-14);
}

TEST(EdgeRule, WeightsSumToTheLength)
{
    const QuadratureRule r = edge_rule({0.3, -0.2}, {1.1, 0.5}, 7);
    EXPECT_NEAR(r.weight_sum(), std::hypot(0.8, 0.7), 1e-15);
}

TEST(EdgeRule, AntisymmetricIntegrandVanishes)
{
    const Vec2 a{0.2, 0.1}, b{0.8, 0.9}, mid = 0.5 * (a + b);
    const QuadratureRule r = edge_rule(a, b, 5);
    EXPECT_NEAR(integrate(r, [&](Vec2 p) { return std::pow(p.x - mid.x, 3) + (p.y - mid.y); }), 0.0, 1e-14);
}

TEST(EdgeRule, MatchesGolubWelschGauss)
{
    std::vector<double> x, w;
    oracle::gauss01(6, x, w);
    const auto [gx, gw] = gauss_legendre(6);
    std::vector<double> sx = gx;
    std::sort(sx.begin(), sx.end());
    for (int i = 0; i < 6; ++i) EXPECT_NEAR(sx[static_cast<std::size_t>(i)], x[static_cast<std::size_t>(i)], 1e-14);
}
