#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "polydg/errors.hpp"
#include "polydg/geometry.hpp"

namespace polydg {

/// Points and positive weights; integrates polynomials of total degree <= exact_degree.
struct QuadratureRule {
    std::vector<Vec2> points;
    std::vector<double> weights;
    int exact_degree = 0;

    std::size_t size() const { return points.size(); }
    double weight_sum() const
    {
        double s = 0.0;
        for (double w : weights) s += w;
        return s;
    }
};

using Triangle = std::array<Vec2, 3>;

/// Highest polynomial degree the collapsed-Gauss rules are generated for.
inline constexpr int max_quadrature_degree = 40;

/// n-point Gauss-Legendre nodes and weights on [0, 1].
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n)
{
    std::vector<double> x(static_cast<std::size_t>(n)), w(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 1.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = z;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        x[static_cast<std::size_t>(i)] = 0.5 * (1.0 - z);
        w[static_cast<std::size_t>(i)] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
    return {x, w};
}

namespace detail {

struct ReferenceTriangleRule {
    std::vector<double> xi, eta, w; // reference triangle (0,0),(1,0),(0,1), weights sum to 1/2
};

inline const ReferenceTriangleRule& reference_triangle_rule(int degree)
{
    static const auto table = [] {
        std::vector<ReferenceTriangleRule> t(max_quadrature_degree + 1);
        for (int d = 0; d <= max_quadrature_degree; ++d) {
            // collapsed (Duffy) product rule: the Jacobian adds one degree in u
            const int n = (d + 2 + 1) / 2;
            const auto [x, w] = gauss_legendre(n);
            auto& r = t[static_cast<std::size_t>(d)];
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    const double u = x[static_cast<std::size_t>(i)], v = x[static_cast<std::size_t>(j)];
                    r.xi.push_back(u);
                    r.eta.push_back(v * (1.0 - u));
                    r.w.push_back(w[static_cast<std::size_t>(i)] * w[static_cast<std::size_t>(j)] * (1.0 - u));
                }
        }
        return t;
    }();
    return table[static_cast<std::size_t>(degree)];
}

inline int checked_degree(int degree)
{
    if (degree < 0) throw InvalidParameter("quadrature degree must be non-negative");
    if (degree > max_quadrature_degree)
        throw InvalidParameter("quadrature degree " + std::to_string(degree) + " exceeds the supported maximum " +
                               std::to_string(max_quadrature_degree));
    return degree;
}

inline bool point_in_triangle(Vec2 p, Vec2 a, Vec2 b, Vec2 c)
{
    return orient(a, b, p) >= 0.0 && orient(b, c, p) >= 0.0 && orient(c, a, p) >= 0.0;
}

} // namespace detail

/// Ear-clipping triangulation of a simple CCW polygon. Collinear vertices are
/// dropped first, so a hexagonal L-cell gives four triangles.
inline std::vector<Triangle> triangulate_polygon(std::span<const Vec2> polygon)
{
    if (polygon.size() < 3) throw GeometryError("polygon needs at least three vertices");
    if (!is_simple(polygon)) throw GeometryError("cannot triangulate a self-intersecting polygon");
    std::vector<Vec2> poly = remove_collinear(polygon);
    if (signed_area(poly) <= 0.0) throw GeometryError("polygon must be counter-clockwise");

    std::vector<Triangle> tris;
    tris.reserve(poly.size() - 2);
    while (poly.size() > 3) {
        const std::size_t n = poly.size();
        // prefer the ear with the best minimum angle proxy, for well-shaped triangles
        std::size_t best = n;
        double best_quality = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            const Vec2 a = poly[(i + n - 1) % n], b = poly[i], c = poly[(i + 1) % n];
            const double area2 = orient(a, b, c);
            if (area2 <= 0.0) continue;
            bool empty = true;
            for (std::size_t j = 0; j < n && empty; ++j) {
                if (j == i || j == (i + n - 1) % n || j == (i + 1) % n) continue;
                if (detail::point_in_triangle(poly[j], a, b, c)) empty = false;
            }
            if (!empty) continue;
            const double perim2 = dot(b - a, b - a) + dot(c - b, c - b) + dot(a - c, a - c);
            const double quality = area2 / perim2;
            if (quality > best_quality) {
                best_quality = quality;
                best = i;
            }
        }
        if (best == n) throw GeometryError("ear clipping failed; polygon is degenerate");
        tris.push_back({poly[(best + n - 1) % n], poly[best], poly[(best + 1) % n]});
        poly.erase(poly.begin() + static_cast<std::ptrdiff_t>(best));
    }
    tris.push_back({poly[0], poly[1], poly[2]});
    return tris;
}

/// Collapsed-Gauss rule on a triangle, exact to total degree `degree`.
inline QuadratureRule triangle_rule(const Triangle& t, int degree)
{
    const auto& ref = detail::reference_triangle_rule(detail::checked_degree(degree));
    const Vec2 e1 = t[1] - t[0], e2 = t[2] - t[0];
    const double jac = std::abs(cross(e1, e2));
    QuadratureRule r;
    r.exact_degree = degree;
    r.points.reserve(ref.w.size());
    r.weights.reserve(ref.w.size());
    for (std::size_t q = 0; q < ref.w.size(); ++q) {
        r.points.push_back(t[0] + ref.xi[q] * e1 + ref.eta[q] * e2);
        r.weights.push_back(ref.w[q] * jac);
    }
    return r;
}

/// Composite rule over the ear-clipping triangulation of a cell.
inline QuadratureRule volume_rule(std::span<const Vec2> cell, int degree)
{
    QuadratureRule r;
    r.exact_degree = detail::checked_degree(degree);
    for (const Triangle& t : triangulate_polygon(cell)) {
        const QuadratureRule tr = triangle_rule(t, degree);
        r.points.insert(r.points.end(), tr.points.begin(), tr.points.end());
        r.weights.insert(r.weights.end(), tr.weights.begin(), tr.weights.end());
    }
    return r;
}

/// Gauss rule on the segment (a, b), exact to degree `degree`; weights sum to |b - a|.
inline QuadratureRule edge_rule(Vec2 a, Vec2 b, int degree)
{
    const int n = detail::checked_degree(degree) / 2 + 1;
    const auto [x, w] = gauss_legendre(n);
    const double len = distance(a, b);
    QuadratureRule r;
    r.exact_degree = degree;
    for (std::size_t q = 0; q < x.size(); ++q) {
        r.points.push_back(a + x[q] * (b - a));
        r.weights.push_back(w[q] * len);
    }
    return r;
}

} // namespace polydg
