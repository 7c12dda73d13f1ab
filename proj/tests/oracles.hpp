#pragma once

// Reference computations that share no code with the library's assembly paths.
// Integrals come from Green's theorem or tensor Gauss rules built by Golub-Welsch,
// and the discrete forms are evaluated entry by entry from their definitions.

#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "polydg/polydg.hpp"

namespace oracle {

using polydg::Complex;
using polydg::Vec2;

/// Exact integral of x^a y^b over a simple CCW polygon, by Green's theorem:
///   int_P x^a y^b = 1/(a+1) sum_edges int_0^1 x(t)^(a+1) y(t)^b y'(t) dt,
/// with the edge polynomial integrated term by term.
inline double polygon_monomial_integral(const std::vector<Vec2>& poly, int a, int b)
{
    auto binom = [](int n, int k) {
        double r = 1.0;
        for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
        return r;
    };
    double total = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Vec2 p = poly[i], q = poly[(i + 1) % poly.size()];
        const double dx = q.x - p.x, dy = q.y - p.y;
        // (p.x + t dx)^(a+1) (p.y + t dy)^b dy, integrate t in [0, 1]
        double s = 0.0;
        for (int i1 = 0; i1 <= a + 1; ++i1)
            for (int j1 = 0; j1 <= b; ++j1) {
                const double c = binom(a + 1, i1) * std::pow(p.x, a + 1 - i1) * std::pow(dx, i1) * binom(b, j1) *
                                 std::pow(p.y, b - j1) * std::pow(dy, j1);
                s += c / (i1 + j1 + 1);
            }
        total += s * dy;
    }
    return total / (a + 1);
}

/// Gauss-Legendre on [0, 1] from the eigen-decomposition of the Jacobi matrix.
inline void gauss01(int n, std::vector<double>& x, std::vector<double>& w)
{
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i < n; ++i) J(i, i - 1) = J(i - 1, i) = i / std::sqrt(4.0 * i * i - 1.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    x.resize(n);
    w.resize(n);
    for (int i = 0; i < n; ++i) {
        x[i] = 0.5 * (es.eigenvalues()[i] + 1.0);
        w[i] = es.eigenvectors()(0, i) * es.eigenvectors()(0, i); // 2 v0^2 on [-1,1], halved
    }
}

/// Tensor Gauss points on an axis-aligned rectangle given by its vertex loop.
struct PointRule {
    std::vector<Vec2> pts;
    std::vector<double> w;
};

inline PointRule rectangle_rule(const std::vector<Vec2>& cell, int n)
{
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    for (const Vec2& v : cell) {
        x0 = std::min(x0, v.x);
        x1 = std::max(x1, v.x);
        y0 = std::min(y0, v.y);
        y1 = std::max(y1, v.y);
    }
    std::vector<double> g, gw;
    gauss01(n, g, gw);
    PointRule r;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            r.pts.push_back({x0 + g[i] * (x1 - x0), y0 + g[j] * (y1 - y0)});
            r.w.push_back(gw[i] * gw[j] * (x1 - x0) * (y1 - y0));
        }
    return r;
}

inline PointRule segment_rule(Vec2 a, Vec2 b, int n)
{
    std::vector<double> g, gw;
    gauss01(n, g, gw);
    PointRule r;
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    for (int i = 0; i < n; ++i) {
        r.pts.push_back({a.x + g[i] * (b.x - a.x), a.y + g[i] * (b.y - a.y)});
        r.w.push_back(gw[i] * len);
    }
    return r;
}

/// Dense operators of a space on a mesh of axis-aligned rectangles, built entry by entry
/// from the definitions of (u, v), a_h(u, v), (|w|^2 u, v) and (f, v).
class DenseForms {
public:
    DenseForms(const polydg::BrokenSpace& space, int points = 8) : space_(space), n_(points) {}

    Eigen::MatrixXcd mass() const
    {
        return volume([](const polydg::BasisValues& b, std::size_t q, Eigen::Index i, Eigen::Index j) {
            return Complex(b.value(q, i) * b.value(q, j));
        });
    }

    Eigen::MatrixXcd weighted_mass(const polydg::ComplexVector& w) const
    {
        const auto N = static_cast<Eigen::Index>(space_.num_dofs());
        Eigen::MatrixXcd W = Eigen::MatrixXcd::Zero(N, N);
        for (std::size_t c = 0; c < space_.mesh().num_cells(); ++c) {
            const PointRule r = rectangle_rule(space_.mesh().cell_polygon(c), n_);
            const polydg::BasisValues b = space_.eval_basis(c, r.pts);
            const auto o = static_cast<Eigen::Index>(space_.offset(c));
            for (std::size_t q = 0; q < r.pts.size(); ++q) {
                Complex wq = 0.0;
                for (Eigen::Index k = 0; k < b.value.cols(); ++k) wq += b.value(static_cast<Eigen::Index>(q), k) * w[o + k];
                for (Eigen::Index i = 0; i < b.value.cols(); ++i)
                    for (Eigen::Index j = 0; j < b.value.cols(); ++j)
                        W(o + i, o + j) += r.w[q] * std::norm(wq) * b.value(static_cast<Eigen::Index>(q), i) *
                                           b.value(static_cast<Eigen::Index>(q), j);
            }
        }
        return W;
    }

    polydg::ComplexVector load(const std::function<Complex(Vec2)>& f) const
    {
        polydg::ComplexVector F = polydg::ComplexVector::Zero(static_cast<Eigen::Index>(space_.num_dofs()));
        for (std::size_t c = 0; c < space_.mesh().num_cells(); ++c) {
            const PointRule r = rectangle_rule(space_.mesh().cell_polygon(c), n_);
            const polydg::BasisValues b = space_.eval_basis(c, r.pts);
            const auto o = static_cast<Eigen::Index>(space_.offset(c));
            for (std::size_t q = 0; q < r.pts.size(); ++q)
                for (Eigen::Index i = 0; i < b.value.cols(); ++i)
                    F[o + i] += r.w[q] * f(r.pts[q]) * b.value(static_cast<Eigen::Index>(q), i);
        }
        return F;
    }

    /// a_h(phi_j, phi_i) with traces, averages and jumps taken on each mesh edge.
    Eigen::MatrixXcd sipg(double penalty) const
    {
        Eigen::MatrixXcd A = volume([](const polydg::BasisValues& b, std::size_t q, Eigen::Index i, Eigen::Index j) {
            return Complex(b.dx(q, i) * b.dx(q, j) + b.dy(q, i) * b.dy(q, j));
        });
        const polydg::PolyMesh& mesh = space_.mesh();
        const auto nd = static_cast<Eigen::Index>(space_.dofs_per_cell());
        for (const polydg::Edge& e : mesh.edges()) {
            const PointRule r = segment_rule(mesh.vertices()[e.vertices[0]], mesh.vertices()[e.vertices[1]], n_);
            // sides: (cell, jump sign, average weight)
            struct Side {
                std::size_t cell;
                double jump;
                double avg;
            };
            std::vector<Side> sides{{e.minus_cell, 1.0, e.plus_cell ? 0.5 : 1.0}};
            if (e.plus_cell) sides.push_back({*e.plus_cell, -1.0, 0.5});
            for (std::size_t q = 0; q < r.pts.size(); ++q) {
                const std::vector<Vec2> pt{r.pts[q]};
                for (const Side& si : sides)
                    for (const Side& sj : sides) {
                        const polydg::BasisValues bi = space_.eval_basis(si.cell, pt);
                        const polydg::BasisValues bj = space_.eval_basis(sj.cell, pt);
                        const auto oi = static_cast<Eigen::Index>(space_.offset(si.cell));
                        const auto oj = static_cast<Eigen::Index>(space_.offset(sj.cell));
                        for (Eigen::Index i = 0; i < nd; ++i)
                            for (Eigen::Index j = 0; j < nd; ++j) {
                                const double jump_i = si.jump * bi.value(0, i), jump_j = sj.jump * bj.value(0, j);
                                const double avg_dn_i = si.avg * (bi.dx(0, i) * e.normal.x + bi.dy(0, i) * e.normal.y);
                                const double avg_dn_j = sj.avg * (bj.dx(0, j) * e.normal.x + bj.dy(0, j) * e.normal.y);
                                A(oi + i, oj + j) += r.w[q] * (-avg_dn_j * jump_i - jump_j * avg_dn_i +
                                                               penalty / e.length * jump_j * jump_i);
                            }
                    }
            }
        }
        return A;
    }

private:
    template <class Entry>
    Eigen::MatrixXcd volume(Entry entry) const
    {
        const auto N = static_cast<Eigen::Index>(space_.num_dofs());
        Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(N, N);
        for (std::size_t c = 0; c < space_.mesh().num_cells(); ++c) {
            const PointRule r = rectangle_rule(space_.mesh().cell_polygon(c), n_);
            const polydg::BasisValues b = space_.eval_basis(c, r.pts);
            const auto o = static_cast<Eigen::Index>(space_.offset(c));
            for (std::size_t q = 0; q < r.pts.size(); ++q)
                for (Eigen::Index i = 0; i < b.value.cols(); ++i)
                    for (Eigen::Index j = 0; j < b.value.cols(); ++j) M(o + i, o + j) += r.w[q] * entry(b, q, i, j);
        }
        return M;
    }

    const polydg::BrokenSpace& space_;
    int n_;
};

/// f reconstructed from u by central differences: u_t and the 5-point Laplacian.
inline Complex fd_source(const polydg::ManufacturedCase& mc, Vec2 p, double t, double h = 1e-4)
{
    const polydg::ModelParams& m = mc.params();
    const Complex u = mc.u(p, t);
    const Complex ut = (mc.u(p, t + h) - mc.u(p, t - h)) / (2.0 * h);
    const Complex lap = (mc.u({p.x + h, p.y}, t) + mc.u({p.x - h, p.y}, t) + mc.u({p.x, p.y + h}, t) +
                         mc.u({p.x, p.y - h}, t) - 4.0 * u) /
                        (h * h);
    return ut - Complex(m.nu, m.alpha) * lap + Complex(m.kappa, m.beta) * std::norm(u) * u - m.gamma * u;
}

/// Dense BDF2-IMEX step (theta = 0) coded from its textbook form:
///   (3u^n - 4u^{n-1} + u^{n-2})/(2 tau) + L(2u^{n-1} - u^{n-2}) u^n = F,
/// where L(w) = (nu + i alpha)A + (kappa + i beta)W(w) - gamma M.
inline polydg::ComplexVector bdf2_step(const Eigen::MatrixXcd& M, const Eigen::MatrixXcd& A, const Eigen::MatrixXcd& W,
                                       const polydg::ModelParams& p, double tau, const polydg::ComplexVector& u1,
                                       const polydg::ComplexVector& u2, const polydg::ComplexVector& F)
{
    const Eigen::MatrixXcd L = Complex(p.nu, p.alpha) * A + Complex(p.kappa, p.beta) * W - p.gamma * M;
    const Eigen::MatrixXcd lhs = (1.5 / tau) * M + L;
    const polydg::ComplexVector rhs = M * ((2.0 / tau) * u1 - (0.5 / tau) * u2) + F;
    return lhs.fullPivLu().solve(rhs);
}

} // namespace oracle
