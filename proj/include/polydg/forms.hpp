#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "polydg/errors.hpp"
#include "polydg/parallel.hpp"
#include "polydg/solver.hpp"
#include "polydg/space.hpp"
#include "polydg/sparse.hpp"

namespace polydg {

/// Coefficients of u_t - (nu + i alpha) Lap u + (kappa + i beta)|u|^2 u - gamma u = f.
struct ModelParams {
    double nu = 1.0;
    double alpha = 1.0;
    double kappa = 1.0;
    double beta = 1.0;
    double gamma = 1.0;

    Complex diffusion() const { return {nu, alpha}; }
    Complex cubic() const { return {kappa, beta}; }

    void validate() const
    {
        if (!(nu > 0.0)) throw InvalidParameter("nu must be positive");
        if (!(kappa > 0.0)) throw InvalidParameter("kappa must be positive");
    }
};

/// Space-time source f(x, t).
using SpaceTimeField = std::function<Complex(Vec2, double)>;

/// Interior penalty used when none is given: 10 (k + 1)^2.
inline double default_penalty(int k) { return 10.0 * (k + 1) * (k + 1); }

/// Below this penalty coercivity is not expected on typical polygonal meshes.
inline double minimum_penalty(int k) { return static_cast<double>((k + 1) * (k + 1)); }

namespace detail {

// Stores every entry of the block, zeros included, so all operators on a space share the
// block sparsity pattern and can be combined in place.
inline void scatter_block(std::vector<Triplet>& out, std::size_t row0, std::size_t col0, const Eigen::MatrixXd& block)
{
    for (Eigen::Index i = 0; i < block.rows(); ++i)
        for (Eigen::Index j = 0; j < block.cols(); ++j)
            out.push_back({row0 + static_cast<std::size_t>(i), col0 + static_cast<std::size_t>(j), block(i, j)});
}

inline Eigen::Map<const Eigen::VectorXd> weights_of(const QuadratureRule& r)
{
    return {r.weights.data(), static_cast<Eigen::Index>(r.weights.size())};
}

} // namespace detail

/// M_ij = (phi_j, phi_i); block diagonal.
inline SparseComplexMatrix assemble_mass(const BrokenSpace& space)
{
    const std::size_t nc = space.mesh().num_cells();
    std::vector<Eigen::MatrixXd> blocks(nc);
    parallel_for(nc, [&](std::size_t c) {
        const CellQuadrature& cq = space.cell_quadrature(c);
        blocks[c] = cq.basis.value.transpose() * detail::weights_of(cq.rule).asDiagonal() * cq.basis.value;
    });
    std::vector<Triplet> t;
    for (std::size_t c = 0; c < nc; ++c) detail::scatter_block(t, space.offset(c), space.offset(c), blocks[c]);
    return SparseComplexMatrix::from_triplets(space.num_dofs(), t);
}

/// Symmetric interior penalty form a_h(phi_j, phi_i). Edge sums run over interior and
/// boundary edges; on the boundary {v} = [v] = v.
inline SparseComplexMatrix assemble_sipg(const BrokenSpace& space, double penalty)
{
    if (penalty < minimum_penalty(space.degree()))
        warn("penalty " + std::to_string(penalty) + " is below " + std::to_string(minimum_penalty(space.degree())) +
             "; coercivity of the interior penalty form is not guaranteed");
    const PolyMesh& mesh = space.mesh();
    const std::size_t nc = mesh.num_cells(), ne = mesh.num_edges();

    std::vector<Eigen::MatrixXd> vol(nc);
    parallel_for(nc, [&](std::size_t c) {
        const CellQuadrature& cq = space.cell_quadrature(c);
        const auto W = detail::weights_of(cq.rule).asDiagonal();
        vol[c] = cq.basis.dx.transpose() * W * cq.basis.dx + cq.basis.dy.transpose() * W * cq.basis.dy;
    });

    // per edge: blocks (minus,minus), (minus,plus), (plus,minus), (plus,plus)
    std::vector<std::array<Eigen::MatrixXd, 4>> edge_blocks(ne);
    parallel_for(ne, [&](std::size_t e) {
        const Edge& edge = mesh.edge(e);
        const EdgeQuadrature& eq = space.edge_quadrature(e);
        const auto W = detail::weights_of(eq.rule).asDiagonal();
        const double avg = edge.is_boundary() ? 1.0 : 0.5;
        const double pen = penalty / edge.length;
        const BasisValues* side[2] = {&eq.minus, &eq.plus};
        const double sign[2] = {1.0, -1.0};
        const int sides = edge.is_boundary() ? 1 : 2;
        Eigen::MatrixXd dn[2];
        for (int s = 0; s < sides; ++s) dn[s] = edge.normal.x * side[s]->dx + edge.normal.y * side[s]->dy;
        for (int a = 0; a < sides; ++a)
            for (int b = 0; b < sides; ++b) {
                const Eigen::MatrixXd& pa = side[a]->value;
                const Eigen::MatrixXd& pb = side[b]->value;
                edge_blocks[e][static_cast<std::size_t>(2 * a + b)] =
                    -avg * sign[a] * (pa.transpose() * W * dn[b]) - avg * sign[b] * (dn[a].transpose() * W * pb) +
                    pen * sign[a] * sign[b] * (pa.transpose() * W * pb);
            }
    });

    std::vector<Triplet> t;
    for (std::size_t c = 0; c < nc; ++c) detail::scatter_block(t, space.offset(c), space.offset(c), vol[c]);
    for (std::size_t e = 0; e < ne; ++e) {
        const Edge& edge = mesh.edge(e);
        const std::size_t cell[2] = {edge.minus_cell, edge.plus_cell.value_or(0)};
        const int sides = edge.is_boundary() ? 1 : 2;
        for (int a = 0; a < sides; ++a)
            for (int b = 0; b < sides; ++b)
                detail::scatter_block(t, space.offset(cell[a]), space.offset(cell[b]),
                                      edge_blocks[e][static_cast<std::size_t>(2 * a + b)]);
    }
    return SparseComplexMatrix::from_triplets(space.num_dofs(), t);
}

/// W_ij = int |w|^2 phi_j conj(phi_i), with |w|^2 evaluated at quadrature points.
inline SparseComplexMatrix assemble_weighted_mass(const BrokenSpace& space, const ComplexVector& w)
{
    if (static_cast<std::size_t>(w.size()) != space.num_dofs())
        throw InvalidParameter("weight field does not belong to this space");
    const std::size_t nc = space.mesh().num_cells();
    std::vector<Eigen::MatrixXd> blocks(nc);
    parallel_for(nc, [&](std::size_t c) {
        const CellQuadrature& cq = space.cell_quadrature(c);
        const ComplexVector wc = cell_coefficients(space, w, c);
        const Eigen::VectorXd re = cq.basis.value * wc.real();
        const Eigen::VectorXd im = cq.basis.value * wc.imag();
        const Eigen::VectorXd weight = detail::weights_of(cq.rule).cwiseProduct(re.cwiseAbs2() + im.cwiseAbs2());
        blocks[c] = cq.basis.value.transpose() * weight.asDiagonal() * cq.basis.value;
    });
    std::vector<Triplet> t;
    for (std::size_t c = 0; c < nc; ++c) detail::scatter_block(t, space.offset(c), space.offset(c), blocks[c]);
    return SparseComplexMatrix::from_triplets(space.num_dofs(), t);
}

/// F_i = int f(x, t) conj(phi_i).
inline ComplexVector assemble_load(const BrokenSpace& space, const SpaceTimeField& f, double t)
{
    ComplexVector F = ComplexVector::Zero(static_cast<Eigen::Index>(space.num_dofs()));
    if (!f) return F;
    parallel_for(space.mesh().num_cells(), [&](std::size_t c) {
        const CellQuadrature& cq = space.cell_quadrature(c);
        ComplexVector fw(static_cast<Eigen::Index>(cq.rule.size()));
        for (std::size_t q = 0; q < cq.rule.size(); ++q)
            fw[static_cast<Eigen::Index>(q)] = cq.rule.weights[q] * f(cq.rule.points[q], t);
        F.segment(static_cast<Eigen::Index>(space.offset(c)), static_cast<Eigen::Index>(space.dofs_per_cell())) =
            cq.basis.value.transpose().cast<Complex>() * fw;
    });
    return F;
}

/// Boundary terms of a_h carrying Dirichlet data g:
/// G_i = sum over boundary E of ( -int g grad(phi_i).n + (penalty/h_E) int g phi_i ).
inline ComplexVector assemble_dirichlet_load(const BrokenSpace& space, const SpaceTimeField& g, double t, double penalty)
{
    ComplexVector G = ComplexVector::Zero(static_cast<Eigen::Index>(space.num_dofs()));
    if (!g) return G;
    const PolyMesh& mesh = space.mesh();
    for (std::size_t e = 0; e < mesh.num_edges(); ++e) {
        const Edge& edge = mesh.edge(e);
        if (!edge.is_boundary()) continue;
        const EdgeQuadrature& eq = space.edge_quadrature(e);
        ComplexVector gw(static_cast<Eigen::Index>(eq.rule.size()));
        for (std::size_t q = 0; q < eq.rule.size(); ++q)
            gw[static_cast<Eigen::Index>(q)] = eq.rule.weights[q] * g(eq.rule.points[q], t);
        const Eigen::MatrixXd dn = edge.normal.x * eq.minus.dx + edge.normal.y * eq.minus.dy;
        const Eigen::MatrixXd test = (penalty / edge.length) * eq.minus.value - dn;
        G.segment(static_cast<Eigen::Index>(space.offset(edge.minus_cell)), static_cast<Eigen::Index>(space.dofs_per_cell())) +=
            test.transpose().cast<Complex>() * gw;
    }
    return G;
}

/// b_i = a_h(u, phi_i) for a smooth u that is continuous across interior edges, so the
/// interior [u] terms vanish. Boundary trace terms are kept (they vanish when u = 0 on
/// the boundary).
inline ComplexVector ritz_rhs(const BrokenSpace& space, double penalty, const ScalarField& u, const GradientField& grad_u)
{
    const PolyMesh& mesh = space.mesh();
    const auto nd = static_cast<Eigen::Index>(space.dofs_per_cell());
    ComplexVector b = ComplexVector::Zero(static_cast<Eigen::Index>(space.num_dofs()));
    parallel_for(mesh.num_cells(), [&](std::size_t c) {
        const CellQuadrature& cq = space.cell_quadrature(c);
        ComplexVector gx(static_cast<Eigen::Index>(cq.rule.size())), gy(static_cast<Eigen::Index>(cq.rule.size()));
        for (std::size_t q = 0; q < cq.rule.size(); ++q) {
            const auto g = grad_u(cq.rule.points[q]);
            gx[static_cast<Eigen::Index>(q)] = cq.rule.weights[q] * g[0];
            gy[static_cast<Eigen::Index>(q)] = cq.rule.weights[q] * g[1];
        }
        b.segment(static_cast<Eigen::Index>(space.offset(c)), nd) =
            cq.basis.dx.transpose().cast<Complex>() * gx + cq.basis.dy.transpose().cast<Complex>() * gy;
    });
    for (std::size_t e = 0; e < mesh.num_edges(); ++e) {
        const Edge& edge = mesh.edge(e);
        const EdgeQuadrature& eq = space.edge_quadrature(e);
        const auto nq = static_cast<Eigen::Index>(eq.rule.size());
        ComplexVector flux(nq), trace(nq);
        for (std::size_t q = 0; q < eq.rule.size(); ++q) {
            const auto g = grad_u(eq.rule.points[q]);
            flux[static_cast<Eigen::Index>(q)] = eq.rule.weights[q] * (g[0] * edge.normal.x + g[1] * edge.normal.y);
            trace[static_cast<Eigen::Index>(q)] = edge.is_boundary() ? eq.rule.weights[q] * u(eq.rule.points[q]) : Complex{};
        }
        auto minus = b.segment(static_cast<Eigen::Index>(space.offset(edge.minus_cell)), nd);
        minus -= eq.minus.value.transpose().cast<Complex>() * flux;
        if (edge.is_boundary()) {
            const Eigen::MatrixXd dn = edge.normal.x * eq.minus.dx + edge.normal.y * eq.minus.dy;
            const Eigen::MatrixXd test = (penalty / edge.length) * eq.minus.value - dn;
            minus += test.transpose().cast<Complex>() * trace;
        } else {
            b.segment(static_cast<Eigen::Index>(space.offset(*edge.plus_cell)), nd) +=
                eq.plus.value.transpose().cast<Complex>() * flux;
        }
    }
    return b;
}

/// Elliptic projection: solves A R = a_h(u, .) with A the assembled SIPG matrix.
/// Without a mass shift the condition number grows like h^-2; a block-Jacobi or ILU(0)
/// preconditioner gets a longer restart and a larger iteration budget here.
inline FieldCoefficients ritz_project(const BrokenSpace& space, const SparseComplexMatrix& A, double penalty,
                                      const ScalarField& u, const GradientField& grad_u, SolverOptions opt = {},
                                      SolveReport* report = nullptr)
{
    opt.block_size = space.dofs_per_cell();
    opt.restart = std::max(opt.restart, 100);
    opt.max_iters = std::max(opt.max_iters, 20000);
    const ComplexVector b = ritz_rhs(space, penalty, u, grad_u);
    SolveResult r = solve(A, b, opt);
    if (report) *report = r.report;
    return {std::move(r.x), 0.0};
}

struct Norms {
    double l2 = 0.0;
    double broken_h1 = 0.0; ///< broken H1 seminorm
    double dg = 0.0;        ///< (broken_h1^2 + sum_E h_E^-1 ||[v]||_E^2)^(1/2), all edges
};

inline Norms norms(const BrokenSpace& space, const ComplexVector& v)
{
    const PolyMesh& mesh = space.mesh();
    double l2 = 0.0, h1 = 0.0, jump = 0.0;
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
        const CellQuadrature& cq = space.cell_quadrature(c);
        const ComplexVector vc = cell_coefficients(space, v, c);
        const ComplexVector val = cq.basis.value.cast<Complex>() * vc;
        const ComplexVector dx = cq.basis.dx.cast<Complex>() * vc;
        const ComplexVector dy = cq.basis.dy.cast<Complex>() * vc;
        for (std::size_t q = 0; q < cq.rule.size(); ++q) {
            const auto i = static_cast<Eigen::Index>(q);
            l2 += cq.rule.weights[q] * std::norm(val[i]);
            h1 += cq.rule.weights[q] * (std::norm(dx[i]) + std::norm(dy[i]));
        }
    }
    for (std::size_t e = 0; e < mesh.num_edges(); ++e) {
        const Edge& edge = mesh.edge(e);
        const EdgeQuadrature& eq = space.edge_quadrature(e);
        ComplexVector j = eq.minus.value.cast<Complex>() * cell_coefficients(space, v, edge.minus_cell);
        if (edge.plus_cell) j -= eq.plus.value.cast<Complex>() * cell_coefficients(space, v, *edge.plus_cell);
        double s = 0.0;
        for (std::size_t q = 0; q < eq.rule.size(); ++q) s += eq.rule.weights[q] * std::norm(j[static_cast<Eigen::Index>(q)]);
        jump += s / edge.length;
    }
    return {std::sqrt(l2), std::sqrt(h1), std::sqrt(h1 + jump)};
}

/// ||v||_{0,4} by quadrature of |v|^4 with the cached volume rule.
inline double l4_norm(const BrokenSpace& space, const ComplexVector& v)
{
    double s = 0.0;
    for (std::size_t c = 0; c < space.mesh().num_cells(); ++c) {
        const CellQuadrature& cq = space.cell_quadrature(c);
        const ComplexVector val = cq.basis.value.cast<Complex>() * cell_coefficients(space, v, c);
        for (std::size_t q = 0; q < cq.rule.size(); ++q) {
            const double a = std::norm(val[static_cast<Eigen::Index>(q)]);
            s += cq.rule.weights[q] * a * a;
        }
    }
    return std::pow(s, 0.25);
}

/// Hermitian form v^H A v (real for the symmetric SIPG matrix).
inline double energy(const SparseComplexMatrix& A, const ComplexVector& v) { return v.dot(A * v).real(); }

inline void write_matrix(const SparseComplexMatrix& A, const std::string& path)
{
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open " + path + " for writing");
    A.write_triplets(out);
}

} // namespace polydg
