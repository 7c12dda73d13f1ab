#pragma once

#include <complex>
#include <cstdint>
#include <fstream>
#include <functional>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "polydg/errors.hpp"
#include "polydg/mesh.hpp"
#include "polydg/parallel.hpp"
#include "polydg/quadrature.hpp"
#include "polydg/sparse.hpp"

namespace polydg {

using ScalarField = std::function<Complex(Vec2)>;
using GradientField = std::function<std::array<Complex, 2>(Vec2)>;

/// Basis values and gradients at a set of points; rows are points, columns basis functions.
struct BasisValues {
    Eigen::MatrixXd value;
    Eigen::MatrixXd dx;
    Eigen::MatrixXd dy;
};

/// Monomial exponents (a, b) of x^a y^b with a + b <= k, ordered by total degree.
inline std::vector<std::array<int, 2>> monomial_exponents(int k)
{
    std::vector<std::array<int, 2>> e;
    for (int p = 0; p <= k; ++p)
        for (int a = p; a >= 0; --a) e.push_back({a, p - a});
    return e;
}

/// Scaled monomials ((x - c)/s)^a ((y - c)/s)^b and their gradients at the given points.
inline BasisValues eval_scaled_monomials(int k, Vec2 center, double scale, std::span<const Vec2> pts)
{
    const auto exps = monomial_exponents(k);
    const auto np = static_cast<Eigen::Index>(pts.size());
    const auto nm = static_cast<Eigen::Index>(exps.size());
    BasisValues v{Eigen::MatrixXd(np, nm), Eigen::MatrixXd(np, nm), Eigen::MatrixXd(np, nm)};
    std::vector<double> px(static_cast<std::size_t>(k + 1)), py(static_cast<std::size_t>(k + 1));
    for (Eigen::Index q = 0; q < np; ++q) {
        const double X = (pts[static_cast<std::size_t>(q)].x - center.x) / scale;
        const double Y = (pts[static_cast<std::size_t>(q)].y - center.y) / scale;
        px[0] = py[0] = 1.0;
        for (int i = 1; i <= k; ++i) {
            px[static_cast<std::size_t>(i)] = px[static_cast<std::size_t>(i - 1)] * X;
            py[static_cast<std::size_t>(i)] = py[static_cast<std::size_t>(i - 1)] * Y;
        }
        for (Eigen::Index m = 0; m < nm; ++m) {
            const int a = exps[static_cast<std::size_t>(m)][0], b = exps[static_cast<std::size_t>(m)][1];
            const auto ua = static_cast<std::size_t>(a), ub = static_cast<std::size_t>(b);
            v.value(q, m) = px[ua] * py[ub];
            v.dx(q, m) = a > 0 ? a * px[ua - 1] * py[ub] / scale : 0.0;
            v.dy(q, m) = b > 0 ? b * px[ua] * py[ub - 1] / scale : 0.0;
        }
    }
    return v;
}

/// Gram matrix of scaled monomials over a polygon (no orthonormalization).
inline Eigen::MatrixXd monomial_gram(std::span<const Vec2> polygon, Vec2 center, double scale, int k)
{
    const QuadratureRule rule = volume_rule(polygon, 2 * k);
    const BasisValues m = eval_scaled_monomials(k, center, scale, rule.points);
    const Eigen::Map<const Eigen::VectorXd> w(rule.weights.data(), static_cast<Eigen::Index>(rule.weights.size()));
    return m.value.transpose() * w.asDiagonal() * m.value;
}

/// One time level of a discrete field.
struct FieldCoefficients {
    ComplexVector values;
    double time = 0.0;
};

/// Cached quadrature with basis values at its points.
struct CellQuadrature {
    QuadratureRule rule;
    BasisValues basis;
};

/// Edge quadrature with traces of the basis of both neighbouring cells.
struct EdgeQuadrature {
    QuadratureRule rule;
    BasisValues minus;
    BasisValues plus; ///< empty on boundary edges
};

/// Broken polynomial space of total degree k on a polygonal mesh. The per-cell basis is
/// built from scaled monomials centred at the cell centroid and orthonormalized in
/// L2(K) with a Cholesky factor of their Gram matrix.
class BrokenSpace {
public:
    static constexpr int min_degree = 1;
    static constexpr int max_degree = 3;

    BrokenSpace(std::shared_ptr<const PolyMesh> mesh, int k) : mesh_(std::move(mesh)), k_(k)
    {
        if (!mesh_) throw InvalidParameter("BrokenSpace needs a mesh");
        if (k < min_degree || k > max_degree)
            throw InvalidParameter("polynomial degree " + std::to_string(k) + " unsupported (use 1, 2 or 3)");
        nd_ = static_cast<std::size_t>((k + 1) * (k + 2) / 2);
        const std::size_t nc = mesh_->num_cells();
        cells_.resize(nc);
        cell_quad_.resize(nc);
        parallel_for(nc, [this](std::size_t c) { build_cell(c); });
        edge_quad_.resize(mesh_->num_edges());
        parallel_for(mesh_->num_edges(), [this](std::size_t e) { build_edge(e); });
    }

    const PolyMesh& mesh() const { return *mesh_; }
    std::shared_ptr<const PolyMesh> mesh_ptr() const { return mesh_; }
    int degree() const { return k_; }
    std::size_t dofs_per_cell() const { return nd_; }
    std::size_t num_dofs() const { return nd_ * mesh_->num_cells(); }
    std::size_t offset(std::size_t cell) const { return cell * nd_; }

    /// Volume rule degree: integrates |w|^2 u v exactly for degree-k fields.
    int volume_degree() const { return std::max(2 * k_ + 2, 4 * k_); }
    int edge_degree() const { return 2 * k_ + 2; }

    Vec2 cell_center(std::size_t c) const { return cells_[c].center; }
    double cell_scale(std::size_t c) const { return cells_[c].scale; }

    const CellQuadrature& cell_quadrature(std::size_t c) const { return cell_quad_[c]; }
    const EdgeQuadrature& edge_quadrature(std::size_t e) const { return edge_quad_[e]; }

    /// Orthonormal basis values and gradients of cell `c` at arbitrary points.
    BasisValues eval_basis(std::size_t c, std::span<const Vec2> pts) const
    {
        const CellBasis& cb = cells_[c];
        BasisValues m = eval_scaled_monomials(k_, cb.center, cb.scale, pts);
        const Eigen::MatrixXd ct = cb.coeff.transpose();
        return {m.value * ct, m.dx * ct, m.dy * ct};
    }

    /// (mesh fingerprint, degree) pair identifying compatible coefficient vectors.
    std::string fingerprint() const
    {
        std::ostringstream s;
        s << std::hex << mesh_->fingerprint() << std::dec << ":k" << k_;
        return s.str();
    }

    FieldCoefficients zero_field(double t = 0.0) const { return {ComplexVector::Zero(static_cast<Eigen::Index>(num_dofs())), t}; }

private:
    struct CellBasis {
        Vec2 center;
        double scale = 1.0;
        Eigen::MatrixXd coeff; ///< phi_i = sum_j coeff(i, j) m_j
    };

    void build_cell(std::size_t c)
    {
        const auto poly = mesh_->cell_polygon(c);
        CellBasis& cb = cells_[c];
        cb.center = mesh_->cell_centroid(c);
        cb.scale = mesh_->cell_diameter(c);
        CellQuadrature& cq = cell_quad_[c];
        cq.rule = volume_rule(poly, volume_degree());
        const BasisValues m = eval_scaled_monomials(k_, cb.center, cb.scale, cq.rule.points);
        const Eigen::Map<const Eigen::VectorXd> w(cq.rule.weights.data(), static_cast<Eigen::Index>(cq.rule.size()));
        const Eigen::MatrixXd gram = m.value.transpose() * w.asDiagonal() * m.value;
        const Eigen::LLT<Eigen::MatrixXd> llt(gram);
        if (llt.info() != Eigen::Success) throw GeometryError("singular monomial Gram matrix on cell " + std::to_string(c));
        const Eigen::MatrixXd L = llt.matrixL();
        cb.coeff = L.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(L.rows(), L.cols()));
        const Eigen::MatrixXd ct = cb.coeff.transpose();
        cq.basis = {m.value * ct, m.dx * ct, m.dy * ct};
    }

    void build_edge(std::size_t e)
    {
        const Edge& edge = mesh_->edge(e);
        EdgeQuadrature& eq = edge_quad_[e];
        eq.rule = edge_rule(mesh_->vertices()[edge.vertices[0]], mesh_->vertices()[edge.vertices[1]], edge_degree());
        eq.minus = eval_basis(edge.minus_cell, eq.rule.points);
        if (edge.plus_cell) eq.plus = eval_basis(*edge.plus_cell, eq.rule.points);
    }

    std::shared_ptr<const PolyMesh> mesh_;
    int k_;
    std::size_t nd_ = 0;
    std::vector<CellBasis> cells_;
    std::vector<CellQuadrature> cell_quad_;
    std::vector<EdgeQuadrature> edge_quad_;
};

/// Values and broken gradients of a discrete field at points of one cell.
struct FieldValues {
    ComplexVector value;
    ComplexVector dx;
    ComplexVector dy;
};

inline auto cell_coefficients(const BrokenSpace& space, const ComplexVector& coeffs, std::size_t cell)
{
    return coeffs.segment(static_cast<Eigen::Index>(space.offset(cell)), static_cast<Eigen::Index>(space.dofs_per_cell()));
}

inline FieldValues eval_field(const BrokenSpace& space, const ComplexVector& coeffs, std::size_t cell,
                              std::span<const Vec2> pts)
{
    const BasisValues b = space.eval_basis(cell, pts);
    const ComplexVector c = cell_coefficients(space, coeffs, cell);
    return {b.value.cast<Complex>() * c, b.dx.cast<Complex>() * c, b.dy.cast<Complex>() * c};
}

/// Cellwise L2-orthogonal projection onto the broken space.
inline FieldCoefficients l2_project(const BrokenSpace& space, const ScalarField& f, double t = 0.0)
{
    FieldCoefficients out = space.zero_field(t);
    parallel_for(space.mesh().num_cells(), [&](std::size_t c) {
        const CellQuadrature& cq = space.cell_quadrature(c);
        ComplexVector fw(static_cast<Eigen::Index>(cq.rule.size()));
        for (std::size_t q = 0; q < cq.rule.size(); ++q)
            fw[static_cast<Eigen::Index>(q)] = cq.rule.weights[q] * f(cq.rule.points[q]);
        out.values.segment(static_cast<Eigen::Index>(space.offset(c)), static_cast<Eigen::Index>(space.dofs_per_cell())) =
            cq.basis.value.transpose().cast<Complex>() * fw;
    });
    return out;
}

// ---------------------------------------------------------------------------
// Serialization: {"fingerprint": "...", "k": k, "time": t, "values": [[re, im], ...]}

inline nlohmann::json field_to_json(const BrokenSpace& space, const FieldCoefficients& u)
{
    nlohmann::json j;
    j["fingerprint"] = space.fingerprint();
    j["k"] = space.degree();
    j["time"] = u.time;
    auto& vals = j["values"] = nlohmann::json::array();
    for (Eigen::Index i = 0; i < u.values.size(); ++i) vals.push_back({u.values[i].real(), u.values[i].imag()});
    return j;
}

inline FieldCoefficients field_from_json(const BrokenSpace& space, const nlohmann::json& j)
{
    if (!j.contains("values") || !j.contains("fingerprint")) throw ParseError("field JSON needs fingerprint and values");
    if (j.at("fingerprint").get<std::string>() != space.fingerprint())
        throw ParseError("field fingerprint " + j.at("fingerprint").get<std::string>() + " does not match space " +
                         space.fingerprint());
    const auto& vals = j.at("values");
    if (vals.size() != space.num_dofs()) throw ParseError("field length does not match the space");
    FieldCoefficients u = space.zero_field(j.value("time", 0.0));
    for (std::size_t i = 0; i < vals.size(); ++i)
        u.values[static_cast<Eigen::Index>(i)] = {vals[i][0].get<double>(), vals[i][1].get<double>()};
    return u;
}

} // namespace polydg
