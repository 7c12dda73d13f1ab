#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <string>

#include "polydg/errors.hpp"
#include "polydg/forms.hpp"
#include "polydg/geometry.hpp"
#include "polydg/mesh_generators.hpp"
#include "polydg/stepper.hpp"

namespace polydg {

enum class ExampleId { example1, example2 };

inline ExampleId parse_example(const std::string& s)
{
    if (s == "example1" || s == "1") return ExampleId::example1;
    if (s == "example2" || s == "2") return ExampleId::example2;
    throw InvalidParameter("unknown example '" + s + "' (use example1 or example2)");
}

inline std::string to_string(ExampleId id) { return id == ExampleId::example1 ? "example1" : "example2"; }

struct ExactValues {
    Complex u;
    std::array<Complex, 2> grad;
    Complex u_t;
    Complex laplacian;
};

/// Exact solution data for the two manufactured examples.
///   example1: u = e^{it} sin x sin y (1-x)(1-y) on the unit square
///   example2: u = i sin(r^2 - 1) e^{-t} on the unit disk
class ManufacturedCase {
public:
    ManufacturedCase(ExampleId id, ModelParams params) : id_(id), params_(params) {}

    ExampleId id() const { return id_; }
    Domain domain() const { return id_ == ExampleId::example1 ? Domain::unit_square : Domain::unit_disk; }
    const ModelParams& params() const { return params_; }

    ExactValues exact(Vec2 p, double t) const
    {
        const Complex I(0.0, 1.0);
        if (id_ == ExampleId::example1) {
            const auto s = [](double x) { return std::sin(x) * (1.0 - x); };
            const auto ds = [](double x) { return std::cos(x) * (1.0 - x) - std::sin(x); };
            const auto d2s = [](double x) { return -std::sin(x) * (1.0 - x) - 2.0 * std::cos(x); };
            const Complex e = std::exp(I * t);
            const Complex u = e * s(p.x) * s(p.y);
            return {u, {e * ds(p.x) * s(p.y), e * s(p.x) * ds(p.y)}, I * u, e * (d2s(p.x) * s(p.y) + s(p.x) * d2s(p.y))};
        }
        const double r2 = p.x * p.x + p.y * p.y;
        const double e = std::exp(-t);
        const Complex u = I * std::sin(r2 - 1.0) * e;
        const Complex g = I * e * std::cos(r2 - 1.0) * 2.0;
        return {u, {g * p.x, g * p.y}, -u, I * e * (4.0 * std::cos(r2 - 1.0) - 4.0 * r2 * std::sin(r2 - 1.0))};
    }

    Complex u(Vec2 p, double t) const { return exact(p, t).u; }
    std::array<Complex, 2> grad(Vec2 p, double t) const { return exact(p, t).grad; }

    /// f = u_t - (nu + i alpha) Lap u + (kappa + i beta)|u|^2 u - gamma u.
    Complex source(Vec2 p, double t) const
    {
        const ExactValues v = exact(p, t);
        return v.u_t - params_.diffusion() * v.laplacian + params_.cubic() * std::norm(v.u) * v.u - params_.gamma * v.u;
    }

    /// Time-stepping problem. On the disk the exact trace is imposed weakly on the
    /// polygonal boundary, where u does not vanish.
    Problem problem(double penalty, bool zero_source = false) const
    {
        Problem pr;
        pr.params = params_;
        pr.penalty = penalty;
        const ManufacturedCase self = *this;
        if (!zero_source) {
            pr.source = [self](Vec2 p, double t) { return self.source(p, t); };
            if (id_ == ExampleId::example2) pr.boundary = [self](Vec2 p, double t) { return self.u(p, t); };
        }
        pr.initial = [self](Vec2 p) { return self.u(p, 0.0); };
        pr.initial_grad = [self](Vec2 p) { return self.grad(p, 0.0); };
        return pr;
    }

private:
    ExampleId id_;
    ModelParams params_;
};

struct ErrorPair {
    double l2 = 0.0;
    double h1 = 0.0; ///< broken H1 seminorm of the error
};

/// ||u(T) - u_h|| and ||grad u(T) - grad_h u_h|| by cellwise quadrature over the mesh cells.
inline ErrorPair final_errors(const BrokenSpace& space, const ComplexVector& uh, const ManufacturedCase& mc, double T)
{
    double l2 = 0.0, h1 = 0.0;
    for (std::size_t c = 0; c < space.mesh().num_cells(); ++c) {
        const CellQuadrature& cq = space.cell_quadrature(c);
        const ComplexVector vc = cell_coefficients(space, uh, c);
        const ComplexVector val = cq.basis.value.cast<Complex>() * vc;
        const ComplexVector dx = cq.basis.dx.cast<Complex>() * vc;
        const ComplexVector dy = cq.basis.dy.cast<Complex>() * vc;
        for (std::size_t q = 0; q < cq.rule.size(); ++q) {
            const auto i = static_cast<Eigen::Index>(q);
            const ExactValues ex = mc.exact(cq.rule.points[q], T);
            l2 += cq.rule.weights[q] * std::norm(ex.u - val[i]);
            h1 += cq.rule.weights[q] * (std::norm(ex.grad[0] - dx[i]) + std::norm(ex.grad[1] - dy[i]));
        }
    }
    return {std::sqrt(l2), std::sqrt(h1)};
}

} // namespace polydg
