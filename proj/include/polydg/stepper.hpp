#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "polydg/errors.hpp"
#include "polydg/forms.hpp"
#include "polydg/solver.hpp"
#include "polydg/space.hpp"

namespace polydg {

/// Weights of the three-level stencils for a given theta:
///   D v   = (d0 v^n + d1 v^{n-1} + d2 v^{n-2}) / (2 tau)
///   v_avg = a0 v^n + a1 v^{n-1}
///   v_hat = e1 v^{n-1} + e2 v^{n-2}
struct Stencil {
    double d0, d1, d2;
    double a0, a1;
    double e1, e2;
};

inline Stencil stencils(double theta)
{
    if (!(theta >= 0.0 && theta <= 0.5)) throw InvalidParameter("theta must lie in [0, 1/2], got " + std::to_string(theta));
    return {3.0 - 2.0 * theta, -(4.0 - 4.0 * theta), 1.0 - 2.0 * theta, 1.0 - theta, theta, 2.0 - theta, -(1.0 - theta)};
}

/// C1 = sqrt(exp(32 max(gamma,0) T) (24 + 128/7 max(gamma,0))).
inline double stability_constant(double gamma, double T)
{
    if (!(T > 0.0)) throw InvalidParameter("stability_constant needs T > 0");
    const double g = std::max(gamma, 0.0);
    return std::sqrt(std::exp(32.0 * g * T) * (24.0 + 128.0 / 7.0 * g));
}

struct TimeScheme {
    double theta = 0.25;
    double tau = 0.01;
    int steps = 100;

    double final_time() const { return tau * steps; }

    void validate(const ModelParams& p) const
    {
        stencils(theta);
        if (!(tau > 0.0)) throw InvalidParameter("time step must be positive");
        if (steps < 1) throw InvalidParameter("need at least one time step");
        if (p.gamma > 0.0 && p.gamma * tau > 1.0 / 16.0)
            warn("gamma * tau = " + std::to_string(p.gamma * tau) + " exceeds 1/16; the stability estimate does not apply");
    }
};

/// Everything the time loop needs besides the mesh and the scheme.
struct Problem {
    ModelParams params;
    double penalty = 0.0;        ///< <= 0 selects default_penalty(k)
    SpaceTimeField source;       ///< empty means f = 0
    SpaceTimeField boundary;     ///< Dirichlet trace imposed weakly; empty means u = 0 on the boundary
    ScalarField initial;         ///< u(x, 0)
    GradientField initial_grad;  ///< grad u(x, 0)
};

struct StepperState {
    ComplexVector u_prev2; ///< u^{n-2}
    ComplexVector u_prev1; ///< u^{n-1}
    int n = 0;             ///< index of the newest level held in u_prev1
    std::vector<double> l2_history;
};

struct HistoryEntry {
    int n;
    double t;
    double l2;
};

struct RunTimings {
    double setup = 0.0;    ///< space and operator assembly, seconds
    double initial = 0.0;  ///< Ritz projection
    double stepping = 0.0; ///< time loop
};

struct RunResult {
    FieldCoefficients final_field;
    std::vector<HistoryEntry> history;
    RunTimings timings;
    int total_iterations = 0;
    int dense_fallbacks = 0;
    /// Set for runs with f = 0 and homogeneous boundary data: C1 and whether max_n ||u^n|| <= C1 ||u^0||.
    double stability_bound = 0.0;
    bool bound_checked = false;
    bool bound_satisfied = true;
};

inline void write_history_csv(std::ostream& out, const std::vector<HistoryEntry>& h)
{
    out << "n,t,l2_norm\n" << std::setprecision(17);
    for (const auto& e : h) out << e.n << ',' << e.t << ',' << e.l2 << '\n';
}

class StepError : public SolverError {
public:
    StepError(int step, const SolverError& e)
        : SolverError("step " + std::to_string(step) + ": " + e.what(), e.report()), step_(step)
    {
    }
    int step() const { return step_; }

private:
    int step_;
};

/// Weighted IMEX theta-scheme on a fixed broken space. M and A are assembled once;
/// the weighted mass is rebuilt every step from the extrapolated field. The
/// preconditioner is built from the step-independent part of the system matrix and
/// reused, so only the small weighted-mass term is left for GMRES to resolve.
class Stepper {
public:
    /// Systems up to this size fall back to a dense LU when GMRES fails.
    static constexpr std::size_t dense_fallback_limit = 2000;

    Stepper(std::shared_ptr<const BrokenSpace> space, Problem problem, TimeScheme scheme, SolverOptions solver = {})
        : space_(std::move(space)), problem_(std::move(problem)), scheme_(scheme), solver_(solver)
    {
        if (!space_) throw InvalidParameter("Stepper needs a space");
        problem_.params.validate();
        scheme_.validate(problem_.params);
        if (problem_.penalty <= 0.0) problem_.penalty = default_penalty(space_->degree());
        solver_.block_size = space_->dofs_per_cell();
        M_ = assemble_mass(*space_);
        A_ = assemble_sipg(*space_, problem_.penalty);
    }

    const BrokenSpace& space() const { return *space_; }
    const Problem& problem() const { return problem_; }
    const TimeScheme& scheme() const { return scheme_; }
    const SparseComplexMatrix& mass() const { return M_; }
    const SparseComplexMatrix& stiffness() const { return A_; }

    double l2(const ComplexVector& v) const { return std::sqrt(std::max(0.0, v.dot(M_ * v).real())); }

    /// u_h^0 = R_h u^0.
    FieldCoefficients initial_field()
    {
        if (!problem_.initial) return space_->zero_field();
        SolveReport rep;
        FieldCoefficients u0 =
            ritz_project(*space_, A_, problem_.penalty, problem_.initial,
                         problem_.initial_grad ? problem_.initial_grad : GradientField([](Vec2) {
                             return std::array<Complex, 2>{};
                         }),
                         solver_, &rep);
        iterations_ += rep.iterations;
        return u0;
    }

    /// Backward Euler: (M/tau + (nu+i alpha)A + (kappa+i beta)W0 - gamma M) u^1 = M u^0/tau + F(t1) [+ G(t1)].
    ComplexVector first_step(const ComplexVector& u0)
    {
        const ModelParams& p = problem_.params;
        const double tau = scheme_.tau, t1 = tau;
        const SparseComplexMatrix W = assemble_weighted_mass(*space_, u0);
        SparseComplexMatrix lhs = linear_combination({Complex(1.0 / tau - p.gamma), p.diffusion()}, {&M_, &A_});
        const auto pre = make_preconditioner(lhs, solver_);
        lhs.add_scaled(W, p.cubic());
        ComplexVector rhs = (M_ * u0) / tau + data(t1);
        return checked_solve(lhs, rhs, &u0, 1, *pre);
    }

    /// One theta-step producing u^n from u^{n-1}, u^{n-2}.
    ComplexVector theta_step(const StepperState& s)
    {
        const ModelParams& p = problem_.params;
        const Stencil st = stencils(scheme_.theta);
        const double tau = scheme_.tau;
        const int n = s.n + 1;
        const double t_eval = (n - scheme_.theta) * tau;
        const ComplexVector hat = st.e1 * s.u_prev1 + st.e2 * s.u_prev2;
        const SparseComplexMatrix W = assemble_weighted_mass(*space_, hat);

        // L = (nu + i alpha) A + (kappa + i beta) W - gamma M
        const ComplexVector Mu1 = M_ * s.u_prev1;
        const ComplexVector Lu1 = p.diffusion() * (A_ * s.u_prev1) + p.cubic() * (W * s.u_prev1) - p.gamma * Mu1;
        ComplexVector rhs = (-st.d1 / (2.0 * tau)) * Mu1 - (st.d2 / (2.0 * tau)) * (M_ * s.u_prev2) - st.a1 * Lu1 + data(t_eval);

        if (!theta_pre_) {
            theta_base_ = linear_combination({Complex(st.d0 / (2.0 * tau) - st.a0 * p.gamma), st.a0 * p.diffusion()}, {&M_, &A_});
            theta_pre_ = make_preconditioner(theta_base_, solver_);
        }
        SparseComplexMatrix lhs = theta_base_;
        lhs.add_scaled(W, st.a0 * p.cubic());
        const ComplexVector guess = 2.0 * s.u_prev1 - s.u_prev2;
        return checked_solve(lhs, rhs, &guess, n, *theta_pre_);
    }

    /// Ritz initialization, one backward Euler step, then theta-steps to N. The callback,
    /// if given, sees every level as it is produced.
    RunResult run(const std::function<void(int, const ComplexVector&)>& on_step = {})
    {
        using clock = std::chrono::steady_clock;
        RunResult res;
        auto t0 = clock::now();
        const FieldCoefficients u0 = initial_field();
        auto t1 = clock::now();
        res.timings.initial = std::chrono::duration<double>(t1 - t0).count();

        StepperState s;
        s.u_prev1 = u0.values;
        s.l2_history.push_back(l2(u0.values));
        if (on_step) on_step(0, u0.values);
        ComplexVector u1 = first_step(u0.values);
        s.u_prev2 = std::move(s.u_prev1);
        s.u_prev1 = std::move(u1);
        s.n = 1;
        s.l2_history.push_back(l2(s.u_prev1));
        if (on_step) on_step(1, s.u_prev1);
        while (s.n < scheme_.steps) {
            ComplexVector un = theta_step(s);
            s.u_prev2 = std::move(s.u_prev1);
            s.u_prev1 = std::move(un);
            ++s.n;
            s.l2_history.push_back(l2(s.u_prev1));
            if (on_step) on_step(s.n, s.u_prev1);
        }
        res.timings.stepping = std::chrono::duration<double>(clock::now() - t1).count();

        res.final_field = {s.u_prev1, scheme_.final_time()};
        for (std::size_t i = 0; i < s.l2_history.size(); ++i)
            res.history.push_back({static_cast<int>(i), static_cast<double>(i) * scheme_.tau, s.l2_history[i]});
        res.total_iterations = iterations_;
        res.dense_fallbacks = fallbacks_;
        if (!problem_.source && !problem_.boundary) {
            res.bound_checked = true;
            res.stability_bound = stability_constant(problem_.params.gamma, scheme_.final_time());
            const double peak = *std::max_element(s.l2_history.begin(), s.l2_history.end());
            res.bound_satisfied = peak <= res.stability_bound * s.l2_history.front() * (1.0 + 1e-12);
        }
        return res;
    }

private:
    // F(t) + (nu + i alpha) G(t)
    ComplexVector data(double t) const
    {
        ComplexVector b = assemble_load(*space_, problem_.source, t);
        if (problem_.boundary)
            b += problem_.params.diffusion() * assemble_dirichlet_load(*space_, problem_.boundary, t, problem_.penalty);
        return b;
    }

    ComplexVector checked_solve(const SparseComplexMatrix& lhs, const ComplexVector& rhs, const ComplexVector* guess, int step,
                                const Preconditioner& pre)
    {
        try {
            SolveResult r = solve(lhs, rhs, solver_, guess, &pre);
            iterations_ += r.report.iterations;
            return std::move(r.x);
        } catch (const SolverError& e) {
            if (lhs.size() > dense_fallback_limit) throw StepError(step, e);
            warn("step " + std::to_string(step) + ": " + e.what() + "; retrying with dense LU");
            ++fallbacks_;
            return solve_dense(lhs, rhs).x;
        }
    }

    std::shared_ptr<const BrokenSpace> space_;
    Problem problem_;
    TimeScheme scheme_;
    SolverOptions solver_;
    SparseComplexMatrix M_, A_;
    SparseComplexMatrix theta_base_; ///< step-independent part of the theta-step matrix
    std::unique_ptr<Preconditioner> theta_pre_; ///< built once from theta_base_
    int iterations_ = 0;
    int fallbacks_ = 0;
};

} // namespace polydg
