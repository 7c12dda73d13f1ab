#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "polydg/forms.hpp"
#include "polydg/mesh_generators.hpp"
#include "polydg/space.hpp"
#include "polydg/stepper.hpp"

namespace polydg {

struct LemmaOptions {
    std::uint64_t seed = 42;
    int trials = 1000;
    int dim = 6;                  ///< length of the random complex vectors
    int levels = 5;               ///< sequence v^0 .. v^levels
    int fields = 100;             ///< random discrete fields per mesh for the inverse inequality
    int k = 1;
    std::vector<std::size_t> subdivisions{8, 16, 32}; ///< structured non-convex meshes
    double max_variation = 0.15;
    bool negative_control = false; ///< assert the reversed energy inequality (must fail)
};

struct LemmaReport {
    int lemma1_trials = 0;
    int lemma1_failures = 0;
    int lemma5_trials = 0;
    int lemma5_failures = 0;
    std::vector<double> lemma3_max_ratio; ///< max over fields of ||v||_DG h / ||v||, per mesh
    double lemma3_variation = 0.0;        ///< (max - min) / max over meshes
    bool lemma3_pass = false;
    std::vector<std::string> counterexamples;

    bool passed() const { return lemma1_failures == 0 && lemma5_failures == 0 && lemma3_pass; }

    nlohmann::json to_json() const
    {
        return {{"lemma1", {{"trials", lemma1_trials}, {"failures", lemma1_failures}}},
                {"lemma5", {{"trials", lemma5_trials}, {"failures", lemma5_failures}}},
                {"lemma3", {{"max_ratio", lemma3_max_ratio}, {"variation", lemma3_variation}, {"pass", lemma3_pass}}},
                {"counterexamples", counterexamples},
                {"pass", passed()}};
    }
};

namespace detail {

using Sequence = std::vector<ComplexVector>;

inline Sequence random_sequence(std::mt19937_64& rng, int levels, int dim)
{
    std::normal_distribution<double> g(0.0, 1.0);
    Sequence v(static_cast<std::size_t>(levels + 1));
    for (auto& x : v) {
        x.resize(dim);
        for (int i = 0; i < dim; ++i) x[i] = {g(rng), g(rng)};
    }
    return v;
}

inline double energy_functional(const Sequence& v, std::size_t n, double theta)
{
    const double a = v[n].squaredNorm(), b = v[n - 1].squaredNorm(), d = (v[n] - v[n - 1]).squaredNorm();
    return (3.0 - 2.0 * theta) * a - (1.0 - 2.0 * theta) * b + (2.0 - theta) * (1.0 - 2.0 * theta) * d;
}

inline std::string describe(const char* what, double theta, std::size_t n, double lhs, double rhs)
{
    std::ostringstream o;
    o << std::setprecision(17) << what << ": theta=" << theta << " n=" << n << " lhs=" << lhs << " rhs=" << rhs;
    return o.str();
}

} // namespace detail

/// One random trial of the energy inequality
///   Re(D v^{n-theta}, v^{n-theta}) >= (E^n - E^{n-1}) / (4 tau),  E^n >= ||v^n||^2 / (1 - theta).
/// Returns a description of the first violation.
inline std::optional<std::string> lemma1_trial(std::mt19937_64& rng, const LemmaOptions& o)
{
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const double theta = 0.5 * u01(rng);
    const double tau = std::exp(std::log(1e-3) * u01(rng)); // log-uniform in (1e-3, 1]
    const auto v = detail::random_sequence(rng, o.levels, o.dim);
    const Stencil s = stencils(theta);
    for (std::size_t n = 1; n < v.size(); ++n) {
        const double En = detail::energy_functional(v, n, theta);
        const double bound = v[n].squaredNorm() / (1.0 - theta);
        if (En < bound * (1.0 - 1e-12)) return detail::describe("E^n >= |v^n|^2/(1-theta)", theta, n, En, bound);
        if (n < 2) continue;
        const ComplexVector D = (s.d0 * v[n] + s.d1 * v[n - 1] + s.d2 * v[n - 2]) / (2.0 * tau);
        const ComplexVector avg = s.a0 * v[n] + s.a1 * v[n - 1];
        const double lhs = avg.dot(D).real(); // (D, avg) with the conjugate on avg
        const double rhs = (En - detail::energy_functional(v, n - 1, theta)) / (4.0 * tau);
        const double slack = 1e-10 * (std::abs(lhs) + std::abs(rhs) + 1.0);
        const bool ok = o.negative_control ? lhs <= rhs + slack : lhs >= rhs - slack;
        if (!ok) return detail::describe(o.negative_control ? "reversed energy inequality" : "energy inequality", theta, n, lhs, rhs);
    }
    return std::nullopt;
}

/// One random trial of ||v^n|| <= (1 + 2 theta) sum_{m=1}^n ||v^{m-theta}|| + 2 theta ||v^0||.
inline std::optional<std::string> lemma5_trial(std::mt19937_64& rng, const LemmaOptions& o)
{
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const double theta = 0.5 * u01(rng);
    const auto v = detail::random_sequence(rng, o.levels, o.dim);
    double sum = 0.0;
    for (std::size_t n = 1; n < v.size(); ++n) {
        sum += ((1.0 - theta) * v[n] + theta * v[n - 1]).norm();
        const double lhs = v[n].norm();
        const double rhs = (1.0 + 2.0 * theta) * sum + 2.0 * theta * v[0].norm();
        if (lhs > rhs * (1.0 + 1e-12)) return detail::describe("transfer inequality", theta, n, lhs, rhs);
    }
    return std::nullopt;
}

/// Random discrete field with standard normal complex coefficients.
inline ComplexVector random_field(const BrokenSpace& space, std::mt19937_64& rng)
{
    std::normal_distribution<double> g(0.0, 1.0);
    ComplexVector v(static_cast<Eigen::Index>(space.num_dofs()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = {g(rng), g(rng)};
    return v;
}

/// max over random fields of ||v||_DG h / ||v||.
inline double inverse_inequality_ratio(const BrokenSpace& space, std::mt19937_64& rng, int fields)
{
    double worst = 0.0;
    for (int f = 0; f < fields; ++f) {
        const Norms n = norms(space, random_field(space, rng));
        worst = std::max(worst, n.dg * space.mesh().h() / n.l2);
    }
    return worst;
}

/// max over random fields of ||v||_{0,4} / (||v||_DG^{1/2} ||v||^{1/2}).
inline double ladyzhenskaya_ratio(const BrokenSpace& space, std::mt19937_64& rng, int fields)
{
    double worst = 0.0;
    for (int f = 0; f < fields; ++f) {
        const ComplexVector v = random_field(space, rng);
        const Norms n = norms(space, v);
        worst = std::max(worst, l4_norm(space, v) / std::sqrt(n.dg * n.l2));
    }
    return worst;
}

/// Runs the energy, transfer and inverse-inequality oracles.
inline LemmaReport lemma_property_suite(const LemmaOptions& o)
{
    LemmaReport rep;
    std::mt19937_64 rng(o.seed);
    for (int t = 0; t < o.trials; ++t) {
        ++rep.lemma1_trials;
        if (auto bad = lemma1_trial(rng, o)) {
            ++rep.lemma1_failures;
            rep.counterexamples.push_back("trial " + std::to_string(t) + ": " + *bad);
        }
    }
    for (int t = 0; t < o.trials; ++t) {
        ++rep.lemma5_trials;
        if (auto bad = lemma5_trial(rng, o)) {
            ++rep.lemma5_failures;
            rep.counterexamples.push_back("trial " + std::to_string(t) + ": " + *bad);
        }
    }
    for (std::size_t n : o.subdivisions) {
        auto mesh = std::make_shared<const PolyMesh>(generate_structured_nonconvex(n));
        const BrokenSpace space(mesh, o.k);
        rep.lemma3_max_ratio.push_back(inverse_inequality_ratio(space, rng, o.fields));
    }
    if (!rep.lemma3_max_ratio.empty()) {
        const auto [lo, hi] = std::minmax_element(rep.lemma3_max_ratio.begin(), rep.lemma3_max_ratio.end());
        rep.lemma3_variation = (*hi - *lo) / *hi;
        rep.lemma3_pass = rep.lemma3_variation < o.max_variation;
        if (!rep.lemma3_pass)
            rep.counterexamples.push_back("inverse inequality ratio varies by " + std::to_string(rep.lemma3_variation));
    }
    return rep;
}

} // namespace polydg
