#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "polydg/errors.hpp"
#include "polydg/manufactured.hpp"
#include "polydg/mesh.hpp"
#include "polydg/mesh_generators.hpp"
#include "polydg/space.hpp"
#include "polydg/stepper.hpp"

namespace polydg {

enum class MeshFamily { quad, nonconvex, voronoi, mixed, disk };

inline MeshFamily parse_family(const std::string& s)
{
    if (s == "quad") return MeshFamily::quad;
    if (s == "nonconvex") return MeshFamily::nonconvex;
    if (s == "voronoi") return MeshFamily::voronoi;
    if (s == "mixed") return MeshFamily::mixed;
    if (s == "disk") return MeshFamily::disk;
    throw InvalidParameter("unknown mesh family '" + s + "' (use nonconvex, voronoi, mixed, disk or quad)");
}

inline std::string to_string(MeshFamily f)
{
    switch (f) {
    case MeshFamily::quad: return "quad";
    case MeshFamily::nonconvex: return "nonconvex";
    case MeshFamily::voronoi: return "voronoi";
    case MeshFamily::mixed: return "mixed";
    case MeshFamily::disk: return "disk";
    }
    return "?";
}

struct FamilyOptions {
    std::uint64_t seed = 1; ///< Voronoi RNG seed
    int lloyd_iters = 40;
};

/// Subdivision count for structured families at nominal size h (h = 1/n for quads, 2/n otherwise).
inline std::size_t structured_subdivisions(MeshFamily f, double h)
{
    return static_cast<std::size_t>(std::lround((f == MeshFamily::quad ? 1.0 : 2.0) / h));
}

/// Member of a mesh family with nominal mesh size h.
inline PolyMesh make_family_mesh(MeshFamily f, double h, const FamilyOptions& opt = {})
{
    if (!(h > 0.0 && h <= 1.0)) throw InvalidParameter("nominal mesh size must lie in (0, 1]");
    switch (f) {
    case MeshFamily::quad: {
        const std::size_t n = structured_subdivisions(f, h);
        return generate_quad_grid(n, n);
    }
    case MeshFamily::nonconvex: return generate_structured_nonconvex(structured_subdivisions(f, h));
    case MeshFamily::mixed: return generate_mixed(structured_subdivisions(f, h));
    case MeshFamily::voronoi:
    case MeshFamily::disk: {
        VoronoiOptions v;
        v.domain = f == MeshFamily::disk ? Domain::unit_disk : Domain::unit_square;
        v.n_seeds = std::max<std::size_t>(4, seeds_for_mesh_size(v.domain, h));
        v.lloyd_iters = opt.lloyd_iters;
        v.seed = opt.seed;
        return generate_voronoi(v);
    }
    }
    throw InvalidParameter("unknown mesh family");
}

/// "1/16" for sizes that are reciprocals of integers, decimal otherwise.
inline std::string format_size(double s)
{
    const double inv = 1.0 / s;
    if (std::abs(inv - std::round(inv)) < 1e-9) return "1/" + std::to_string(std::lround(inv));
    std::ostringstream o;
    o << s;
    return o.str();
}

struct ConvergenceRow {
    double size = 0.0; ///< h or tau
    double l2 = 0.0;
    double h1 = 0.0;
    std::optional<double> l2_order;
    std::optional<double> h1_order;
    std::size_t dofs = 0;
    double seconds = 0.0;
};

/// Error table over successive refinements. Orders compare each row with the previous
/// one: log(e_prev / e) / log(s_prev / s), which is log2 of the error ratio when the
/// size halves.
class ConvergenceTable {
public:
    explicit ConvergenceTable(std::string variable = "h", std::string title = {})
        : variable_(std::move(variable)), title_(std::move(title))
    {
    }

    static double order(double e_prev, double e, double s_prev, double s) { return std::log(e_prev / e) / std::log(s_prev / s); }

    void add(double size, double l2, double h1, std::size_t dofs = 0, double seconds = 0.0)
    {
        ConvergenceRow r{size, l2, h1, std::nullopt, std::nullopt, dofs, seconds};
        if (!rows_.empty()) {
            const ConvergenceRow& p = rows_.back();
            if (!(size < p.size)) throw InvalidParameter("convergence rows must be added from coarse to fine");
            r.l2_order = order(p.l2, l2, p.size, size);
            r.h1_order = order(p.h1, h1, p.size, size);
            if (!(l2 < p.l2)) warn(title_ + ": L2 error does not decrease at " + variable_ + " = " + format_size(size));
        }
        rows_.push_back(r);
    }

    const std::vector<ConvergenceRow>& rows() const { return rows_; }
    const std::string& variable() const { return variable_; }
    const std::string& title() const { return title_; }

    std::optional<double> finest_l2_order() const { return rows_.empty() ? std::nullopt : rows_.back().l2_order; }
    std::optional<double> finest_h1_order() const { return rows_.empty() ? std::nullopt : rows_.back().h1_order; }

    /// Least-squares slope of log e against log size over all rows.
    double fitted_l2_order() const { return fit([](const ConvergenceRow& r) { return r.l2; }); }
    double fitted_h1_order() const { return fit([](const ConvergenceRow& r) { return r.h1; }); }

    /// Timings are left out so identical runs give identical files.
    void write_csv(std::ostream& out) const
    {
        out << variable_ << ",l2_error,l2_order,h1_error,h1_order,dofs\r\n" << std::setprecision(10);
        for (const auto& r : rows_) {
            out << r.size << ',' << r.l2 << ',';
            if (r.l2_order) out << *r.l2_order;
            out << ',' << r.h1 << ',';
            if (r.h1_order) out << *r.h1_order;
            out << ',' << r.dofs << "\r\n";
        }
    }

    void write_markdown(std::ostream& out) const
    {
        if (!title_.empty()) out << "### " << title_ << "\n\n";
        const std::string v = variable_ == "tau" ? "τ" : variable_;
        std::vector<std::array<std::string, 5>> cells;
        cells.push_back({v, "L2 error", "order", "H1 error", "order"});
        for (const auto& r : rows_)
            cells.push_back({format_size(r.size), sci(r.l2), r.l2_order ? fixed(*r.l2_order) : "-", sci(r.h1),
                             r.h1_order ? fixed(*r.h1_order) : "-"});
        std::array<std::size_t, 5> w{};
        for (const auto& row : cells)
            for (std::size_t i = 0; i < 5; ++i) w[i] = std::max(w[i], display_width(row[i]));
        auto line = [&](const std::array<std::string, 5>& row) {
            out << '|';
            for (std::size_t i = 0; i < 5; ++i) out << ' ' << row[i] << std::string(w[i] - display_width(row[i]), ' ') << " |";
            out << '\n';
        };
        line(cells[0]);
        out << '|';
        for (std::size_t i = 0; i < 5; ++i) out << std::string(w[i] + 2, '-') << '|';
        out << '\n';
        for (std::size_t i = 1; i < cells.size(); ++i) line(cells[i]);
    }

    nlohmann::json to_json() const
    {
        nlohmann::json j;
        j["title"] = title_;
        j["variable"] = variable_;
        auto& rows = j["rows"] = nlohmann::json::array();
        for (const auto& r : rows_) {
            nlohmann::json row{{variable_, r.size}, {"l2_error", r.l2}, {"h1_error", r.h1}, {"dofs", r.dofs}, {"seconds", r.seconds}};
            row["l2_order"] = r.l2_order ? nlohmann::json(*r.l2_order) : nlohmann::json(nullptr);
            row["h1_order"] = r.h1_order ? nlohmann::json(*r.h1_order) : nlohmann::json(nullptr);
            rows.push_back(row);
        }
        return j;
    }

private:
    template <class Get>
    double fit(Get get) const
    {
        if (rows_.size() < 2) return std::nan("");
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double n = static_cast<double>(rows_.size());
        for (const auto& r : rows_) {
            const double x = std::log(r.size), y = std::log(get(r));
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        return (n * sxy - sx * sy) / (n * sxx - sx * sx);
    }

    static std::string sci(double v)
    {
        std::ostringstream o;
        o << std::scientific << std::setprecision(4) << v;
        return o.str();
    }
    static std::string fixed(double v)
    {
        std::ostringstream o;
        o << std::fixed << std::setprecision(4) << v;
        return o.str();
    }
    // code points, so the Greek tau header lines up
    static std::size_t display_width(const std::string& s)
    {
        std::size_t n = 0;
        for (unsigned char c : s) n += (c & 0xC0) != 0x80;
        return n;
    }

    std::string variable_;
    std::string title_;
    std::vector<ConvergenceRow> rows_;
};

/// Penalty used by the shipped presets: about twice the smallest value that keeps the
/// SIPG matrix positive definite on each family. Structured families get (k+1)^2, the
/// Voronoi families 2(k+1)^2 because their short edges need a larger penalty.
inline double preset_penalty(MeshFamily f, int k)
{
    const double base = minimum_penalty(k);
    return (f == MeshFamily::voronoi || f == MeshFamily::disk) ? 2.0 * base : base;
}

/// Pass when lo <= order <= hi.
struct OrderGate {
    double lo = 0.0;
    double hi = 0.0;
    bool check(std::optional<double> order) const { return order && *order >= lo && *order <= hi; }
};

struct RunSetup {
    ExampleId example = ExampleId::example1;
    MeshFamily family = MeshFamily::nonconvex;
    int k = 1;
    double theta = 0.125;
    double T = 1.0;
    ModelParams params;
    double penalty = 0.0; ///< <= 0 selects the default
    FamilyOptions mesh;
    SolverOptions solver;
};

/// Steps for a target time step: N = ceil(T / tau - tiny), and the exact tau = T / N.
inline TimeScheme scheme_for(double theta, double tau, double T)
{
    const int steps = std::max(1, static_cast<int>(std::ceil(T / tau - 1e-9)));
    return {theta, T / steps, steps};
}

struct SingleRun {
    ErrorPair errors;
    RunResult result;
    std::size_t dofs = 0;
    double seconds = 0.0;
};

/// Solves the manufactured problem on one mesh up to T and measures the final errors.
inline SingleRun run_manufactured(const RunSetup& s, std::shared_ptr<const PolyMesh> mesh, double tau)
{
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    const ManufacturedCase mc(s.example, s.params);
    auto space = std::make_shared<const BrokenSpace>(std::move(mesh), s.k);
    Stepper stepper(space, mc.problem(s.penalty), scheme_for(s.theta, tau, s.T), s.solver);
    SingleRun out;
    out.result = stepper.run();
    out.errors = final_errors(*space, out.result.final_field.values, mc, stepper.scheme().final_time());
    out.dofs = space->num_dofs();
    out.seconds = std::chrono::duration<double>(clock::now() - t0).count();
    return out;
}

/// Default fine step for spatial studies: h_finest^((k+1)/2) / 4.
inline double default_fine_tau(double h_finest, int k) { return std::pow(h_finest, 0.5 * (k + 1)) / 4.0; }

/// Spatial study: one run per nominal h with a common fine tau (default_fine_tau when tau <= 0).
inline ConvergenceTable spatial_convergence(const RunSetup& s, const std::vector<double>& hs, double tau = 0.0,
                                            const std::string& title = {})
{
    if (hs.empty()) throw InvalidParameter("spatial_convergence needs at least one mesh size");
    if (tau <= 0.0) tau = default_fine_tau(*std::min_element(hs.begin(), hs.end()), s.k);
    ConvergenceTable table("h", title);
    for (double h : hs) {
        auto mesh = std::make_shared<const PolyMesh>(make_family_mesh(s.family, h, s.mesh));
        const SingleRun r = run_manufactured(s, mesh, tau);
        table.add(h, r.errors.l2, r.errors.h1, r.dofs, r.seconds);
    }
    return table;
}

/// Temporal study on one fixed mesh of nominal size h.
inline ConvergenceTable temporal_convergence(const RunSetup& s, double h, const std::vector<double>& taus,
                                             const std::string& title = {})
{
    if (taus.empty()) throw InvalidParameter("temporal_convergence needs at least one time step");
    auto mesh = std::make_shared<const PolyMesh>(make_family_mesh(s.family, h, s.mesh));
    ConvergenceTable table("tau", title);
    for (double tau : taus) {
        const SingleRun r = run_manufactured(s, mesh, tau);
        table.add(tau, r.errors.l2, r.errors.h1, r.dofs, r.seconds);
    }
    return table;
}

/// Relative change of the finest-level L2 error when tau is halved; small values mean
/// the spatial error dominates.
inline double tau_sensitivity(const RunSetup& s, double h, double tau)
{
    auto mesh = std::make_shared<const PolyMesh>(make_family_mesh(s.family, h, s.mesh));
    const double e1 = run_manufactured(s, mesh, tau).errors.l2;
    const double e2 = run_manufactured(s, mesh, tau / 2.0).errors.l2;
    return std::abs(e1 - e2) / e2;
}

struct ProjectionTables {
    ConvergenceTable l2_projection{"h", "L2 projection"};
    ConvergenceTable ritz{"h", "Ritz projection"};
};

/// Errors of the L2 and Ritz projections of u(., 0) over a sequence of meshes.
inline ProjectionTables projection_convergence(const RunSetup& s, const std::vector<double>& hs)
{
    const ManufacturedCase mc(s.example, s.params);
    const double penalty = s.penalty > 0.0 ? s.penalty : default_penalty(s.k);
    ProjectionTables t;
    for (double h : hs) {
        auto mesh = std::make_shared<const PolyMesh>(make_family_mesh(s.family, h, s.mesh));
        const BrokenSpace space(mesh, s.k);
        const FieldCoefficients pi = l2_project(space, [&](Vec2 p) { return mc.u(p, 0.0); });
        const ErrorPair ep = final_errors(space, pi.values, mc, 0.0);
        t.l2_projection.add(h, ep.l2, ep.h1, space.num_dofs());
        const SparseComplexMatrix A = assemble_sipg(space, penalty);
        const FieldCoefficients r = ritz_project(
            space, A, penalty, [&](Vec2 p) { return mc.u(p, 0.0); }, [&](Vec2 p) { return mc.grad(p, 0.0); }, s.solver);
        const ErrorPair er = final_errors(space, r.values, mc, 0.0);
        t.ritz.add(h, er.l2, er.h1, space.num_dofs());
    }
    return t;
}

/// Norm history of a run with the stability verdict.
struct StabilityReport {
    std::vector<HistoryEntry> history;
    double initial = 0.0;
    double peak = 0.0;
    double final = 0.0;
    double bound = 0.0;          ///< C1 ||u_h^0||
    bool bound_checked = false;  ///< only runs without data carry the C1 estimate
    bool bound_ok = true;
    int decreasing_from = -1;    ///< first n after which the norm never grows, -1 if none
    bool eventually_decreasing = false;

    bool passed() const { return bound_ok && eventually_decreasing; }

    nlohmann::json to_json() const
    {
        return {{"initial_l2", initial}, {"max_l2", peak},         {"final_l2", final},
                {"bound", bound},        {"bound_checked", bound_checked}, {"bound_ok", bound_ok},
                {"decreasing_from", decreasing_from}, {"eventually_decreasing", eventually_decreasing},
                {"pass", passed()}};
    }
};

/// Index from which the sequence is non-increasing. Counts as "eventually" when that
/// index lies in the first half of the run and the final value is below the peak.
inline StabilityReport summarize_history(const RunResult& r)
{
    StabilityReport rep;
    rep.history = r.history;
    if (r.history.empty()) return rep;
    rep.initial = r.history.front().l2;
    rep.final = r.history.back().l2;
    for (const auto& e : r.history) rep.peak = std::max(rep.peak, e.l2);
    rep.bound_checked = r.bound_checked;
    rep.bound = r.stability_bound * rep.initial;
    rep.bound_ok = !r.bound_checked || r.bound_satisfied;
    int from = static_cast<int>(r.history.size()) - 1;
    while (from > 0 && r.history[static_cast<std::size_t>(from)].l2 <= r.history[static_cast<std::size_t>(from - 1)].l2) --from;
    rep.decreasing_from = from;
    rep.eventually_decreasing = 2 * from <= static_cast<int>(r.history.size()) && rep.final < rep.peak;
    return rep;
}

/// Runs the manufactured problem on one mesh and reports the norm history.
inline StabilityReport stability_run(const RunSetup& s, double h, double tau, bool zero_source)
{
    const ManufacturedCase mc(s.example, s.params);
    auto mesh = std::make_shared<const PolyMesh>(make_family_mesh(s.family, h, s.mesh));
    auto space = std::make_shared<const BrokenSpace>(std::move(mesh), s.k);
    Stepper stepper(space, mc.problem(s.penalty, zero_source), scheme_for(s.theta, tau, s.T), s.solver);
    return summarize_history(stepper.run());
}

} // namespace polydg
