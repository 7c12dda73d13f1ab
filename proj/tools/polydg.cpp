// polydg: batch driver for meshes, solves, convergence studies, stability runs and the
// lemma property suite.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "polydg/polydg.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace polydg;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_usage = 1;
constexpr int exit_numerical = 2;
constexpr int exit_gate = 3;

struct CommonFlags {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
    std::optional<double> tol;
};

void add_common(CLI::App* cmd, CommonFlags& f, const std::string& out_help = "output directory")
{
    cmd->add_option("--config", f.config, "JSON study config")->check(CLI::ExistingFile);
    cmd->add_option("--out", f.out, out_help);
    cmd->add_option("--seed", f.seed, "RNG seed (Voronoi seeds, property trials)");
    cmd->add_option("--threads", f.threads, "worker threads for per-cell loops (0 = hardware)");
    cmd->add_option("--tol", f.tol, "relative GMRES tolerance");
}

/// Records stage timings and writes manifest.json next to the artifacts.
class Manifest {
public:
    Manifest(std::string command, std::string out_dir) : command_(std::move(command)), out_(std::move(out_dir)) {}

    template <class F>
    auto stage(const std::string& name, F&& f)
    {
        const auto t0 = std::chrono::steady_clock::now();
        struct Record {
            Manifest* m;
            std::string name;
            std::chrono::steady_clock::time_point t0;
            ~Record() { m->stages_.push_back({{"stage", name}, {"seconds", seconds_since(t0)}}); }
        } rec{this, name, t0};
        return f();
    }

    void set_config(const json& resolved, const std::string& hash)
    {
        config_ = resolved;
        hash_ = hash;
    }

    void write(int exit_code) const
    {
        if (out_.empty()) return;
        json j{{"tool", "polydg"},
               {"library_version", POLYDG_VERSION},
               {"command", command_},
               {"config_hash", hash_},
               {"config", config_},
               {"threads", num_threads()},
               {"stages", stages_},
               {"exit_code", exit_code}};
        std::ofstream(fs::path(out_) / "manifest.json") << j.dump(2) << '\n';
    }

private:
    static double seconds_since(std::chrono::steady_clock::time_point t0)
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }

    std::string command_;
    std::string out_;
    json config_ = json::object();
    std::string hash_;
    json stages_ = json::array();
};

void prepare_out(const std::string& dir)
{
    if (!dir.empty()) fs::create_directories(dir);
}

void write_text(const std::string& dir, const std::string& name, const std::string& text)
{
    if (dir.empty()) return;
    std::ofstream out(fs::path(dir) / name, std::ios::binary);
    if (!out) throw ParseError("cannot write " + (fs::path(dir) / name).string());
    out << text;
}

void apply_common(const CommonFlags& f, StudyConfig& c)
{
    if (f.seed) c.mesh.seed = *f.seed;
    if (f.tol) c.solver.tol = *f.tol;
}

void apply_threads(const CommonFlags& f)
{
    set_num_threads(f.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : f.threads);
}

StudyConfig load_config(const CommonFlags& f, const std::string& expected_study)
{
    if (f.config.empty()) throw ParseError("--config is required for " + expected_study);
    StudyConfig c = read_config(f.config);
    if (c.study != expected_study)
        throw ParseError(f.config + ": study is \"" + c.study + "\" but the subcommand expects \"" + expected_study + "\"");
    apply_common(f, c);
    c.validate();
    return c;
}

std::string table_csv(const ConvergenceTable& t)
{
    std::ostringstream o;
    t.write_csv(o);
    return o.str();
}

std::string table_markdown(const ConvergenceTable& t)
{
    std::ostringstream o;
    t.write_markdown(o);
    return o.str();
}

// ---------------------------------------------------------------------------

struct MeshFlags {
    std::string family = "nonconvex";
    std::size_t n = 8;
    int lloyd = FamilyOptions{}.lloyd_iters;
};

int cmd_mesh(const CommonFlags& f, const MeshFlags& m)
{
    if (f.out.empty()) throw ParseError("mesh needs --out <path>");
    const MeshFamily fam = parse_family(m.family);
    PolyMesh mesh;
    switch (fam) {
    case MeshFamily::quad: mesh = generate_quad_grid(m.n, m.n); break;
    case MeshFamily::nonconvex: mesh = generate_structured_nonconvex(m.n); break;
    case MeshFamily::mixed: mesh = generate_mixed(m.n); break;
    case MeshFamily::voronoi:
    case MeshFamily::disk: {
        VoronoiOptions v;
        v.n_seeds = m.n;
        v.domain = fam == MeshFamily::disk ? Domain::unit_disk : Domain::unit_square;
        v.lloyd_iters = m.lloyd;
        v.seed = f.seed.value_or(1);
        mesh = generate_voronoi(v);
        break;
    }
    }
    const MeshQualityReport q = quality_report(mesh);
    json meta{{"family", m.family}, {"n", m.n}, {"h", q.h}, {"quasi_uniformity", q.quasi_uniformity},
              {"hanging_nodes", q.has_hanging_nodes}};
    if (fam == MeshFamily::voronoi || fam == MeshFamily::disk) {
        meta["seed"] = f.seed.value_or(1);
        meta["lloyd_iters"] = m.lloyd;
    }
    const fs::path out(f.out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    write_mesh(mesh, f.out, meta);
    std::cout << "wrote " << f.out << ": " << mesh.num_cells() << " cells, " << mesh.num_edges() << " edges, h = " << q.h
              << ", rho = " << q.quasi_uniformity << '\n';
    return exit_ok;
}

// ---------------------------------------------------------------------------

struct SolveFlags {
    std::string example = "1";
    std::string family;
    int k = 1;
    double theta = 0.25;
    std::string h = "1/8";
    std::string tau = "1/100";
    double T = 1.0;
    std::optional<double> penalty;
    bool zero_source = false;
    std::string export_matrix;
};

StudyConfig solve_config(const CommonFlags& f, const SolveFlags& s, const std::string& study)
{
    if (!f.config.empty()) return load_config(f, study);
    StudyConfig c;
    c.study = study;
    c.example = parse_example(s.example);
    c.family = s.family.empty() ? (c.example == ExampleId::example2 ? MeshFamily::disk : MeshFamily::nonconvex)
                                : parse_family(s.family);
    c.k = s.k;
    c.theta = s.theta;
    c.h = parse_size(s.h, "--h");
    c.tau = parse_size(s.tau, "--tau");
    c.T = s.T;
    c.penalty = s.penalty;
    c.zero_source = s.zero_source;
    apply_common(f, c);
    c.validate();
    return c;
}

int cmd_solve(const CommonFlags& f, const SolveFlags& s)
{
    const StudyConfig c = solve_config(f, s, "solve");
    prepare_out(f.out);
    Manifest man("solve", f.out);
    man.set_config(c.to_json(), c.hash());
    const RunSetup setup = c.setup();
    const ManufacturedCase mc(c.example, c.params);

    auto mesh = man.stage("mesh", [&] { return std::make_shared<const PolyMesh>(make_family_mesh(c.family, c.h, c.mesh)); });
    auto space = man.stage("space", [&] { return std::make_shared<const BrokenSpace>(mesh, c.k); });
    Stepper stepper(space, mc.problem(setup.penalty, c.zero_source), scheme_for(c.theta, c.tau, c.T), c.solver);
    if (!s.export_matrix.empty()) write_matrix(stepper.stiffness(), s.export_matrix);
    const RunResult r = man.stage("run", [&] { return stepper.run(); });
    const ErrorPair e = final_errors(*space, r.final_field.values, mc, stepper.scheme().final_time());

    json verdict{{"dofs", space->num_dofs()},
                 {"steps", stepper.scheme().steps},
                 {"tau", stepper.scheme().tau},
                 {"final_time", stepper.scheme().final_time()},
                 {"l2_error", e.l2},
                 {"h1_error", e.h1},
                 {"gmres_iterations", r.total_iterations},
                 {"dense_fallbacks", r.dense_fallbacks},
                 {"stability", summarize_history(r).to_json()}};
    const bool ok = !r.bound_checked || r.bound_satisfied;
    verdict["pass"] = ok;
    std::cout << verdict.dump(2) << '\n';
    if (!f.out.empty()) {
        write_mesh(*mesh, (fs::path(f.out) / "mesh.json").string());
        std::ofstream(fs::path(f.out) / "field.json") << field_to_json(*space, r.final_field).dump() << '\n';
        std::ostringstream hist;
        write_history_csv(hist, r.history);
        write_text(f.out, "history.csv", hist.str());
        write_text(f.out, "verdict.json", verdict.dump(2) + "\n");
    }
    const int code = ok ? exit_ok : exit_gate;
    man.write(code);
    return code;
}

// ---------------------------------------------------------------------------

int finish_table(const CommonFlags& f, Manifest& man, const StudyConfig& c, const ConvergenceTable& t)
{
    const GateOutcome g = evaluate_gate(c.gate, t);
    json verdict{{"title", c.title}, {"table", t.to_json()}, {"gate", g.detail}, {"pass", g.pass}};
    std::cout << table_markdown(t) << '\n' << (g.pass ? "PASS" : "FAIL") << '\n';
    write_text(f.out, "table.csv", table_csv(t));
    write_text(f.out, "table.md", table_markdown(t));
    write_text(f.out, "verdict.json", verdict.dump(2) + "\n");
    const int code = g.pass ? exit_ok : exit_gate;
    man.write(code);
    return code;
}

int cmd_convergence(const CommonFlags& f)
{
    const StudyConfig c = load_config(f, "convergence");
    prepare_out(f.out);
    Manifest man("convergence", f.out);
    man.set_config(c.to_json(), c.hash());
    const ConvergenceTable t = man.stage("convergence", [&] { return spatial_convergence(c.setup(), c.hs, c.tau, c.title); });
    return finish_table(f, man, c, t);
}

int cmd_temporal(const CommonFlags& f)
{
    const StudyConfig c = load_config(f, "temporal");
    prepare_out(f.out);
    Manifest man("temporal", f.out);
    man.set_config(c.to_json(), c.hash());
    const ConvergenceTable t = man.stage("temporal", [&] { return temporal_convergence(c.setup(), c.h, c.taus, c.title); });
    return finish_table(f, man, c, t);
}

// ---------------------------------------------------------------------------

int cmd_stability(const CommonFlags& f, SolveFlags s)
{
    StudyConfig c;
    if (!f.config.empty()) {
        c = load_config(f, "stability");
    } else {
        if (s.family.empty() && parse_example(s.example) == ExampleId::example2) s.family = "disk";
        c = solve_config(f, s, "stability");
    }
    prepare_out(f.out);
    Manifest man("stability", f.out);
    man.set_config(c.to_json(), c.hash());
    const StabilityReport rep = man.stage("run", [&] { return stability_run(c.setup(), c.h, c.tau, c.zero_source); });
    json verdict = rep.to_json();
    verdict["C1"] = rep.initial > 0.0 ? rep.bound / rep.initial : 0.0;
    std::cout << verdict.dump(2) << '\n';
    std::ostringstream hist;
    write_history_csv(hist, rep.history);
    write_text(f.out, "history.csv", hist.str());
    write_text(f.out, "verdict.json", verdict.dump(2) + "\n");
    const int code = rep.passed() ? exit_ok : exit_gate;
    man.write(code);
    return code;
}

// ---------------------------------------------------------------------------

struct PropsFlags {
    int trials = 1000;
    int fields = 100;
    bool negative_control = false;
};

int cmd_props(const CommonFlags& f, const PropsFlags& p)
{
    LemmaOptions o;
    o.seed = f.seed.value_or(42);
    o.trials = p.trials;
    o.fields = p.fields;
    o.negative_control = p.negative_control;
    prepare_out(f.out);
    Manifest man("props", f.out);
    json cfg{{"seed", o.seed}, {"trials", o.trials}, {"fields", o.fields}, {"negative_control", o.negative_control}};
    man.set_config(cfg, fnv1a_hex(cfg.dump()));
    const LemmaReport rep = man.stage("props", [&] { return lemma_property_suite(o); });
    json verdict = rep.to_json();
    // the negative control passes when the reversed inequality is caught
    const bool ok = p.negative_control ? rep.lemma1_failures > 0 : rep.passed();
    verdict["pass"] = ok;
    if (verdict["counterexamples"].size() > 20) {
        verdict["counterexamples_total"] = verdict["counterexamples"].size();
        verdict["counterexamples"].erase(verdict["counterexamples"].begin() + 20, verdict["counterexamples"].end());
    }
    std::cout << verdict.dump(2) << '\n';
    write_text(f.out, "verdict.json", verdict.dump(2) + "\n");
    const int code = ok ? exit_ok : exit_gate;
    man.write(code);
    return code;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Polytopal DG solver for the complex Ginzburg-Landau equation"};
    app.set_version_flag("--version", std::string("polydg ") + POLYDG_VERSION);
    app.set_help_flag("--help", "print this help and exit");
    app.require_subcommand(1);

    CommonFlags common;

    MeshFlags mesh_flags;
    auto* mesh = app.add_subcommand("mesh", "generate a mesh family member and write it as JSON");
    add_common(mesh, common, "output mesh file");
    mesh->add_option("--family", mesh_flags.family, "nonconvex | voronoi | mixed | disk | quad")
        ->check(CLI::IsMember({"nonconvex", "voronoi", "mixed", "disk", "quad"}));
    mesh->add_option("--n", mesh_flags.n, "subdivisions per side (structured) or seed count (Voronoi)");
    mesh->add_option("--lloyd", mesh_flags.lloyd, "Lloyd relaxation sweeps for Voronoi families");

    SolveFlags solve_flags;
    auto add_solve_flags = [](CLI::App* cmd, SolveFlags& s) {
        cmd->add_option("--example", s.example, "1 or 2");
        cmd->add_option("--family", s.family, "mesh family (default nonconvex, disk for example 2)");
        cmd->add_option("--k", s.k, "polynomial degree");
        cmd->add_option("--theta", s.theta, "scheme weight in [0, 1/2]");
        cmd->add_option("--h", s.h, "nominal mesh size, e.g. 1/16");
        cmd->add_option("--tau", s.tau, "time step, e.g. 1/100");
        cmd->add_option("--T", s.T, "final time");
        cmd->add_option("--penalty", s.penalty, "SIPG penalty (default: family preset)");
        cmd->add_flag("--zero-source", s.zero_source, "drop the manufactured source and boundary data");
    };
    auto* solve = app.add_subcommand("solve", "run one manufactured problem and write the final field");
    add_common(solve, common);
    add_solve_flags(solve, solve_flags);
    solve->add_option("--export-matrix", solve_flags.export_matrix, "write the SIPG matrix as (re,im) triplets");

    auto* convergence = app.add_subcommand("convergence", "spatial convergence study");
    add_common(convergence, common);
    auto* temporal = app.add_subcommand("temporal", "temporal convergence study");
    add_common(temporal, common);

    SolveFlags stab_flags;
    stab_flags.example = "2";
    stab_flags.h = "1/30";
    stab_flags.tau = "1/100";
    auto* stability = app.add_subcommand("stability", "norm history and stability bound");
    add_common(stability, common);
    add_solve_flags(stability, stab_flags);

    PropsFlags props_flags;
    auto* props = app.add_subcommand("props", "energy, transfer and inverse-inequality property suite");
    add_common(props, common);
    props->add_option("--trials", props_flags.trials, "random trials per inequality");
    props->add_option("--fields", props_flags.fields, "random fields per mesh for the inverse inequality");
    props->add_flag("--negative-control", props_flags.negative_control, "assert the reversed energy inequality");

    CLI11_PARSE(app, argc, argv);

    try {
        apply_threads(common);
        if (mesh->parsed()) return cmd_mesh(common, mesh_flags);
        if (solve->parsed()) return cmd_solve(common, solve_flags);
        if (convergence->parsed()) return cmd_convergence(common);
        if (temporal->parsed()) return cmd_temporal(common);
        if (stability->parsed()) return cmd_stability(common, stab_flags);
        if (props->parsed()) return cmd_props(common, props_flags);
    } catch (const SolverError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return exit_numerical;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const InvalidParameter& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const GeometryError& e) {
        std::cerr << "mesh error: " << e.what() << '\n';
        return exit_usage;
    } catch (const TopologyError& e) {
        std::cerr << "mesh error: " << e.what() << '\n';
        return exit_usage;
    }
    return exit_usage;
}
