#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "polydg/polydg.hpp"

using namespace polydg;

TEST(Manufactured, ExampleOneValues)
{
    const ManufacturedCase mc(ExampleId::example1, ModelParams{});
    const double s = std::sin(0.5) * 0.5;
    EXPECT_NEAR(std::abs(mc.u({0.5, 0.5}, 0.0) - Complex(s * s, 0.0)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(mc.u({0.5, 0.5}, std::numbers::pi / 2) - Complex(0.0, s * s)), 0.0, 1e-15);
    for (double t : {0.0, 0.7})
        for (double x : {0.0, 0.3, 1.0}) {
            EXPECT_EQ(std::abs(mc.u({x, 0.0}, t)), 0.0);
            EXPECT_EQ(std::abs(mc.u({0.0, x}, t)), 0.0);
            EXPECT_LT(std::abs(mc.u({x, 1.0}, t)), 1e-16);
            EXPECT_LT(std::abs(mc.u({1.0, x}, t)), 1e-16);
        }
}

TEST(Manufactured, ExampleTwoVanishesOnTheUnitCircle)
{
    const ManufacturedCase mc(ExampleId::example2, ModelParams{});
    for (double a = 0.0; a < 6.3; a += 0.4) EXPECT_LT(std::abs(mc.u({std::cos(a), std::sin(a)}, 0.3)), 1e-15);
    EXPECT_NEAR(std::abs(mc.u({0.0, 0.0}, 0.0) - Complex(0.0, std::sin(-1.0))), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(mc.u({0.0, 0.0}, 1.0)), std::sin(1.0) * std::exp(-1.0), 1e-15);
}

TEST(Manufactured, SourceMatchesFiniteDifferences)
{
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(0.05, 0.95), ang(0.0, 2 * std::numbers::pi), t(0.05, 1.0);
    for (ExampleId id : {ExampleId::example1, ExampleId::example2}) {
        ModelParams p;
        p.alpha = 0.7;
        p.beta = -0.4;
        p.gamma = 1.3;
        const ManufacturedCase mc(id, p);
        for (int i = 0; i < 100; ++i) {
            Vec2 x{u(rng), u(rng)};
            if (id == ExampleId::example2) {
                const double r = 0.95 * std::sqrt(u(rng)), a = ang(rng);
                x = {r * std::cos(a), r * std::sin(a)};
            }
            const double ti = t(rng);
            const Complex f = mc.source(x, ti);
            EXPECT_LT(std::abs(f - oracle::fd_source(mc, x, ti)), 1e-5 * std::max(1.0, std::abs(f)));
        }
    }
}

TEST(Manufactured, GradientMatchesFiniteDifferences)
{
    const double d = 1e-6;
    for (ExampleId id : {ExampleId::example1, ExampleId::example2}) {
        const ManufacturedCase mc(id, ModelParams{});
        for (Vec2 p : {Vec2{0.2, 0.3}, Vec2{0.6, -0.1}, Vec2{0.45, 0.5}}) {
            const auto g = mc.grad(p, 0.4);
            EXPECT_LT(std::abs(g[0] - (mc.u({p.x + d, p.y}, 0.4) - mc.u({p.x - d, p.y}, 0.4)) / (2 * d)), 1e-8);
            EXPECT_LT(std::abs(g[1] - (mc.u({p.x, p.y + d}, 0.4) - mc.u({p.x, p.y - d}, 0.4)) / (2 * d)), 1e-8);
        }
    }
}

TEST(Manufactured, FinalErrorsOfTheZeroFieldAreTheExactNorms)
{
    // ||u(T)||_L2 of example 1 at T = 0: (int_0^1 sin^2 x (1-x)^2 dx)^2
    const BrokenSpace space(std::make_shared<const PolyMesh>(generate_structured_nonconvex(8)), 3);
    const ManufacturedCase mc(ExampleId::example1, ModelParams{});
    const ErrorPair e = final_errors(space, space.zero_field().values, mc, 0.0);
    std::vector<double> x, w;
    oracle::gauss01(20, x, w);
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * std::pow(std::sin(x[i]) * (1 - x[i]), 2);
    EXPECT_NEAR(e.l2, s, 1e-12);
    EXPECT_GT(e.h1, 0.0);
    // the error of the exact field's projection is small compared with the field itself
    const FieldCoefficients pu = l2_project(space, [&](Vec2 p) { return mc.u(p, 0.0); });
    EXPECT_LT(final_errors(space, pu.values, mc, 0.0).l2, 1e-3 * e.l2);
}

TEST(ConvergenceTable, SyntheticOrdersAreExact)
{
    ConvergenceTable t("h", "synthetic");
    for (double h : {0.5, 0.25, 0.125, 0.0625}) t.add(h, 3.0 * std::pow(h, 2.0), 0.5 * std::pow(h, 1.0));
    for (std::size_t i = 1; i < t.rows().size(); ++i) {
        EXPECT_NEAR(*t.rows()[i].l2_order, 2.0, 1e-12);
        EXPECT_NEAR(*t.rows()[i].h1_order, 1.0, 1e-12);
    }
    EXPECT_NEAR(t.fitted_l2_order(), 2.0, 1e-12);
    EXPECT_NEAR(t.fitted_h1_order(), 1.0, 1e-12);
    EXPECT_NEAR(ConvergenceTable::order(1.0, 1.0 / 8, 0.3, 0.15), 3.0, 1e-12);
}

TEST(ConvergenceTable, SingleRowHasNoOrders)
{
    ConvergenceTable t;
    t.add(0.5, 1.0, 1.0);
    EXPECT_FALSE(t.finest_l2_order());
    EXPECT_FALSE(t.rows()[0].h1_order);
    EXPECT_TRUE(std::isnan(t.fitted_l2_order()));
    EXPECT_THROW(t.add(0.5, 0.1, 0.1), InvalidParameter);
}

TEST(ConvergenceTable, CsvAndMarkdownLayout)
{
    ConvergenceTable t("tau", "T");
    t.add(0.5, 1e-2, 1e-1, 30);
    t.add(0.25, 2.5e-3, 5e-2, 30);
    std::ostringstream csv, md;
    t.write_csv(csv);
    EXPECT_EQ(csv.str(), "tau,l2_error,l2_order,h1_error,h1_order,dofs\r\n0.5,0.01,,0.1,,30\r\n0.25,0.0025,2,0.05,1,30\r\n");
    t.write_markdown(md);
    std::istringstream lines(md.str());
    std::string line;
    std::vector<std::size_t> widths;
    while (std::getline(lines, line))
        if (!line.empty() && line[0] == '|') {
            std::size_t n = 0;
            for (unsigned char c : line) n += (c & 0xC0) != 0x80;
            widths.push_back(n);
        }
    ASSERT_EQ(widths.size(), 4u);
    for (std::size_t w : widths) EXPECT_EQ(w, widths[0]);
    EXPECT_NE(md.str().find("| 1/4 "), std::string::npos);
    EXPECT_EQ(format_size(1.0 / 16), "1/16");
    EXPECT_EQ(format_size(0.3), "0.3");
}

TEST(Lemmas, PropertySuitePasses)
{
    LemmaOptions o;
    o.trials = 300;
    o.fields = 20;
    const LemmaReport r = lemma_property_suite(o);
    EXPECT_TRUE(r.passed()) << r.to_json().dump(2);
    EXPECT_EQ(r.lemma1_trials, 300);
    EXPECT_EQ(r.lemma3_max_ratio.size(), 3u);
    EXPECT_TRUE(r.to_json()["pass"].get<bool>());
}

TEST(Lemmas, NegativeControlFails)
{
    LemmaOptions o;
    o.trials = 100;
    o.negative_control = true;
    o.subdivisions = {};
    const LemmaReport r = lemma_property_suite(o);
    EXPECT_GE(r.lemma1_failures, 1);
    EXPECT_FALSE(r.passed());
    EXPECT_FALSE(r.counterexamples.empty());
}

TEST(Lemmas, CrankNicolsonEnergyIdentityIsSharp)
{
    // at theta = 1/2 the energy inequality holds with equality
    std::mt19937_64 rng(5);
    const auto v = detail::random_sequence(rng, 4, 6);
    const Stencil s = stencils(0.5);
    const double tau = 0.01;
    for (std::size_t n = 2; n < v.size(); ++n) {
        const ComplexVector D = (s.d0 * v[n] + s.d1 * v[n - 1] + s.d2 * v[n - 2]) / (2 * tau);
        const ComplexVector avg = s.a0 * v[n] + s.a1 * v[n - 1];
        const double lhs = avg.dot(D).real();
        const double rhs = (detail::energy_functional(v, n, 0.5) - detail::energy_functional(v, n - 1, 0.5)) / (4 * tau);
        EXPECT_NEAR(lhs, rhs, 1e-10 * std::abs(lhs));
    }
}

TEST(Lemmas, InverseInequalityRatioIsMeshIndependent)
{
    std::vector<double> r;
    for (std::size_t n : {8u, 16u, 32u}) {
        std::mt19937_64 rng(3);
        const BrokenSpace space(std::make_shared<const PolyMesh>(generate_structured_nonconvex(n)), 1);
        r.push_back(inverse_inequality_ratio(space, rng, 20));
    }
    const auto [lo, hi] = std::minmax_element(r.begin(), r.end());
    EXPECT_LT((*hi - *lo) / *hi, 0.15);
}

TEST(Config, ParsesFractionsAndDefaults)
{
    const auto j = nlohmann::json::parse(R"({
        "study": "convergence", "example": 1, "family": "voronoi", "k": 2, "theta": "1/4",
        "h": ["1/2", 0.25, "1/8"], "gate": {"l2": [2.8, 3.2], "h1": [1.85, 2.15]}})");
    const StudyConfig c = config_from_json(j);
    EXPECT_EQ(c.family, MeshFamily::voronoi);
    EXPECT_DOUBLE_EQ(c.theta, 0.25);
    ASSERT_EQ(c.hs.size(), 3u);
    EXPECT_DOUBLE_EQ(c.hs[2], 0.125);
    EXPECT_DOUBLE_EQ(c.resolved_penalty(), preset_penalty(MeshFamily::voronoi, 2));
    EXPECT_DOUBLE_EQ(c.resolved_penalty(), 18.0);
    EXPECT_EQ(c.gate.scope, "finest");
    EXPECT_NO_THROW(c.validate());
    EXPECT_EQ(c.hash().size(), 16u);
    EXPECT_EQ(c.hash(), config_from_json(j).hash());
    auto j2 = j;
    j2["k"] = 1;
    EXPECT_NE(c.hash(), config_from_json(j2).hash());
    // the canonical form parses back to the same config
    EXPECT_EQ(config_from_json(c.to_json()).hash(), c.hash());
}

TEST(Config, ExampleTwoDefaultsToTheDisk)
{
    const StudyConfig c = config_from_json(nlohmann::json::parse(R"({"study": "stability", "example": "example2", "h": "1/30", "tau": 0.01})"));
    EXPECT_EQ(c.family, MeshFamily::disk);
    EXPECT_NEAR(c.h, 1.0 / 30, 1e-15);
    EXPECT_NO_THROW(c.validate());
}

TEST(Config, RejectsBadInput)
{
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"stduy": "convergence"})")), ParseError);
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"h": ["1/x"]})")), ParseError);
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"family": "hexagons"})")), ParseError);
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"gate": {"l2": [1]}})")), ParseError);
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"gate": {"scope": "some"}})")), ParseError);
    EXPECT_THROW(config_from_json(nlohmann::json::parse("[1, 2]")), ParseError);
    EXPECT_THROW(read_config("/nonexistent/config.json"), ParseError);

    StudyConfig c;
    EXPECT_THROW(c.validate(), InvalidParameter); // convergence without levels
    c.hs = {0.5, 0.25};
    c.k = 4;
    EXPECT_THROW(c.validate(), InvalidParameter);
    c.k = 1;
    c.example = ExampleId::example2;
    EXPECT_THROW(c.validate(), InvalidParameter);
}

TEST(Config, ShippedConfigsParseAndValidate)
{
    for (const char* name : {"table1", "table2", "table3", "table4", "table5", "table6", "table7", "table8", "table9", "table10",
                             "table11", "table12", "fig5"}) {
        const StudyConfig c = read_config(std::string(POLYDG_CONFIG_DIR) + "/" + name + ".json");
        EXPECT_NO_THROW(c.validate()) << name;
        if (c.study == "convergence") EXPECT_FALSE(c.gate.empty()) << name;
    }
}

TEST(Gate, FinestAndAllScopes)
{
    ConvergenceTable t;
    t.add(0.5, 1.0, 1.0);
    t.add(0.25, 0.5, 0.5);     // order 1
    t.add(0.125, 0.125, 0.25); // order 2 and 1
    GateSpec g;
    g.l2 = OrderGate{1.8, 2.2};
    EXPECT_TRUE(evaluate_gate(g, t).pass);
    g.scope = "all";
    EXPECT_FALSE(evaluate_gate(g, t).pass);
    g.max_size = 0.125;
    EXPECT_TRUE(evaluate_gate(g, t).pass);
    g.h1 = OrderGate{1.8, 2.2};
    const GateOutcome o = evaluate_gate(g, t);
    EXPECT_FALSE(o.pass);
    EXPECT_EQ(o.detail.size(), 2u);

    ConvergenceTable one;
    one.add(0.5, 1.0, 1.0);
    EXPECT_FALSE(evaluate_gate(g, one).pass);
    EXPECT_TRUE(evaluate_gate(GateSpec{}, one).pass);
}

TEST(Stability, SummaryOfAHistory)
{
    RunResult r;
    for (int n = 0; n <= 10; ++n) {
        const double v = n < 3 ? 1.0 + 0.1 * n : 1.2 * std::exp(-0.2 * (n - 2));
        r.history.push_back({n, 0.1 * n, v});
    }
    r.bound_checked = true;
    r.bound_satisfied = true;
    r.stability_bound = std::sqrt(24.0);
    StabilityReport s = summarize_history(r);
    EXPECT_EQ(s.decreasing_from, 2);
    EXPECT_TRUE(s.eventually_decreasing);
    EXPECT_DOUBLE_EQ(s.peak, 1.2);
    EXPECT_DOUBLE_EQ(s.bound, std::sqrt(24.0));
    EXPECT_TRUE(s.passed());

    r.history.back().l2 = 5.0; // a late rise
    s = summarize_history(r);
    EXPECT_FALSE(s.eventually_decreasing);
    EXPECT_FALSE(s.passed());
}

TEST(Stability, ZeroSourceDiskRunDecays)
{
    RunSetup s;
    s.example = ExampleId::example2;
    s.family = MeshFamily::disk;
    s.theta = 0.25;
    s.penalty = preset_penalty(MeshFamily::disk, 1);
    const StabilityReport r = stability_run(s, 0.25, 0.05, true);
    EXPECT_TRUE(r.bound_checked);
    EXPECT_TRUE(r.passed()) << r.to_json().dump();
    EXPECT_LT(r.final, r.initial);
}
