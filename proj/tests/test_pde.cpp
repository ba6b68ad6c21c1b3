#include "fbdrift/common/errors.hpp"
#include "fbdrift/drift/form_bound.hpp"
#include "fbdrift/pde/cascade.hpp"
#include "fbdrift/pde/energy.hpp"
#include "fbdrift/pde/solver.hpp"
#include "fbdrift/pde/weighted_norm.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace fbd;
using namespace fbd::pde;

namespace {

// <U(T)^2> for d_t U = 1/2 Delta U + d_1 f, U(0) = 0, f = exp(-|x|^2 / (2 * 0.04)),
// T = 0.1, d = 3 on R^3: a double time integral of Gaussian overlaps, evaluated
// offline with mpmath.
constexpr double kHeatOracle = 0.00095597839303739149;

// (int_{B_1} (1 + 0.01 |x|^2)^{-2} dx)^{1/2}, mpmath.
constexpr double kWeightedBall = 2.0344674370855998;

GridSettings settings(std::size_t n, double L, double dt = 0.0) {
    GridSettings s;
    s.grid = GridSpec{3, n, L};
    s.dt = dt;
    return s;
}

std::size_t center_node(const GridSpec& g) {
    const std::size_t c = g.intervals / 2;
    return c * g.stride(0) + c * g.stride(1) + c * g.stride(2);
}

DriftSpec small_hardy(double delta) {
    return DriftSpec::mollified(DriftSpec::hardy(drift::hardy_coefficient(delta, 3), 3, 1.0), 100.0, 0.01, 0.99);
}

CascadeConfig heat_case(std::size_t n) {
    CascadeConfig c;
    c.drift = DriftSpec::zero(3);
    c.sources = {ScalarField::gaussian(3, 0.2)};
    c.alphas = {1};
    c.T0 = 0.0;
    c.T1 = 0.1;
    c.delta_hat = 0.0;
    c.nu_hat = 0.01;
    c.grid.grid = GridSpec{3, n, 1.2};
    return c;
}

CascadeConfig hardy_case(double delta, std::size_t levels, std::size_t n, double source_radius = 0.15) {
    CascadeConfig c;
    c.drift = small_hardy(delta);
    c.sources.assign(levels, pde::calibrate_source(ScalarField::poly_bump(3, source_radius, 3), 0.0099));
    c.alphas.assign(levels, 1);
    c.T0 = 0.0;
    c.T1 = 0.2;
    c.delta_hat = delta;
    c.nu_hat = 0.0099;
    c.grid.grid = GridSpec{3, n, 0.0};
    return c;
}

}  // namespace

TEST_CASE("stable_dt takes the smallest of the three bounds") {
    const GridSpec g{3, 20, 1.0};
    const double h = 0.1;
    CHECK(stable_dt(g, 0.0, 0.0, 1.0) == doctest::Approx(h * h / 6));
    CHECK(stable_dt(g, 0.0, 0.0, 0.9) == doctest::Approx(0.9 * h * h / 6));
    CHECK(stable_dt(g, 40.0, 40.0, 1.0) == doctest::Approx(1.0 / (3 / (h * h) + 400.0)));
}

TEST_CASE("solve_terminal: zero data gives zero") {
    const auto u = solve_terminal(small_hardy(0.01), zero_source(), 0.0, 0.05, settings(12, 1.0));
    for (const auto& f : u.frames)
        for (double v : f) CHECK(v == 0.0);
    CHECK(u.backward);
    CHECK(u.times.front() == doctest::Approx(0.05));
    CHECK(u.times.back() == doctest::Approx(0.0));
}

TEST_CASE("solve_terminal: spatially constant sources are integrated exactly") {
    const auto s = settings(32, 1.0);
    const double T1 = 0.005;
    const auto u = solve_terminal(small_hardy(0.04), [](double, std::span<const double>) { return 2.0; }, 0.0, T1, s);
    // Dirichlet data reaches the center only after `intervals / 2` steps.
    REQUIRE(u.size() - 1 < s.grid.intervals / 2);
    const std::size_t c = center_node(s.grid);
    for (std::size_t k = 0; k < u.size(); ++k) CHECK(u.frames[k][c] == doctest::Approx(2.0 * (T1 - u.times[k])).epsilon(1e-12));

    const auto w = solve_terminal(DriftSpec::zero(3), [](double t, std::span<const double>) { return 1.0 + t; }, 0.0, T1, s);
    const double exact = T1 + 0.5 * T1 * T1;
    CHECK(w.frames.back()[c] == doctest::Approx(exact).epsilon(w.dt));
}

TEST_CASE("solve_terminal: stability violations are configuration errors") {
    CHECK_THROWS_AS(solve_terminal(DriftSpec::zero(3), zero_source(), 0.0, 0.1, settings(16, 1.0, 0.1)), ConfigError);
}

TEST_CASE("solve_terminal: discrete maximum principle") {
    const auto g = source_of(ScalarField::poly_bump(3, 0.4, 3).at({0.2, 0.0, -0.1}));
    const auto drift = DriftSpec::sum(small_hardy(0.04), DriftSpec::linear({0, -3, 0, 3, 0, 0, 0, 0, 0}, 3, 1.0));
    const auto u = solve_terminal(drift, g, 0.0, 0.05, settings(16, 1.0));
    double mn = 0.0, mx = 0.0;
    for (const auto& f : u.frames)
        for (double v : f) {
            mn = std::min(mn, v);
            mx = std::max(mx, v);
        }
    CHECK(mn >= 0.0);
    CHECK(mx > 0.0);
}

TEST_CASE("build_reversed_problem") {
    const double T0 = 0.04, T1 = 0.1;
    const auto b = small_hardy(0.04);
    const auto g1f = ScalarField::poly_bump(3, 0.4, 3).window(T0, T1);
    const auto rp = build_reversed_problem(b, source_of(g1f), T0, T1);
    std::vector<double> x{0.3, 0.1, -0.2};
    for (double t : {0.0, 0.03, 0.06, 0.08, 0.1}) CHECK(drift::eval_drift(rp.B, t, x) == drift::eval_drift(b, 0.0, x));
    std::vector<double> y{0.05, 0.0, 0.0};
    CHECK(rp.G(0.02, y) == g1f.eval(T1 - 0.02, y));
    for (double t : {0.061, 0.08, 0.1}) CHECK(rp.G(t, y) == 0.0);

    // U(t) = u1(T1 - t) on [0, T1 - T0].
    const auto s = settings(16, 1.0, 5e-4);
    const auto u1 = solve_terminal(b, source_of(g1f), T0, T1, s);
    const auto U = solve_initial(rp.B, rp.G, T1, s);
    for (double t : {0.02, 0.04, 0.06}) {
        const auto& a = U.at_time(t);
        const auto& c = u1.at_time(T1 - t);
        double diff = 0.0, mx = 0.0;
        for (std::size_t p = 0; p < a.size(); ++p) {
            diff = std::max(diff, std::abs(a[p] - c[p]));
            mx = std::max(mx, std::abs(c[p]));
        }
        CAPTURE(t);
        CHECK(mx > 0.0);
        CHECK(diff <= 1e-12 * mx);
    }
}

TEST_CASE("energy identity residual") {
    const auto s = settings(12, 1.0);
    const auto z = solve_initial(DriftSpec::zero(3), zero_source(), 0.05, s);
    CHECK(energy_identity_residual(z, DriftSpec::zero(3), zero_source()) == 0.0);

    // Heat evolution driven by a bump: the residual falls under refinement.
    const auto g = source_of(ScalarField::gaussian(3, 0.2));
    std::vector<double> res;
    for (std::size_t n : {12, 24}) {
        const auto u = solve_initial(DriftSpec::zero(3), g, 0.05, settings(n, 1.2));
        res.push_back(energy_identity_residual(u, DriftSpec::zero(3), g));
    }
    CHECK(res[1] < res[0] / 2.0);
}

TEST_CASE("energy terms") {
    const GridSpec g{3, 8, 1.0};
    std::vector<double> u(g.node_count(), 0.0);
    const auto e = energy_terms(g, u, {}, {});
    CHECK(e.mass_sq == 0.0);
    CHECK(e.dissipation == 0.0);
    std::fill(u.begin(), u.end(), 2.0);
    CHECK(mass_sq(g, u) == doctest::Approx(4.0 * g.cell_volume() * static_cast<double>(g.node_count())));
}

TEST_CASE("cascade constants") {
    const auto c = cascade_constants(0.01, 0.01);
    CHECK(c.eps == 5.0);
    CHECK(c.beta == 5.0);
    CHECK(c.C1 == doctest::Approx(0.6).epsilon(1e-14));
    CHECK(c.C2 == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(c.K == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(c.feasible());
    CHECK_FALSE(cascade_constants(0.2, 0.01, 100.0, 0.3).feasible());
}

TEST_CASE("cascade: infeasible constants are refused") {
    auto c = hardy_case(0.2, 2, 8);
    c.eps = 100.0;
    c.beta = 0.3;
    CHECK_THROWS_AS(run_cascade(c), InfeasibleConstants);
}

TEST_CASE("cascade: zero sources") {
    auto c = hardy_case(0.01, 3, 12);
    for (auto& f : c.sources) f = ScalarField::zero(3);
    const auto r = run_cascade(c);
    REQUIRE(r.energies.size() == 2);
    for (double e : r.energies) CHECK(e == 0.0);
    CHECK(r.U2_terminal == 0.0);

    const auto pe = product_estimate_check(c, {0.1, 0.2});
    CHECK(pe.degenerate);
    for (double v : pe.U2_by_length) CHECK(v == 0.0);
}

TEST_CASE("cascade: single level against the heat-kernel oracle") {
    const auto r16 = run_cascade(heat_case(16));
    const auto r32 = run_cascade(heat_case(32));
    const double e16 = std::abs(r16.U2_terminal / kHeatOracle - 1.0);
    const double e32 = std::abs(r32.U2_terminal / kHeatOracle - 1.0);
    CHECK(e32 < 0.03);
    CHECK(e32 < e16);
    CHECK_FALSE(r32.chain_applicable);
}

TEST_CASE("cascade: energy chain and smaller form-bounds give smaller ratios") {
    const auto r1 = run_cascade(hardy_case(0.01, 3, 20));
    const auto r4 = run_cascade(hardy_case(0.04, 3, 20));
    for (const auto* r : {&r1, &r4}) {
        CHECK(r->constants.feasible());
        for (double e : r->energies) CHECK(e >= 0.0);
        CHECK(r->ratios_ok);
        CHECK(r->chain_ok);
    }
    CHECK(r1.K_hat <= r4.K_hat);
    CHECK(r1.constants.K < r4.constants.K);
}

TEST_CASE("product estimate: linear in the interval length, geometric in n") {
    const auto pe = product_estimate_check(hardy_case(0.01, 3, 24, 0.3), {0.1, 0.2, 0.4}, {2, 3});
    REQUIRE_FALSE(pe.degenerate);
    CHECK(pe.slope_length >= 0.8);
    CHECK(pe.slope_length <= 1.2);
    CHECK(pe.decay_rate_n <= pe.K_hat * 1.2);
    CHECK(pe.decay_ok);
}

TEST_CASE("cascade config round trip and validation") {
    const auto c = hardy_case(0.01, 2, 16);
    const auto d = CascadeConfig::from_json(c.to_json());
    CHECK(d.to_json() == c.to_json());
    auto bad = c;
    bad.alphas = {1, 4};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = c;
    bad.T0 = 0.3;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("weighted norm") {
    const Lattice centered{1.0, 2.0, {}};
    const Lattice shifted{1.0, 2.0, {0.5, 0.5, 0.5}};
    CHECK(weighted_norm_rho(ScalarField::zero(3), 0.0, 1.0, 0.01, 2.0, centered) == 0.0);
    CHECK(weighted_norm_rho(DriftSpec::zero(3), 0.0, 1.0, 0.01, 2.0, centered) == 0.0);
    const auto f = ScalarField::indicator_ball(3, 1.0);
    const double c = weighted_norm_rho(f, 0.0, 1.0, 0.01, 2.0, centered);
    CHECK(c == doctest::Approx(kWeightedBall).epsilon(1e-10));
    CHECK(weighted_norm_rho(f, 0.0, 1.0, 0.01, 2.0, shifted) <= c);
    CHECK(weighted_norm_rho(DriftSpec::indicator_ball({1, 0, 0}, 1.0), 0.0, 1.0, 0.01, 2.0, centered) ==
          doctest::Approx(kWeightedBall).epsilon(1e-10));
    CHECK_THROWS_AS(weighted_norm_rho(f, 0.0, 1.0, 0.01, 1.5, centered), InvalidArgument);
    CHECK(centered.centers(3).size() == 125);
}
