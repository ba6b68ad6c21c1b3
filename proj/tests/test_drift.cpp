#include "fbdrift/common/errors.hpp"
#include "fbdrift/drift/drift_spec.hpp"
#include "fbdrift/drift/form_bound.hpp"
#include "fbdrift/drift/mollified_field.hpp"
#include "fbdrift/drift/norms.hpp"
#include "fbdrift/drift/scalar_field.hpp"
#include "fbdrift/drift/test_functions.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace fbd;
using namespace fbd::drift;

namespace {

std::vector<double> at(const DriftSpec& b, std::vector<double> x, double t = 0.0) { return eval_drift(b, t, x); }

// Values computed offline with mpmath (30 digits) and frozen here.
constexpr double kSobolevC3 = 0.18255157148718101;     // 1 / (pi d (d-2) (Gamma(d/2)/Gamma(d))^{2/d}), d = 3
constexpr double kBallCubeRoot = 1.6119919540164696;   // (4 pi / 3)^{1/3}
constexpr double kKernelMass3 = 0.38297558499847191;   // int_{B_1 in R^4} exp(-1/(1-|z|^2))
constexpr double kKernelBar0 = 0.44399381616807944;    // int_{-1}^{1} exp(-1/(1-t^2)) dt
constexpr double kKernelBarHalf = 0.25444973308017833;

}  // namespace

TEST_CASE("eval: examples") {
    CHECK(at(DriftSpec::zero(3), {0.3, -2.0, 7.0}) == std::vector<double>{0, 0, 0});
    const auto h = DriftSpec::hardy(0.5, 3, 4.0);
    const auto v = at(h, {1, 0, 0});
    CHECK(v[0] == doctest::Approx(-0.5).epsilon(1e-15));
    CHECK(v[1] == 0.0);
    CHECK(at(DriftSpec::scaled(2.0, h), {1, 0, 0})[0] == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK_THROWS_AS(at(h, {1, 0}), InvalidArgument);
}

TEST_CASE("eval: the Hardy field is regularized to zero at the origin") {
    CHECK(at(DriftSpec::hardy(1.0, 3), {0, 0, 0}) == std::vector<double>{0, 0, 0});
    std::vector<double> g(9);
    std::vector<double> o{0, 0, 0};
    CHECK_THROWS_AS(DriftSpec::hardy(1.0, 3).grad(0.0, o, g), DomainError);
}

TEST_CASE("eval: exact zero outside the cutoff radius for every kind") {
    const double R = 1.5;
    std::vector<DriftSpec> kinds{
        DriftSpec::zero(3, R),
        DriftSpec::hardy(1.0, 3, R),
        DriftSpec::linear({1, 2, 3, 4, 5, 6, 7, 8, 9}, 3, R),
        DriftSpec::constant({1, 1, 1}, R),
        DriftSpec::indicator_ball({1, 0, 0}, 3.0, R),
        DriftSpec::scaled(3.0, DriftSpec::hardy(1.0, 3, R)),
        DriftSpec::sum(DriftSpec::constant({1, 0, 0}, R), DriftSpec::hardy(0.2, 3, R)),
        DriftSpec::mollified(DriftSpec::hardy(1.0, 3, R), 10.0, 0.05, 0.9),
    };
    for (const auto& b : kinds) {
        // Mollification widens the support by its width.
        const double s = b.kind() == DriftKind::Mollified ? R + b.width() : R;
        for (const auto& x : {std::vector<double>{s, 0, 0}, {0.6 * s, 0.8 * s, 0.0}, {0, 0, -9.0}, {2.0, 2.0, 2.0}}) {
            CAPTURE(std::string(to_string(b.kind())));
            CHECK(at(b, x) == std::vector<double>{0, 0, 0});
        }
    }
}

TEST_CASE("cutoff is C2 with value one on the inner half") {
    CHECK(cutoff_value(0.49, 1.0) == 1.0);
    CHECK(cutoff_value(1.0, 1.0) == 0.0);
    CHECK(cutoff_value(0.75, 1.0) == doctest::Approx(0.5));
    const double h = 1e-5;
    for (double r : {0.55, 0.7, 0.9}) {
        const double fd = (cutoff_value(r + h, 1.0) - cutoff_value(r - h, 1.0)) / (2 * h);
        CHECK(cutoff_derivative(r, 1.0) == doctest::Approx(fd).epsilon(1e-8));
    }
    CHECK(cutoff_derivative(0.5, 1.0) == 0.0);
    CHECK(cutoff_derivative(1.0, 1.0) == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("grad: examples") {
    std::vector<double> x{0.1, 0.2, -0.1};
    for (double v : grad_drift(DriftSpec::zero(3), 0.0, x)) CHECK(v == 0.0);
    const auto J = grad_drift(DriftSpec::linear({-1, 0, 0, 0, -1, 0, 0, 0, -1}, 3, 2.0), 0.0, x);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(J[i * 3 + j] == (i == j ? -1.0 : 0.0));
}

TEST_CASE("grad: analytic Jacobians agree with central differences") {
    const auto check = [](const DriftSpec& b, std::vector<double> x, double step, double tol) {
        const auto J = grad_drift(b, 0.0, x);
        for (int j = 0; j < 3; ++j) {
            auto xp = x, xm = x;
            xp[j] += step;
            xm[j] -= step;
            const auto fp = eval_drift(b, 0.0, xp), fm = eval_drift(b, 0.0, xm);
            for (int i = 0; i < 3; ++i) CHECK(J[i * 3 + j] == doctest::Approx((fp[i] - fm[i]) / (2 * step)).epsilon(tol));
        }
    };
    check(DriftSpec::hardy(0.7, 3, 2.0), {0.6, 0.5, -0.4}, 1e-5, 1e-7);
    check(DriftSpec::rescaled(2.0, DriftSpec::hardy(0.7, 3, 2.0)), {0.3, 0.25, -0.2}, 1e-5, 1e-7);
    // Mollified Hardy away from the origin: tabulated profile with spline derivative.
    check(DriftSpec::mollified(DriftSpec::hardy(1.0, 3, 2.0), 100.0, 0.01, 0.99), {0.5, 0.2, 0.1}, 1e-4, 1e-5);
}

TEST_CASE("retimed and rescaled kinds") {
    const auto b = DriftSpec::constant({1, 0, 0}).with_envelope(TimeEnvelope::ramp(0.0, 1.0));
    const auto r = DriftSpec::retimed(b, 0.2, 1.0);
    // On [0, 0.8] the clock runs backwards from 1.0; afterwards it continues at t - 0.8.
    CHECK(at(r, {0, 0, 0}, 0.3)[0] == doctest::Approx(0.7));
    CHECK(at(r, {0, 0, 0}, 0.9)[0] == doctest::Approx(0.1));
    const auto h = DriftSpec::hardy(1.0, 3);
    CHECK(at(DriftSpec::rescaled(4.0, h), {0.5, 0, 0})[0] == doctest::Approx(4.0 * at(h, {2.0, 0, 0})[0]));
}

TEST_CASE("serialization round trip preserves evaluation") {
    const auto b = DriftSpec::sum(DriftSpec::scaled(0.5, DriftSpec::hardy(1.0, 3, 2.0)),
                                  DriftSpec::linear({0, -1, 0, 1, 0, 0, 0, 0, 0}, 3, 1.0))
                       .with_envelope(TimeEnvelope::cosine(0.5, 3.0));
    const auto j = DriftSpec::from_json(b.to_json());
    const auto t = DriftSpec::from_text(b.to_text());
    CHECK(j.id() == b.id());
    CHECK(t.id() == b.id());
    for (const auto& x : {std::vector<double>{0.3, 0.1, 0.2}, {0.7, -0.2, 0.0}}) {
        CHECK(at(j, x, 0.4) == at(b, x, 0.4));
        CHECK(at(t, x, 0.4) == at(b, x, 0.4));
    }
    CHECK_THROWS_AS(DriftSpec::from_json({{"kind", "nonsense"}}), ConfigError);
}

TEST_CASE("hardy_delta") {
    CHECK(hardy_delta(0.5, 3) == 1.0);
    CHECK(hardy_delta(0.0, 5) == 0.0);
    CHECK(hardy_delta(1.0, 4) == 1.0);
    CHECK(hardy_coefficient(hardy_delta(0.37, 5), 5) == doctest::Approx(0.37).epsilon(1e-15));
    CHECK_THROWS_AS(hardy_delta(1.0, 2), InvalidArgument);
}

TEST_CASE("form bound: zero drift") {
    const auto rep = estimate_form_bound(DriftSpec::zero(3), reference_family(3, 1.0));
    CHECK(rep.delta_hat == 0.0);
    CHECK_FALSE(rep.quotients.empty());
}

TEST_CASE("form bound: Hardy drift with quasi-optimizers") {
    const auto fam = hardy_quasi_family(3, 1.8);
    for (double c : {0.25, 0.5, 1.0}) {
        const auto rep = estimate_form_bound(DriftSpec::hardy(c, 3, 4.0), fam);
        const double delta = hardy_delta(c, 3);
        CAPTURE(c);
        CHECK(rep.delta_hat >= 0.8 * delta);
        // Every quotient is a lower bound up to the quadrature tolerance.
        for (const auto& q : rep.quotients) CHECK(q.value <= delta * (1.0 + 1e-3));
    }
}

TEST_CASE("form bound: quadratic homogeneity is exact") {
    const auto fam = reference_family(3, 0.5);
    const auto b = DriftSpec::hardy(0.3, 3, 1.0);
    const double base = estimate_form_bound(b, fam).delta_hat;
    CHECK(estimate_form_bound(DriftSpec::scaled(2.0, b), fam).delta_hat == 4.0 * base);
    const auto lin = DriftSpec::linear({0, 1, 0, -1, 0, 0, 0, 0, 0.5}, 3, 1.0);
    const double lb = estimate_form_bound(lin, fam).delta_hat;
    CHECK(estimate_form_bound(DriftSpec::scaled(3.0, lin), fam).delta_hat == doctest::Approx(9.0 * lb).epsilon(1e-14));
}

TEST_CASE("form bound of a scalar potential") {
    const auto fam = reference_family(3, 0.5);
    CHECK(estimate_form_bound(ScalarField::zero(3), fam).delta_hat == 0.0);
    const auto f = ScalarField::gaussian(3, 0.2);
    CHECK(estimate_form_bound(f.scaled(2.0), fam).delta_hat ==
          doctest::Approx(4.0 * estimate_form_bound(f, fam).delta_hat).epsilon(1e-14));
}

TEST_CASE("test-function family validation") {
    auto fam = hardy_quasi_family(3, 1.0);
    CHECK_NOTHROW(fam.validate());
    TestFunctionFamily empty;
    CHECK_THROWS(empty.validate());
}

TEST_CASE("sobolev_delta") {
    CHECK(sobolev_constant(3) == doctest::Approx(kSobolevC3).epsilon(1e-14));
    CHECK(sobolev_delta(DriftSpec::zero(3), 3).delta == 0.0);
    const auto ind = DriftSpec::indicator_ball({1, 0, 0}, 1.0);
    const auto s = sobolev_delta(ind, 3);
    CHECK(s.delta == doctest::Approx(kSobolevC3 * kBallCubeRoot * kBallCubeRoot).epsilon(1e-9));
    CHECK(sobolev_delta(DriftSpec::scaled(3.0, ind), 3).delta == doctest::Approx(9.0 * s.delta).epsilon(1e-13));
    // |x|^{-3} is not integrable at the origin.
    CHECK_THROWS_AS(sobolev_delta(DriftSpec::hardy(1.0, 3, 1.0), 3), NumericalError);
}

TEST_CASE("morrey_norm") {
    const std::vector<std::vector<double>> o{{0, 0, 0}};
    CHECK(morrey_norm(DriftSpec::zero(3), 0.1, o, {0.5}, 0.0) == 0.0);
    const auto h = DriftSpec::hardy(1.0, 3);
    // r (3 r^{1-eps} / ((1 - eps) r^3))^{1/(2+eps)} = (3 / (1 - eps))^{1/(2+eps)}
    for (double eps : {0.25, 0.5}) {
        const double exact = std::pow(3.0 / (1.0 - eps), 1.0 / (2.0 + eps));
        CHECK(morrey_norm(h, eps, o, {0.1, 0.7}, 0.0) == doctest::Approx(exact).epsilon(1e-10));
    }
    CHECK(morrey_norm(h, 1e-6, o, {0.3}, 0.0) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-5));
    CHECK_THROWS_AS(morrey_norm(h, 0.0, o, {0.3}, 0.0), InvalidArgument);
}

TEST_CASE("morrey_norm: scale invariance") {
    const auto b = DriftSpec::linear({0, 1, 0, -1, 0, 0, 0, 0, 0.5}, 3, 1.0);
    const double lam = 2.5;
    const auto centers = default_morrey_centers(3, 1.0);
    const auto radii = default_morrey_radii(1.0, 6);
    std::vector<std::vector<double>> cs;
    std::vector<double> rs;
    for (auto c : centers) {
        for (double& v : c) v /= lam;
        cs.push_back(c);
    }
    for (double r : radii) rs.push_back(r / lam);
    const double base = morrey_norm(b, 0.5, centers, radii, 0.0);
    CHECK(morrey_norm(DriftSpec::rescaled(lam, b), 0.5, cs, rs, 0.0) == doctest::Approx(base).epsilon(1e-6));
}

TEST_CASE("weak_ld_norm") {
    CHECK(weak_ld_norm(DriftSpec::zero(3), {0.5, 1.0}, 0.0) == 0.0);
    const auto h = DriftSpec::hardy(1.0, 3);
    const double w = weak_ld_norm(h, {0.5, 2.0, 10.0}, 0.0);
    CHECK(w == doctest::Approx(kBallCubeRoot).epsilon(1e-9));
    CHECK(weak_ld_norm(DriftSpec::scaled(2.0, h), {1.0, 4.0, 20.0}, 0.0) == doctest::Approx(2.0 * w).epsilon(1e-9));
}

TEST_CASE("weak_ld_norm is dominated by the L^d norm") {
    for (const auto& b : {DriftSpec::indicator_ball({1, 0, 0}, 1.0),
                          DriftSpec::linear({1, 0, 0, 0, 1, 0, 0, 0, 1}, 3, 1.0),
                          DriftSpec::indicator_ball({0.3, 0.4, 0}, 0.7)}) {
        const double ld = lp_norm(b, 3.0, 0.0);
        for (double s : {0.01, 0.1, 0.3, 0.49, 0.9}) CHECK(weak_ld_norm(b, {s}, 0.0) <= ld * (1.0 + 1e-9));
    }
}

TEST_CASE("level sets of the Hardy field") {
    CHECK(level_set_volume(DriftSpec::hardy(1.0, 3), 4.0, 0.0) ==
          doctest::Approx(4.0 * std::numbers::pi / 3.0 / 64.0).epsilon(1e-9));
}

TEST_CASE("mollifier kernel constants") {
    CHECK(kernel_mass(3) == doctest::Approx(kKernelMass3).epsilon(1e-11));
    CHECK(kernel_marginal(0.0) == doctest::Approx(kKernelBar0).epsilon(1e-11));
    CHECK(kernel_marginal(0.5) == doctest::Approx(kKernelBarHalf).epsilon(1e-11));
    CHECK(kernel_marginal(1.0) == 0.0);
}

TEST_CASE("scalar fields") {
    const auto f = ScalarField::indicator_ball(3, 1.0, 2.0);
    CHECK(f.lp_norm(2.0, 0.0, 1.0) == doctest::Approx(std::sqrt(4.0 * 4.0 * std::numbers::pi / 3.0)).epsilon(1e-10));
    const auto g = ScalarField::gaussian(3, 0.3).at({0.1, 0.2, 0.3});
    std::vector<double> x{0.2, 0.1, 0.5}, gr(3);
    g.grad(0.0, x, gr);
    const double h = 1e-6;
    for (int i = 0; i < 3; ++i) {
        auto xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        CHECK(gr[i] == doctest::Approx((g.eval(0.0, xp) - g.eval(0.0, xm)) / (2 * h)).epsilon(1e-7));
    }
    CHECK(ScalarField::from_json(g.to_json()).eval(0.0, x) == g.eval(0.0, x));
    CHECK(ScalarField::poly_bump(3, 0.5).window(0.1, 0.2).eval(0.3, x) == 0.0);
}
