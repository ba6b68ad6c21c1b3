#include "fbdrift/drift/form_bound.hpp"

#include "fbdrift/common/errors.hpp"
#include "fbdrift/common/parallel.hpp"
#include "fbdrift/common/quadrature.hpp"
#include "fbdrift/drift/norms.hpp"

#include <chrono>
#include <cmath>
#include <functional>

namespace fbd::drift {

namespace {

struct Multiplier {
    int d = 3;
    std::function<double(double, std::span<const double>)> m2;  // |b(t,x)|^2
    bool radial = false;                                        // |b| depends on |x| only
    std::vector<double> breakpoints;
};

Multiplier multiplier_of(const DriftSpec& s) {
    Multiplier m;
    m.d = s.dimension();
    m.m2 = [s](double t, std::span<const double> x) {
        double v[kMaxDimension];
        s.eval(t, x, std::span<double>(v, s.dimension()));
        double q = 0.0;
        for (int i = 0; i < s.dimension(); ++i) q += v[i] * v[i];
        return q;
    };
    m.radial = s.radial_magnitude();
    m.breakpoints = s.radial_breakpoints();
    return m;
}

Multiplier multiplier_of(const ScalarField& f) {
    Multiplier m;
    m.d = f.dimension;
    m.m2 = [f](double t, std::span<const double> x) {
        const double v = f.eval(t, x);
        return v * v;
    };
    m.radial = f.centered() || f.kind == ScalarField::Kind::Constant || f.is_zero();
    m.breakpoints = f.breakpoints();
    return m;
}

double numerator(const Multiplier& b, const TestFunction& phi, const TestFunctionFamily& fam, double t) {
    const int d = b.d;
    std::vector<double> x(static_cast<std::size_t>(d), 0.0);
    if (phi.radial()) {
        RadialRuleOptions opt;
        opt.dimension = d;
        opt.nodes_per_segment = fam.radial_nodes;
        opt.inner_power = 4.0;
        std::vector<double> bp = b.breakpoints;
        if (phi.inner_radius() > 0.0) bp.push_back(phi.inner_radius());
        const RadialRule rule = make_radial_rule(phi.extent(), bp, opt);
        if (b.radial) {
            return sphere_area(d) * rule.integrate([&](double r) {
                const double p = phi.profile(r);
                if (p == 0.0) return 0.0;
                x[0] = r;
                return b.m2(t, x) * p * p;
            });
        }
        const SphereRule sph = make_sphere_rule(d, fam.sphere_nodes);
        return rule.integrate([&](double r) {
            const double p = phi.profile(r);
            if (p == 0.0) return 0.0;
            double s = 0.0;
            for (std::size_t k = 0; k < sph.size(); ++k) {
                auto w = sph.direction(k);
                for (int i = 0; i < d; ++i) x[i] = r * w[i];
                s += sph.weights[k] * b.m2(t, x);
            }
            return s * p * p;
        });
    }
    const double ext = phi.extent();
    std::vector<double> c = phi.center.empty() ? std::vector<double>(static_cast<std::size_t>(d), 0.0) : phi.center;
    double s = 0.0;
    for_each_tensor_cell(d, -ext, ext, fam.tensor_cells, [&](std::span<const double> y, double vol) {
        for (int i = 0; i < d; ++i) x[i] = c[i] + y[i];
        const double p = phi.value(x);
        if (p != 0.0) s += vol * b.m2(t, x) * p * p;
    });
    return s;
}

FormBoundReport estimate(const Multiplier& b, const TestFunctionFamily& fam, const std::vector<double>& times,
                         int workers) {
    const auto t_start = std::chrono::steady_clock::now();
    if (fam.members.empty()) throw InvalidArgument("test-function family is empty");
    if (times.empty()) throw InvalidArgument("no time points supplied");
    for (const auto& f : fam.members)
        if (f.dimension != b.d) throw InvalidArgument("test function '" + f.id + "' has the wrong dimension");

    const std::size_t nm = fam.members.size();
    std::vector<double> den(nm);
    parallel_for(nm, workers, [&](std::size_t i) {
        double l2 = 0.0;
        test_function_norms(fam.members[i], fam, l2, den[i]);
    });

    const std::size_t n = nm * times.size();
    std::vector<RayleighQuotient> q(n);
    parallel_for(n, workers, [&](std::size_t k) {
        const std::size_t i = k / times.size();
        const double t = times[k % times.size()];
        const auto& phi = fam.members[i];
        const double num = numerator(b, phi, fam, t);
        if (!std::isfinite(num) || !std::isfinite(den[i]) || !(den[i] > 0.0))
            throw NumericalError("form-bound quadrature failed for test function '" + phi.id + "' at t = " +
                                 std::to_string(t));
        q[k] = {phi.id, t, num / den[i], num, den[i]};
    });

    FormBoundReport rep;
    rep.family_descriptor = fam.descriptor;
    rep.quotients = std::move(q);
    rep.argmax_id = rep.quotients[0].member_id;
    rep.argmax_t = rep.quotients[0].t;
    rep.delta_hat = rep.quotients[0].value;
    for (const auto& r : rep.quotients)
        if (r.value > rep.delta_hat) {
            rep.delta_hat = r.value;
            rep.argmax_id = r.member_id;
            rep.argmax_t = r.t;
        }
    rep.provenance = fam.provenance();
    rep.provenance["times"] = times;
    rep.provenance["multiplier_radial"] = b.radial;
    rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return rep;
}

}  // namespace

nlohmann::json FormBoundReport::to_json() const {
    nlohmann::json q = nlohmann::json::array();
    for (const auto& r : quotients)
        q.push_back({{"id", r.member_id}, {"t", r.t}, {"quotient", r.value}, {"numerator", r.numerator},
                     {"denominator", r.denominator}});
    return {{"delta_hat", delta_hat},          {"family_descriptor", family_descriptor},
            {"argmax_id", argmax_id},          {"argmax_t", argmax_t},
            {"quotients", q},                  {"provenance", provenance}};
}

FormBoundReport estimate_form_bound(const DriftSpec& spec, const TestFunctionFamily& family,
                                    const std::vector<double>& times, int workers) {
    return estimate(multiplier_of(spec), family, times, workers);
}

FormBoundReport estimate_form_bound(const ScalarField& f, const TestFunctionFamily& family,
                                    const std::vector<double>& times, int workers) {
    return estimate(multiplier_of(f), family, times, workers);
}

double hardy_delta(double c, int d) {
    if (d < 3) throw InvalidArgument("hardy_delta requires d >= 3");
    if (!(c >= 0.0)) throw InvalidArgument("hardy_delta requires c >= 0");
    const double k = 2.0 * c / (d - 2);
    return k * k;
}

double hardy_coefficient(double delta, int d) {
    if (d < 3) throw InvalidArgument("hardy_coefficient requires d >= 3");
    if (!(delta >= 0.0)) throw InvalidArgument("form-bound must be >= 0");
    return 0.5 * (d - 2) * std::sqrt(delta);
}

double sobolev_constant(int d) {
    if (d < 3) throw InvalidArgument("sobolev_constant requires d >= 3");
    const double dd = d;
    const double S = 1.0 / std::sqrt(M_PI * dd * (dd - 2.0)) *
                     std::exp((std::lgamma(dd) - std::lgamma(0.5 * dd)) / dd);
    return S * S;
}

nlohmann::json SobolevEstimate::to_json() const {
    return {{"delta", delta}, {"C_S", C_S}, {"ld_norm", ld_norm}, {"t_argmax", t_argmax}};
}

SobolevEstimate sobolev_delta(const DriftSpec& spec, int d, const std::vector<double>& times) {
    if (d != spec.dimension()) throw InvalidArgument("sobolev_delta: dimension mismatch");
    if (times.empty()) throw InvalidArgument("sobolev_delta: no time points");
    SobolevEstimate e;
    e.C_S = sobolev_constant(d);
    for (double t : times) {
        const double n = lp_norm(spec, d, t);
        if (n > e.ld_norm || t == times.front()) {
            e.ld_norm = std::max(e.ld_norm, n);
            if (n >= e.ld_norm) e.t_argmax = t;
        }
    }
    e.delta = e.C_S * e.ld_norm * e.ld_norm;
    return e;
}

}  // namespace fbd::drift
