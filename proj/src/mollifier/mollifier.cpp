#include "fbdrift/mollifier/mollifier.hpp"

#include "fbdrift/common/errors.hpp"
#include "fbdrift/common/quadrature.hpp"
#include "fbdrift/common/text_document.hpp"

#include <algorithm>
#include <cmath>

namespace fbd::mollifier {

using drift::kInf;
using drift::kMaxDimension;

void MollifySchedule::validate() const {
    if (levels.empty()) throw InvalidArgument("mollify schedule is empty");
    if (widths.size() != levels.size() || scales.size() != levels.size())
        throw InvalidArgument("mollify schedule: levels, widths and scales differ in length");
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (!(levels[i] > 0.0)) throw InvalidArgument("mollify schedule: levels must be positive");
        if (!(widths[i] > 0.0)) throw InvalidArgument("mollify schedule: widths must be positive");
        if (!(scales[i] > 0.0 && scales[i] <= 1.0)) throw InvalidArgument("mollify schedule: scales must lie in (0, 1]");
        if (i > 0 && !(levels[i] > levels[i - 1])) throw InvalidArgument("mollify schedule: levels must increase strictly");
        if (i > 0 && !(widths[i] < widths[i - 1])) throw InvalidArgument("mollify schedule: widths must decrease strictly");
    }
}

MollifySchedule MollifySchedule::defaults(const std::vector<double>& levels, double eps0) {
    MollifySchedule s;
    for (double m : levels) {
        s.levels.push_back(m);
        s.widths.push_back(std::min(1.0 / (m * m), eps0));
        s.scales.push_back(std::max(1.0 - 1.0 / m, 1e-3));
    }
    // widths must still decrease strictly once the eps0 cap binds
    for (std::size_t i = 1; i < s.widths.size(); ++i)
        if (!(s.widths[i] < s.widths[i - 1])) s.widths[i] = s.widths[i - 1] * (s.levels[i - 1] / s.levels[i]);
    return s;
}

MollifySchedule MollifySchedule::powers_of_two(int j0, int j1, double eps0) {
    std::vector<double> lv;
    for (int j = j0; j <= j1; ++j) lv.push_back(std::ldexp(1.0, j));
    return defaults(lv, eps0);
}

nlohmann::json MollifySchedule::to_json() const {
    return {{"levels", levels}, {"widths", widths}, {"scales", scales}, {"tolerance", tolerance}};
}

MollifySchedule MollifySchedule::from_json(const nlohmann::json& j) {
    MollifySchedule s;
    if (j.contains("levels") && !j.contains("widths")) {
        std::vector<double> lv;
        for (const auto& e : j["levels"]) lv.push_back(json_real(e));
        s = defaults(lv, j.contains("eps0") ? json_real(j["eps0"]) : 0.01);
    } else if (j.contains("powers")) {
        const auto& p = j["powers"];
        s = powers_of_two(p.at(0).get<int>(), p.at(1).get<int>(), j.contains("eps0") ? json_real(j["eps0"]) : 0.01);
    } else {
        for (const auto& e : j.at("levels")) s.levels.push_back(json_real(e));
        for (const auto& e : j.at("widths")) s.widths.push_back(json_real(e));
        if (j.contains("scales")) {
            for (const auto& e : j["scales"]) s.scales.push_back(json_real(e));
        } else {
            for (double m : s.levels) s.scales.push_back(std::max(1.0 - 1.0 / m, 1e-3));
        }
    }
    if (j.contains("tolerance")) s.tolerance = json_real(j["tolerance"]);
    s.validate();
    return s;
}

DriftSpec cutoff_by_level(const DriftSpec& spec, double m) {
    if (!(m > 0.0)) throw InvalidArgument("cutoff level must be positive");
    if (spec.kind() == drift::DriftKind::Zero) return spec;
    return DriftSpec::mollified(spec, m, 0.0, 1.0);
}

DriftSpec friedrichs_mollify(const DriftSpec& spec, double eps) {
    if (!(eps > 0.0)) throw InvalidArgument("mollifier width must be positive");
    if (spec.kind() == drift::DriftKind::Zero) return spec;
    return DriftSpec::mollified(spec, kInf, eps, 1.0);
}

DriftSpec approximant(const DriftSpec& spec, double m, double eps, double c_m) {
    if (spec.kind() == drift::DriftKind::Zero) return spec;
    return DriftSpec::mollified(spec, m, eps, c_m);
}

double l2_distance_sq(const DriftSpec& a, const DriftSpec& b, double L, double T) {
    if (a.dimension() != b.dimension()) throw InvalidArgument("l2_distance: dimension mismatch");
    if (!(L > 0.0) || !(T >= 0.0)) throw InvalidArgument("l2_distance: invalid box or horizon");
    const int d = a.dimension();
    std::vector<double> tn, tw;
    if (a.time_constant() && b.time_constant()) {
        tn = {0.0};
        tw = {T};
    } else {
        const Rule1D g = gauss_legendre(16, 0.0, T);
        tn = g.nodes;
        tw = g.weights;
    }
    double va[kMaxDimension], vb[kMaxDimension];
    auto diff2 = [&](double t, std::span<const double> x) {
        a.eval(t, x, std::span<double>(va, d));
        b.eval(t, x, std::span<double>(vb, d));
        double s = 0.0;
        for (int i = 0; i < d; ++i) s += (va[i] - vb[i]) * (va[i] - vb[i]);
        return s;
    };
    const double Rs = std::max(a.support_radius(), b.support_radius());
    double total = 0.0;
    if (a.rotation_equivariant() && b.rotation_equivariant() && Rs <= L) {
        if (Rs == 0.0) return 0.0;
        auto bp = a.radial_breakpoints();
        const auto bq = b.radial_breakpoints();
        bp.insert(bp.end(), bq.begin(), bq.end());
        RadialRuleOptions opt;
        opt.dimension = d;
        opt.inner_power = 4.0;
        opt.nodes_per_segment = 256;
        const RadialRule rule = make_radial_rule(Rs, bp, opt);
        std::vector<double> x(static_cast<std::size_t>(d), 0.0);
        for (std::size_t k = 0; k < tn.size(); ++k)
            total += tw[k] * sphere_area(d) * rule.integrate([&](double r) {
                x[0] = r;
                return diff2(tn[k], x);
            });
    } else {
        const double H = std::min(L, Rs);
        for (std::size_t k = 0; k < tn.size(); ++k)
            for_each_tensor_cell(d, -H, H, 48, [&](std::span<const double> x, double vol) {
                total += tw[k] * vol * diff2(tn[k], x);
            });
    }
    if (!std::isfinite(total)) throw NumericalError("l2_distance: non-finite quadrature");
    return total;
}

double sampled_sup(const DriftSpec& spec, double t) {
    const int d = spec.dimension();
    const double R = spec.support_radius();
    if (R == 0.0) return 0.0;
    double best = 0.0;
    if (spec.radial_magnitude()) {
        const double rmax = std::isfinite(R) ? R : 1e3;
        const int n = 20000;
        for (int i = 0; i <= n; ++i) {
            const double r = 1e-7 * rmax * std::pow(1e7, static_cast<double>(i) / n);
            best = std::max(best, spec.magnitude_on_axis(t, r));
        }
        for (double b : spec.radial_breakpoints())
            for (double f : {1.0 - 1e-9, 1.0 + 1e-9}) best = std::max(best, spec.magnitude_on_axis(t, b * f));
        return best;
    }
    const double H = std::isfinite(R) ? R : 1e3;
    std::vector<double> v(static_cast<std::size_t>(d));
    for_each_tensor_cell(d, -H, H, 40, [&](std::span<const double> x, double) {
        spec.eval(t, x, v);
        double s = 0.0;
        for (double q : v) s += q * q;
        best = std::max(best, std::sqrt(s));
    });
    return best;
}

nlohmann::json ApproxSequenceReport::to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& l : levels)
        rows.push_back({{"m", real_to_json(l.m)},
                        {"eps", l.eps},
                        {"c_m", l.c_m},
                        {"l2_distance", l.distance},
                        {"truncation_error_sq", l.truncation_error_sq},
                        {"delta_hat", l.delta_hat},
                        {"max_quotient_ratio", l.max_quotient_ratio},
                        {"sup_norm", l.sup_norm},
                        {"form_bound_ok", l.form_bound_ok},
                        {"sup_ok", l.sup_ok}});
    return {{"levels", rows},
            {"base_delta_hat", base_delta_hat},
            {"box_half_width", box_half_width},
            {"horizon", horizon},
            {"tolerance", tolerance},
            {"monotone", monotone},
            {"converged", converged},
            {"form_bound_preserved", form_bound_preserved}};
}

ApproxSequenceReport build_approx_sequence(const DriftSpec& spec, const MollifySchedule& schedule, double L, double T,
                                           const drift::TestFunctionFamily& family, int workers) {
    schedule.validate();
    ApproxSequenceReport rep;
    rep.box_half_width = L;
    rep.horizon = T;
    rep.tolerance = schedule.tolerance;
    const bool zero = spec.kind() == drift::DriftKind::Zero;
    std::vector<double> times{0.0};
    if (!spec.time_constant())
        for (int i = 1; i <= 4; ++i) times.push_back(T * i / 4.0);
    const auto base = zero ? drift::FormBoundReport{} : drift::estimate_form_bound(spec, family, times, workers);
    rep.base_delta_hat = base.delta_hat;

    for (std::size_t k = 0; k < schedule.size(); ++k) {
        ApproxLevel lv;
        lv.m = schedule.levels[k];
        lv.eps = schedule.widths[k];
        lv.c_m = schedule.scales[k];
        if (!zero) {
            const DriftSpec bm = approximant(spec, lv.m, lv.eps, lv.c_m);
            lv.distance = std::sqrt(l2_distance_sq(bm, spec, L, T));
            lv.truncation_error_sq = l2_distance_sq(cutoff_by_level(spec, lv.m), spec, L, T);
            const auto fb = drift::estimate_form_bound(bm, family, times, workers);
            lv.delta_hat = fb.delta_hat;
            for (std::size_t i = 0; i < fb.quotients.size(); ++i) {
                const double r = base.delta_hat > 0.0 ? fb.quotients[i].value / base.delta_hat
                                                      : (fb.quotients[i].value > 0.0 ? kInf : 0.0);
                lv.max_quotient_ratio = std::max(lv.max_quotient_ratio, r);
            }
            lv.sup_norm = sampled_sup(bm);
        }
        lv.form_bound_ok = lv.delta_hat <= base.delta_hat * (1.0 + rep.form_bound_slack);
        lv.sup_ok = lv.sup_norm <= lv.c_m * lv.m * (1.0 + 1e-9);
        rep.form_bound_preserved = rep.form_bound_preserved && lv.form_bound_ok;
        if (!rep.levels.empty() && lv.distance > rep.levels.back().distance) rep.monotone = false;
        rep.levels.push_back(lv);
    }
    rep.converged = rep.levels.back().distance < rep.tolerance;
    return rep;
}

}  // namespace fbd::mollifier
