#include "fbdrift/sde/krylov.hpp"

#include "fbdrift/common/errors.hpp"
#include "fbdrift/common/quadrature.hpp"

#include <algorithm>
#include <cmath>

namespace fbd::sde {

using drift::kMaxDimension;
using nlohmann::json;

json KrylovReport::to_json() const {
    return {{"estimate", estimate},         {"std_error", std_error}, {"reference_norm", reference_norm},
            {"ratio", ratio},               {"exponent", exponent},   {"norm_kind", norm_kind},
            {"trajectories", trajectories}};
}

namespace {

// Mean and standard error of the per-trajectory trapezoid sums of w(t, x).
template <class W>
void occupation(const PathEnsemble& ens, W&& w, KrylovReport& rep) {
    const std::size_t n = ens.trajectories();
    const std::size_t K = ens.steps();
    std::vector<double> sums(n, 0.0);
    for (std::size_t p = 0; p < n; ++p) {
        double s = 0.0;
        for (std::size_t k = 0; k <= K; ++k) {
            const double wt = (k == 0 || k == K) ? 0.5 : 1.0;
            s += wt * w(ens.grid.time(k), ens.state(p, k));
        }
        sums[p] = s * ens.grid.dt;
    }
    double mean = 0.0;
    for (double v : sums) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : sums) var += (v - mean) * (v - mean);
    var = n > 1 ? var / static_cast<double>(n - 1) : 0.0;
    rep.estimate = mean;
    rep.std_error = std::sqrt(var / static_cast<double>(n));
    rep.trajectories = n;
}

void finish(KrylovReport& rep) {
    if (rep.reference_norm > 0.0) rep.ratio = rep.estimate / rep.reference_norm;
    else rep.ratio = rep.estimate > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
}

}  // namespace

KrylovReport krylov_functional(const PathEnsemble& ens, const ScalarField& h, double mu) {
    const int d = ens.dimension;
    if (!(mu > 0.5 * (d + 2)))
        throw InvalidArgument("Krylov exponent mu = " + std::to_string(mu) + " must exceed (d + 2) / 2 = " +
                              std::to_string(0.5 * (d + 2)));
    if (h.dimension != d) throw InvalidArgument("test function dimension differs from the ensemble");
    KrylovReport rep;
    rep.exponent = mu;
    rep.norm_kind = "lebesgue";
    occupation(ens, [&](double t, std::span<const double> x) { return std::abs(h.eval(t, x)); }, rep);
    rep.reference_norm = h.lp_norm(mu, ens.grid.s, ens.grid.horizon());
    finish(rep);
    return rep;
}

std::pair<double, double> admissible_q_interval(int d, double delta_hat) {
    if (!(delta_hat >= 0.0)) throw InvalidArgument("form-bound must be non-negative");
    const double hi = delta_hat > 0.0 ? 1.0 / std::sqrt(delta_hat) : std::numeric_limits<double>::infinity();
    return {static_cast<double>(d), hi};
}

double composite_norm(const DriftSpec& g, const ScalarField& h, double q, double t1, double t2) {
    const int d = h.dimension;
    if (g.dimension() != d) throw InvalidArgument("g and h dimensions differ");
    const double a = std::max(t1, h.t0), b = std::min(t2, h.t1);
    if (!(b > a) || h.is_zero()) return 0.0;
    std::vector<double> tn, tw;
    const bool tc = g.time_constant();
    if (tc) {
        tn = {a};
        tw = {b - a};
    } else {
        const Rule1D r = gauss_legendre(8, a, b);
        tn = r.nodes;
        tw = r.weights;
    }
    const double sr = h.support_radius();
    const double rmax = std::isfinite(sr) ? sr : h.radius * std::sqrt(2.0 * 800.0 / q);
    std::vector<double> bp = h.breakpoints();
    const double cn = h.center_norm();
    const bool radial = h.centered() && g.radial_magnitude();
    if (h.centered())
        for (double r : g.radial_breakpoints()) bp.push_back(r);
    else
        bp.push_back(cn);
    RadialRuleOptions opt;
    opt.dimension = d;
    opt.inner_power = 4.0;
    opt.nodes_per_segment = 128;
    const RadialRule rule = make_radial_rule(rmax, bp, opt);
    const SphereRule sph = make_sphere_rule(d, 16);
    std::vector<double> c = h.center.empty() ? std::vector<double>(static_cast<std::size_t>(d), 0.0) : h.center;
    double x[kMaxDimension], v[kMaxDimension];
    auto g2 = [&](double t) {
        g.eval(t, std::span<const double>(x, d), std::span<double>(v, d));
        double s = 0.0;
        for (int i = 0; i < d; ++i) s += v[i] * v[i];
        return s;
    };
    double total = 0.0;
    for (std::size_t k = 0; k < tn.size(); ++k) {
        const double t = tn[k];
        double s;
        if (radial) {
            s = sphere_area(d) * rule.integrate([&](double r) {
                for (int i = 0; i < d; ++i) x[i] = 0.0;
                x[0] = r;
                const double hv = std::abs(h.amplitude) * h.profile(r);
                return hv == 0.0 ? 0.0 : g2(t) * std::pow(hv, q);
            });
        } else {
            s = rule.integrate([&](double r) {
                const double hv = std::abs(h.amplitude) * h.profile(r);
                if (hv == 0.0) return 0.0;
                double acc = 0.0;
                for (std::size_t i = 0; i < sph.size(); ++i) {
                    const auto w = sph.direction(i);
                    for (int j = 0; j < d; ++j) x[j] = c[j] + r * w[j];
                    acc += sph.weights[i] * g2(t);
                }
                return acc * std::pow(hv, q);
            });
        }
        total += tw[k] * s;
    }
    if (!std::isfinite(total)) throw NumericalError("composite norm quadrature is not finite");
    return std::pow(total, 1.0 / q);
}

KrylovReport krylov_g_functional(const PathEnsemble& ens, const DriftSpec& g, const ScalarField& h, double q,
                                 double delta_hat) {
    const int d = ens.dimension;
    const auto [lo, hi] = admissible_q_interval(d, delta_hat);
    if (!(hi > lo))
        throw InfeasibleExponent("admissible interval ]" + std::to_string(lo) + ", " + std::to_string(hi) +
                                 "[ for q is empty (delta_hat = " + std::to_string(delta_hat) + ")");
    if (!(q > lo && q < hi))
        throw InvalidArgument("q = " + std::to_string(q) + " outside ]" + std::to_string(lo) + ", " +
                              std::to_string(hi) + "[");
    if (h.dimension != d || g.dimension() != d) throw InvalidArgument("dimension mismatch in krylov_g_functional");
    KrylovReport rep;
    rep.exponent = q;
    rep.norm_kind = "composite";
    double v[kMaxDimension];
    occupation(ens,
               [&](double t, std::span<const double> x) {
                   const double hv = h.eval(t, x);
                   if (hv == 0.0) return 0.0;
                   g.eval(t, x, std::span<double>(v, d));
                   double s = 0.0;
                   for (int i = 0; i < d; ++i) s += v[i] * v[i];
                   return std::sqrt(s) * std::abs(hv);
               },
               rep);
    rep.reference_norm = composite_norm(g, h, q, ens.grid.s, ens.grid.horizon());
    finish(rep);
    return rep;
}

}  // namespace fbd::sde
