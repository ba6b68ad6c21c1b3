#include "fbdrift/drift/norms.hpp"

#include "fbdrift/common/errors.hpp"
#include "fbdrift/common/quadrature.hpp"

#include <algorithm>
#include <cmath>

namespace fbd::drift {

namespace {

double magnitude(const DriftSpec& s, double t, std::span<const double> x) {
    double v[kMaxDimension];
    s.eval(t, x, std::span<double>(v, s.dimension()));
    double q = 0.0;
    for (int i = 0; i < s.dimension(); ++i) q += v[i] * v[i];
    return std::sqrt(q);
}

void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw NumericalError(std::string(what) + ": quadrature produced a non-finite value");
}

double finite_support(const DriftSpec& s, const char* what) {
    const double R = s.support_radius();
    if (!std::isfinite(R)) throw NumericalError(std::string(what) + ": field has unbounded support");
    return R;
}

}  // namespace

double lp_norm(const DriftSpec& spec, double p, double t, const NormQuadrature& q) {
    if (!(p > 0.0)) throw InvalidArgument("lp_norm: exponent must be positive");
    const int d = spec.dimension();
    if (spec.singularity_order() * p >= d)
        throw NumericalError("lp_norm: |b|^p is not integrable near the origin (singularity order " +
                             std::to_string(spec.singularity_order()) + ", p = " + std::to_string(p) + ")");
    const double R = spec.support_radius();
    if (R == 0.0) return 0.0;
    finite_support(spec, "lp_norm");
    double s = 0.0;
    if (spec.radial_magnitude()) {
        RadialRuleOptions opt;
        opt.dimension = d;
        opt.nodes_per_segment = q.radial_nodes;
        opt.inner_power = 4.0;
        const RadialRule rule = make_radial_rule(R, spec.radial_breakpoints(), opt);
        s = sphere_area(d) * rule.integrate([&](double r) { return std::pow(spec.magnitude_on_axis(t, r), p); });
    } else {
        for_each_tensor_cell(d, -R, R, q.tensor_cells, [&](std::span<const double> x, double vol) {
            s += vol * std::pow(magnitude(spec, t, x), p);
        });
    }
    require_finite(s, "lp_norm");
    return std::pow(s, 1.0 / p);
}

double morrey_norm(const DriftSpec& spec, double eps, const std::vector<std::vector<double>>& centers,
                   const std::vector<double>& radii, double t, const NormQuadrature& q) {
    if (!(eps > 0.0)) throw InvalidArgument("morrey_norm: eps must be positive");
    if (centers.empty() || radii.empty()) throw InvalidArgument("morrey_norm: empty center or radius grid");
    const int d = spec.dimension();
    const double p = 2.0 + eps;
    if (spec.singularity_order() * p >= d)
        throw NumericalError("morrey_norm: |b|^{2+eps} is not locally integrable");
    const double S = sphere_area(d);
    const SphereRule sph = make_sphere_rule(d, q.ball_sphere_nodes);
    const auto bps = spec.radial_breakpoints();
    std::vector<double> x(static_cast<std::size_t>(d));
    double best = 0.0;
    for (const auto& c : centers) {
        if (c.size() != static_cast<std::size_t>(d)) throw InvalidArgument("morrey_norm: center dimension mismatch");
        double cn = 0.0;
        for (double v : c) cn += v * v;
        cn = std::sqrt(cn);
        const bool radial = cn == 0.0 && spec.radial_magnitude();
        for (double r : radii) {
            if (!(r > 0.0)) throw InvalidArgument("morrey_norm: radii must be positive");
            RadialRuleOptions opt;
            opt.dimension = d;
            opt.inner_power = 4.0;
            double integral = 0.0;
            if (radial) {
                opt.nodes_per_segment = q.radial_nodes;
                const RadialRule rule = make_radial_rule(r, bps, opt);
                integral = S * rule.integrate([&](double rho) { return std::pow(spec.magnitude_on_axis(t, rho), p); });
            } else {
                opt.nodes_per_segment = q.ball_radial_nodes;
                std::vector<double> cut;
                if (cn > 0.0) cut.push_back(cn);
                for (double b : bps) {
                    if (std::abs(b - cn) > 0.0) cut.push_back(std::abs(b - cn));
                    cut.push_back(b + cn);
                }
                const RadialRule rule = make_radial_rule(r, cut, opt);
                integral = rule.integrate([&](double rho) {
                    double s = 0.0;
                    for (std::size_t k = 0; k < sph.size(); ++k) {
                        auto w = sph.direction(k);
                        for (int i = 0; i < d; ++i) x[i] = c[i] + rho * w[i];
                        s += sph.weights[k] * std::pow(magnitude(spec, t, x), p);
                    }
                    return s;
                });
            }
            require_finite(integral, "morrey_norm");
            const double avg = integral / (ball_volume(d) * std::pow(r, d));
            best = std::max(best, r * std::pow(avg, 1.0 / p));
        }
    }
    return best;
}

std::vector<std::vector<double>> default_morrey_centers(int d, double R) {
    std::vector<std::vector<double>> out;
    out.emplace_back(static_cast<std::size_t>(d), 0.0);
    std::size_t total = 1;
    for (int k = 0; k < d; ++k) total *= 3;
    for (std::size_t f = 0; f < total; ++f) {
        std::vector<double> c(static_cast<std::size_t>(d));
        std::size_t rem = f;
        bool origin = true;
        for (int k = 0; k < d; ++k) {
            const int i = static_cast<int>(rem % 3);
            rem /= 3;
            c[k] = (i - 1) * 0.5 * R;
            origin = origin && i == 1;
        }
        if (!origin) out.push_back(std::move(c));
    }
    return out;
}

std::vector<double> default_morrey_radii(double R, std::size_t count) {
    std::vector<double> r(count);
    for (std::size_t i = 0; i < count; ++i)
        r[i] = 1e-3 * R * std::pow(1e3, count == 1 ? 1.0 : static_cast<double>(i) / (count - 1));
    return r;
}

double level_set_volume(const DriftSpec& spec, double s, double t, const NormQuadrature& q) {
    if (!(s > 0.0)) throw InvalidArgument("level must be positive");
    const int d = spec.dimension();
    const double Rs = spec.support_radius();
    if (Rs == 0.0) return 0.0;
    if (spec.radial_magnitude()) {
        const double rmax = std::isfinite(Rs) ? Rs : 1e4;
        const double rlo = 1e-9 * rmax;
        std::vector<double> grid;
        const std::size_t n = q.profile_samples;
        for (std::size_t i = 0; i <= n; ++i) grid.push_back(rlo * std::pow(rmax / rlo, static_cast<double>(i) / n));
        for (double b : spec.radial_breakpoints()) {
            if (b > rlo && b < rmax) {
                grid.push_back(b * (1.0 - 1e-12));
                grid.push_back(b * (1.0 + 1e-12));
            }
        }
        std::sort(grid.begin(), grid.end());
        auto above = [&](double r) { return spec.magnitude_on_axis(t, r) > s; };
        auto cross = [&](double a, double b, bool fa) {
            for (int it = 0; it < 100; ++it) {
                const double c = 0.5 * (a + b);
                if (above(c) == fa) a = c;
                else b = c;
            }
            return 0.5 * (a + b);
        };
        double vol = 0.0;
        bool in = above(grid[0]);
        double start = 0.0;
        for (std::size_t i = 1; i < grid.size(); ++i) {
            const bool now = above(grid[i]);
            if (now != in) {
                const double rc = cross(grid[i - 1], grid[i], in);
                if (in) vol += std::pow(rc, d) - std::pow(start, d);
                else start = rc;
                in = now;
            }
        }
        if (in) vol += std::pow(rmax, d) - std::pow(start, d);
        return ball_volume(d) * vol;
    }
    const double R = finite_support(spec, "level_set_volume");
    double vol = 0.0;
    std::vector<double> v(static_cast<std::size_t>(d));
    for_each_tensor_cell(d, -R, R, q.tensor_cells, [&](std::span<const double> x, double cv) {
        if (magnitude(spec, t, x) > s) vol += cv;
    });
    return vol;
}

double weak_ld_norm(const DriftSpec& spec, const std::vector<double>& levels, double t, const NormQuadrature& q) {
    if (levels.empty()) throw InvalidArgument("weak_ld_norm: no levels");
    const int d = spec.dimension();
    double best = 0.0;
    for (double s : levels) {
        const double v = level_set_volume(spec, s, t, q);
        require_finite(v, "weak_ld_norm");
        best = std::max(best, s * std::pow(v, 1.0 / d));
    }
    return best;
}

}  // namespace fbd::drift
