#include "fbdrift/pde/weighted_norm.hpp"

#include "fbdrift/common/errors.hpp"
#include "fbdrift/common/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

namespace fbd::pde {

using drift::kMaxDimension;

std::vector<std::vector<double>> Lattice::centers(int d) const {
    if (!(spacing > 0.0) || !(half_extent >= 0.0)) throw InvalidArgument("lattice needs positive spacing");
    std::vector<double> axis_vals;
    std::vector<std::vector<double>> per_axis(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k) {
        const double off = offset.empty() ? 0.0 : offset.at(k);
        const long lo = static_cast<long>(std::ceil((-half_extent - off) / spacing - 1e-12));
        const long hi = static_cast<long>(std::floor((half_extent - off) / spacing + 1e-12));
        for (long i = lo; i <= hi; ++i) per_axis[k].push_back(off + static_cast<double>(i) * spacing);
    }
    std::vector<std::vector<double>> out;
    std::size_t total = 1;
    for (const auto& a : per_axis) total *= a.size();
    for (std::size_t f = 0; f < total; ++f) {
        std::vector<double> z(static_cast<std::size_t>(d));
        std::size_t rem = f;
        for (int k = d - 1; k >= 0; --k) {
            z[k] = per_axis[k][rem % per_axis[k].size()];
            rem /= per_axis[k].size();
        }
        out.push_back(std::move(z));
    }
    return out;
}

double rho_weight(double r2, double kappa, double theta) { return std::pow(1.0 + kappa * r2, -theta); }

namespace {

struct Integrand {
    int d;
    std::function<double(double, std::span<const double>)> f2;
    bool radial;
    bool time_constant;
    double support;
    std::vector<double> breakpoints;
};

double weighted(const Integrand& f, double t1, double t2, double kappa, double theta, const Lattice& lat) {
    const int d = f.d;
    if (!(theta > 0.5 * d)) throw InvalidArgument("weighted norm requires theta > d/2");
    if (!(kappa > 0.0)) throw InvalidArgument("weighted norm requires kappa > 0");
    if (!(t2 >= t1)) throw InvalidArgument("weighted norm requires t1 <= t2");
    if (f.support == 0.0 || t2 == t1) return 0.0;
    const double rmax = f.support;
    if (!std::isfinite(rmax)) throw NumericalError("weighted norm: field has unbounded support");
    std::vector<double> tn, tw;
    if (f.time_constant) {
        tn = {t1};
        tw = {t2 - t1};
    } else {
        const Rule1D g = gauss_legendre(8, t1, t2);
        tn = g.nodes;
        tw = g.weights;
    }
    RadialRuleOptions opt;
    opt.dimension = d;
    opt.inner_power = 4.0;
    opt.nodes_per_segment = 128;
    const RadialRule rule = make_radial_rule(rmax, f.breakpoints, opt);
    const SphereRule sph = make_sphere_rule(d, 12);
    double best = 0.0;
    double x[kMaxDimension];
    if (f.radial) {
        // |f| radial about the origin: only the spherical mean of rho_z enters,
        // which depends on (r, |z|) alone.
        std::vector<std::vector<double>> prof(tn.size(), std::vector<double>(rule.size()));
        for (std::size_t k = 0; k < tn.size(); ++k)
            for (std::size_t i = 0; i < rule.size(); ++i) {
                for (int j = 0; j < d; ++j) x[j] = 0.0;
                x[0] = rule.r[i];
                prof[k][i] = f.f2(tn[k], std::span<const double>(x, d));
            }
        const Rule1D ang = gauss_legendre(64, 0.0, std::numbers::pi);
        std::vector<double> angw(ang.size());
        double wsum = 0.0;
        for (std::size_t q = 0; q < ang.size(); ++q) {
            angw[q] = ang.weights[q] * std::pow(std::sin(ang.nodes[q]), d - 2);
            wsum += angw[q];
        }
        for (double& w : angw) w *= sphere_area(d) / wsum;
        for (const auto& z : lat.centers(d)) {
            double zn2 = 0.0;
            for (double v : z) zn2 += v * v;
            const double zn = std::sqrt(zn2);
            double total = 0.0;
            for (std::size_t k = 0; k < tn.size(); ++k) {
                double s = 0.0;
                for (std::size_t i = 0; i < rule.size(); ++i) {
                    if (prof[k][i] == 0.0) continue;
                    const double r = rule.r[i];
                    double mean = 0.0;
                    for (std::size_t q = 0; q < ang.size(); ++q)
                        mean += angw[q] * rho_weight(r * r + zn2 - 2.0 * r * zn * std::cos(ang.nodes[q]), kappa, theta);
                    s += rule.w[i] * prof[k][i] * mean;
                }
                total += tw[k] * s;
            }
            if (!std::isfinite(total)) throw NumericalError("weighted norm: non-finite quadrature");
            best = std::max(best, std::sqrt(total));
        }
        return best;
    }
    for (const auto& z : lat.centers(d)) {
        double total = 0.0;
        for (std::size_t k = 0; k < tn.size(); ++k) {
            const double s = rule.integrate([&](double r) {
                double acc = 0.0;
                for (std::size_t q = 0; q < sph.size(); ++q) {
                    auto w = sph.direction(q);
                    double dz2 = 0.0;
                    for (int i = 0; i < d; ++i) {
                        x[i] = r * w[i];
                        dz2 += (x[i] - z[i]) * (x[i] - z[i]);
                    }
                    acc += sph.weights[q] * f.f2(tn[k], std::span<const double>(x, d)) * rho_weight(dz2, kappa, theta);
                }
                return acc;
            });
            total += tw[k] * s;
        }
        if (!std::isfinite(total)) throw NumericalError("weighted norm: non-finite quadrature");
        best = std::max(best, std::sqrt(total));
    }
    return best;
}

}  // namespace

double weighted_norm_rho(const drift::DriftSpec& f, double t1, double t2, double kappa, double theta,
                         const Lattice& lattice) {
    Integrand in;
    in.d = f.dimension();
    in.f2 = [f](double t, std::span<const double> x) {
        double v[kMaxDimension];
        f.eval(t, x, std::span<double>(v, f.dimension()));
        double s = 0.0;
        for (int i = 0; i < f.dimension(); ++i) s += v[i] * v[i];
        return s;
    };
    in.radial = f.radial_magnitude();
    in.time_constant = f.time_constant();
    in.support = f.support_radius();
    in.breakpoints = f.radial_breakpoints();
    return weighted(in, t1, t2, kappa, theta, lattice);
}

double weighted_norm_rho(const drift::ScalarField& f, double t1, double t2, double kappa, double theta,
                         const Lattice& lattice) {
    Integrand in;
    in.d = f.dimension;
    in.f2 = [f](double t, std::span<const double> x) {
        const double v = f.eval(t, x);
        return v * v;
    };
    in.radial = f.centered();
    in.time_constant = !std::isfinite(f.t0) && !std::isfinite(f.t1);
    const double sr = f.support_radius();
    in.support = f.is_zero() ? 0.0 : (std::isfinite(sr) ? f.center_norm() + sr : f.center_norm() + 9.0 * f.radius);
    in.breakpoints = f.centered() ? f.breakpoints() : std::vector<double>{};
    if (!f.centered()) {
        in.breakpoints.push_back(std::max(0.0, f.center_norm() - (std::isfinite(sr) ? sr : 0.0)));
    }
    return weighted(in, t1, t2, kappa, theta, lattice);
}

}  // namespace fbd::pde
