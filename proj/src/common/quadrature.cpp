#include "fbdrift/common/quadrature.hpp"

#include "fbdrift/common/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

namespace fbd {

namespace {

Rule1D compute_gauss_legendre(std::size_t n) {
    Rule1D r;
    if (n == 1) {
        r.nodes = {0.0};
        r.weights = {2.0};
        return r;
    }
    r.nodes.resize(n);
    r.weights.resize(n);
    const std::size_t half = (n + 1) / 2;
    for (std::size_t i = 0; i < half; ++i) {
        double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (std::size_t k = 2; k <= n; ++k) {
                const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
                p0 = p1;
                p1 = pk;
            }
            dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        double p0 = 1.0, p1 = x;
        for (std::size_t k = 2; k <= n; ++k) {
            const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
            p0 = p1;
            p1 = pk;
        }
        dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        r.nodes[i] = -x;
        r.nodes[n - 1 - i] = x;
        r.weights[i] = w;
        r.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) r.nodes[n / 2] = 0.0;
    return r;
}

}  // namespace

const Rule1D& gauss_legendre(std::size_t n) {
    if (n == 0) throw InvalidArgument("Gauss-Legendre rule needs at least one node");
    static std::mutex mu;
    static std::map<std::size_t, std::unique_ptr<Rule1D>> cache;
    std::lock_guard<std::mutex> lk(mu);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, std::make_unique<Rule1D>(compute_gauss_legendre(n))).first;
    return *it->second;
}

Rule1D gauss_legendre(std::size_t n, double a, double b) {
    Rule1D r = gauss_legendre(n);
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (std::size_t i = 0; i < r.size(); ++i) {
        r.nodes[i] = mid + half * r.nodes[i];
        r.weights[i] *= half;
    }
    return r;
}

double sphere_area(int d) {
    return 2.0 * std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d);
}

double ball_volume(int d) { return sphere_area(d) / d; }

RadialRule make_radial_rule(double rmax, std::vector<double> breakpoints, const RadialRuleOptions& opt) {
    if (!(rmax > 0.0) || !std::isfinite(rmax)) throw InvalidArgument("radial rule needs a finite positive outer radius");
    std::vector<double> cuts;
    for (double b : breakpoints)
        if (b > 0.0 && b < rmax && std::isfinite(b)) cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end(), [rmax](double a, double b) { return std::abs(a - b) <= 1e-14 * rmax; }),
               cuts.end());
    cuts.push_back(rmax);

    const Rule1D& gl = gauss_legendre(opt.nodes_per_segment);
    const double dm1 = opt.dimension - 1;
    RadialRule rule;
    rule.r.reserve(gl.size() * cuts.size());
    rule.w.reserve(gl.size() * cuts.size());

    // innermost segment [0, r1] via r = r1 s^k
    const double r1 = cuts.front();
    const double k = std::max(1.0, opt.inner_power);
    for (std::size_t i = 0; i < gl.size(); ++i) {
        const double s = 0.5 * (gl.nodes[i] + 1.0);
        const double ws = 0.5 * gl.weights[i];
        const double r = r1 * std::pow(s, k);
        const double jac = k * r1 * std::pow(s, k - 1.0);
        rule.r.push_back(r);
        rule.w.push_back(ws * jac * std::pow(r, dm1));
    }
    for (std::size_t j = 1; j < cuts.size(); ++j) {
        const double a = cuts[j - 1], b = cuts[j];
        if (opt.log_outer) {
            const double la = std::log(a), lb = std::log(b);
            for (std::size_t i = 0; i < gl.size(); ++i) {
                const double u = 0.5 * (la + lb) + 0.5 * (lb - la) * gl.nodes[i];
                const double r = std::exp(u);
                rule.r.push_back(r);
                rule.w.push_back(0.5 * (lb - la) * gl.weights[i] * r * std::pow(r, dm1));
            }
        } else {
            for (std::size_t i = 0; i < gl.size(); ++i) {
                const double r = 0.5 * (a + b) + 0.5 * (b - a) * gl.nodes[i];
                rule.r.push_back(r);
                rule.w.push_back(0.5 * (b - a) * gl.weights[i] * std::pow(r, dm1));
            }
        }
    }
    return rule;
}

SphereRule make_sphere_rule(int d, std::size_t n) {
    if (d < 2) throw InvalidArgument("sphere rule needs dimension >= 2");
    SphereRule rule;
    rule.dimension = d;
    const std::size_t nphi = 2 * n;
    const Rule1D& gl = gauss_legendre(n);
    // polar angles theta_1..theta_{d-2}; theta_k carries sin^{d-1-k}
    const int npolar = d - 2;
    std::vector<std::size_t> idx(static_cast<std::size_t>(std::max(npolar, 0)), 0);
    std::vector<double> x(static_cast<std::size_t>(d));
    bool done = false;
    while (!done) {
        double w = 1.0, sprod = 1.0;
        for (int k = 0; k < npolar; ++k) {
            const double t = gl.nodes[idx[k]];
            const int m = d - 2 - k;  // power of sin for this angle
            w *= gl.weights[idx[k]] * std::pow(1.0 - t * t, 0.5 * (m - 1));
            x[k] = sprod * t;
            sprod *= std::sqrt(std::max(0.0, 1.0 - t * t));
        }
        for (std::size_t j = 0; j < nphi; ++j) {
            const double phi = 2.0 * std::numbers::pi * (static_cast<double>(j) + 0.5) / static_cast<double>(nphi);
            x[d - 2] = sprod * std::cos(phi);
            x[d - 1] = sprod * std::sin(phi);
            rule.directions.insert(rule.directions.end(), x.begin(), x.end());
            rule.weights.push_back(w * 2.0 * std::numbers::pi / static_cast<double>(nphi));
        }
        int k = npolar - 1;
        while (k >= 0) {
            if (++idx[k] < n) break;
            idx[k] = 0;
            --k;
        }
        done = k < 0;
    }
    double total = 0.0;
    for (double w : rule.weights) total += w;
    const double scale = sphere_area(d) / total;
    for (double& w : rule.weights) w *= scale;
    return rule;
}

void for_each_tensor_cell(int d, double lo, double hi, std::size_t n,
                          const std::function<void(std::span<const double>, double)>& f) {
    const double h = (hi - lo) / static_cast<double>(n);
    const double vol = std::pow(h, d);
    std::vector<std::size_t> idx(static_cast<std::size_t>(d), 0);
    std::vector<double> x(static_cast<std::size_t>(d));
    while (true) {
        for (int k = 0; k < d; ++k) x[k] = lo + (static_cast<double>(idx[k]) + 0.5) * h;
        f(x, vol);
        int k = d - 1;
        while (k >= 0) {
            if (++idx[k] < n) break;
            idx[k] = 0;
            --k;
        }
        if (k < 0) break;
    }
}

}  // namespace fbd
