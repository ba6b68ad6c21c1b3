#include "fbdrift/pde/solver.hpp"

#include "fbdrift/common/errors.hpp"
#include "fbdrift/common/parallel.hpp"
#include "fbdrift/common/text_document.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fbd::pde {

using drift::kMaxDimension;

Source zero_source() {
    return [](double, std::span<const double>) { return 0.0; };
}

Source source_of(const ScalarField& f) {
    return [f](double t, std::span<const double> x) { return f.eval(t, x); };
}

nlohmann::json GridSettings::to_json() const {
    return {{"dimension", grid.dimension},
            {"intervals", grid.intervals},
            {"half_width", grid.half_width},
            {"dt", dt},
            {"safety", safety},
            {"workers", workers},
            {"store_stride", store_stride}};
}

GridSettings GridSettings::from_json(const nlohmann::json& j) {
    GridSettings s;
    s.grid.dimension = j.value("dimension", 3);
    s.grid.intervals = j.value("intervals", std::size_t{32});
    if (j.contains("L")) s.grid.half_width = json_real(j["L"]);
    if (j.contains("half_width")) s.grid.half_width = json_real(j["half_width"]);
    if (j.contains("h")) {
        const double h = json_real(j["h"]);
        if (!(h > 0.0)) throw ConfigError("grid: h must be positive");
        s.grid.intervals = static_cast<std::size_t>(std::llround(2.0 * s.grid.half_width / h));
    }
    if (j.contains("dt")) s.dt = json_real(j["dt"]);
    s.safety = j.value("safety", 0.9);
    s.workers = j.value("workers", 1);
    s.store_stride = j.value("store_stride", std::size_t{1});
    s.grid.validate();
    return s;
}

double stable_dt(const GridSpec& grid, double max_abs_b, double max_l1_b, double safety) {
    const double h = grid.spacing();
    const int d = grid.dimension;
    double dt = h * h / (2.0 * d);
    if (max_abs_b > 0.0) dt = std::min(dt, h / max_abs_b);
    dt = std::min(dt, 1.0 / (d / (h * h) + max_l1_b / h));
    return safety * dt;
}

GridField TimeSeries::frame(std::size_t k) const {
    GridField f(grid, 1, times.at(k));
    f.values = frames.at(k);
    return f;
}

const std::vector<double>& TimeSeries::at_time(double t) const {
    if (frames.empty()) throw InvalidArgument("empty time series");
    std::size_t best = 0;
    for (std::size_t k = 1; k < times.size(); ++k)
        if (std::abs(times[k] - t) < std::abs(times[best] - t)) best = k;
    return frames[best];
}

ParabolicStepper::ParabolicStepper(GridSpec grid, double dt, int workers)
    : grid_(grid), dt_(dt), workers_(std::max(1, workers)) {
    grid_.validate();
    if (!(dt > 0.0)) throw ConfigError("time step must be positive");
    next_.assign(grid_.node_count(), 0.0);
}

void ParabolicStepper::step(std::vector<double>& u, std::span<const double> b, std::span<const double> g) {
    const int d = grid_.dimension;
    const std::size_t n = grid_.nodes_per_axis();
    const std::size_t total = grid_.node_count();
    const double h = grid_.spacing();
    const double dif = 0.5 / (h * h);
    const double inv_h = 1.0 / h;
    std::size_t stride[kMaxDimension];
    for (int k = 0; k < d; ++k) stride[k] = grid_.stride(k);
    const std::size_t slab = stride[0];
    const bool has_b = !b.empty();
    const bool has_g = !g.empty();

    parallel_for(n, workers_, [&](std::size_t i0) {
        std::size_t idx[kMaxDimension];
        for (std::size_t off = 0; off < slab; ++off) {
            const std::size_t p = i0 * slab + off;
            std::size_t rem = p;
            bool boundary = false;
            for (int k = 0; k < d; ++k) {
                idx[k] = rem / stride[k];
                rem %= stride[k];
                if (idx[k] == 0 || idx[k] == n - 1) boundary = true;
            }
            if (boundary) {
                next_[p] = 0.0;
                continue;
            }
            const double up = u[p];
            double lap = 0.0, adv = 0.0;
            for (int k = 0; k < d; ++k) {
                const double fwd = u[p + stride[k]];
                const double bwd = u[p - stride[k]];
                lap += fwd + bwd - 2.0 * up;
                if (has_b) {
                    const double bk = b[p * d + k];
                    adv += bk > 0.0 ? bk * (fwd - up) : bk * (up - bwd);
                }
            }
            double rhs = dif * lap + inv_h * adv;
            if (has_g) rhs += g[p];
            next_[p] = up + dt_ * rhs;
        }
    });
    (void)total;
    u.swap(next_);
}

std::pair<double, double> sample_drift(const DriftSpec& b, double t, const GridSpec& grid, std::vector<double>& out) {
    const int d = grid.dimension;
    if (b.dimension() != d) throw InvalidArgument("drift and grid dimensions differ");
    const std::size_t total = grid.node_count();
    out.assign(total * d, 0.0);
    double mx = 0.0, ml1 = 0.0;
    double x[kMaxDimension];
    for (std::size_t p = 0; p < total; ++p) {
        grid.position(p, std::span<double>(x, d));
        b.eval(t, std::span<const double>(x, d), std::span<double>(&out[p * d], d));
        double s2 = 0.0, s1 = 0.0;
        for (int k = 0; k < d; ++k) {
            s2 += out[p * d + k] * out[p * d + k];
            s1 += std::abs(out[p * d + k]);
        }
        mx = std::max(mx, std::sqrt(s2));
        ml1 = std::max(ml1, s1);
    }
    if (!std::isfinite(mx)) throw NumericalError("drift is not finite on the grid at t = " + std::to_string(t));
    return {mx, ml1};
}

void sample_source(const Source& g, double t, const GridSpec& grid, std::vector<double>& out) {
    const int d = grid.dimension;
    const std::size_t total = grid.node_count();
    out.resize(total);
    double x[kMaxDimension];
    for (std::size_t p = 0; p < total; ++p) {
        grid.position(p, std::span<double>(x, d));
        out[p] = g(t, std::span<const double>(x, d));
    }
}

double dirichlet_energy(const GridSpec& grid, std::span<const double> u) {
    const int d = grid.dimension;
    const std::size_t n = grid.nodes_per_axis();
    const std::size_t total = grid.node_count();
    const double h = grid.spacing();
    std::size_t stride[kMaxDimension];
    for (int k = 0; k < d; ++k) stride[k] = grid.stride(k);
    double s = 0.0;
    for (std::size_t p = 0; p < total; ++p) {
        std::size_t rem = p;
        double g2 = 0.0;
        for (int k = 0; k < d; ++k) {
            const std::size_t i = rem / stride[k];
            rem %= stride[k];
            const double fwd = i + 1 < n ? u[p + stride[k]] : 0.0;
            const double bwd = i > 0 ? u[p - stride[k]] : 0.0;
            const double gk = (fwd - bwd) / (2.0 * h);
            g2 += gk * gk;
        }
        s += g2;
    }
    return s * grid.cell_volume();
}

double mass_sq(const GridSpec& grid, std::span<const double> u) {
    double s = 0.0;
    for (double v : u) s += v * v;
    return s * grid.cell_volume();
}

double leakage(const GridSpec& grid, std::span<const double> u) {
    const int d = grid.dimension;
    const std::size_t n = grid.nodes_per_axis();
    double inner = 0.0, edge = 0.0;
    std::size_t idx[kMaxDimension];
    for (std::size_t p = 0; p < u.size(); ++p) {
        grid.unflatten(p, std::span<std::size_t>(idx, d));
        bool near = false;
        for (int k = 0; k < d; ++k)
            if (idx[k] == 1 || idx[k] == n - 2) near = true;
        inner = std::max(inner, std::abs(u[p]));
        if (near) edge = std::max(edge, std::abs(u[p]));
    }
    return inner > 0.0 ? edge / inner : 0.0;
}

namespace {

// Marches d_tau u = 1/2 Delta u + b(c(tau)) . grad u + g(c(tau)) from u = 0,
// where c maps march time to coefficient time.
TimeSeries march(const DriftSpec& b, const Source& g, double length, const std::function<double(double)>& coeff_time,
                 const GridSettings& s, bool backward) {
    s.grid.validate();
    if (!(length >= 0.0)) throw InvalidArgument("negative time interval");
    const GridSpec& grid = s.grid;
    std::vector<double> bn, gn;
    const bool tc = b.time_constant();
    double mx = 0.0, ml1 = 0.0;
    if (tc) {
        std::tie(mx, ml1) = sample_drift(b, coeff_time(0.0), grid, bn);
    } else {
        for (int i = 0; i <= 16; ++i) {
            auto [a, c] = sample_drift(b, coeff_time(length * i / 16.0), grid, bn);
            mx = std::max(mx, a);
            ml1 = std::max(ml1, c);
        }
    }
    const double dt_max = stable_dt(grid, mx, ml1, s.safety);
    double dt = dt_max;
    if (s.dt > 0.0) {
        if (s.dt > dt_max * (1.0 + 1e-12))
            throw ConfigError("time step " + std::to_string(s.dt) + " violates the stability bound " +
                              std::to_string(dt_max));
        dt = s.dt;
    }
    const auto steps = length > 0.0 ? static_cast<std::size_t>(std::ceil(length / dt - 1e-9)) : std::size_t{0};
    dt = steps > 0 ? length / static_cast<double>(steps) : dt;

    TimeSeries ts;
    ts.grid = grid;
    ts.dt = dt;
    ts.stride = std::max<std::size_t>(1, s.store_stride);
    ts.backward = backward;
    std::vector<double> u(grid.node_count(), 0.0);
    ts.frames.push_back(u);
    ts.times.push_back(coeff_time(0.0));
    if (steps == 0) return ts;

    ParabolicStepper stepper(grid, dt, s.workers);
    double leak = 0.0;
    for (std::size_t j = 0; j < steps; ++j) {
        const double tau = static_cast<double>(j) * dt;
        const double tc_j = coeff_time(tau);
        if (!tc) sample_drift(b, tc_j, grid, bn);
        sample_source(g, tc_j, grid, gn);
        stepper.step(u, bn, gn);
        double chk = 0.0;
        for (double v : u) chk += v;
        if (!std::isfinite(chk)) throw NumericalError("non-finite value in time step " + std::to_string(j + 1));
        if ((j + 1) % ts.stride == 0 || j + 1 == steps) {
            ts.frames.push_back(u);
            ts.times.push_back(coeff_time(static_cast<double>(j + 1) * dt));
        }
        if ((j + 1) % 16 == 0 || j + 1 == steps) leak = std::max(leak, leakage(grid, u));
    }
    ts.boundary_leakage = leak;
    return ts;
}

}  // namespace


TimeSeries solve_terminal(const DriftSpec& b, const Source& g, double T0, double T1, const GridSettings& s) {
    if (!(T1 >= T0)) throw InvalidArgument("solve_terminal requires T0 <= T1");
    return march(b, g, T1 - T0, [T1](double tau) { return T1 - tau; }, s, true);
}

TimeSeries solve_initial(const DriftSpec& B, const Source& G, double T, const GridSettings& s) {
    return march(B, G, T, [](double t) { return t; }, s, false);
}

ReversedProblem build_reversed_problem(const DriftSpec& b, const Source& g1, double T0, double T1) {
    if (!(T1 >= T0)) throw InvalidArgument("build_reversed_problem requires T0 <= T1");
    ReversedProblem r;
    r.B = b.time_constant() ? b : DriftSpec::retimed(b, T0, T1);
    const double len = T1 - T0;
    r.G = [g1, T1, len](double t, std::span<const double> x) {
        if (t < 0.0 || t > len) return 0.0;
        return g1(T1 - t, x);
    };
    return r;
}

}  // namespace fbd::pde
