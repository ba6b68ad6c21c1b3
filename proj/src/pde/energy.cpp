#include "fbdrift/pde/energy.hpp"

#include "fbdrift/common/errors.hpp"

#include <cmath>

namespace fbd::pde {

using drift::kMaxDimension;

EnergyTerms energy_terms(const GridSpec& grid, std::span<const double> u, std::span<const double> b,
                         std::span<const double> g) {
    const int d = grid.dimension;
    const std::size_t n = grid.nodes_per_axis();
    const double h = grid.spacing();
    std::size_t stride[kMaxDimension];
    for (int k = 0; k < d; ++k) stride[k] = grid.stride(k);
    double m = 0.0, diss = 0.0, s1 = 0.0, s2 = 0.0;
    for (std::size_t p = 0; p < u.size(); ++p) {
        std::size_t rem = p;
        double adv = 0.0;
        for (int k = 0; k < d; ++k) {
            const std::size_t i = rem / stride[k];
            rem %= stride[k];
            const double fwd = i + 1 < n ? u[p + stride[k]] : 0.0;
            const double bwd = i > 0 ? u[p - stride[k]] : 0.0;
            const double gk = (fwd - bwd) / (2.0 * h);
            diss += gk * gk;
            if (!b.empty()) adv += b[p * d + k] * gk;
        }
        m += u[p] * u[p];
        s1 += adv * u[p];
        if (!g.empty()) s2 += g[p] * u[p];
    }
    const double w = grid.cell_volume();
    return {m * w, diss * w, s1 * w, s2 * w};
}

double energy_identity_residual(const TimeSeries& u, const DriftSpec& b, const Source& g) {
    if (u.frames.empty()) return 0.0;
    if (u.stride != 1) throw InvalidArgument("energy_identity_residual needs every time frame (store_stride = 1)");
    const GridSpec& grid = u.grid;
    std::vector<double> bn, gn;
    const bool tc = b.time_constant();
    if (tc) sample_drift(b, u.times.front(), grid, bn);
    const std::size_t N = u.frames.size();
    std::vector<double> rate(N);
    EnergyTerms first, last;
    for (std::size_t k = 0; k < N; ++k) {
        if (!tc) sample_drift(b, u.times[k], grid, bn);
        sample_source(g, u.times[k], grid, gn);
        const EnergyTerms e = energy_terms(grid, u.frames[k], bn, gn);
        rate[k] = 0.5 * e.dissipation - e.drift - e.source;
        if (k == 0) first = e;
        if (k + 1 == N) last = e;
    }
    double integral = 0.0;
    for (std::size_t k = 0; k + 1 < N; ++k)
        integral += 0.5 * std::abs(u.times[k + 1] - u.times[k]) * (rate[k] + rate[k + 1]);
    const double r = 0.5 * last.mass_sq - 0.5 * first.mass_sq + integral;
    if (!std::isfinite(r)) throw NumericalError("energy identity residual is not finite");
    return std::abs(r);
}

}  // namespace fbd::pde
