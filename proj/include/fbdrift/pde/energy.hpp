#pragma once

#include "fbdrift/pde/solver.hpp"

namespace fbd::pde {

/// Per-frame terms of the energy balance, all with the cell weight h^d.
struct EnergyTerms {
    double mass_sq = 0.0;      ///< <u^2>
    double dissipation = 0.0;  ///< <|grad u|^2>, central stencil
    double drift = 0.0;        ///< <(b . grad u) u>
    double source = 0.0;       ///< <g u>
};

/// b: node-major drift samples (empty = 0); g: node values (empty = 0).
EnergyTerms energy_terms(const GridSpec& grid, std::span<const double> u, std::span<const double> b,
                         std::span<const double> g);

/// |1/2<u^2(end)> - 1/2<u^2(start)> + 1/2 int <|grad u|^2> - int <(b.grad u) u> - int <g u>|
/// in the forward (march) time of the series; requires stride-1 frames.
double energy_identity_residual(const TimeSeries& u, const DriftSpec& b, const Source& g);

}  // namespace fbd::pde
