#pragma once

#include "fbdrift/drift/drift_spec.hpp"
#include "fbdrift/drift/scalar_field.hpp"

#include <vector>

namespace fbd::pde {

/// Centers z in (spacing Z^d + offset) intersected with [-half_extent, half_extent]^d.
struct Lattice {
    double spacing = 1.0;
    double half_extent = 2.0;
    std::vector<double> offset;  ///< empty = 0

    std::vector<std::vector<double>> centers(int d) const;
};

/// rho(x) = (1 + kappa |x|^2)^{-theta}.
double rho_weight(double r2, double kappa, double theta);

/// max_z ( int_{t1}^{t2} int |f|^2 rho(. - z) dx dt )^{1/2}.
double weighted_norm_rho(const drift::DriftSpec& f, double t1, double t2, double kappa, double theta,
                         const Lattice& lattice);
double weighted_norm_rho(const drift::ScalarField& f, double t1, double t2, double kappa, double theta,
                         const Lattice& lattice);

}  // namespace fbd::pde
