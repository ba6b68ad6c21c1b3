#pragma once

#include "fbdrift/drift/drift_spec.hpp"

#include <cstddef>
#include <vector>

namespace fbd::drift {

struct NormQuadrature {
    std::size_t radial_nodes = 256;      ///< per segment, origin-centered radial integrals
    std::size_t tensor_cells = 64;       ///< per axis, non-radial fields
    std::size_t ball_radial_nodes = 64;  ///< off-center balls
    std::size_t ball_sphere_nodes = 8;
    std::size_t profile_samples = 4000;  ///< level-set search along the radial profile
};

/// (int |b(t,.)|^p dx)^{1/p}.
double lp_norm(const DriftSpec& spec, double p, double t, const NormQuadrature& q = {});

/// max over the supplied (center, radius) pairs of
/// r (|B_r|^{-1} int_{B_r(x)} |b|^{2+eps})^{1/(2+eps)}; a lower bound of the Morrey norm.
double morrey_norm(const DriftSpec& spec, double eps, const std::vector<std::vector<double>>& centers,
                   const std::vector<double>& radii, double t, const NormQuadrature& q = {});

/// Origin plus the lattice {-R/2, 0, R/2}^d.
std::vector<std::vector<double>> default_morrey_centers(int d, double R);
/// Log-spaced radii over [1e-3 R, R].
std::vector<double> default_morrey_radii(double R, std::size_t count = 16);

/// max over the supplied levels s of s |{|b(t,.)| > s}|^{1/d}; a lower bound of the weak-L^d norm.
double weak_ld_norm(const DriftSpec& spec, const std::vector<double>& levels, double t, const NormQuadrature& q = {});

/// Lebesgue measure of {|b(t,.)| > s}.
double level_set_volume(const DriftSpec& spec, double s, double t, const NormQuadrature& q = {});

}  // namespace fbd::drift
