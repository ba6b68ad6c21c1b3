#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace fbd {

/// Nodes and weights of a one-dimensional rule.
struct Rule1D {
    std::vector<double> nodes;
    std::vector<double> weights;
    std::size_t size() const { return nodes.size(); }
};

/// Gauss-Legendre rule with n nodes on [-1, 1]. Cached per n; thread-safe.
const Rule1D& gauss_legendre(std::size_t n);

/// Gauss-Legendre rule affinely mapped to [a, b].
Rule1D gauss_legendre(std::size_t n, double a, double b);

double sphere_area(int d);  ///< |S^{d-1}|
double ball_volume(int d);  ///< |B_1| in R^d

/// Radial rule for integrals of the form  int_0^rmax f(r) r^{d-1} dr.
/// The weights already carry the r^{d-1} factor but NOT the sphere area.
struct RadialRule {
    std::vector<double> r;
    std::vector<double> w;
    std::size_t size() const { return r.size(); }

    template <class F>
    double integrate(F&& f) const {
        double s = 0.0;
        for (std::size_t i = 0; i < r.size(); ++i) s += w[i] * f(r[i]);
        return s;
    }
};

/// Options for building a composite radial rule.
struct RadialRuleOptions {
    int dimension = 3;
    std::size_t nodes_per_segment = 256;
    /// Exponent k of the substitution r = r1 * s^k used on the innermost
    /// segment [0, r1]; k > 1 clusters nodes at the origin for integrands
    /// with a power singularity there.
    double inner_power = 1.0;
    /// Segments not touching the origin are integrated in log r.
    bool log_outer = true;
};

/// Composite rule on [0, rmax], split at the given breakpoints (any order;
/// points outside (0, rmax) are ignored).
RadialRule make_radial_rule(double rmax, std::vector<double> breakpoints,
                            const RadialRuleOptions& opt);

/// Product rule on the unit sphere S^{d-1}: directions (row-major, d per
/// direction) and weights summing to |S^{d-1}|. `n` controls the number of
/// polar nodes per angle; the azimuth gets 2n equispaced nodes.
struct SphereRule {
    int dimension = 3;
    std::vector<double> directions;
    std::vector<double> weights;
    std::size_t size() const { return weights.size(); }
    std::span<const double> direction(std::size_t i) const {
        return {directions.data() + i * static_cast<std::size_t>(dimension),
                static_cast<std::size_t>(dimension)};
    }
};

SphereRule make_sphere_rule(int d, std::size_t n);

/// Tensor midpoint grid over the box [lo, hi]^d with n cells per axis.
/// Calls f(x, cell_volume) for every cell center.
void for_each_tensor_cell(int d, double lo, double hi, std::size_t n,
                          const std::function<void(std::span<const double>, double)>& f);

}  // namespace fbd
