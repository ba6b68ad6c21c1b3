#pragma once

#include "fbdrift/drift/scalar_field.hpp"
#include "fbdrift/sde/ensemble.hpp"

#include <json.hpp>

#include <string>
#include <utility>

namespace fbd::sde {

using drift::ScalarField;

struct KrylovReport {
    double estimate = 0.0;        ///< mean over trajectories of the occupation sum
    double std_error = 0.0;
    double reference_norm = 0.0;  ///< L^mu norm, or the composite norm with g
    double ratio = 0.0;           ///< estimate / reference_norm (0 when both vanish)
    double exponent = 0.0;        ///< mu or q
    std::string norm_kind;        ///< "lebesgue" or "composite"
    std::size_t trajectories = 0;

    nlohmann::json to_json() const;
};

/// Occupation sum of |h(t_k, X_k)| with trapezoid weights over the grid
/// against ||h||_{L^mu([s, T] x R^d)}. Requires mu > (d + 2) / 2.
KrylovReport krylov_functional(const PathEnsemble& ens, const ScalarField& h, double mu);

/// Admissible open interval ]d, delta^{-1/2}[ for q.
std::pair<double, double> admissible_q_interval(int d, double delta_hat);

/// Occupation sum of |g h| against ( int int |g|^2 |h|^q )^{1/q}. Throws
/// InfeasibleExponent when the admissible interval is empty and
/// InvalidArgument when q lies outside it.
KrylovReport krylov_g_functional(const PathEnsemble& ens, const DriftSpec& g, const ScalarField& h, double q,
                                 double delta_hat);

/// ( int_{t1}^{t2} int |g|^2 |h|^q dx dt )^{1/q} by quadrature about the center of h.
double composite_norm(const DriftSpec& g, const ScalarField& h, double q, double t1, double t2);

}  // namespace fbd::sde
