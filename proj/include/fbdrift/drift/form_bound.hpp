#pragma once

#include "fbdrift/drift/drift_spec.hpp"
#include "fbdrift/drift/scalar_field.hpp"
#include "fbdrift/drift/test_functions.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace fbd::drift {

struct RayleighQuotient {
    std::string member_id;
    double t = 0.0;
    double value = 0.0;        ///< ||b(t) phi||^2 / ||grad phi||^2
    double numerator = 0.0;    ///< ||b(t) phi||_2^2
    double denominator = 0.0;  ///< ||grad phi||_2^2
};

struct FormBoundReport {
    double delta_hat = 0.0;
    std::vector<RayleighQuotient> quotients;
    std::string family_descriptor;
    std::string argmax_id;
    double argmax_t = 0.0;
    nlohmann::json provenance;  ///< quadrature settings and family members
    double wall_time = 0.0;

    nlohmann::json to_json() const;
};

/// delta_hat = max over (phi, t) of ||b(t,.) phi||^2 / ||grad phi||^2; a
/// lower bound of the true form-bound.
FormBoundReport estimate_form_bound(const DriftSpec& spec, const TestFunctionFamily& family,
                                    const std::vector<double>& times = {0.0}, int workers = 1);
/// Same estimator for the multiplication operator by a scalar field.
FormBoundReport estimate_form_bound(const ScalarField& f, const TestFunctionFamily& family,
                                    const std::vector<double>& times = {0.0}, int workers = 1);

/// (2c/(d-2))^2, the form-bound of the uncut attracting drift -c x/|x|^2.
double hardy_delta(double c, int d);
/// Inverse parametrization c = ((d-2)/2) sqrt(delta).
double hardy_coefficient(double delta, int d);

/// Sharp constant C_S in ||phi||_{2d/(d-2)}^2 <= C_S ||grad phi||_2^2.
double sobolev_constant(int d);

struct SobolevEstimate {
    double delta = 0.0;
    double C_S = 0.0;
    double ld_norm = 0.0;  ///< sup_t ||b(t)||_d
    double t_argmax = 0.0;
    nlohmann::json to_json() const;
};

/// C_S * sup_t ||b(t,.)||_d^2. Throws NumericalError if |b|^d is not integrable.
SobolevEstimate sobolev_delta(const DriftSpec& spec, int d, const std::vector<double>& times = {0.0});

}  // namespace fbd::drift
