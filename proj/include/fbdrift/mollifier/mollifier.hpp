#pragma once

#include "fbdrift/drift/drift_spec.hpp"
#include "fbdrift/drift/form_bound.hpp"
#include "fbdrift/drift/test_functions.hpp"

#include <json.hpp>

#include <vector>

namespace fbd::mollifier {

using drift::DriftSpec;

/// Levels m (increasing), widths eps_m (decreasing), scales c_m in (0, 1].
struct MollifySchedule {
    std::vector<double> levels;
    std::vector<double> widths;
    std::vector<double> scales;
    /// Target for the final-level L^2 distance.
    double tolerance = 0.15;

    std::size_t size() const { return levels.size(); }
    void validate() const;

    /// m_j given explicitly, eps_m = min(1/m^2, eps0), c_m = 1 - 1/m.
    static MollifySchedule defaults(const std::vector<double>& levels, double eps0 = 0.01);
    /// m = 2^j for j in [j0, j1].
    static MollifySchedule powers_of_two(int j0, int j1, double eps0 = 0.01);

    nlohmann::json to_json() const;
    static MollifySchedule from_json(const nlohmann::json& j);
};

/// b * 1_{|b| <= m}.
DriftSpec cutoff_by_level(const DriftSpec& spec, double m);
/// Convolution with the eps-scaled unit-mass bump on R^{1+d}.
DriftSpec friedrichs_mollify(const DriftSpec& spec, double eps);
/// c_m E_eps(1_m b).
DriftSpec approximant(const DriftSpec& spec, double m, double eps, double c_m);

/// ||a - b||^2 in L^2([0, T] x [-L, L]^d).
double l2_distance_sq(const DriftSpec& a, const DriftSpec& b, double L, double T);

/// Estimate of sup |b(t, .)| by sampling (profile or tensor lattice).
double sampled_sup(const DriftSpec& spec, double t = 0.0);

struct ApproxLevel {
    double m = 0.0, eps = 0.0, c_m = 1.0;
    double distance = 0.0;          ///< ||b_m - b||_{L^2([0,T] x box)}
    double truncation_error_sq = 0.0;  ///< ||1_m b - b||^2, before mollification
    double delta_hat = 0.0;
    double max_quotient_ratio = 0.0;   ///< max over members of q(b_m) / delta_hat(b)
    double sup_norm = 0.0;             ///< sampled sup |b_m|
    bool form_bound_ok = false;
    bool sup_ok = false;
};

struct ApproxSequenceReport {
    std::vector<ApproxLevel> levels;
    double base_delta_hat = 0.0;
    double box_half_width = 0.0;
    double horizon = 0.0;
    double tolerance = 0.0;
    double form_bound_slack = 0.01;
    bool monotone = true;      ///< distances non-increasing (informational)
    bool converged = false;    ///< final distance below tolerance
    bool form_bound_preserved = true;

    nlohmann::json to_json() const;
};

ApproxSequenceReport build_approx_sequence(const DriftSpec& spec, const MollifySchedule& schedule, double box_half_width,
                                           double T, const drift::TestFunctionFamily& family, int workers = 1);

}  // namespace fbd::mollifier
