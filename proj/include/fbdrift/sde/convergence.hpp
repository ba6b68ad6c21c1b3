#pragma once

#include "fbdrift/mollifier/mollifier.hpp"
#include "fbdrift/pde/weighted_norm.hpp"
#include "fbdrift/sde/ensemble.hpp"

#include <json.hpp>

#include <limits>
#include <string>
#include <vector>

namespace fbd::sde {

struct ConvergenceConfig {
    DriftSpec drift = DriftSpec::zero(3);  ///< the limiting (possibly singular) drift
    mollifier::MollifySchedule schedule;
    std::vector<double> x0{0.05, 0.0, 0.0};
    SimulationSettings sim;
    double kappa = 0.01;
    double theta = 0.0;  ///< 0 = (d + 1) / 2 + 0.5
    pde::Lattice lattice{1.0, 0.0, {}};  ///< half_extent 0 = 2R with R the drift support (or 1)

    nlohmann::json to_json() const;
    static ConvergenceConfig from_json(const nlohmann::json& j);
};

struct LevelPair {
    double m = 0.0;
    double m_next = 0.0;
    double median_gap = 0.0;  ///< median over paths of sup_t |X^m - X^{m'}|
    double p95_gap = 0.0;
    double surrogate = 0.0;   ///< E int |b_m - b_{m'}|(X^m) dt
    double surrogate_se = 0.0;
    double weighted_norm = 0.0;  ///< sup_z ||(b_m - b_{m'}) sqrt(rho_z)||_{L^2}

    nlohmann::json to_json() const;
};

struct ConvergenceReport {
    std::vector<LevelPair> pairs;
    double C1 = std::numeric_limits<double>::quiet_NaN();  ///< ratio at the first pair
    bool surrogate_dominated = false;  ///< surrogate - 3 SE <= C1 * norm for every pair
    bool gaps_nonincreasing = false;   ///< median gap non-increasing beyond the first pair
    std::string increment_checksum;    ///< shared by every level
    std::size_t paths = 0;
    std::size_t steps = 0;
    double dt = 0.0;

    nlohmann::json to_json() const;
};

/// All levels are marched in lockstep from x0 with one Brownian increment
/// per path and step applied to every level.
ConvergenceReport convergence_study(const ConvergenceConfig& cfg);

}  // namespace fbd::sde
