#pragma once

#include "fbdrift/sde/ensemble.hpp"

#include <json.hpp>

#include <limits>
#include <string>
#include <vector>

namespace fbd::sde {

/// r-th moments of a pathwise modulus sampled at increasing gaps.
struct ModulusSeries {
    std::string name;          ///< "time", "space" or "start"
    std::vector<double> gaps;
    std::vector<double> moments;
    std::vector<double> std_errors;
    std::vector<double> bound;  ///< right-hand side term of the joint bound at each gap
    double bound_exponent = 0.0;
    double slope = std::numeric_limits<double>::quiet_NaN();  ///< log-log fit over positive gaps
    bool under_resolved = false;  ///< some relative SE above 50%

    nlohmann::json to_json() const;
};

struct RegularityConfig {
    DriftSpec drift = DriftSpec::zero(3);
    std::vector<double> x0{0.2, 0.0, 0.0};
    SimulationSettings sim;
    int r = 0;  ///< 0 = ceil(d + 1)
    std::vector<std::size_t> time_gap_steps{1, 2, 4, 8, 16};
    std::vector<double> space_gaps{0.0125, 0.025, 0.05, 0.1};
    std::vector<std::size_t> start_gap_steps{1, 2, 4, 8, 16};

    nlohmann::json to_json() const;
    static RegularityConfig from_json(const nlohmann::json& j);
};

struct RegularityReport {
    int r = 0;
    int dimension = 0;
    ModulusSeries time;   ///< drift part of X_{t1+g} - X_{t1}, bound g^r
    ModulusSeries space;  ///< X^x_{s,T} - X^y_{s,T}, bound |x - y|^{r-d}
    ModulusSeries start;  ///< X_{s,T} - X_{s+g,T}, bound g^{r-d}
    double C = std::numeric_limits<double>::quiet_NaN();  ///< joint constant
    bool dominated = false;
    bool coupling_ok = false;
    std::string increment_checksum;
    std::vector<std::string> warnings;

    nlohmann::json to_json() const;
};

/// Moments of the three moduli from coupled ensembles (shared Brownian
/// path across starts and start times) and the joint constant C, taken as
/// the largest ratio moment / bound at each series' widest gap; every
/// sample must satisfy moment - 3 SE <= C bound.
RegularityReport regularity_statistics(const RegularityConfig& cfg);

/// Modulus series of explicit ensembles. `base` starts at s from
/// starts.points[0]; further starts of `base` are spatial neighbours; `later`
/// holds ensembles from starts.points[0] at later grid times.
RegularityReport regularity_statistics(const PathEnsemble& base, const std::vector<PathEnsemble>& later, int r,
                                       const std::vector<std::size_t>& time_gap_steps);

}  // namespace fbd::sde
