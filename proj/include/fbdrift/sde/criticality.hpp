#pragma once

#include "fbdrift/sde/ensemble.hpp"

#include <json.hpp>

#include <vector>

namespace fbd::sde {

struct CriticalityConfig {
    std::vector<double> deltas{0.25, 1.0, 4.0, 16.0};
    int dimension = 3;
    std::vector<double> x0{0.01, 0.0, 0.0};
    SimulationSettings sim{0.0, 2.5e-4, 2e-7, 10000, 1, 1};
    double collapse_radius = 0.005;
    double level = 1024.0;       ///< mollification level m
    double width = 0.0025;       ///< eps_m
    double scale = 0.0;          ///< c_m; 0 = 1 - 1/m
    double cutoff_radius = 1.0;  ///< R of the Hardy drift

    nlohmann::json to_json() const;
    static CriticalityConfig from_json(const nlohmann::json& j);
};

struct CriticalityRow {
    double delta = 0.0;
    double coefficient = 0.0;      ///< c of the Hardy drift
    double collapse_fraction = 0.0;  ///< paths with min_t |X_t| <= collapse radius
    double collapse_se = 0.0;
    double inside_fraction = 0.0;  ///< paths with |X_T| <= collapse radius
    double inside_se = 0.0;

    nlohmann::json to_json() const;
};

struct CriticalityReport {
    CriticalityRow baseline;  ///< zero drift, same noise
    std::vector<CriticalityRow> rows;
    bool monotone = false;     ///< collapse fraction non-decreasing in delta
    double separation = 0.0;   ///< (last - first) / combined SE
    std::size_t paths = 0;
    std::size_t steps = 0;
    double dt = 0.0;

    nlohmann::json to_json() const;
};

/// Hardy attractors with delta in the list, mollified at level m, marched
/// from x0 with common noise across the sweep; only the running minimum and
/// final radius of each path are kept.
CriticalityReport criticality_sweep(const CriticalityConfig& cfg);

}  // namespace fbd::sde
