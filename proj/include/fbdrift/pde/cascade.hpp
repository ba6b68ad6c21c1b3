#pragma once

#include "fbdrift/pde/solver.hpp"

#include <json.hpp>

#include <limits>
#include <vector>

namespace fbd::pde {

/// Constants of the energy chain for given form-bounds and splitting
/// parameters: C1 = 1 - 2 sqrt(delta) - 2 eps nu - 1/(2 beta),
/// C2 = 2 beta nu + 1/(2 eps), K = C2 / C1.
struct CascadeConstants {
    double delta = 0.0;
    double nu = 0.0;
    double eps = 0.0;
    double beta = 0.0;
    double C1 = 0.0;
    double C2 = 0.0;
    double K = 0.0;

    bool feasible() const { return C1 > 0.0; }
    nlohmann::json to_json() const;
};

/// eps or beta <= 0 selects the default max(2, 1/(2 sqrt(nu))).
CascadeConstants cascade_constants(double delta, double nu, double eps = 0.0, double beta = 0.0);

struct CascadeConfig {
    DriftSpec drift = DriftSpec::zero(3);
    std::vector<ScalarField> sources;  ///< f_1 .. f_n
    std::vector<int> alphas;           ///< derivative indices, 1-based
    double T0 = 0.0;
    double T1 = 0.2;
    double eps = 0.0;   ///< 0 = default
    double beta = 0.0;  ///< 0 = default
    /// NaN = estimate with the reference test-function family.
    double delta_hat = std::numeric_limits<double>::quiet_NaN();
    double nu_hat = std::numeric_limits<double>::quiet_NaN();
    /// grid.grid.half_width <= 0 selects R + sqrt(2 (T1 - T0)) * box_safety.
    GridSettings grid;
    double box_safety = 1.5;
    /// Ratios E_k / E_{k+1} are reported only when E_{k+1} exceeds this.
    double ratio_floor = 1e-14;
    /// Relative slack on the discrete chain inequalities.
    double chain_tolerance = 0.25;

    int dimension() const { return drift.dimension(); }
    std::size_t levels() const { return sources.size(); }
    /// Largest |center| + support radius over the sources.
    double source_radius() const;
    void validate() const;
    CascadeConfig truncated(std::size_t n) const;
    CascadeConfig with_interval(double T0, double T1) const;

    nlohmann::json to_json() const;
    static CascadeConfig from_json(const nlohmann::json& j);
};

struct CascadeResult {
    std::size_t n = 0;
    double T0 = 0.0;
    double T1 = 0.0;
    CascadeConstants constants;
    std::vector<double> energies;  ///< E_k for k = 2..n (index k - 2)
    std::vector<double> ratios;    ///< E_k / E_{k+1} for k = 2..n-1, NaN when undefined
    double K_hat = std::numeric_limits<double>::quiet_NaN();  ///< max defined ratio
    double E_U = 0.0;              ///< int_0^{T1} <|grad U|^2>
    double E_1 = 0.0;              ///< int_0^{T1-T0} <|grad U|^2> = energy of u_1
    double U2_terminal = 0.0;      ///< <U^2(T1)>
    double chain_lhs = 0.0;        ///< <U^2(T1)> + C1 E_U
    double chain_rhs = 0.0;        ///< C2 E_2
    bool chain_applicable = false; ///< n >= 2
    bool chain_ok = true;
    bool ratios_ok = true;
    double ratio_excess = 0.0;     ///< max over ratios of ratio / K - 1 (<= 0 when bounded)
    double energy_residual = 0.0;  ///< discrete energy-identity residual of U
    double boundary_leakage = 0.0;
    double half_width = 0.0;
    std::size_t intervals = 0;
    double dt = 0.0;
    std::size_t steps = 0;
    double wall_time = 0.0;

    double length() const { return T1 - T0; }
    nlohmann::json to_json() const;
};

/// Back-substitution u_n, ..., u_2 (u_{n+1} = 1) marched in lockstep with the
/// reversed initial-value problem for U; throws InfeasibleConstants when
/// C1 <= 0.
CascadeResult run_cascade(const CascadeConfig& cfg);

struct ProductEstimateReport {
    std::vector<double> lengths;
    std::vector<double> U2_by_length;
    double slope_length = std::numeric_limits<double>::quiet_NaN();
    double intercept_length = std::numeric_limits<double>::quiet_NaN();
    std::vector<std::size_t> ns;
    std::vector<double> U2_by_n;
    double decay_rate_n = std::numeric_limits<double>::quiet_NaN();  ///< fitted geometric ratio
    double intercept_n = std::numeric_limits<double>::quiet_NaN();   ///< log U2 ~ intercept_n + n log(rate)
    double K_hat = std::numeric_limits<double>::quiet_NaN();
    bool decay_ok = false;  ///< decay_rate_n <= K_hat * (1 + 0.2)
    bool degenerate = false;
    std::vector<CascadeResult> runs;

    nlohmann::json to_json() const;
};

/// Length sweep at the configured n and level sweep over `ns` (default
/// 2..n) at the configured length.
ProductEstimateReport product_estimate_check(const CascadeConfig& cfg, const std::vector<double>& lengths,
                                             std::vector<std::size_t> ns = {});

/// Rescales the amplitude so that the estimated form-bound equals nu.
ScalarField calibrate_source(const ScalarField& f, double nu);
/// Form-bound estimate of a source with the reference family scaled to its support.
double estimate_source_bound(const ScalarField& f);
/// Form-bound estimate of a drift with the reference family scaled to `scale`.
double estimate_drift_bound(const DriftSpec& b, double scale);

}  // namespace fbd::pde
