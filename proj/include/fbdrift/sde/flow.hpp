#pragma once

#include "fbdrift/sde/ensemble.hpp"

#include <json.hpp>

#include <limits>
#include <vector>

namespace fbd::sde {

/// Per-trajectory d x d matrices (row-major) stored at selected grid steps.
struct FlowEnsemble {
    int dimension = 3;
    std::size_t trajectories = 0;
    TimeGrid grid;
    std::vector<std::size_t> record;  ///< stored step indices, increasing
    std::vector<double> J;            ///< (traj, record, d*d): flow derivative
    std::vector<double> s_list;       ///< Malliavin start times
    std::vector<std::size_t> s_steps;
    /// Per s: (traj, record, d*d); records before the s step hold I.
    std::vector<std::vector<double>> D;

    std::span<const double> jacobian(std::size_t traj, std::size_t rec) const;
    std::span<const double> malliavin(std::size_t s_index, std::size_t traj, std::size_t rec) const;
    /// Index of step k in `record`; throws if k is not recorded.
    std::size_t record_index(std::size_t k) const;
};

/// J_{k+1} = J_k + grad b(t_k, X_k) J_k dt, J_0 = I. `record` empty = every step.
FlowEnsemble variational_flow(const DriftSpec& b, const PathEnsemble& ens, std::vector<std::size_t> record = {},
                              int workers = 1);

/// Adds D_s X_t for each s in s_list: the same recursion started at the grid
/// step of s with value I. Throws InvalidArgument for off-grid s.
void malliavin_derivative(const DriftSpec& b, const PathEnsemble& ens, const std::vector<double>& s_list,
                          FlowEnsemble& flows, int workers = 1);

/// Mixed norm of a matrix curve: ( sum_x w (mean_paths |F|^r)^2 )^{1/(2r)}
/// with |.| the Frobenius norm and w the lattice cell volume. Accumulated
/// start by start so the full lattice never needs to be held in memory.
class MixedNormAccumulator {
public:
    MixedNormAccumulator(std::vector<int> r_list, std::size_t samples);
    /// Adds one start: values[p * samples + i] = |F| on path p at sample i.
    void add(std::span<const double> values, std::size_t paths, double cell_weight);
    /// Norm for r_list[ri] at sample i.
    double norm(std::size_t ri, std::size_t i) const;
    std::size_t samples() const { return samples_; }
    const std::vector<int>& r_list() const { return r_; }

private:
    std::vector<int> r_;
    std::size_t samples_;
    std::vector<double> acc_;  // (r, sample)
};

/// Curve sampled at increasing abscissae with an envelope K x^p anchored at
/// the largest abscissa; `dominated` checks curve <= K x^p at every sample.
struct EnvelopeFit {
    std::vector<double> x;
    std::vector<double> y;
    double exponent = 0.0;  ///< p of the claimed bound
    double K = std::numeric_limits<double>::quiet_NaN();
    double slope = std::numeric_limits<double>::quiet_NaN();  ///< log-log least squares
    bool dominated = false;
    bool degenerate = false;

    nlohmann::json to_json() const;
};

EnvelopeFit fit_envelope(std::vector<double> x, std::vector<double> y, double exponent, double rel_tol = 1e-12);

struct FlowNormReport {
    int r = 1;
    EnvelopeFit flow;        ///< |grad X_t - I| against t
    EnvelopeFit malliavin;   ///< |D_s X_T - I| against T - s
    EnvelopeFit malliavin_gap;  ///< |D_s X_T - D_{s0} X_T| against |s - s0|, s0 = first s
    bool tends_to_zero = false;  ///< flow norm at the first sample below the last
    bool degenerate = false;
    std::size_t starts = 0;
    std::size_t paths = 0;

    nlohmann::json to_json() const;
};

/// Norm statistics from flows over a lattice of starts. The flows must
/// carry Malliavin matrices for the report's (ii) and (iii) curves (skipped
/// otherwise); `r_list` entries are >= 1.
std::vector<FlowNormReport> flow_norm_statistics(const FlowEnsemble& flows, const PathEnsemble& ens,
                                                 const std::vector<int>& r_list);

struct FlowStudyConfig {
    DriftSpec drift = DriftSpec::zero(3);
    std::size_t per_axis = 5;
    double half_width = 1.0;  ///< lattice over the drift support
    SimulationSettings sim;
    std::vector<int> r_list{1, 2};
    std::size_t samples = 10;  ///< recorded times (geometric towards 0)
    std::size_t malliavin_samples = 6;

    nlohmann::json to_json() const;
    static FlowStudyConfig from_json(const nlohmann::json& j);
};

/// Runs the lattice study start by start (one ensemble per start, common
/// seed) and accumulates the mixed norms.
std::vector<FlowNormReport> flow_study(const FlowStudyConfig& cfg);

}  // namespace fbd::sde
