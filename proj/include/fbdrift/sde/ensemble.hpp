#pragma once

#include "fbdrift/drift/drift_spec.hpp"

#include <json.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fbd::sde {

using drift::DriftSpec;

/// Starting points: a single point or a cubic lattice of points.
struct StartSpec {
    std::vector<std::vector<double>> points;

    static StartSpec single(std::vector<double> x);
    /// `per_axis` points per axis spread uniformly over [-half_width, half_width]^d (cell centers).
    static StartSpec lattice(int d, std::size_t per_axis, double half_width, std::vector<double> center = {});
    int dimension() const;
    std::size_t size() const { return points.size(); }
    /// Volume of one lattice cell (1 for a single point).
    double cell_volume = 1.0;

    nlohmann::json to_json() const;
    static StartSpec from_json(const nlohmann::json& j, int d);
};

/// Uniform grid t_k = s + k dt, k = 0..steps. Brownian increments are keyed
/// by the absolute step index offset + k, offset = round(s / dt), so
/// ensembles started at different grid times share one Brownian path.
struct TimeGrid {
    double s = 0.0;
    double dt = 0.0;
    std::size_t steps = 0;
    std::uint64_t offset = 0;

    /// steps = ceil((T - s) / dt), dt then shrunk to (T - s) / steps.
    static TimeGrid make(double s, double T, double dt);
    double time(std::size_t k) const { return s + static_cast<double>(k) * dt; }
    double horizon() const { return time(steps); }
};

/// Source of the Brownian increments of one ensemble.
struct NoiseSource {
    std::uint64_t seed = 0;
    int dimension = 3;
    double dt = 0.0;
    /// dW for (path, absolute step): N(0, dt I_d).
    void increment(std::uint64_t path, std::uint64_t step, std::span<double> out) const;
};

/// Refuses drifts the explicit scheme cannot integrate: unbounded fields
/// and mollified fields whose width is not resolved by dt
/// (dt * min(c_m m, sup|b|) <= 0.1 eps).
void check_sde_drift(const DriftSpec& b, double dt);

struct SimulationSettings {
    double s = 0.0;
    double T = 1.0;
    double dt = 0.01;
    std::size_t paths = 1000;
    std::uint64_t seed = 1;
    int workers = 1;

    nlohmann::json to_json() const;
    static SimulationSettings from_json(const nlohmann::json& j);
};

/// Trajectories (start-major, then path) over a uniform grid; increments are
/// shared by all starts (path m uses the same noise from every start).
struct PathEnsemble {
    int dimension = 3;
    std::size_t paths = 0;   ///< M per start
    StartSpec starts;
    TimeGrid grid;
    std::uint64_t seed = 0;
    std::string drift_id;
    std::vector<double> X;   ///< (starts * M, steps + 1, d)
    std::vector<double> dW;  ///< (M, steps, d)

    std::size_t trajectories() const { return starts.size() * paths; }
    std::size_t steps() const { return grid.steps; }
    std::span<const double> state(std::size_t traj, std::size_t k) const;
    std::span<const double> increment(std::size_t path, std::size_t k) const;
    /// SHA-256 of the stored increments.
    std::string increment_checksum() const;

    /// Flat little-endian float64 arrays `stem.paths.bin`, `stem.increments.bin`
    /// plus `stem.json` (shape, dt, seed, drift id).
    void write(const std::string& stem) const;
    static PathEnsemble read(const std::string& stem);
};

/// X_{k+1} = X_k + b(t_k, X_k) dt + dW_k for every start and path.
PathEnsemble simulate_ensemble(const DriftSpec& b, const StartSpec& x0, const SimulationSettings& s);

}  // namespace fbd::sde
