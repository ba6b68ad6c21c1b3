#pragma once

#include "fbdrift/common/grid.hpp"
#include "fbdrift/drift/drift_spec.hpp"
#include "fbdrift/drift/scalar_field.hpp"

#include <json.hpp>

#include <functional>
#include <span>
#include <vector>

namespace fbd::pde {

using drift::DriftSpec;
using drift::ScalarField;

/// Source term g(t, x).
using Source = std::function<double(double, std::span<const double>)>;

Source zero_source();
Source source_of(const ScalarField& f);

struct GridSettings {
    GridSpec grid;
    double dt = 0.0;          ///< 0 selects the largest stable step
    double safety = 0.9;      ///< CFL safety factor
    int workers = 1;
    std::size_t store_stride = 1;  ///< keep every k-th frame (the last frame is always kept)

    nlohmann::json to_json() const;
    static GridSettings from_json(const nlohmann::json& j);
};

/// Largest explicit step admitted by the stepper for the given drift
/// magnitudes: min(h^2/(2d), h/max|b|, 1/(d/h^2 + max sum_k |b_k|/h)) * safety.
double stable_dt(const GridSpec& grid, double max_abs_b, double max_l1_b, double safety);

/// Time-indexed grid solution. Frames are stored in march order: for a
/// terminal-value problem the first frame is t = T1 and the last t = T0.
struct TimeSeries {
    GridSpec grid;
    std::vector<double> times;
    std::vector<std::vector<double>> frames;
    double dt = 0.0;
    std::size_t stride = 1;
    bool backward = false;     ///< true for terminal-value problems
    double boundary_leakage = 0.0;  ///< max |u| next to the boundary over max |u|

    std::size_t size() const { return frames.size(); }
    GridField frame(std::size_t k) const;
    /// Frame whose time is closest to t.
    const std::vector<double>& at_time(double t) const;
};

/// One explicit Euler step of  d_tau u = 1/2 Delta u + b . grad u + g  with
/// central differences for the Laplacian, upwind differences for the
/// advection and homogeneous Dirichlet data on the box boundary.
class ParabolicStepper {
public:
    ParabolicStepper(GridSpec grid, double dt, int workers = 1);
    /// b: node-major d-vectors (empty = zero drift); g: node values (empty = 0).
    void step(std::vector<double>& u, std::span<const double> b, std::span<const double> g);
    const GridSpec& grid() const { return grid_; }
    double dt() const { return dt_; }

private:
    GridSpec grid_;
    double dt_;
    int workers_;
    std::vector<double> next_;
};

/// Samples the drift at every node (node-major) and returns {max|b|, max sum_k |b_k|}.
std::pair<double, double> sample_drift(const DriftSpec& b, double t, const GridSpec& grid, std::vector<double>& out);
void sample_source(const Source& g, double t, const GridSpec& grid, std::vector<double>& out);

/// d_t u + 1/2 Delta u + b . grad u + g = 0 on [T0, T1], u(T1) = 0.
TimeSeries solve_terminal(const DriftSpec& b, const Source& g, double T0, double T1, const GridSettings& settings);

/// d_t U - 1/2 Delta U - B . grad U - G = 0 on [0, T], U(0) = 0.
TimeSeries solve_initial(const DriftSpec& B, const Source& G, double T, const GridSettings& settings);

struct ReversedProblem {
    DriftSpec B;
    Source G;
};

/// B(t) = b(T1 - t) on [0, T1 - T0], b(t + T0 - T1) on ]T1 - T0, T1];
/// G(t) = g1(T1 - t) 1_{[0, T1 - T0]}(t).
ReversedProblem build_reversed_problem(const DriftSpec& b, const Source& g1, double T0, double T1);

/// Central-difference gradient squared, summed over nodes with weight h^d.
double dirichlet_energy(const GridSpec& grid, std::span<const double> u);
double mass_sq(const GridSpec& grid, std::span<const double> u);
/// max |u| on the nodes next to the boundary over max |u| (0 for u = 0).
double leakage(const GridSpec& grid, std::span<const double> u);

}  // namespace fbd::pde
