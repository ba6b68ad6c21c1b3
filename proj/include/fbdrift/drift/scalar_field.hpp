#pragma once

#include <json.hpp>

#include <limits>
#include <span>
#include <string>
#include <vector>

namespace fbd::drift {

/// Closed-form scalar functions used as PDE sources and occupation test
/// functions: h(t, x) = amplitude * profile(|x - center|) * 1_{[t0, t1]}(t).
struct ScalarField {
    enum class Kind { Zero, Constant, IndicatorBall, Gaussian, PolyBump };

    Kind kind = Kind::Zero;
    int dimension = 3;
    std::vector<double> center;  ///< empty means the origin
    double radius = 1.0;         ///< ball / bump radius, Gaussian sigma
    double amplitude = 1.0;
    int power = 3;  ///< PolyBump exponent p in (1 - |y|^2/r^2)^p
    double t0 = -std::numeric_limits<double>::infinity();
    double t1 = std::numeric_limits<double>::infinity();

    static ScalarField zero(int d);
    static ScalarField constant(int d, double value);
    static ScalarField indicator_ball(int d, double radius, double amplitude = 1.0);
    static ScalarField gaussian(int d, double sigma, double amplitude = 1.0);
    static ScalarField poly_bump(int d, double radius, int power = 3, double amplitude = 1.0);

    ScalarField at(std::vector<double> c) const;
    ScalarField window(double a, double b) const;
    ScalarField scaled(double lambda) const;

    double eval(double t, std::span<const double> x) const;
    /// Spatial gradient.
    void grad(double t, std::span<const double> x, std::span<double> out) const;
    double profile(double r) const;  ///< without amplitude and time window
    bool active(double t) const { return t >= t0 && t <= t1; }
    bool is_zero() const { return kind == Kind::Zero || amplitude == 0.0; }
    bool centered() const;
    double center_norm() const;
    /// Radius (about the center) beyond which the field vanishes; +inf for Gaussians.
    double support_radius() const;
    std::vector<double> breakpoints() const;

    /// (int_{T0}^{T1} int |h|^mu dx dt)^{1/mu} by radial quadrature about the center.
    double lp_norm(double mu, double T0, double T1) const;
    /// int |h|^mu dx at a fixed active time.
    double spatial_power_integral(double mu) const;

    nlohmann::json to_json() const;
    static ScalarField from_json(const nlohmann::json& j, int default_dimension = 3);
};

}  // namespace fbd::drift
