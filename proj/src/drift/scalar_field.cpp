#include "fbdrift/drift/scalar_field.hpp"

#include "fbdrift/common/errors.hpp"
#include "fbdrift/common/quadrature.hpp"
#include "fbdrift/common/text_document.hpp"

#include <algorithm>
#include <cmath>

namespace fbd::drift {

namespace {
ScalarField make(ScalarField::Kind k, int d, double r, double a) {
    if (d < 1) throw InvalidArgument("scalar field dimension must be positive");
    if (!(r > 0.0)) throw InvalidArgument("scalar field radius must be positive");
    ScalarField f;
    f.kind = k;
    f.dimension = d;
    f.radius = r;
    f.amplitude = a;
    return f;
}
}  // namespace

ScalarField ScalarField::zero(int d) { return make(Kind::Zero, d, 1.0, 0.0); }
ScalarField ScalarField::constant(int d, double v) { return make(Kind::Constant, d, 1.0, v); }
ScalarField ScalarField::indicator_ball(int d, double r, double a) { return make(Kind::IndicatorBall, d, r, a); }
ScalarField ScalarField::gaussian(int d, double s, double a) { return make(Kind::Gaussian, d, s, a); }
ScalarField ScalarField::poly_bump(int d, double r, int p, double a) {
    if (p < 1) throw InvalidArgument("poly bump power must be >= 1");
    auto f = make(Kind::PolyBump, d, r, a);
    f.power = p;
    return f;
}

ScalarField ScalarField::at(std::vector<double> c) const {
    if (c.size() != static_cast<std::size_t>(dimension)) throw InvalidArgument("center dimension mismatch");
    ScalarField f = *this;
    f.center = std::move(c);
    return f;
}

ScalarField ScalarField::window(double a, double b) const {
    if (!(b >= a)) throw InvalidArgument("time window requires t0 <= t1");
    ScalarField f = *this;
    f.t0 = a;
    f.t1 = b;
    return f;
}

ScalarField ScalarField::scaled(double lambda) const {
    ScalarField f = *this;
    f.amplitude *= lambda;
    return f;
}

bool ScalarField::centered() const { return center_norm() == 0.0; }

double ScalarField::center_norm() const {
    double s = 0.0;
    for (double c : center) s += c * c;
    return std::sqrt(s);
}

double ScalarField::profile(double r) const {
    switch (kind) {
        case Kind::Zero: return 0.0;
        case Kind::Constant: return 1.0;
        case Kind::IndicatorBall: return r < radius ? 1.0 : 0.0;
        case Kind::Gaussian: return std::exp(-0.5 * r * r / (radius * radius));
        case Kind::PolyBump: {
            if (r >= radius) return 0.0;
            return std::pow(1.0 - r * r / (radius * radius), power);
        }
    }
    return 0.0;
}

double ScalarField::eval(double t, std::span<const double> x) const {
    if (x.size() != static_cast<std::size_t>(dimension)) throw InvalidArgument("point dimension mismatch");
    if (kind == Kind::Zero || !active(t)) return 0.0;
    double r2 = 0.0;
    for (int i = 0; i < dimension; ++i) {
        const double y = x[i] - (center.empty() ? 0.0 : center[i]);
        r2 += y * y;
    }
    switch (kind) {
        case Kind::Constant: return amplitude;
        case Kind::IndicatorBall: return r2 < radius * radius ? amplitude : 0.0;
        case Kind::Gaussian: return amplitude * std::exp(-0.5 * r2 / (radius * radius));
        case Kind::PolyBump: {
            const double q = 1.0 - r2 / (radius * radius);
            return q > 0.0 ? amplitude * std::pow(q, power) : 0.0;
        }
        default: return 0.0;
    }
}

void ScalarField::grad(double t, std::span<const double> x, std::span<double> out) const {
    std::fill(out.begin(), out.begin() + dimension, 0.0);
    if (kind == Kind::Zero || kind == Kind::Constant || kind == Kind::IndicatorBall || !active(t)) return;
    double y[32];
    double r2 = 0.0;
    for (int i = 0; i < dimension; ++i) {
        y[i] = x[i] - (center.empty() ? 0.0 : center[i]);
        r2 += y[i] * y[i];
    }
    double f = 0.0;  // d/d(y_i) = f * y_i
    if (kind == Kind::Gaussian) {
        f = -amplitude * std::exp(-0.5 * r2 / (radius * radius)) / (radius * radius);
    } else {
        const double q = 1.0 - r2 / (radius * radius);
        if (q <= 0.0) return;
        f = -amplitude * power * std::pow(q, power - 1) * 2.0 / (radius * radius);
    }
    for (int i = 0; i < dimension; ++i) out[i] = f * y[i];
}

double ScalarField::support_radius() const {
    switch (kind) {
        case Kind::Zero: return 0.0;
        case Kind::IndicatorBall:
        case Kind::PolyBump: return radius;
        default: return std::numeric_limits<double>::infinity();
    }
}

std::vector<double> ScalarField::breakpoints() const {
    if (kind == Kind::IndicatorBall || kind == Kind::PolyBump) return {radius};
    return {};
}

double ScalarField::spatial_power_integral(double mu) const {
    if (is_zero()) return 0.0;
    if (kind == Kind::Constant) return std::numeric_limits<double>::infinity();
    if (kind == Kind::IndicatorBall) return std::pow(std::abs(amplitude), mu) * ball_volume(dimension) * std::pow(radius, dimension);
    const double rmax = kind == Kind::Gaussian ? radius * std::sqrt(2.0 * 800.0 / mu) : radius;
    RadialRuleOptions opt;
    opt.dimension = dimension;
    opt.log_outer = false;
    const RadialRule rule = make_radial_rule(rmax, {}, opt);
    const double s = rule.integrate([&](double r) { return std::pow(profile(r), mu); });
    return std::pow(std::abs(amplitude), mu) * sphere_area(dimension) * s;
}

double ScalarField::lp_norm(double mu, double T0, double T1) const {
    if (!(mu > 0.0)) throw InvalidArgument("exponent must be positive");
    const double len = std::max(0.0, std::min(T1, t1) - std::max(T0, t0));
    if (len == 0.0 || is_zero()) return 0.0;
    return std::pow(len * spatial_power_integral(mu), 1.0 / mu);
}

nlohmann::json ScalarField::to_json() const {
    static const char* names[] = {"zero", "constant", "indicator_ball", "gaussian", "poly_bump"};
    nlohmann::json j;
    j["kind"] = names[static_cast<int>(kind)];
    j["dimension"] = dimension;
    j["radius"] = radius;
    j["amplitude"] = amplitude;
    if (kind == Kind::PolyBump) j["power"] = power;
    if (!center.empty()) j["center"] = center;
    if (std::isfinite(t0) || std::isfinite(t1)) j["window"] = {real_to_json(t0), real_to_json(t1)};
    return j;
}

ScalarField ScalarField::from_json(const nlohmann::json& j, int default_dimension) {
    if (!j.is_object() || !j.contains("kind")) throw ConfigError("test function: expected an object with 'kind'");
    std::string k = j["kind"].get<std::string>();
    std::replace(k.begin(), k.end(), '-', '_');
    const int d = j.value("dimension", default_dimension);
    const double a = j.contains("amplitude") ? json_real(j["amplitude"]) : 1.0;
    const double r = j.contains("radius") ? json_real(j["radius"]) : (j.contains("sigma") ? json_real(j["sigma"]) : 1.0);
    ScalarField f;
    if (k == "zero") f = zero(d);
    else if (k == "constant") f = constant(d, j.contains("value") ? json_real(j["value"]) : a);
    else if (k == "indicator_ball" || k == "indicator") f = indicator_ball(d, r, a);
    else if (k == "gaussian") f = gaussian(d, r, a);
    else if (k == "poly_bump" || k == "polynomial_bump") f = poly_bump(d, r, j.value("power", 3), a);
    else throw ConfigError("test function: unknown kind '" + k + "' (catalog: zero, constant, indicator_ball, gaussian, poly_bump)");
    if (j.contains("center")) f = f.at(j["center"].get<std::vector<double>>());
    if (j.contains("window")) {
        const auto& w = j["window"];
        if (!w.is_array() || w.size() != 2) throw ConfigError("test function: window must be [t0, t1]");
        f = f.window(json_real(w[0]), json_real(w[1]));
    }
    return f;
}

}  // namespace fbd::drift
