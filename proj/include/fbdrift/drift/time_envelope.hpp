#pragma once

#include <json.hpp>

namespace fbd::drift {

/// Scalar time profile multiplying a drift. Piecewise smooth by construction.
struct TimeEnvelope {
    enum class Kind { Constant, Ramp, Cosine, Window };

    Kind kind = Kind::Constant;
    /// Constant: value a.  Ramp: a + b t.  Cosine: 1 + a cos(b t).
    /// Window: 1 on [a, b], 0 elsewhere.
    double a = 1.0;
    double b = 0.0;

    static TimeEnvelope constant(double value = 1.0) { return {Kind::Constant, value, 0.0}; }
    static TimeEnvelope ramp(double a, double b) { return {Kind::Ramp, a, b}; }
    static TimeEnvelope cosine(double amp, double freq) { return {Kind::Cosine, amp, freq}; }
    static TimeEnvelope window(double t0, double t1) { return {Kind::Window, t0, t1}; }

    double operator()(double t) const;
    bool is_constant() const;
    bool is_identity() const { return kind == Kind::Constant && a == 1.0; }
    /// sup_t |e(t)|, +inf for an unbounded ramp.
    double sup() const;

    nlohmann::json to_json() const;
    static TimeEnvelope from_json(const nlohmann::json& j);
};

}  // namespace fbd::drift
