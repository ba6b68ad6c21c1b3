#include "fbdrift/drift/time_envelope.hpp"

#include "fbdrift/common/errors.hpp"

#include <cmath>
#include <limits>

namespace fbd::drift {

double TimeEnvelope::operator()(double t) const {
    switch (kind) {
        case Kind::Constant: return a;
        case Kind::Ramp: return a + b * t;
        case Kind::Cosine: return 1.0 + a * std::cos(b * t);
        case Kind::Window: return (t >= a && t <= b) ? 1.0 : 0.0;
    }
    return a;
}

bool TimeEnvelope::is_constant() const {
    switch (kind) {
        case Kind::Constant: return true;
        case Kind::Ramp: return b == 0.0;
        case Kind::Cosine: return a == 0.0 || b == 0.0;
        case Kind::Window: return false;
    }
    return false;
}

double TimeEnvelope::sup() const {
    switch (kind) {
        case Kind::Constant: return std::abs(a);
        case Kind::Ramp: return b == 0.0 ? std::abs(a) : std::numeric_limits<double>::infinity();
        case Kind::Cosine: return b == 0.0 ? std::abs(1.0 + a) : 1.0 + std::abs(a);
        case Kind::Window: return 1.0;
    }
    return 1.0;
}

nlohmann::json TimeEnvelope::to_json() const {
    switch (kind) {
        case Kind::Constant: return {{"kind", "constant"}, {"value", a}};
        case Kind::Ramp: return {{"kind", "ramp"}, {"a", a}, {"b", b}};
        case Kind::Cosine: return {{"kind", "cosine"}, {"amplitude", a}, {"frequency", b}};
        case Kind::Window: return {{"kind", "window"}, {"t0", a}, {"t1", b}};
    }
    return {};
}

TimeEnvelope TimeEnvelope::from_json(const nlohmann::json& j) {
    if (j.is_number()) return constant(j.get<double>());
    if (!j.is_object()) throw ConfigError("time_envelope: expected a number or an object");
    const std::string k = j.value("kind", std::string("constant"));
    if (k == "constant") return constant(j.value("value", 1.0));
    if (k == "ramp") return ramp(j.value("a", 1.0), j.value("b", 0.0));
    if (k == "cosine") return cosine(j.value("amplitude", 0.0), j.value("frequency", 0.0));
    if (k == "window") {
        const double t0 = j.value("t0", 0.0), t1 = j.value("t1", 0.0);
        if (t1 < t0) throw ConfigError("time_envelope: window with t1 < t0");
        return window(t0, t1);
    }
    throw ConfigError("time_envelope: unknown kind '" + k + "'");
}

}  // namespace fbd::drift
