#include "fbdrift/sde/criticality.hpp"

#include "fbdrift/common/errors.hpp"
#include "fbdrift/common/parallel.hpp"
#include "fbdrift/common/text_document.hpp"
#include "fbdrift/drift/form_bound.hpp"

#include <cmath>

namespace fbd::sde {

using drift::kMaxDimension;
using nlohmann::json;

json CriticalityConfig::to_json() const {
    return {{"deltas", deltas},     {"dimension", dimension}, {"x0", x0},
            {"simulation", sim.to_json()}, {"collapse_radius", collapse_radius}, {"level", level},
            {"width", width},       {"scale", scale},         {"cutoff_radius", real_to_json(cutoff_radius)}};
}

CriticalityConfig CriticalityConfig::from_json(const json& j) {
    CriticalityConfig c;
    c.deltas = j.value("deltas", c.deltas);
    c.dimension = j.value("dimension", c.dimension);
    if (j.contains("x0")) c.x0 = j["x0"].get<std::vector<double>>();
    else if (c.dimension != 3) {
        c.x0.assign(static_cast<std::size_t>(c.dimension), 0.0);
        c.x0[0] = 0.01;
    }
    if (j.contains("simulation")) c.sim = SimulationSettings::from_json(j["simulation"]);
    if (j.contains("collapse_radius")) c.collapse_radius = json_real(j["collapse_radius"]);
    if (j.contains("level")) c.level = json_real(j["level"]);
    if (j.contains("width")) c.width = json_real(j["width"]);
    if (j.contains("scale")) c.scale = json_real(j["scale"]);
    if (j.contains("cutoff_radius")) c.cutoff_radius = json_real(j["cutoff_radius"]);
    return c;
}

json CriticalityRow::to_json() const {
    return {{"delta", delta},
            {"coefficient", coefficient},
            {"collapse_fraction", collapse_fraction},
            {"collapse_se", collapse_se},
            {"inside_fraction", inside_fraction},
            {"inside_se", inside_se}};
}

json CriticalityReport::to_json() const {
    json r = json::array();
    for (const auto& x : rows) r.push_back(x.to_json());
    return {{"baseline", baseline.to_json()}, {"rows", r},       {"monotone", monotone}, {"separation", separation},
            {"paths", paths},                 {"steps", steps}, {"dt", dt}};
}

namespace {

CriticalityRow sweep_one(const DriftSpec& b, const CriticalityConfig& cfg, const TimeGrid& tg) {
    const int d = cfg.dimension;
    const std::size_t ud = static_cast<std::size_t>(d);
    const std::size_t M = cfg.sim.paths;
    const NoiseSource noise{cfg.sim.seed, d, tg.dt};
    std::vector<unsigned char> hit(M, 0), inside(M, 0);
    const double rc2 = cfg.collapse_radius * cfg.collapse_radius;
    parallel_for(M, cfg.sim.workers, [&](std::size_t p) {
        double x[kMaxDimension], v[kMaxDimension], dw[kMaxDimension];
        for (std::size_t i = 0; i < ud; ++i) x[i] = cfg.x0[i];
        auto r2 = [&] {
            double s = 0.0;
            for (std::size_t i = 0; i < ud; ++i) s += x[i] * x[i];
            return s;
        };
        bool h = r2() <= rc2 && cfg.collapse_radius > 0.0;
        for (std::size_t k = 0; k < tg.steps; ++k) {
            b.eval(tg.time(k), std::span<const double>(x, ud), std::span<double>(v, ud));
            noise.increment(p, tg.offset + k, std::span<double>(dw, ud));
            for (std::size_t i = 0; i < ud; ++i) x[i] += v[i] * tg.dt + dw[i];
            if (cfg.collapse_radius > 0.0 && r2() <= rc2) h = true;
        }
        if (!std::isfinite(x[0])) throw NumericalError("non-finite state on path " + std::to_string(p));
        hit[p] = h;
        inside[p] = cfg.collapse_radius > 0.0 && r2() <= rc2;
    });
    CriticalityRow row;
    double nh = 0, ni = 0;
    for (std::size_t p = 0; p < M; ++p) {
        nh += hit[p];
        ni += inside[p];
    }
    const double n = static_cast<double>(M);
    row.collapse_fraction = nh / n;
    row.inside_fraction = ni / n;
    row.collapse_se = std::sqrt(row.collapse_fraction * (1.0 - row.collapse_fraction) / n);
    row.inside_se = std::sqrt(row.inside_fraction * (1.0 - row.inside_fraction) / n);
    return row;
}

}  // namespace

CriticalityReport criticality_sweep(const CriticalityConfig& cfg) {
    const int d = cfg.dimension;
    if (d < 3) throw ConfigError("criticality sweep needs d >= 3");
    if (cfg.x0.size() != static_cast<std::size_t>(d)) throw ConfigError("x0 dimension differs from d");
    if (cfg.deltas.empty()) throw ConfigError("criticality sweep needs at least one delta");
    if (!(cfg.collapse_radius >= 0.0)) throw ConfigError("collapse radius must be non-negative");
    const TimeGrid tg = TimeGrid::make(cfg.sim.s, cfg.sim.T, cfg.sim.dt);
    const double cm = cfg.scale > 0.0 ? cfg.scale : 1.0 - 1.0 / cfg.level;

    CriticalityReport rep;
    rep.paths = cfg.sim.paths;
    rep.steps = tg.steps;
    rep.dt = tg.dt;
    rep.baseline = sweep_one(DriftSpec::zero(d), cfg, tg);
    for (double delta : cfg.deltas) {
        const double c = drift::hardy_coefficient(delta, d);
        const DriftSpec b = DriftSpec::mollified(DriftSpec::hardy(c, d, cfg.cutoff_radius), cfg.level, cfg.width, cm);
        check_sde_drift(b, tg.dt);
        CriticalityRow row = sweep_one(b, cfg, tg);
        row.delta = delta;
        row.coefficient = c;
        rep.rows.push_back(row);
    }
    rep.monotone = true;
    for (std::size_t i = 1; i < rep.rows.size(); ++i)
        if (rep.rows[i].collapse_fraction < rep.rows[i - 1].collapse_fraction) rep.monotone = false;
    const auto& a = rep.rows.front();
    const auto& z = rep.rows.back();
    const double se = std::sqrt(a.collapse_se * a.collapse_se + z.collapse_se * z.collapse_se);
    rep.separation = se > 0.0 ? (z.collapse_fraction - a.collapse_fraction) / se
                              : (z.collapse_fraction > a.collapse_fraction ? std::numeric_limits<double>::infinity() : 0.0);
    return rep;
}

}  // namespace fbd::sde
