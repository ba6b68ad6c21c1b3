#include "fbdrift/sde/regularity.hpp"

#include "fbdrift/common/errors.hpp"
#include "fbdrift/common/text_document.hpp"

#include <algorithm>
#include <cmath>

namespace fbd::sde {

using nlohmann::json;

namespace {

json real_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void moment(const std::vector<double>& samples, int r, double& mean, double& se) {
    const double n = static_cast<double>(samples.size());
    mean = 0.0;
    for (double v : samples) mean += std::pow(v, r);
    mean /= n;
    double var = 0.0;
    for (double v : samples) {
        const double e = std::pow(v, r) - mean;
        var += e * e;
    }
    se = samples.size() > 1 ? std::sqrt(var / (n - 1.0) / n) : 0.0;
}

double distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

void finish_series(ModulusSeries& m, double exponent) {
    m.bound_exponent = exponent;
    m.bound.clear();
    double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
    for (std::size_t i = 0; i < m.gaps.size(); ++i) {
        m.bound.push_back(m.gaps[i] > 0.0 ? std::pow(m.gaps[i], exponent) : 0.0);
        if (m.moments[i] > 0.0 && m.std_errors[i] > 0.5 * m.moments[i]) m.under_resolved = true;
        if (!(m.gaps[i] > 0.0) || !(m.moments[i] > 0.0)) continue;
        const double a = std::log(m.gaps[i]), c = std::log(m.moments[i]);
        sx += a;
        sy += c;
        sxx += a * a;
        sxy += a * c;
        n += 1.0;
    }
    if (n >= 2.0 && n * sxx - sx * sx > 0.0) m.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// Joint constant from each series' widest positive gap, then domination.
void joint_fit(RegularityReport& rep) {
    double C = 0.0;
    bool any = false;
    for (const ModulusSeries* m : {&rep.time, &rep.space, &rep.start}) {
        std::size_t best = m->gaps.size();
        for (std::size_t i = 0; i < m->gaps.size(); ++i)
            if (m->gaps[i] > 0.0 && (best == m->gaps.size() || m->gaps[i] > m->gaps[best])) best = i;
        if (best == m->gaps.size() || !(m->bound[best] > 0.0)) continue;
        C = std::max(C, m->moments[best] / m->bound[best]);
        any = true;
    }
    rep.C = any ? C : std::numeric_limits<double>::quiet_NaN();
    rep.dominated = any;
    for (const ModulusSeries* m : {&rep.time, &rep.space, &rep.start})
        for (std::size_t i = 0; i < m->gaps.size(); ++i) {
            if (m->gaps[i] == 0.0) {
                if (m->moments[i] != 0.0) rep.dominated = false;
                continue;
            }
            if (m->moments[i] - 3.0 * m->std_errors[i] > C * m->bound[i]) rep.dominated = false;
        }
    for (const ModulusSeries* m : {&rep.time, &rep.space, &rep.start})
        if (m->under_resolved) rep.warnings.push_back("under-resolved moments in the " + m->name + " modulus (relative SE > 50%)");
}

}  // namespace

json ModulusSeries::to_json() const {
    return {{"name", name},           {"gaps", gaps},   {"moments", moments},
            {"std_errors", std_errors}, {"bound", bound}, {"bound_exponent", bound_exponent},
            {"slope", real_or_null(slope)}, {"under_resolved", under_resolved}};
}

json RegularityConfig::to_json() const {
    return {{"drift", drift.to_json()},
            {"x0", x0},
            {"simulation", sim.to_json()},
            {"r", r},
            {"time_gap_steps", time_gap_steps},
            {"space_gaps", space_gaps},
            {"start_gap_steps", start_gap_steps}};
}

RegularityConfig RegularityConfig::from_json(const json& j) {
    RegularityConfig c;
    c.drift = DriftSpec::from_json(j.at("drift"));
    c.x0 = j.value("x0", c.x0);
    if (j.contains("simulation")) c.sim = SimulationSettings::from_json(j["simulation"]);
    c.r = j.value("r", 0);
    c.time_gap_steps = j.value("time_gap_steps", c.time_gap_steps);
    c.space_gaps = j.value("space_gaps", c.space_gaps);
    c.start_gap_steps = j.value("start_gap_steps", c.start_gap_steps);
    return c;
}

json RegularityReport::to_json() const {
    return {{"r", r},
            {"dimension", dimension},
            {"time", time.to_json()},
            {"space", space.to_json()},
            {"start", start.to_json()},
            {"C", real_or_null(C)},
            {"dominated", dominated},
            {"coupling_ok", coupling_ok},
            {"increment_checksum", increment_checksum},
            {"warnings", warnings}};
}

RegularityReport regularity_statistics(const PathEnsemble& base, const std::vector<PathEnsemble>& later, int r,
                                       const std::vector<std::size_t>& time_gap_steps) {
    const int d = base.dimension;
    if (r < 1) throw InvalidArgument("moment exponent r must be >= 1");
    const std::size_t M = base.paths, K = base.steps();
    RegularityReport rep;
    rep.r = r;
    rep.dimension = d;
    rep.increment_checksum = base.increment_checksum();
    rep.time.name = "time";
    rep.space.name = "space";
    rep.start.name = "start";
    std::vector<double> buf(M);
    double mean = 0.0, se = 0.0;

    // Drift part of the time increment from the start time.
    for (std::size_t g : time_gap_steps) {
        if (g > K) throw InvalidArgument("time gap beyond the ensemble horizon");
        for (std::size_t m = 0; m < M; ++m) {
            const auto a = base.state(m, 0), b = base.state(m, g);
            double s = 0.0;
            for (int i = 0; i < d; ++i) {
                double w = 0.0;
                for (std::size_t k = 0; k < g; ++k) w += base.increment(m, k)[i];
                const double v = b[i] - a[i] - w;
                s += v * v;
            }
            buf[m] = std::sqrt(s);
        }
        moment(buf, r, mean, se);
        rep.time.gaps.push_back(static_cast<double>(g) * base.grid.dt);
        rep.time.moments.push_back(mean);
        rep.time.std_errors.push_back(se);
    }
    // Spatial neighbours at the horizon.
    for (std::size_t a = 1; a < base.starts.size(); ++a) {
        for (std::size_t m = 0; m < M; ++m) buf[m] = distance(base.state(m, K), base.state(a * M + m, K));
        moment(buf, r, mean, se);
        rep.space.gaps.push_back(distance(base.starts.points[0], base.starts.points[a]));
        rep.space.moments.push_back(mean);
        rep.space.std_errors.push_back(se);
    }
    // Later start times from the same point, same Brownian path.
    rep.coupling_ok = true;
    for (const PathEnsemble& e : later) {
        if (e.paths != M || e.seed != base.seed || e.dimension != d)
            throw InvalidArgument("later-start ensemble is not coupled to the base ensemble");
        const std::size_t shift = static_cast<std::size_t>(e.grid.offset - base.grid.offset);
        if (e.grid.offset < base.grid.offset || shift + e.steps() != K)
            throw InvalidArgument("later-start ensemble does not share the base time grid");
        for (std::size_t m = 0; m < M && rep.coupling_ok; ++m)
            for (std::size_t k = 0; k < e.steps(); ++k) {
                const auto u = e.increment(m, k), v = base.increment(m, k + shift);
                if (!std::equal(u.begin(), u.end(), v.begin())) {
                    rep.coupling_ok = false;
                    break;
                }
            }
        for (std::size_t m = 0; m < M; ++m) buf[m] = distance(base.state(m, K), e.state(m, e.steps()));
        moment(buf, r, mean, se);
        rep.start.gaps.push_back(e.grid.s - base.grid.s);
        rep.start.moments.push_back(mean);
        rep.start.std_errors.push_back(se);
    }
    finish_series(rep.time, static_cast<double>(r));
    finish_series(rep.space, static_cast<double>(r - d));
    finish_series(rep.start, static_cast<double>(r - d));
    joint_fit(rep);
    return rep;
}

RegularityReport regularity_statistics(const RegularityConfig& cfg) {
    const int d = cfg.drift.dimension();
    if (cfg.x0.size() != static_cast<std::size_t>(d)) throw ConfigError("x0 dimension differs from the drift dimension");
    const int r = cfg.r > 0 ? cfg.r : static_cast<int>(std::ceil(d + 1.0));
    StartSpec starts = StartSpec::single(cfg.x0);
    for (double g : cfg.space_gaps) {
        std::vector<double> y = cfg.x0;
        y[0] += g;
        starts.points.push_back(y);
    }
    const PathEnsemble base = simulate_ensemble(cfg.drift, starts, cfg.sim);
    std::vector<PathEnsemble> later;
    for (std::size_t g : cfg.start_gap_steps) {
        if (g >= base.steps()) throw ConfigError("start gap reaches the horizon");
        SimulationSettings s = cfg.sim;
        s.s = base.grid.time(g);
        s.dt = base.grid.dt;
        PathEnsemble e = simulate_ensemble(cfg.drift, StartSpec::single(cfg.x0), s);
        later.push_back(std::move(e));
    }
    return regularity_statistics(base, later, r, cfg.time_gap_steps);
}

}  // namespace fbd::sde
