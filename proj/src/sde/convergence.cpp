#include "fbdrift/sde/convergence.hpp"

#include "fbdrift/common/digest.hpp"
#include "fbdrift/common/errors.hpp"
#include "fbdrift/common/parallel.hpp"
#include "fbdrift/common/text_document.hpp"

#include <algorithm>
#include <cmath>

namespace fbd::sde {

using drift::kMaxDimension;
using nlohmann::json;

namespace {

json real_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double quantile(std::vector<double> v, double q) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

json ConvergenceConfig::to_json() const {
    return {{"drift", drift.to_json()},
            {"schedule", schedule.to_json()},
            {"x0", x0},
            {"simulation", sim.to_json()},
            {"kappa", kappa},
            {"theta", theta},
            {"lattice", {{"spacing", lattice.spacing}, {"half_extent", lattice.half_extent}, {"offset", lattice.offset}}}};
}

ConvergenceConfig ConvergenceConfig::from_json(const json& j) {
    ConvergenceConfig c;
    c.drift = DriftSpec::from_json(j.at("drift"));
    if (j.contains("schedule")) c.schedule = mollifier::MollifySchedule::from_json(j["schedule"]);
    else if (j.contains("levels"))
        c.schedule = mollifier::MollifySchedule::defaults(j["levels"].get<std::vector<double>>(), j.value("eps0", 0.01));
    else throw ConfigError("convergence study needs a schedule or a list of levels");
    c.x0 = j.value("x0", c.x0);
    if (j.contains("simulation")) c.sim = SimulationSettings::from_json(j["simulation"]);
    c.kappa = j.value("kappa", c.kappa);
    c.theta = j.value("theta", c.theta);
    if (j.contains("lattice")) {
        const json& l = j["lattice"];
        c.lattice.spacing = l.value("spacing", 1.0);
        c.lattice.half_extent = l.value("half_extent", 0.0);
        c.lattice.offset = l.value("offset", std::vector<double>{});
    }
    return c;
}

json LevelPair::to_json() const {
    return {{"m", m},
            {"m_next", m_next},
            {"median_gap", median_gap},
            {"p95_gap", p95_gap},
            {"surrogate", surrogate},
            {"surrogate_se", surrogate_se},
            {"weighted_norm", weighted_norm}};
}

json ConvergenceReport::to_json() const {
    json p = json::array();
    for (const auto& x : pairs) p.push_back(x.to_json());
    return {{"pairs", p},
            {"C1", real_or_null(C1)},
            {"surrogate_dominated", surrogate_dominated},
            {"gaps_nonincreasing", gaps_nonincreasing},
            {"increment_checksum", increment_checksum},
            {"paths", paths},
            {"steps", steps},
            {"dt", dt}};
}

ConvergenceReport convergence_study(const ConvergenceConfig& cfg) {
    cfg.schedule.validate();
    const int d = cfg.drift.dimension();
    const std::size_t ud = static_cast<std::size_t>(d);
    if (cfg.x0.size() != ud) throw ConfigError("x0 dimension differs from the drift dimension");
    const std::size_t L = cfg.schedule.size();
    if (L < 2) throw ConfigError("convergence study needs at least two levels");
    std::vector<DriftSpec> levels;
    for (std::size_t i = 0; i < L; ++i)
        levels.push_back(mollifier::approximant(cfg.drift, cfg.schedule.levels[i], cfg.schedule.widths[i],
                                                cfg.schedule.scales[i]));
    const TimeGrid tg = TimeGrid::make(cfg.sim.s, cfg.sim.T, cfg.sim.dt);
    for (const auto& b : levels) check_sde_drift(b, tg.dt);
    const std::size_t M = cfg.sim.paths, K = tg.steps;
    const NoiseSource noise{cfg.sim.seed, d, tg.dt};

    // Per path: sup gaps (L - 1), occupation integrals (L - 1), increment digest.
    std::vector<double> gaps(M * (L - 1)), occ(M * (L - 1));
    std::vector<std::string> digests(M);
    parallel_for(M, cfg.sim.workers, [&](std::size_t p) {
        std::vector<double> X(L * ud), dw(ud), all(K * ud);
        for (std::size_t l = 0; l < L; ++l)
            for (std::size_t i = 0; i < ud; ++i) X[l * ud + i] = cfg.x0[i];
        std::vector<double> sup(L - 1, 0.0), integ(L - 1, 0.0);
        double b1[kMaxDimension], b2[kMaxDimension];
        std::vector<double> drift_now(L * ud);
        auto occupation = [&](std::size_t l, double t) {
            levels[l + 1].eval(t, std::span<const double>(X.data() + l * ud, ud), std::span<double>(b2, ud));
            double s = 0.0;
            for (std::size_t i = 0; i < ud; ++i) s += (drift_now[l * ud + i] - b2[i]) * (drift_now[l * ud + i] - b2[i]);
            return std::sqrt(s);
        };
        for (std::size_t k = 0; k <= K; ++k) {
            const double t = tg.time(k);
            for (std::size_t l = 0; l < L; ++l) {
                levels[l].eval(t, std::span<const double>(X.data() + l * ud, ud), std::span<double>(b1, ud));
                std::copy(b1, b1 + ud, drift_now.begin() + static_cast<std::ptrdiff_t>(l * ud));
            }
            const double wt = (k == 0 || k == K) ? 0.5 : 1.0;
            for (std::size_t l = 0; l + 1 < L; ++l) {
                integ[l] += wt * tg.dt * occupation(l, t);
                double g = 0.0;
                for (std::size_t i = 0; i < ud; ++i) {
                    const double v = X[l * ud + i] - X[(l + 1) * ud + i];
                    g += v * v;
                }
                sup[l] = std::max(sup[l], std::sqrt(g));
            }
            if (k == K) break;
            noise.increment(p, tg.offset + k, std::span<double>(dw));
            std::copy(dw.begin(), dw.end(), all.begin() + static_cast<std::ptrdiff_t>(k * ud));
            for (std::size_t l = 0; l < L; ++l)
                for (std::size_t i = 0; i < ud; ++i) X[l * ud + i] += drift_now[l * ud + i] * tg.dt + dw[i];
            if (!std::isfinite(X[0]))
                throw NumericalError("non-finite state on path " + std::to_string(p) + " at step " + std::to_string(k + 1));
        }
        for (std::size_t l = 0; l + 1 < L; ++l) {
            gaps[p * (L - 1) + l] = sup[l];
            occ[p * (L - 1) + l] = integ[l];
        }
        digests[p] = sha256_hex(std::span<const double>(all));
    });

    ConvergenceReport rep;
    rep.paths = M;
    rep.steps = K;
    rep.dt = tg.dt;
    std::string cat;
    for (const auto& s : digests) cat += s;
    rep.increment_checksum = sha256_hex(cat);

    const double sr = cfg.drift.support_radius();
    const double R = std::isfinite(sr) ? sr : 1.0;
    pde::Lattice lat = cfg.lattice;
    if (!(lat.half_extent > 0.0)) lat.half_extent = 2.0 * R;
    const double theta = cfg.theta > 0.0 ? cfg.theta : 0.5 * (d + 1) + 0.5;
    for (std::size_t l = 0; l + 1 < L; ++l) {
        LevelPair lp;
        lp.m = cfg.schedule.levels[l];
        lp.m_next = cfg.schedule.levels[l + 1];
        std::vector<double> g(M), o(M);
        for (std::size_t p = 0; p < M; ++p) {
            g[p] = gaps[p * (L - 1) + l];
            o[p] = occ[p * (L - 1) + l];
        }
        lp.median_gap = quantile(g, 0.5);
        lp.p95_gap = quantile(g, 0.95);
        double mean = 0.0;
        for (double v : o) mean += v;
        mean /= static_cast<double>(M);
        double var = 0.0;
        for (double v : o) var += (v - mean) * (v - mean);
        lp.surrogate = mean;
        lp.surrogate_se = M > 1 ? std::sqrt(var / static_cast<double>(M - 1) / static_cast<double>(M)) : 0.0;
        const DriftSpec diff = DriftSpec::sum(levels[l], DriftSpec::scaled(-1.0, levels[l + 1]));
        lp.weighted_norm = pde::weighted_norm_rho(diff, tg.s, tg.horizon(), cfg.kappa, theta, lat);
        rep.pairs.push_back(lp);
    }
    const LevelPair& first = rep.pairs.front();
    if (first.weighted_norm > 0.0) {
        rep.C1 = first.surrogate / first.weighted_norm;
        rep.surrogate_dominated = true;
        for (const auto& lp : rep.pairs)
            if (lp.surrogate - 3.0 * lp.surrogate_se > rep.C1 * lp.weighted_norm) rep.surrogate_dominated = false;
    }
    rep.gaps_nonincreasing = true;
    for (std::size_t l = 2; l < rep.pairs.size(); ++l)
        if (rep.pairs[l].median_gap > rep.pairs[l - 1].median_gap) rep.gaps_nonincreasing = false;
    return rep;
}

}  // namespace fbd::sde
