#include "fbdrift/pde/cascade.hpp"

#include "fbdrift/common/errors.hpp"
#include "fbdrift/common/text_document.hpp"
#include "fbdrift/drift/form_bound.hpp"
#include "fbdrift/drift/test_functions.hpp"
#include "fbdrift/pde/energy.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace fbd::pde {

using drift::kMaxDimension;
using nlohmann::json;

namespace {

json real_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double nan() { return std::numeric_limits<double>::quiet_NaN(); }

/// Least-squares slope and intercept of y against x.
std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double den = n * sxx - sx * sx;
    if (x.size() < 2 || den == 0.0) return {nan(), nan()};
    const double slope = (n * sxy - sx * sy) / den;
    return {slope, (sy - slope * sx) / n};
}

}  // namespace

json CascadeConstants::to_json() const {
    return {{"delta", delta}, {"nu", nu}, {"eps", eps}, {"beta", beta},
            {"C1", C1},       {"C2", C2}, {"K", real_or_null(K)}, {"feasible", feasible()}};
}

CascadeConstants cascade_constants(double delta, double nu, double eps, double beta) {
    if (!(delta >= 0.0) || !(nu >= 0.0)) throw InvalidArgument("form-bounds must be non-negative");
    const double dflt = nu > 0.0 ? std::max(2.0, 1.0 / (2.0 * std::sqrt(nu))) : 2.0;
    CascadeConstants c;
    c.delta = delta;
    c.nu = nu;
    c.eps = eps > 0.0 ? eps : dflt;
    c.beta = beta > 0.0 ? beta : dflt;
    c.C1 = 1.0 - 2.0 * std::sqrt(delta) - 2.0 * c.eps * nu - 1.0 / (2.0 * c.beta);
    c.C2 = 2.0 * c.beta * nu + 1.0 / (2.0 * c.eps);
    c.K = c.C1 > 0.0 ? c.C2 / c.C1 : std::numeric_limits<double>::infinity();
    return c;
}

double CascadeConfig::source_radius() const {
    double r = 0.0;
    for (const auto& f : sources) {
        if (f.is_zero()) continue;
        const double s = f.support_radius();
        r = std::max(r, f.center_norm() + (std::isfinite(s) ? s : 5.0 * f.radius));
    }
    return r;
}

void CascadeConfig::validate() const {
    const int d = dimension();
    if (!(T0 <= T1)) throw ConfigError("cascade: T0 must not exceed T1");
    if (!(T0 >= 0.0)) throw ConfigError("cascade: T0 must be non-negative");
    if (sources.empty()) throw ConfigError("cascade: at least one source is required");
    if (alphas.size() != sources.size()) throw ConfigError("cascade: one derivative index per source is required");
    for (int a : alphas)
        if (a < 1 || a > d) throw ConfigError("cascade: derivative index out of range 1.." + std::to_string(d));
    for (const auto& f : sources)
        if (f.dimension != d) throw ConfigError("cascade: source dimension differs from the drift dimension");
    if (eps < 0.0 || beta < 0.0) throw ConfigError("cascade: eps and beta must be positive");
    if (grid.grid.dimension != d) throw ConfigError("cascade: grid dimension differs from the drift dimension");
    if (!(box_safety > 0.0)) throw ConfigError("cascade: box_safety must be positive");
}

CascadeConfig CascadeConfig::truncated(std::size_t n) const {
    if (n == 0 || n > sources.size()) throw InvalidArgument("cascade: cannot truncate to " + std::to_string(n) + " levels");
    CascadeConfig c = *this;
    c.sources.resize(n);
    c.alphas.resize(n);
    return c;
}

CascadeConfig CascadeConfig::with_interval(double a, double b) const {
    CascadeConfig c = *this;
    c.T0 = a;
    c.T1 = b;
    return c;
}

json CascadeConfig::to_json() const {
    json src = json::array();
    for (const auto& f : sources) src.push_back(f.to_json());
    json j = {{"drift", drift.to_json()}, {"sources", src},         {"alphas", alphas},
              {"T0", T0},                 {"T1", T1},               {"eps", eps},
              {"beta", beta},             {"grid", grid.to_json()}, {"box_safety", box_safety},
              {"ratio_floor", ratio_floor}, {"chain_tolerance", chain_tolerance}};
    if (!(grid.grid.half_width > 0.0)) j["grid"].erase("half_width");  // automatic box
    j["delta_hat"] = real_or_null(delta_hat);
    j["nu_hat"] = real_or_null(nu_hat);
    return j;
}

CascadeConfig CascadeConfig::from_json(const json& j) {
    CascadeConfig c;
    if (!j.is_object()) throw ConfigError("cascade: configuration must be a mapping");
    if (!j.contains("drift")) throw ConfigError("cascade: missing drift");
    c.drift = DriftSpec::from_json(j["drift"]);
    const int d = c.drift.dimension();
    if (!j.contains("sources")) throw ConfigError("cascade: missing sources");
    const json& s = j["sources"];
    if (s.is_array()) {
        for (const auto& f : s) c.sources.push_back(ScalarField::from_json(f, d));
    } else if (s.is_object() && s.contains("copies")) {
        const auto n = s["copies"].get<std::size_t>();
        const ScalarField f = ScalarField::from_json(s.at("field"), d);
        c.sources.assign(n, f);
    } else {
        throw ConfigError("cascade: sources must be a list or {copies, field}");
    }
    if (j.contains("nu_target")) {
        const double nu = json_real(j["nu_target"]);
        for (auto& f : c.sources) f = calibrate_source(f, nu);
    }
    if (j.contains("alphas")) {
        c.alphas = j["alphas"].get<std::vector<int>>();
    } else {
        c.alphas.assign(c.sources.size(), j.value("alpha", 1));
    }
    c.T0 = j.contains("T0") ? json_real(j["T0"]) : 0.0;
    c.T1 = j.contains("T1") ? json_real(j["T1"]) : c.T0 + 0.2;
    if (j.contains("length")) c.T1 = c.T0 + json_real(j["length"]);
    c.eps = j.contains("eps") ? json_real(j["eps"]) : 0.0;
    c.beta = j.contains("beta") ? json_real(j["beta"]) : 0.0;
    if (j.contains("delta_hat") && !j["delta_hat"].is_null()) c.delta_hat = json_real(j["delta_hat"]);
    if (j.contains("nu_hat") && !j["nu_hat"].is_null()) c.nu_hat = json_real(j["nu_hat"]);
    json g = j.value("grid", json::object());
    if (!g.contains("dimension")) g["dimension"] = d;
    if (!g.contains("L") && !g.contains("half_width")) g["half_width"] = 1.0;
    c.grid = GridSettings::from_json(g);
    if (!j.value("grid", json::object()).contains("L") && !j.value("grid", json::object()).contains("half_width"))
        c.grid.grid.half_width = 0.0;
    c.box_safety = j.value("box_safety", 1.5);
    c.ratio_floor = j.value("ratio_floor", 1e-14);
    c.chain_tolerance = j.value("chain_tolerance", 0.25);
    c.validate();
    return c;
}

json CascadeResult::to_json() const {
    json r = json::array();
    for (double v : ratios) r.push_back(real_or_null(v));
    return {{"n", n},
            {"T0", T0},
            {"T1", T1},
            {"length", length()},
            {"constants", constants.to_json()},
            {"energies", energies},
            {"ratios", r},
            {"K_hat", real_or_null(K_hat)},
            {"E_U", E_U},
            {"E_1", E_1},
            {"U2_terminal", U2_terminal},
            {"chain_lhs", chain_lhs},
            {"chain_rhs", chain_rhs},
            {"chain_applicable", chain_applicable},
            {"chain_ok", chain_ok},
            {"ratios_ok", ratios_ok},
            {"ratio_excess", real_or_null(ratio_excess)},
            {"energy_residual", energy_residual},
            {"boundary_leakage", boundary_leakage},
            {"half_width", half_width},
            {"intervals", intervals},
            {"dt", dt},
            {"steps", steps},
            {"wall_time", wall_time}};
}

double estimate_source_bound(const ScalarField& f) {
    if (f.is_zero()) return 0.0;
    const double s = f.support_radius();
    const double scale = f.center_norm() + (std::isfinite(s) ? s : 3.0 * f.radius);
    const auto fam = drift::reference_family(f.dimension, 2.0 * scale);
    double t = 0.0;
    if (std::isfinite(f.t0) || std::isfinite(f.t1)) t = std::isfinite(f.t0) ? f.t0 : f.t1;
    return drift::estimate_form_bound(f, fam, {t}).delta_hat;
}

double estimate_drift_bound(const DriftSpec& b, double scale) {
    const auto fam = drift::reference_family(b.dimension(), scale);
    return drift::estimate_form_bound(b, fam).delta_hat;
}

ScalarField calibrate_source(const ScalarField& f, double nu) {
    if (!(nu >= 0.0)) throw InvalidArgument("calibrate_source: nu must be non-negative");
    if (f.is_zero()) return f;
    const double cur = estimate_source_bound(f);
    if (!(cur > 0.0)) throw NumericalError("calibrate_source: source has a vanishing form-bound estimate");
    return f.scaled(std::sqrt(nu / cur));
}

CascadeResult run_cascade(const CascadeConfig& cfg) {
    const auto wall0 = std::chrono::steady_clock::now();
    cfg.validate();
    const int d = cfg.dimension();
    const std::size_t n = cfg.levels();
    const double len = cfg.T1 - cfg.T0;

    GridSettings gs = cfg.grid;
    if (!(gs.grid.half_width > 0.0)) {
        double R = cfg.source_radius();
        if (R == 0.0) R = 1.0;
        gs.grid.half_width = R + std::sqrt(2.0 * len) * cfg.box_safety;
    }
    gs.grid.validate();
    const GridSpec& grid = gs.grid;

    double delta = cfg.delta_hat;
    if (!std::isfinite(delta)) {
        const double sr = cfg.drift.support_radius();
        delta = estimate_drift_bound(cfg.drift, std::isfinite(sr) ? std::min(sr, grid.half_width) : grid.half_width);
    }
    double nu = cfg.nu_hat;
    if (!std::isfinite(nu)) {
        nu = 0.0;
        for (const auto& f : cfg.sources) nu = std::max(nu, estimate_source_bound(f));
    }
    CascadeResult res;
    res.n = n;
    res.T0 = cfg.T0;
    res.T1 = cfg.T1;
    res.constants = cascade_constants(delta, nu, cfg.eps, cfg.beta);
    if (!res.constants.feasible())
        throw InfeasibleConstants("C1 = " + std::to_string(res.constants.C1) + " <= 0 for delta = " +
                                  std::to_string(delta) + ", nu = " + std::to_string(nu) +
                                  ", eps = " + std::to_string(res.constants.eps) +
                                  ", beta = " + std::to_string(res.constants.beta));

    // Time step from the drift over [0, T1].
    std::vector<double> bn;
    const bool tc = cfg.drift.time_constant();
    double mx = 0.0, ml1 = 0.0;
    if (tc) {
        std::tie(mx, ml1) = sample_drift(cfg.drift, cfg.T1, grid, bn);
    } else {
        for (int i = 0; i <= 16; ++i) {
            auto [a, c] = sample_drift(cfg.drift, cfg.T1 * i / 16.0, grid, bn);
            mx = std::max(mx, a);
            ml1 = std::max(ml1, c);
        }
    }
    const double dt_max = stable_dt(grid, mx, ml1, gs.safety);
    double dt = dt_max;
    if (gs.dt > 0.0) {
        if (gs.dt > dt_max * (1.0 + 1e-12))
            throw ConfigError("time step " + std::to_string(gs.dt) + " violates the stability bound " +
                              std::to_string(dt_max));
        dt = gs.dt;
    }
    const auto steps = len > 0.0 ? static_cast<std::size_t>(std::ceil(len / dt - 1e-9)) : std::size_t{0};
    if (steps > 0) dt = len / static_cast<double>(steps);

    // Spatial parts of d_{alpha_k} f_k, switched by the time window.
    const std::size_t N = grid.node_count();
    std::vector<std::vector<double>> df(n, std::vector<double>(N, 0.0));
    for (std::size_t k = 0; k < n; ++k) {
        const ScalarField& f = cfg.sources[k];
        if (f.is_zero()) continue;
        const double ta = std::max(cfg.T0, f.t0), tb = std::min(cfg.T1, f.t1);
        if (ta > tb) continue;
        double x[kMaxDimension], gr[kMaxDimension];
        for (std::size_t p = 0; p < N; ++p) {
            grid.position(p, std::span<double>(x, d));
            f.grad(ta, std::span<const double>(x, d), std::span<double>(gr, d));
            df[k][p] = gr[cfg.alphas[k] - 1];
        }
    }
    auto gate = [&](std::size_t k, double t) { return cfg.sources[k].active(t) ? 1.0 : 0.0; };

    // u[k] holds u_{k+2}, k = 0..n-2; U is the reversed problem.
    std::vector<std::vector<double>> u(n > 1 ? n - 1 : 0, std::vector<double>(N, 0.0));
    std::vector<double> U(N, 0.0), G(N, 0.0);
    std::vector<std::vector<double>> g(u.size(), std::vector<double>(N, 0.0));
    std::vector<double> E(u.size(), 0.0);
    ParabolicStepper stepper(grid, dt, gs.workers);

    double EU = 0.0, resid_int = 0.0, leak = 0.0;
    auto U_rate = [&](const std::vector<double>& bnodes, const std::vector<double>& gnodes, double& diss) {
        const EnergyTerms e = energy_terms(grid, U, bnodes, gnodes);
        diss = e.dissipation;
        return 0.5 * e.dissipation - e.drift - e.source;
    };

    double prev_rate = 0.0, prev_dissU = 0.0;
    std::vector<double> prev_diss(u.size(), 0.0);
    for (std::size_t j = 0; j <= steps; ++j) {
        const double t = cfg.T1 - static_cast<double>(j) * dt;  // physical time of this frame
        if (!tc) sample_drift(cfg.drift, t, grid, bn);
        // Sources from the current frame: g_k = d f_k u_{k+1}, u_{n+1} = 1.
        for (std::size_t k = 0; k < u.size(); ++k) {
            const std::size_t level = k + 2;  // u_level
            const double w = gate(level - 1, t);
            const std::vector<double>* next = level < n ? &u[k + 1] : nullptr;
            for (std::size_t p = 0; p < N; ++p) g[k][p] = w * df[level - 1][p] * (next ? (*next)[p] : 1.0);
        }
        {
            const double w = gate(0, t);
            for (std::size_t p = 0; p < N; ++p) G[p] = w * df[0][p] * (n > 1 ? u[0][p] : 1.0);
        }
        // Trapezoid accumulation of the energies.
        double dissU = 0.0;
        const double rate = U_rate(bn, G, dissU);
        std::vector<double> diss(u.size());
        for (std::size_t k = 0; k < u.size(); ++k) diss[k] = dirichlet_energy(grid, u[k]);
        if (j > 0) {
            for (std::size_t k = 0; k < u.size(); ++k) E[k] += 0.5 * dt * (prev_diss[k] + diss[k]);
            EU += 0.5 * dt * (prev_dissU + dissU);
            resid_int += 0.5 * dt * (prev_rate + rate);
        }
        prev_diss = diss;
        prev_dissU = dissU;
        prev_rate = rate;
        if (j == steps) break;
        for (std::size_t k = 0; k < u.size(); ++k) stepper.step(u[k], bn, g[k]);
        stepper.step(U, bn, G);
        double chk = 0.0;
        for (double v : U) chk += v;
        for (const auto& a : u)
            for (double v : a) chk += v;
        if (!std::isfinite(chk)) throw NumericalError("cascade: non-finite value in time step " + std::to_string(j + 1));
        if ((j + 1) % 16 == 0 || j + 1 == steps) {
            leak = std::max(leak, leakage(grid, U));
            for (const auto& a : u) leak = std::max(leak, leakage(grid, a));
        }
    }
    res.E_1 = EU;

    // Remaining interval ]T1 - T0, T1]: B(s) = b(s + T0 - T1), G = 0.
    std::size_t vsteps = 0;
    double vdt = 0.0;
    if (cfg.T0 > 0.0) {
        vsteps = static_cast<std::size_t>(std::ceil(cfg.T0 / dt_max - 1e-9));
        vdt = cfg.T0 / static_cast<double>(vsteps);
        ParabolicStepper vstep(grid, vdt, gs.workers);
        std::vector<double> none;
        if (!tc) sample_drift(cfg.drift, 0.0, grid, bn);
        prev_rate = U_rate(bn, none, prev_dissU);
        for (std::size_t j = 0; j < vsteps; ++j) {
            vstep.step(U, bn, none);
            const double t = static_cast<double>(j + 1) * vdt;
            if (!tc) sample_drift(cfg.drift, t, grid, bn);
            double dissU = 0.0;
            const double rate = U_rate(bn, none, dissU);
            EU += 0.5 * vdt * (prev_dissU + dissU);
            resid_int += 0.5 * vdt * (prev_rate + rate);
            prev_dissU = dissU;
            prev_rate = rate;
        }
        for (double v : U)
            if (!std::isfinite(v)) throw NumericalError("cascade: non-finite value in the free evolution");
        leak = std::max(leak, leakage(grid, U));
    }

    res.energies = E;
    res.E_U = EU;
    res.U2_terminal = mass_sq(grid, U);
    res.energy_residual = std::abs(0.5 * res.U2_terminal + resid_int);
    res.boundary_leakage = leak;
    res.half_width = grid.half_width;
    res.intervals = grid.intervals;
    res.dt = dt;
    res.steps = steps + vsteps;

    const double K = res.constants.K;
    const double slack = 1.0 + cfg.chain_tolerance;
    res.ratios.assign(E.size() > 1 ? E.size() - 1 : 0, nan());
    res.ratio_excess = nan();
    for (std::size_t k = 0; k + 1 < E.size(); ++k) {
        if (!(E[k + 1] > cfg.ratio_floor)) continue;
        const double r = E[k] / E[k + 1];
        res.ratios[k] = r;
        res.K_hat = std::isfinite(res.K_hat) ? std::max(res.K_hat, r) : r;
        const double ex = r / K - 1.0;
        res.ratio_excess = std::isfinite(res.ratio_excess) ? std::max(res.ratio_excess, ex) : ex;
        if (r > K * slack) res.ratios_ok = false;
    }
    res.chain_applicable = n >= 2;
    res.chain_lhs = res.U2_terminal + res.constants.C1 * EU;
    res.chain_rhs = n >= 2 ? res.constants.C2 * E[0] : 0.0;
    if (res.chain_applicable) res.chain_ok = res.chain_lhs <= res.chain_rhs * slack + 1e-300;
    res.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
    return res;
}

json ProductEstimateReport::to_json() const {
    json rs = json::array();
    for (const auto& r : runs) rs.push_back(r.to_json());
    return {{"lengths", lengths},
            {"U2_by_length", U2_by_length},
            {"slope_length", real_or_null(slope_length)},
            {"intercept_length", real_or_null(intercept_length)},
            {"ns", ns},
            {"U2_by_n", U2_by_n},
            {"decay_rate_n", real_or_null(decay_rate_n)},
            {"intercept_n", real_or_null(intercept_n)},
            {"K_hat", real_or_null(K_hat)},
            {"decay_ok", decay_ok},
            {"degenerate", degenerate},
            {"runs", rs}};
}

ProductEstimateReport product_estimate_check(const CascadeConfig& cfg, const std::vector<double>& lengths,
                                             std::vector<std::size_t> ns) {
    cfg.validate();
    ProductEstimateReport rep;
    rep.lengths = lengths;
    if (ns.empty())
        for (std::size_t k = 2; k <= cfg.levels(); ++k) ns.push_back(k);
    rep.ns = ns;
    // One box for the whole length sweep, sized for the longest interval.
    CascadeConfig base = cfg;
    if (!(base.grid.grid.half_width > 0.0) && !lengths.empty()) {
        double R = cfg.source_radius();
        if (R == 0.0) R = 1.0;
        const double longest = *std::max_element(lengths.begin(), lengths.end());
        base.grid.grid.half_width = R + std::sqrt(2.0 * longest) * cfg.box_safety;
    }
    for (double L : lengths) {
        if (!(L > 0.0)) throw InvalidArgument("product_estimate_check: lengths must be positive");
        CascadeResult r = run_cascade(base.with_interval(cfg.T0, cfg.T0 + L));
        rep.U2_by_length.push_back(r.U2_terminal);
        rep.runs.push_back(std::move(r));
    }
    double khat = nan();
    for (std::size_t m : ns) {
        CascadeResult r = run_cascade(cfg.truncated(m));
        rep.U2_by_n.push_back(r.U2_terminal);
        if (std::isfinite(r.K_hat)) khat = std::isfinite(khat) ? std::max(khat, r.K_hat) : r.K_hat;
        rep.runs.push_back(std::move(r));
    }
    rep.K_hat = khat;

    auto positive = [](const std::vector<double>& v) {
        return !v.empty() && std::all_of(v.begin(), v.end(), [](double x) { return x > 0.0 && std::isfinite(x); });
    };
    if (!positive(rep.U2_by_length) || (!rep.U2_by_n.empty() && !positive(rep.U2_by_n))) {
        rep.degenerate = true;
        return rep;
    }
    std::vector<double> x, y;
    for (std::size_t i = 0; i < lengths.size(); ++i) {
        x.push_back(std::log(lengths[i]));
        y.push_back(std::log(rep.U2_by_length[i]));
    }
    std::tie(rep.slope_length, rep.intercept_length) = fit_line(x, y);
    if (rep.ns.size() >= 2) {
        x.clear();
        y.clear();
        for (std::size_t i = 0; i < rep.ns.size(); ++i) {
            x.push_back(static_cast<double>(rep.ns[i]));
            y.push_back(std::log(rep.U2_by_n[i]));
        }
        const auto [slope, intercept] = fit_line(x, y);
        rep.decay_rate_n = std::exp(slope);
        rep.intercept_n = intercept;
        rep.decay_ok = std::isfinite(rep.K_hat) && rep.decay_rate_n <= rep.K_hat * 1.2;
    }
    return rep;
}

}  // namespace fbd::pde
