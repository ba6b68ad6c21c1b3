#include "fbdrift/sde/flow.hpp"

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

// Integrates M_{k+1} = M_k + grad b(t_k, X_k) M_k dt from M = I at step k0
// along trajectory `traj`, writing the recorded steps into out (record-major).
// Records before k0 receive I.
void propagate(const DriftSpec& b, const PathEnsemble& ens, std::size_t traj, std::size_t k0,
               const std::vector<std::size_t>& record, double* out) {
    const int d = ens.dimension;
    const std::size_t dd = static_cast<std::size_t>(d * d);
    double M[kMaxDimension * kMaxDimension], G[kMaxDimension * kMaxDimension], N[kMaxDimension * kMaxDimension];
    for (std::size_t i = 0; i < dd; ++i) M[i] = 0.0;
    for (int i = 0; i < d; ++i) M[i * d + i] = 1.0;
    std::size_t ri = 0;
    auto emit = [&](std::size_t k) {
        while (ri < record.size() && record[ri] == k) {
            std::copy(M, M + dd, out + ri * dd);
            ++ri;
        }
    };
    for (; ri < record.size() && record[ri] < k0; ++ri) std::copy(M, M + dd, out + ri * dd);
    emit(k0);
    const double dt = ens.grid.dt;
    for (std::size_t k = k0; k < ens.steps() && ri < record.size(); ++k) {
        const auto x = ens.state(traj, k);
        try {
            b.grad(ens.grid.time(k), x, std::span<double>(G, dd));
        } catch (const Error& e) {
            throw NumericalError("drift gradient failed on trajectory " + std::to_string(traj) + " at step " +
                                 std::to_string(k) + ": " + e.what());
        }
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                double acc = 0.0;
                for (int l = 0; l < d; ++l) acc += G[i * d + l] * M[l * d + j];
                N[i * d + j] = M[i * d + j] + acc * dt;
            }
        std::copy(N, N + dd, M);
        if (!std::isfinite(M[0]))
            throw NumericalError("non-finite flow derivative on trajectory " + std::to_string(traj) + " at step " +
                                 std::to_string(k + 1));
        emit(k + 1);
    }
}

std::vector<std::size_t> normalize_record(std::vector<std::size_t> record, std::size_t steps) {
    if (record.empty()) {
        record.resize(steps + 1);
        for (std::size_t k = 0; k <= steps; ++k) record[k] = k;
    }
    std::sort(record.begin(), record.end());
    record.erase(std::unique(record.begin(), record.end()), record.end());
    if (record.back() > steps) throw InvalidArgument("recorded step beyond the ensemble horizon");
    return record;
}

double frobenius_minus(std::span<const double> a, std::span<const double> b, int d, bool identity) {
    double s = 0.0;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            const double ref = identity ? (i == j ? 1.0 : 0.0) : b[i * d + j];
            const double v = a[i * d + j] - ref;
            s += v * v;
        }
    return std::sqrt(s);
}

}  // namespace

std::span<const double> FlowEnsemble::jacobian(std::size_t traj, std::size_t rec) const {
    const std::size_t dd = static_cast<std::size_t>(dimension * dimension);
    return {J.data() + (traj * record.size() + rec) * dd, dd};
}

std::span<const double> FlowEnsemble::malliavin(std::size_t si, std::size_t traj, std::size_t rec) const {
    const std::size_t dd = static_cast<std::size_t>(dimension * dimension);
    return {D.at(si).data() + (traj * record.size() + rec) * dd, dd};
}

std::size_t FlowEnsemble::record_index(std::size_t k) const {
    const auto it = std::lower_bound(record.begin(), record.end(), k);
    if (it == record.end() || *it != k) throw InvalidArgument("step " + std::to_string(k) + " is not recorded");
    return static_cast<std::size_t>(it - record.begin());
}

FlowEnsemble variational_flow(const DriftSpec& b, const PathEnsemble& ens, std::vector<std::size_t> record,
                              int workers) {
    if (b.dimension() != ens.dimension) throw InvalidArgument("drift and ensemble dimensions differ");
    FlowEnsemble f;
    f.dimension = ens.dimension;
    f.trajectories = ens.trajectories();
    f.grid = ens.grid;
    f.record = normalize_record(std::move(record), ens.steps());
    const std::size_t stride = f.record.size() * static_cast<std::size_t>(f.dimension * f.dimension);
    f.J.resize(f.trajectories * stride);
    parallel_for(f.trajectories, workers, [&](std::size_t p) { propagate(b, ens, p, 0, f.record, f.J.data() + p * stride); });
    return f;
}

void malliavin_derivative(const DriftSpec& b, const PathEnsemble& ens, const std::vector<double>& s_list,
                          FlowEnsemble& flows, int workers) {
    if (flows.trajectories != ens.trajectories() || flows.record.empty())
        throw InvalidArgument("flow ensemble does not belong to the path ensemble");
    const std::size_t stride = flows.record.size() * static_cast<std::size_t>(flows.dimension * flows.dimension);
    for (double s : s_list) {
        const double u = (s - ens.grid.s) / ens.grid.dt;
        const double k = std::round(u);
        if (!(std::abs(u - k) <= 1e-9 * std::max(1.0, std::abs(u))) || k < 0.0 ||
            k > static_cast<double>(ens.steps()))
            throw InvalidArgument("Malliavin time s = " + std::to_string(s) + " is not on the ensemble time grid");
        const auto k0 = static_cast<std::size_t>(k);
        std::vector<double> D(flows.trajectories * stride);
        parallel_for(flows.trajectories, workers,
                     [&](std::size_t p) { propagate(b, ens, p, k0, flows.record, D.data() + p * stride); });
        flows.s_list.push_back(s);
        flows.s_steps.push_back(k0);
        flows.D.push_back(std::move(D));
    }
}

MixedNormAccumulator::MixedNormAccumulator(std::vector<int> r_list, std::size_t samples)
    : r_(std::move(r_list)), samples_(samples), acc_(r_.size() * samples, 0.0) {
    for (int r : r_)
        if (r < 1) throw InvalidArgument("mixed norm exponent r must be >= 1");
}

void MixedNormAccumulator::add(std::span<const double> values, std::size_t paths, double cell_weight) {
    if (values.size() != paths * samples_) throw InvalidArgument("mixed norm sample block has the wrong size");
    for (std::size_t ri = 0; ri < r_.size(); ++ri)
        for (std::size_t i = 0; i < samples_; ++i) {
            double m = 0.0;
            for (std::size_t p = 0; p < paths; ++p) m += std::pow(values[p * samples_ + i], r_[ri]);
            m /= static_cast<double>(paths);
            acc_[ri * samples_ + i] += cell_weight * m * m;
        }
}

double MixedNormAccumulator::norm(std::size_t ri, std::size_t i) const {
    return std::pow(acc_.at(ri * samples_ + i), 1.0 / (2.0 * r_.at(ri)));
}

json EnvelopeFit::to_json() const {
    return {{"x", x},
            {"y", y},
            {"exponent", exponent},
            {"K", real_or_null(K)},
            {"slope", real_or_null(slope)},
            {"dominated", dominated},
            {"degenerate", degenerate}};
}

EnvelopeFit fit_envelope(std::vector<double> x, std::vector<double> y, double exponent, double rel_tol) {
    EnvelopeFit f;
    f.exponent = exponent;
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] > 0.0) idx.push_back(i);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    for (std::size_t i : idx) {
        f.x.push_back(x[i]);
        f.y.push_back(y[i]);
    }
    if (f.x.empty() || std::all_of(f.y.begin(), f.y.end(), [](double v) { return v == 0.0; })) {
        f.degenerate = true;
        return f;
    }
    f.K = f.y.back() / std::pow(f.x.back(), exponent);
    f.dominated = true;
    for (std::size_t i = 0; i < f.x.size(); ++i)
        if (f.y[i] > f.K * std::pow(f.x[i], exponent) * (1.0 + rel_tol)) f.dominated = false;
    double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
    for (std::size_t i = 0; i < f.x.size(); ++i) {
        if (!(f.y[i] > 0.0)) continue;
        const double a = std::log(f.x[i]), c = std::log(f.y[i]);
        sx += a;
        sy += c;
        sxx += a * a;
        sxy += a * c;
        n += 1.0;
    }
    if (n >= 2.0 && n * sxx - sx * sx > 0.0) f.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return f;
}

json FlowNormReport::to_json() const {
    return {{"r", r},
            {"flow", flow.to_json()},
            {"malliavin", malliavin.to_json()},
            {"malliavin_gap", malliavin_gap.to_json()},
            {"tends_to_zero", tends_to_zero},
            {"degenerate", degenerate},
            {"starts", starts},
            {"paths", paths}};
}

namespace {

// Norm samples of one start block of trajectories [t0, t0 + paths).
struct StartSamples {
    std::vector<double> flow;  // (path, record)
    std::vector<double> mall;  // (path, s)
    std::vector<double> gap;   // (path, s)
};

StartSamples start_samples(const FlowEnsemble& f, std::size_t t0, std::size_t paths) {
    const int d = f.dimension;
    const std::size_t R = f.record.size(), S = f.s_list.size();
    StartSamples s;
    s.flow.resize(paths * R);
    s.mall.resize(paths * S);
    s.gap.resize(paths * S);
    const std::size_t last = R - 1;
    for (std::size_t p = 0; p < paths; ++p) {
        for (std::size_t i = 0; i < R; ++i) s.flow[p * R + i] = frobenius_minus(f.jacobian(t0 + p, i), {}, d, true);
        for (std::size_t j = 0; j < S; ++j) {
            s.mall[p * S + j] = frobenius_minus(f.malliavin(j, t0 + p, last), {}, d, true);
            s.gap[p * S + j] = frobenius_minus(f.malliavin(j, t0 + p, last), f.malliavin(0, t0 + p, last), d, false);
        }
    }
    return s;
}

std::vector<FlowNormReport> assemble(const std::vector<int>& r_list, const FlowEnsemble& f,
                                     const MixedNormAccumulator& fa, const MixedNormAccumulator& ma,
                                     const MixedNormAccumulator& ga, std::size_t starts, std::size_t paths) {
    std::vector<FlowNormReport> out;
    const double T = f.grid.time(f.record.back());
    for (std::size_t ri = 0; ri < r_list.size(); ++ri) {
        FlowNormReport rep;
        rep.r = r_list[ri];
        rep.starts = starts;
        rep.paths = paths;
        std::vector<double> x, y;
        for (std::size_t i = 0; i < f.record.size(); ++i) {
            x.push_back(f.grid.time(f.record[i]) - f.grid.s);
            y.push_back(fa.norm(ri, i));
        }
        rep.flow = fit_envelope(x, y, 1.0 / (2.0 * rep.r));
        rep.degenerate = rep.flow.degenerate;
        rep.tends_to_zero = !rep.flow.degenerate && rep.flow.y.front() < rep.flow.y.back();
        if (!f.s_list.empty()) {
            std::vector<double> xm, ym, xg, yg;
            for (std::size_t j = 0; j < f.s_list.size(); ++j) {
                xm.push_back(T - f.s_list[j]);
                ym.push_back(ma.norm(ri, j));
                xg.push_back(std::abs(f.s_list[j] - f.s_list[0]));
                yg.push_back(ga.norm(ri, j));
            }
            rep.malliavin = fit_envelope(xm, ym, 1.0 / (4.0 * rep.r));
            rep.malliavin_gap = fit_envelope(xg, yg, 1.0 / (4.0 * rep.r));
        }
        out.push_back(std::move(rep));
    }
    return out;
}

}  // namespace

std::vector<FlowNormReport> flow_norm_statistics(const FlowEnsemble& flows, const PathEnsemble& ens,
                                                 const std::vector<int>& r_list) {
    if (flows.trajectories != ens.trajectories()) throw InvalidArgument("flow ensemble does not match the paths");
    const std::size_t R = flows.record.size(), S = flows.s_list.size();
    MixedNormAccumulator fa(r_list, R), ma(r_list, S), ga(r_list, S);
    for (std::size_t a = 0; a < ens.starts.size(); ++a) {
        const StartSamples s = start_samples(flows, a * ens.paths, ens.paths);
        fa.add(s.flow, ens.paths, ens.starts.cell_volume);
        if (S > 0) {
            ma.add(s.mall, ens.paths, ens.starts.cell_volume);
            ga.add(s.gap, ens.paths, ens.starts.cell_volume);
        }
    }
    return assemble(r_list, flows, fa, ma, ga, ens.starts.size(), ens.paths);
}

json FlowStudyConfig::to_json() const {
    return {{"drift", drift.to_json()}, {"per_axis", per_axis}, {"half_width", half_width},
            {"simulation", sim.to_json()}, {"r_list", r_list}, {"samples", samples},
            {"malliavin_samples", malliavin_samples}};
}

FlowStudyConfig FlowStudyConfig::from_json(const json& j) {
    FlowStudyConfig c;
    c.drift = DriftSpec::from_json(j.at("drift"));
    c.per_axis = j.value("per_axis", c.per_axis);
    c.half_width = j.contains("half_width") ? json_real(j["half_width"]) : c.half_width;
    if (j.contains("simulation")) c.sim = SimulationSettings::from_json(j["simulation"]);
    c.r_list = j.value("r_list", c.r_list);
    c.samples = j.value("samples", c.samples);
    c.malliavin_samples = j.value("malliavin_samples", c.malliavin_samples);
    return c;
}

std::vector<FlowNormReport> flow_study(const FlowStudyConfig& cfg) {
    const int d = cfg.drift.dimension();
    const StartSpec lattice = StartSpec::lattice(d, cfg.per_axis, cfg.half_width);
    const TimeGrid tg = TimeGrid::make(cfg.sim.s, cfg.sim.T, cfg.sim.dt);
    const std::size_t K = tg.steps;
    if (K == 0) throw ConfigError("flow study needs a positive horizon");
    // Recorded steps geometric towards the start; Malliavin times with T - s geometric.
    std::vector<std::size_t> record{0};
    for (std::size_t i = 0; i < cfg.samples; ++i) {
        const auto k = static_cast<std::size_t>(std::llround(static_cast<double>(K) * std::pow(0.5, static_cast<double>(cfg.samples - 1 - i))));
        if (k > 0) record.push_back(k);
    }
    std::vector<double> s_list;
    std::vector<std::size_t> s_steps;
    for (std::size_t j = 0; j < cfg.malliavin_samples; ++j) {
        const auto back = static_cast<std::size_t>(std::llround(static_cast<double>(K) * std::pow(0.5, static_cast<double>(j))));
        const std::size_t k = K - std::min(K, back);
        if (k < K && std::find(s_steps.begin(), s_steps.end(), k) == s_steps.end()) {
            s_steps.push_back(k);
            s_list.push_back(tg.time(k));
        }
    }
    std::sort(record.begin(), record.end());
    record.erase(std::unique(record.begin(), record.end()), record.end());

    const std::size_t R = record.size(), S = s_list.size();
    MixedNormAccumulator fa(cfg.r_list, R), ma(cfg.r_list, S), ga(cfg.r_list, S);
    FlowEnsemble last;
    for (std::size_t a = 0; a < lattice.size(); ++a) {
        const PathEnsemble ens = simulate_ensemble(cfg.drift, StartSpec::single(lattice.points[a]), cfg.sim);
        FlowEnsemble f = variational_flow(cfg.drift, ens, record, cfg.sim.workers);
        if (S > 0) malliavin_derivative(cfg.drift, ens, s_list, f, cfg.sim.workers);
        const StartSamples s = start_samples(f, 0, ens.paths);
        fa.add(s.flow, ens.paths, lattice.cell_volume);
        if (S > 0) {
            ma.add(s.mall, ens.paths, lattice.cell_volume);
            ga.add(s.gap, ens.paths, lattice.cell_volume);
        }
        if (a + 1 == lattice.size()) last = std::move(f);
    }
    return assemble(cfg.r_list, last, fa, ma, ga, lattice.size(), cfg.sim.paths);
}

}  // namespace fbd::sde
