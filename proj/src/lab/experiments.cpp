#include "fbdrift/lab/experiments.hpp"

#include "builders.hpp"
#include "fbdrift/common/errors.hpp"
#include "fbdrift/drift/form_bound.hpp"
#include "fbdrift/drift/norms.hpp"
#include "fbdrift/sde/krylov.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>

namespace fbd::lab {

using nlohmann::json;

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

double flag(bool b) { return b ? 1.0 : 0.0; }

void formbound(const json& p, int workers, RecordSet& rs) {
    const auto f = detail::formbound_params(p);
    const auto rep = drift::estimate_form_bound(f.drift, f.family, f.times, workers);
    rs.add("delta_hat", rep.delta_hat, std::nullopt, rep.family_descriptor + ":" + rep.argmax_id);
    Table& t = rs.table("quotients", {"member", "t", "quotient", "numerator", "denominator"});
    for (const auto& q : rep.quotients) t.add({q.member_id, q.t, q.value, q.numerator, q.denominator});
    if (!f.norms) return;
    const double t0 = f.times.front();
    const int d = f.drift.dimension();
    try {
        rs.add("sobolev_delta", drift::sobolev_delta(f.drift, d, f.times).delta);
    } catch (const NumericalError& e) {
        rs.add("sobolev_delta", std::nan(""), std::nullopt, e.what());
    }
    const double R = f.drift.cutoff_radius();
    const double scale = std::isfinite(R) ? R : 1.0;
    rs.add("morrey_norm", drift::morrey_norm(f.drift, 0.5, drift::default_morrey_centers(d, scale),
                                             drift::default_morrey_radii(scale), t0));
    std::vector<double> levels;
    for (int k = 0; k <= 12; ++k) levels.push_back(std::pow(2.0, k - 2) / scale);
    rs.add("weak_ld_norm", drift::weak_ld_norm(f.drift, levels, t0));
}

void mollify(const json& p, int workers, RecordSet& rs) {
    const auto m = detail::mollify_params(p);
    const auto rep = mollifier::build_approx_sequence(m.drift, m.schedule, m.box_half_width, m.T, m.family, workers);
    rs.add("base_delta_hat", rep.base_delta_hat);
    rs.add("final_distance", rep.levels.empty() ? std::nan("") : rep.levels.back().distance);
    rs.add("converged", flag(rep.converged));
    rs.add("form_bound_preserved", flag(rep.form_bound_preserved));
    // Closed form of ||1_m b - b||^2 for an uncut-plateau Hardy drift.
    const bool hardy = m.drift.kind() == drift::DriftKind::HardyAttractor;
    Table& t = rs.table("levels", {"m", "eps", "c_m", "distance", "truncation_error_sq", "analytic_truncation_sq",
                                   "delta_hat", "sup_norm"});
    for (const auto& l : rep.levels) {
        const double c = hardy ? m.drift.coefficient() : 0.0;
        const double analytic = hardy ? 4.0 * std::numbers::pi * c * c * c / l.m * m.T : std::nan("");
        t.add({l.m, l.eps, l.c_m, l.distance, l.truncation_error_sq, analytic, l.delta_hat, l.sup_norm});
        rs.add("distance_m" + num(l.m), l.distance);
        rs.add("delta_hat_m" + num(l.m), l.delta_hat);
    }
}

void cascade(const json& p, RecordSet& rs) {
    const auto c = detail::cascade_params(p);
    const pde::CascadeResult r = pde::run_cascade(c.cascade);
    rs.add("C1", r.constants.C1);
    rs.add("C2", r.constants.C2);
    rs.add("K", r.constants.K);
    rs.add("delta_hat", r.constants.delta);
    rs.add("nu_hat", r.constants.nu);
    rs.add("K_hat", r.K_hat);
    rs.add("U2_terminal", r.U2_terminal);
    rs.add("E_U", r.E_U);
    rs.add("chain_lhs", r.chain_lhs);
    rs.add("chain_rhs", r.chain_rhs);
    rs.add("chain_ok", flag(r.chain_ok));
    rs.add("ratios_ok", flag(r.ratios_ok));
    rs.add("energy_residual", r.energy_residual);
    rs.add("boundary_leakage", r.boundary_leakage);
    Table& e = rs.table("energies", {"k", "E_k", "ratio"});
    for (std::size_t i = 0; i < r.energies.size(); ++i)
        e.add({static_cast<double>(i + 2), r.energies[i], i < r.ratios.size() ? json(r.ratios[i]) : json()});
    if (c.lengths.empty() && c.ns.empty()) return;
    const auto pe = pde::product_estimate_check(c.cascade, c.lengths, c.ns);
    rs.add("slope_length", pe.slope_length);
    rs.add("decay_rate_n", pe.decay_rate_n);
    rs.add("decay_ok", flag(pe.decay_ok));
    Table& lt = rs.table("lengths", {"length", "U2_terminal"});
    for (std::size_t i = 0; i < pe.lengths.size(); ++i) lt.add({pe.lengths[i], pe.U2_by_length[i]});
    Table& nt = rs.table("levels", {"n", "U2_terminal", "geometric_fit"});
    for (std::size_t i = 0; i < pe.ns.size(); ++i) {
        const double n = static_cast<double>(pe.ns[i]);
        const double fit = std::exp(pe.intercept_n) * std::pow(pe.decay_rate_n, n);
        nt.add({n, pe.U2_by_n[i], std::isfinite(fit) ? json(fit) : json()});
    }
}

void simulate(const json& p, RecordSet& rs) {
    const auto s = detail::simulate_params(p);
    auto ens = std::make_shared<sde::PathEnsemble>(sde::simulate_ensemble(s.drift, s.starts, s.sim));
    const std::size_t d = static_cast<std::size_t>(ens->dimension);
    const std::size_t n = ens->trajectories();
    rs.add("trajectories", static_cast<double>(n));
    rs.add("steps", static_cast<double>(ens->steps()));
    rs.add_label("increment_checksum", ens->increment_checksum());
    Table& t = rs.table("moments", {"t", "coordinate", "mean", "mean_se", "variance", "variance_se"});
    const std::size_t stride = std::max<std::size_t>(1, ens->steps() / 10);
    for (std::size_t k = 0; k <= ens->steps(); k += stride) {
        for (std::size_t i = 0; i < d; ++i) {
            // displacement from each trajectory's own start
            double m1 = 0.0, m2 = 0.0;
            for (std::size_t q = 0; q < n; ++q) {
                const double v = ens->state(q, k)[i] - ens->state(q, 0)[i];
                m1 += v;
                m2 += v * v;
            }
            m1 /= static_cast<double>(n);
            const double var = m2 / static_cast<double>(n) - m1 * m1;
            const double mse = std::sqrt(var / static_cast<double>(n));
            const double vse = var * std::sqrt(2.0 / std::max<double>(1.0, static_cast<double>(n) - 1.0));
            t.add({ens->grid.time(k), static_cast<double>(i), m1, mse, var, vse});
            if (k + stride > ens->steps()) {
                rs.add("final_mean_" + std::to_string(i), m1, mse);
                rs.add("final_variance_" + std::to_string(i), var, vse);
            }
        }
    }
    if (s.write) rs.attach([ens](const std::string& dir) { ens->write(dir + "/ensemble"); });
}

void krylov(const json& p, RecordSet& rs) {
    const auto k = detail::krylov_params(p);
    const auto ens = sde::simulate_ensemble(k.drift, k.starts, k.sim);
    const auto rep = k.g ? sde::krylov_g_functional(ens, *k.g, k.h, k.q, k.delta_hat)
                         : sde::krylov_functional(ens, k.h, k.mu);
    rs.add("occupation", rep.estimate, rep.std_error, rep.norm_kind);
    rs.add("reference_norm", rep.reference_norm);
    rs.add("ratio", rep.ratio);
    rs.add("exponent", rep.exponent);
}

void envelope_rows(Table& t, int r, const sde::EnvelopeFit& f) {
    for (std::size_t i = 0; i < f.x.size(); ++i)
        t.add({static_cast<double>(r), f.x[i], f.y[i], f.K * std::pow(f.x[i], f.exponent)});
}

void flow(const json& p, RecordSet& rs) {
    const auto cfg = detail::flow_params(p);
    const auto reps = sde::flow_study(cfg);
    Table& ft = rs.table("flow", {"r", "t", "norm", "envelope"});
    Table& mt = rs.table("malliavin", {"r", "gap", "norm", "envelope"});
    Table& gt = rs.table("malliavin_gap", {"r", "gap", "norm", "envelope"});
    for (const auto& r : reps) {
        const std::string sfx = "_r" + std::to_string(r.r);
        rs.add("flow_K" + sfx, r.flow.K);
        rs.add("flow_slope" + sfx, r.flow.slope);
        rs.add("flow_dominated" + sfx, flag(r.flow.dominated));
        rs.add("tends_to_zero" + sfx, flag(r.tends_to_zero));
        rs.add("malliavin_K" + sfx, r.malliavin.K);
        rs.add("malliavin_dominated" + sfx, flag(r.malliavin.dominated));
        rs.add("malliavin_gap_K" + sfx, r.malliavin_gap.K);
        rs.add("malliavin_gap_dominated" + sfx, flag(r.malliavin_gap.dominated));
        envelope_rows(ft, r.r, r.flow);
        envelope_rows(mt, r.r, r.malliavin);
        envelope_rows(gt, r.r, r.malliavin_gap);
    }
}

void regularity(const json& p, RecordSet& rs) {
    const auto rep = sde::regularity_statistics(detail::regularity_params(p));
    rs.add("r", rep.r);
    rs.add("C", rep.C);
    rs.add("dominated", flag(rep.dominated));
    rs.add("coupling_ok", flag(rep.coupling_ok));
    rs.add_label("increment_checksum", rep.increment_checksum);
    for (const auto& w : rep.warnings) rs.add_label("warning", w);
    Table& t = rs.table("moduli", {"modulus", "gap", "moment", "std_error", "bound", "envelope"});
    for (const sde::ModulusSeries* m : {&rep.time, &rep.space, &rep.start}) {
        rs.add("slope_" + m->name, m->slope);
        for (std::size_t i = 0; i < m->gaps.size(); ++i)
            t.add({m->name, m->gaps[i], m->moments[i], m->std_errors[i], m->bound[i], rep.C * m->bound[i]});
    }
}

void converge(const json& p, RecordSet& rs) {
    const auto rep = sde::convergence_study(detail::converge_params(p));
    rs.add("C1", rep.C1);
    rs.add("surrogate_dominated", flag(rep.surrogate_dominated));
    rs.add("gaps_nonincreasing", flag(rep.gaps_nonincreasing));
    rs.add_label("increment_checksum", rep.increment_checksum);
    Table& t = rs.table("pairs", {"m", "m_next", "median_gap", "p95_gap", "surrogate", "surrogate_se",
                                  "weighted_norm", "envelope"});
    for (const auto& q : rep.pairs)
        t.add({q.m, q.m_next, q.median_gap, q.p95_gap, q.surrogate, q.surrogate_se, q.weighted_norm,
               rep.C1 * q.weighted_norm});
}

void criticality(const json& p, RecordSet& rs) {
    const auto rep = sde::criticality_sweep(detail::criticality_params(p));
    rs.add("baseline_collapse_fraction", rep.baseline.collapse_fraction, rep.baseline.collapse_se);
    rs.add("monotone", flag(rep.monotone));
    rs.add("separation", rep.separation);
    Table& t = rs.table("criticality", {"delta", "collapse_fraction", "stderr"});
    for (const auto& r : rep.rows) {
        t.add({r.delta, r.collapse_fraction, r.collapse_se});
        rs.add("collapse_fraction_delta" + num(r.delta), r.collapse_fraction, r.collapse_se);
        rs.add("inside_fraction_delta" + num(r.delta), r.inside_fraction, r.inside_se);
    }
}

}  // namespace

RecordSet run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    RecordSet rs(cfg.experiment_id(), cfg.digest());
    const json p = detail::effective_params(cfg);
    const std::string& k = cfg.kind;
    if (k == "formbound") formbound(p, cfg.workers, rs);
    else if (k == "mollify") mollify(p, cfg.workers, rs);
    else if (k == "pde-cascade") cascade(p, rs);
    else if (k == "simulate") simulate(p, rs);
    else if (k == "krylov") krylov(p, rs);
    else if (k == "flow") flow(p, rs);
    else if (k == "regularity") regularity(p, rs);
    else if (k == "converge") converge(p, rs);
    else if (k == "criticality") criticality(p, rs);
    return rs;
}

json error_report(const std::string& code, const std::string& message, const std::vector<std::string>& errors) {
    json j{{"status", "error"}, {"code", code}, {"message", message}};
    if (!errors.empty()) j["errors"] = errors;
    return j;
}

int run(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
    const auto problems = cfg.problems();
    if (!problems.empty()) {
        err << error_report("config-error", "invalid configuration", problems).dump(2) << "\n";
        return 2;
    }
    try {
        const RecordSet rs = run_experiment(cfg);
        const std::string dir = (std::filesystem::path(cfg.out_dir) / cfg.experiment_id()).string();
        rs.commit(dir, cfg.canonical());
        out << json{{"status", "ok"},
                    {"experiment_id", cfg.experiment_id()},
                    {"digest", cfg.digest()},
                    {"directory", dir},
                    {"records", rs.records().size()}}
                   .dump(2)
            << "\n";
        return 0;
    } catch (const ConfigError& e) {
        err << error_report(e.code(), e.what()).dump(2) << "\n";
        return 2;
    } catch (const Error& e) {
        err << error_report(e.code(), e.what()).dump(2) << "\n";
        return 1;
    } catch (const nlohmann::json::exception& e) {
        err << error_report("config-error", e.what()).dump(2) << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << error_report("internal-error", e.what()).dump(2) << "\n";
        return 1;
    }
}

}  // namespace fbd::lab
