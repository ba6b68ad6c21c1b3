#include "fbdrift/lab/config.hpp"

#include "builders.hpp"
#include "fbdrift/common/digest.hpp"
#include "fbdrift/common/errors.hpp"
#include "fbdrift/common/text_document.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace fbd::lab {

using nlohmann::json;

namespace {

const std::vector<std::string> kKinds{"formbound", "mollify",    "pde-cascade", "simulate",   "krylov",
                                      "flow",      "regularity", "converge",    "criticality"};

}  // namespace

const std::vector<std::string>& ExperimentConfig::kinds() { return kKinds; }

bool ExperimentConfig::known_kind(const std::string& kind) {
    return std::find(kKinds.begin(), kKinds.end(), kind) != kKinds.end();
}

bool ExperimentConfig::stochastic(const std::string& kind) {
    return kind == "simulate" || kind == "krylov" || kind == "flow" || kind == "regularity" || kind == "converge" ||
           kind == "criticality";
}

ExperimentConfig ExperimentConfig::from_document(const json& doc) {
    if (!doc.is_object()) throw ConfigError("config: expected a mapping at the top level");
    ExperimentConfig c;
    std::vector<std::string> errs;
    for (const auto& [k, v] : doc.items()) {
        if (k == "kind") {
            if (v.is_string()) c.kind = v.get<std::string>();
            else errs.push_back("kind: expected a string");
        } else if (k == "seed") {
            if (v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0)) c.seed = v.get<std::uint64_t>();
            else errs.push_back("seed: expected a non-negative integer");
        } else if (k == "workers") {
            if (v.is_number_integer()) c.workers = v.get<int>();
            else errs.push_back("workers: expected an integer");
        } else if (k == "out") {
            if (v.is_string()) c.out_dir = v.get<std::string>();
            else errs.push_back("out: expected a string");
        } else if (k == "params") {
            c.params = v;
        } else {
            errs.push_back(k + ": unknown top-level field");
        }
    }
    if (!errs.empty()) {
        std::string msg = "invalid configuration";
        for (const auto& e : errs) msg += "\n  " + e;
        throw ConfigError(msg);
    }
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) { return from_document(load_text_document(path)); }

std::vector<std::string> ExperimentConfig::problems() const {
    std::vector<std::string> out;
    if (kind.empty()) {
        out.push_back("kind: missing");
        return out;
    }
    if (!known_kind(kind)) {
        std::string known;
        for (const auto& k : kKinds) known += (known.empty() ? "" : ", ") + k;
        out.push_back("kind: unknown experiment kind '" + kind + "' (known: " + known + ")");
        return out;
    }
    if (workers < 1) out.push_back("workers: must be at least 1");
    if (!params.is_object()) {
        out.push_back("params: expected a mapping");
        return out;
    }
    if (stochastic(kind) && !seed) {
        const bool nested = params.contains("simulation") && params["simulation"].is_object() &&
                            params["simulation"].contains("seed");
        if (!nested) out.push_back("seed: required for stochastic experiment '" + kind + "'");
    }
    const detail::Schema& s = detail::schema(kind);
    for (const auto& [k, v] : params.items()) {
        const bool ok = std::find(s.required.begin(), s.required.end(), k) != s.required.end() ||
                        std::find(s.optional.begin(), s.optional.end(), k) != s.optional.end();
        if (!ok) out.push_back("params." + k + ": unknown field for '" + kind + "'");
    }
    for (const auto& k : s.required)
        if (!params.contains(k)) out.push_back("params." + k + ": required");
    for (const char* k : {"drift", "g"}) {
        if (!params.contains(k)) continue;
        try {
            (void)drift::DriftSpec::from_json(params[k]);
        } catch (const std::exception& e) {
            out.push_back(std::string("params.") + k + ": " + e.what());
        }
    }
    for (const char* k : {"h"}) {
        if (!params.contains(k)) continue;
        try {
            (void)drift::ScalarField::from_json(params[k]);
        } catch (const std::exception& e) {
            out.push_back(std::string("params.") + k + ": " + e.what());
        }
    }
    if (params.contains("simulation")) {
        try {
            (void)sde::SimulationSettings::from_json(params["simulation"]);
        } catch (const std::exception& e) {
            out.push_back(std::string("params.simulation: ") + e.what());
        }
    }
    if (out.empty()) {
        try {
            detail::parse_all(*this);
        } catch (const std::exception& e) {
            out.push_back(std::string("params: ") + e.what());
        }
    }
    return out;
}

void ExperimentConfig::validate() const {
    const auto p = problems();
    if (p.empty()) return;
    std::string msg = "invalid configuration";
    for (const auto& e : p) msg += "\n  " + e;
    throw ConfigError(msg);
}

json ExperimentConfig::canonical() const {
    json j{{"kind", kind}, {"params", params}};
    if (seed) j["seed"] = *seed;
    return j;
}

std::string ExperimentConfig::canonical_text() const { return canonical().dump(); }

std::string ExperimentConfig::digest() const { return sha256_hex(canonical_text()); }

std::string ExperimentConfig::experiment_id() const { return kind + "-" + digest().substr(0, 12); }

namespace detail {

namespace {

double real_or(const json& p, const char* key, double fallback) {
    return p.contains(key) ? json_real(p[key]) : fallback;
}

std::vector<double> reals(const json& j, const char* what) {
    if (!j.is_array()) throw ConfigError(std::string(what) + ": expected a list");
    std::vector<double> v;
    for (const auto& e : j) v.push_back(json_real(e));
    return v;
}

}  // namespace

const Schema& schema(const std::string& kind) {
    static const std::map<std::string, Schema> table{
        {"formbound", {{"drift"}, {"family", "times", "norms"}}},
        {"mollify", {{"drift", "schedule"}, {"box_half_width", "T", "family"}}},
        {"pde-cascade",
         {{"drift", "sources"},
          {"nu_target", "alphas", "alpha", "T0", "T1", "length", "eps", "beta", "delta_hat", "nu_hat", "grid",
           "box_safety", "ratio_floor", "chain_tolerance", "lengths", "ns"}}},
        {"simulate", {{"drift", "starts"}, {"simulation", "write"}}},
        {"krylov", {{"drift", "starts", "h"}, {"simulation", "mu", "g", "q", "delta_hat"}}},
        {"flow", {{"drift"}, {"per_axis", "half_width", "simulation", "r_list", "samples", "malliavin_samples"}}},
        {"regularity", {{"drift"}, {"x0", "simulation", "r", "time_gap_steps", "space_gaps", "start_gap_steps"}}},
        {"converge", {{"drift"}, {"schedule", "levels", "eps0", "x0", "simulation", "kappa", "theta", "lattice"}}},
        {"criticality",
         {{}, {"deltas", "dimension", "x0", "simulation", "collapse_radius", "level", "width", "scale", "cutoff_radius"}}},
    };
    const auto it = table.find(kind);
    if (it == table.end()) throw ConfigError("unknown experiment kind '" + kind + "'");
    return it->second;
}

json effective_params(const ExperimentConfig& cfg) {
    json p = cfg.params;
    if (ExperimentConfig::stochastic(cfg.kind)) {
        json& s = p["simulation"];
        if (!s.is_object()) s = json::object();
        if (cfg.seed) s["seed"] = *cfg.seed;
        s["workers"] = cfg.workers;
    } else if (cfg.kind == "pde-cascade") {
        json& g = p["grid"];
        if (!g.is_object()) g = json::object();
        g["workers"] = cfg.workers;
    }
    return p;
}

drift::TestFunctionFamily family_from_json(const json& j, const drift::DriftSpec& b) {
    const int d = b.dimension();
    const double R = b.cutoff_radius();
    const double plateau = std::isfinite(R) ? 0.45 * R : 1.0;
    std::string kind = b.singularity_order() > 0.0 ? "hardy-quasi" : "reference";
    if (!j.is_null()) {
        if (!j.is_object()) throw ConfigError("family: expected a mapping");
        kind = j.value("kind", kind);
    }
    drift::TestFunctionFamily fam;
    if (kind == "hardy-quasi") {
        const double outer = j.is_object() ? real_or(j, "outer", plateau) : plateau;
        if (j.is_object() && (j.contains("etas") || j.contains("log_widths"))) {
            fam = drift::hardy_quasi_family(d, outer, j.contains("etas") ? reals(j["etas"], "family.etas")
                                                                         : std::vector<double>{0.05, 0.1, 0.2},
                                            j.contains("log_widths") ? reals(j["log_widths"], "family.log_widths")
                                                                     : std::vector<double>{6.0, 12.0, 24.0, 36.0});
        } else {
            fam = drift::hardy_quasi_family(d, outer);
        }
    } else if (kind == "reference") {
        fam = drift::reference_family(d, j.is_object() ? real_or(j, "scale", plateau) : plateau);
    } else {
        throw ConfigError("family: unknown kind '" + kind + "' (known: hardy-quasi, reference)");
    }
    if (j.is_object() && j.contains("radial_nodes")) fam.radial_nodes = j["radial_nodes"].get<std::size_t>();
    fam.validate();
    return fam;
}

FormboundParams formbound_params(const json& p) {
    FormboundParams f;
    f.drift = drift::DriftSpec::from_json(p.at("drift"));
    f.family = family_from_json(p.value("family", json()), f.drift);
    if (p.contains("times")) f.times = reals(p["times"], "times");
    if (f.times.empty()) throw ConfigError("times: at least one time point");
    f.norms = p.value("norms", false);
    return f;
}

MollifyParams mollify_params(const json& p) {
    MollifyParams m;
    m.drift = drift::DriftSpec::from_json(p.at("drift"));
    m.schedule = mollifier::MollifySchedule::from_json(p.at("schedule"));
    const double R = m.drift.cutoff_radius();
    m.box_half_width = real_or(p, "box_half_width", std::isfinite(R) ? 1.25 * R : 2.0);
    m.T = real_or(p, "T", 1.0);
    if (!(m.box_half_width > 0.0)) throw ConfigError("box_half_width: must be positive");
    if (!(m.T > 0.0)) throw ConfigError("T: must be positive");
    m.family = family_from_json(p.value("family", json()), m.drift);
    return m;
}

CascadeParams cascade_params(const json& p) {
    CascadeParams c;
    json core = p;
    core.erase("lengths");
    core.erase("ns");
    c.cascade = pde::CascadeConfig::from_json(core);
    if (p.contains("lengths")) c.lengths = reals(p["lengths"], "lengths");
    if (p.contains("ns")) c.ns = p["ns"].get<std::vector<std::size_t>>();
    for (double L : c.lengths)
        if (!(L > 0.0)) throw ConfigError("lengths: entries must be positive");
    for (std::size_t n : c.ns)
        if (n < 1 || n > c.cascade.levels()) throw ConfigError("ns: entries must lie in [1, number of sources]");
    return c;
}

SimulateParams simulate_params(const json& p) {
    SimulateParams s;
    s.drift = drift::DriftSpec::from_json(p.at("drift"));
    s.starts = sde::StartSpec::from_json(p.at("starts"), s.drift.dimension());
    if (p.contains("simulation")) s.sim = sde::SimulationSettings::from_json(p["simulation"]);
    s.write = p.value("write", false);
    if (s.starts.dimension() != s.drift.dimension()) throw ConfigError("starts: dimension disagrees with the drift");
    return s;
}

KrylovParams krylov_params(const json& p) {
    KrylovParams k;
    k.drift = drift::DriftSpec::from_json(p.at("drift"));
    k.starts = sde::StartSpec::from_json(p.at("starts"), k.drift.dimension());
    if (p.contains("simulation")) k.sim = sde::SimulationSettings::from_json(p["simulation"]);
    k.h = drift::ScalarField::from_json(p.at("h"), k.drift.dimension());
    k.mu = real_or(p, "mu", 0.5 * (k.drift.dimension() + 2) + 0.5);
    if (p.contains("g")) {
        k.g = drift::DriftSpec::from_json(p["g"]);
        if (!p.contains("q")) throw ConfigError("q: required with g");
        k.q = json_real(p["q"]);
        k.delta_hat = real_or(p, "delta_hat", 0.0);
    }
    if (k.starts.dimension() != k.drift.dimension()) throw ConfigError("starts: dimension disagrees with the drift");
    return k;
}

sde::FlowStudyConfig flow_params(const json& p) { return sde::FlowStudyConfig::from_json(p); }
sde::RegularityConfig regularity_params(const json& p) { return sde::RegularityConfig::from_json(p); }
sde::ConvergenceConfig converge_params(const json& p) { return sde::ConvergenceConfig::from_json(p); }
sde::CriticalityConfig criticality_params(const json& p) { return sde::CriticalityConfig::from_json(p); }

void parse_all(const ExperimentConfig& cfg) {
    const json p = effective_params(cfg);
    const std::string& k = cfg.kind;
    if (k == "formbound") (void)formbound_params(p);
    else if (k == "mollify") (void)mollify_params(p);
    else if (k == "pde-cascade") (void)cascade_params(p);
    else if (k == "simulate") (void)simulate_params(p);
    else if (k == "krylov") (void)krylov_params(p);
    else if (k == "flow") (void)flow_params(p);
    else if (k == "regularity") (void)regularity_params(p);
    else if (k == "converge") (void)converge_params(p);
    else if (k == "criticality") (void)criticality_params(p);
}

}  // namespace detail

}  // namespace fbd::lab
