#include "fbdrift/sde/ensemble.hpp"

#include "fbdrift/common/digest.hpp"
#include "fbdrift/common/errors.hpp"
#include "fbdrift/common/parallel.hpp"
#include "fbdrift/common/text_document.hpp"
#include "fbdrift/sde/philox.hpp"

#include <cmath>
#include <fstream>

namespace fbd::sde {

using drift::DriftKind;
using drift::kMaxDimension;
using nlohmann::json;

StartSpec StartSpec::single(std::vector<double> x) {
    if (x.empty() || x.size() > static_cast<std::size_t>(kMaxDimension))
        throw InvalidArgument("start point has unsupported dimension");
    StartSpec s;
    s.points.push_back(std::move(x));
    return s;
}

StartSpec StartSpec::lattice(int d, std::size_t per_axis, double half_width, std::vector<double> center) {
    if (d < 1 || d > kMaxDimension || per_axis == 0 || !(half_width > 0.0))
        throw InvalidArgument("invalid start lattice");
    if (center.empty()) center.assign(static_cast<std::size_t>(d), 0.0);
    StartSpec s;
    const double h = 2.0 * half_width / static_cast<double>(per_axis);
    std::size_t total = 1;
    for (int k = 0; k < d; ++k) total *= per_axis;
    for (std::size_t f = 0; f < total; ++f) {
        std::vector<double> x(static_cast<std::size_t>(d));
        std::size_t rem = f;
        for (int k = d - 1; k >= 0; --k) {
            x[k] = center[k] - half_width + (static_cast<double>(rem % per_axis) + 0.5) * h;
            rem /= per_axis;
        }
        s.points.push_back(std::move(x));
    }
    s.cell_volume = std::pow(h, d);
    return s;
}

int StartSpec::dimension() const {
    if (points.empty()) throw InvalidArgument("empty start specification");
    return static_cast<int>(points.front().size());
}

json StartSpec::to_json() const { return {{"points", points}, {"cell_volume", cell_volume}}; }

StartSpec StartSpec::from_json(const json& j, int d) {
    if (j.is_array()) {
        if (!j.empty() && j[0].is_array()) {
            StartSpec s;
            s.points = j.get<std::vector<std::vector<double>>>();
            return s;
        }
        return single(j.get<std::vector<double>>());
    }
    if (j.contains("points")) {
        StartSpec s;
        s.points = j["points"].get<std::vector<std::vector<double>>>();
        s.cell_volume = j.value("cell_volume", 1.0);
        return s;
    }
    if (j.contains("lattice")) {
        const json& l = j["lattice"];
        return lattice(d, l.at("per_axis").get<std::size_t>(), json_real(l.at("half_width")),
                       l.value("center", std::vector<double>{}));
    }
    throw ConfigError("start specification must be a point, a list of points or {lattice: ...}");
}

TimeGrid TimeGrid::make(double s, double T, double dt) {
    if (!(dt > 0.0)) throw ConfigError("time step must be positive");
    if (!(T >= s)) throw ConfigError("horizon T must not precede the start time s");
    TimeGrid g;
    g.s = s;
    g.steps = T > s ? static_cast<std::size_t>(std::ceil((T - s) / dt - 1e-9)) : 0;
    g.dt = g.steps > 0 ? (T - s) / static_cast<double>(g.steps) : dt;
    g.offset = static_cast<std::uint64_t>(std::llround(s / g.dt));
    return g;
}

void NoiseSource::increment(std::uint64_t path, std::uint64_t step, std::span<double> out) const {
    standard_normals(seed, path, step, out);
    const double sd = std::sqrt(dt);
    for (double& v : out) v *= sd;
}

namespace {

void check_node(const DriftSpec& b, double factor, double dt) {
    const auto& n = b.node();
    switch (n.kind) {
        case DriftKind::Scaled:
            check_node(n.children[0], factor * std::abs(n.lambda), dt);
            break;
        case DriftKind::Sum:
        case DriftKind::Rescaled:
        case DriftKind::Retimed:
            for (const auto& c : n.children) check_node(c, factor, dt);
            break;
        case DriftKind::Mollified:
            if (n.eps > 0.0) {
                const double sup = factor * std::min(n.c_m * n.m, b.sup_bound()) * n.env.sup();
                if (dt * sup > 0.1 * n.eps * (1.0 + 1e-9))
                    throw ConfigError("time step " + std::to_string(dt) + " does not resolve the mollifier width " +
                                      std::to_string(n.eps) + " (need dt * sup|b| <= 0.1 eps with sup|b| = " +
                                      std::to_string(sup) + ")");
            }
            break;
        default:
            break;
    }
}

}  // namespace

void check_sde_drift(const DriftSpec& b, double dt) {
    if (!std::isfinite(b.sup_bound()) || b.singularity_order() > 0.0)
        throw ContractError("SDE engine integrates only mollified drifts; got an unbounded " + b.to_json().value("kind", std::string("drift")));
    check_node(b, 1.0, dt);
}

json SimulationSettings::to_json() const {
    return {{"s", s}, {"T", T}, {"dt", dt}, {"paths", paths}, {"seed", seed}, {"workers", workers}};
}

SimulationSettings SimulationSettings::from_json(const json& j) {
    SimulationSettings s;
    if (j.contains("s")) s.s = json_real(j["s"]);
    if (j.contains("T")) s.T = json_real(j["T"]);
    if (j.contains("dt")) s.dt = json_real(j["dt"]);
    s.paths = j.value("paths", j.value("M", s.paths));
    s.seed = j.value("seed", s.seed);
    s.workers = j.value("workers", s.workers);
    if (s.paths == 0) throw ConfigError("path count must be at least 1");
    return s;
}

std::span<const double> PathEnsemble::state(std::size_t traj, std::size_t k) const {
    const std::size_t d = static_cast<std::size_t>(dimension);
    return {X.data() + (traj * (grid.steps + 1) + k) * d, d};
}

std::span<const double> PathEnsemble::increment(std::size_t path, std::size_t k) const {
    const std::size_t d = static_cast<std::size_t>(dimension);
    return {dW.data() + (path * grid.steps + k) * d, d};
}

std::string PathEnsemble::increment_checksum() const { return sha256_hex(std::span<const double>(dW)); }

namespace {

void write_array(const std::string& path, const std::vector<double>& v) {
    std::ofstream bin(path, std::ios::binary);
    if (!bin) throw Error("io-error", "cannot open " + path + " for writing");
    bin.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void read_array(const std::string& path, std::vector<double>& v) {
    std::ifstream bin(path, std::ios::binary);
    if (!bin) throw Error("io-error", "cannot open " + path);
    bin.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
    if (!bin) throw Error("io-error", "short read from " + path);
}

}  // namespace

void PathEnsemble::write(const std::string& stem) const {
    write_array(stem + ".paths.bin", X);
    write_array(stem + ".increments.bin", dW);
    json side = {{"dimension", dimension},
                 {"paths", paths},
                 {"starts", starts.to_json()},
                 {"paths_shape", {trajectories(), grid.steps + 1, dimension}},
                 {"increments_shape", {paths, grid.steps, dimension}},
                 {"dtype", "float64"},
                 {"s", grid.s},
                 {"dt", grid.dt},
                 {"steps", grid.steps},
                 {"offset", grid.offset},
                 {"seed", seed},
                 {"drift_id", drift_id},
                 {"increment_checksum", increment_checksum()}};
    std::ofstream js(stem + ".json");
    if (!js) throw Error("io-error", "cannot open " + stem + ".json for writing");
    js << side.dump(2) << '\n';
}

PathEnsemble PathEnsemble::read(const std::string& stem) {
    std::ifstream js(stem + ".json");
    if (!js) throw Error("io-error", "missing sidecar " + stem + ".json");
    const json side = json::parse(js);
    PathEnsemble e;
    e.dimension = side.at("dimension").get<int>();
    e.paths = side.at("paths").get<std::size_t>();
    e.starts = StartSpec::from_json(side.at("starts"), e.dimension);
    e.grid.s = side.at("s").get<double>();
    e.grid.dt = side.at("dt").get<double>();
    e.grid.steps = side.at("steps").get<std::size_t>();
    e.grid.offset = side.at("offset").get<std::uint64_t>();
    e.seed = side.at("seed").get<std::uint64_t>();
    e.drift_id = side.at("drift_id").get<std::string>();
    const std::size_t d = static_cast<std::size_t>(e.dimension);
    e.X.resize(e.trajectories() * (e.grid.steps + 1) * d);
    e.dW.resize(e.paths * e.grid.steps * d);
    read_array(stem + ".paths.bin", e.X);
    read_array(stem + ".increments.bin", e.dW);
    return e;
}

PathEnsemble simulate_ensemble(const DriftSpec& b, const StartSpec& x0, const SimulationSettings& s) {
    if (s.paths == 0) throw InvalidArgument("simulate_ensemble needs at least one path");
    const int d = b.dimension();
    if (x0.size() == 0 || x0.dimension() != d) throw InvalidArgument("start dimension differs from the drift dimension");
    const TimeGrid tg = TimeGrid::make(s.s, s.T, s.dt);
    check_sde_drift(b, tg.dt);

    PathEnsemble e;
    e.dimension = d;
    e.paths = s.paths;
    e.starts = x0;
    e.grid = tg;
    e.seed = s.seed;
    e.drift_id = b.id();
    const std::size_t ud = static_cast<std::size_t>(d);
    const std::size_t K = tg.steps;
    e.dW.resize(s.paths * K * ud);
    e.X.resize(e.trajectories() * (K + 1) * ud);
    const NoiseSource noise{s.seed, d, tg.dt};

    parallel_for(s.paths, s.workers, [&](std::size_t m) {
        double* dw = e.dW.data() + m * K * ud;
        for (std::size_t k = 0; k < K; ++k) noise.increment(m, tg.offset + k, std::span<double>(dw + k * ud, ud));
        double bv[kMaxDimension];
        for (std::size_t a = 0; a < x0.size(); ++a) {
            double* x = e.X.data() + ((a * s.paths + m) * (K + 1)) * ud;
            for (std::size_t i = 0; i < ud; ++i) x[i] = x0.points[a][i];
            for (std::size_t k = 0; k < K; ++k) {
                const double* cur = x + k * ud;
                double* nxt = x + (k + 1) * ud;
                b.eval(tg.time(k), std::span<const double>(cur, ud), std::span<double>(bv, ud));
                for (std::size_t i = 0; i < ud; ++i) nxt[i] = cur[i] + bv[i] * tg.dt + dw[k * ud + i];
                if (!std::isfinite(nxt[0]))
                    throw NumericalError("non-finite state on path " + std::to_string(m) + " at step " + std::to_string(k + 1));
            }
        }
    });
    return e;
}

}  // namespace fbd::sde
