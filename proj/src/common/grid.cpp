#include "fbdrift/common/grid.hpp"

#include "fbdrift/common/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>

namespace fbd {

std::size_t GridSpec::node_count() const {
    std::size_t n = 1;
    for (int k = 0; k < dimension; ++k) n *= nodes_per_axis();
    return n;
}

std::size_t GridSpec::stride(int axis) const {
    std::size_t s = 1;
    for (int k = dimension - 1; k > axis; --k) s *= nodes_per_axis();
    return s;
}

void GridSpec::unflatten(std::size_t flat, std::span<std::size_t> idx) const {
    const std::size_t n = nodes_per_axis();
    for (int k = dimension - 1; k >= 0; --k) {
        idx[k] = flat % n;
        flat /= n;
    }
}

void GridSpec::position(std::size_t flat, std::span<double> x) const {
    const std::size_t n = nodes_per_axis();
    for (int k = dimension - 1; k >= 0; --k) {
        x[k] = coordinate(flat % n);
        flat /= n;
    }
}

bool GridSpec::on_boundary(std::size_t flat) const {
    const std::size_t n = nodes_per_axis();
    for (int k = 0; k < dimension; ++k) {
        const std::size_t i = flat % n;
        if (i == 0 || i == intervals) return true;
        flat /= n;
    }
    return false;
}

double GridSpec::cell_volume() const { return std::pow(spacing(), dimension); }

void GridSpec::validate() const {
    if (dimension < 1) throw InvalidArgument("grid dimension must be positive");
    if (intervals < 2) throw InvalidArgument("grid needs at least 2 intervals per axis");
    if (!(half_width > 0.0) || !std::isfinite(half_width))
        throw InvalidArgument("grid half-width must be positive and finite");
}

GridField::GridField(GridSpec g, int ncomp, double t)
    : grid(g), components(ncomp), time(t), values(g.node_count() * static_cast<std::size_t>(ncomp), 0.0) {}

bool GridField::interpolate(std::span<const double> x, std::span<double> out) const {
    const int d = grid.dimension;
    for (int c = 0; c < components; ++c) out[c] = 0.0;
    const double h = grid.spacing();
    std::size_t base[16];
    double frac[16];
    for (int k = 0; k < d; ++k) {
        const double s = (x[k] + grid.half_width) / h;
        if (!(s >= 0.0) || s > static_cast<double>(grid.intervals)) return false;
        std::size_t i = static_cast<std::size_t>(std::floor(s));
        if (i >= grid.intervals) i = grid.intervals - 1;
        base[k] = i;
        frac[k] = s - static_cast<double>(i);
    }
    const std::size_t corners = std::size_t{1} << d;
    for (std::size_t m = 0; m < corners; ++m) {
        double w = 1.0;
        std::size_t flat = 0;
        for (int k = 0; k < d; ++k) {
            const bool up = (m >> k) & 1U;
            w *= up ? frac[k] : 1.0 - frac[k];
            flat += (base[k] + (up ? 1 : 0)) * grid.stride(k);
        }
        if (w == 0.0) continue;
        for (int c = 0; c < components; ++c) out[c] += w * at(flat, c);
    }
    return true;
}

void GridField::validate() const {
    grid.validate();
    if (components < 1) throw InvalidArgument("grid field needs at least one component");
    if (values.size() != grid.node_count() * static_cast<std::size_t>(components))
        throw InvalidArgument("grid field value count does not match its grid shape");
    for (double v : values)
        if (!std::isfinite(v)) throw NumericalError("grid field contains a non-finite value");
}

void GridField::write(const std::string& path) const {
    std::ofstream bin(path, std::ios::binary);
    if (!bin) throw Error("io-error", "cannot open " + path + " for writing");
    bin.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(double)));
    nlohmann::json side;
    std::vector<std::size_t> shape(static_cast<std::size_t>(grid.dimension), grid.nodes_per_axis());
    side["shape"] = shape;
    side["components"] = components;
    side["dtype"] = "float64";
    side["order"] = "node-major, axis 0 slowest, components fastest";
    side["box"] = {-grid.half_width, grid.half_width};
    side["spacing"] = grid.spacing();
    side["intervals"] = grid.intervals;
    side["time"] = time;
    std::ofstream js(path + ".json");
    js << side.dump(2) << '\n';
}

GridField GridField::read(const std::string& path) {
    std::ifstream js(path + ".json");
    if (!js) throw Error("io-error", "missing sidecar " + path + ".json");
    nlohmann::json side = nlohmann::json::parse(js);
    GridSpec g;
    g.dimension = static_cast<int>(side.at("shape").size());
    g.intervals = side.at("intervals").get<std::size_t>();
    g.half_width = side.at("box")[1].get<double>();
    GridField f(g, side.at("components").get<int>(), side.at("time").get<double>());
    std::ifstream bin(path, std::ios::binary);
    bin.read(reinterpret_cast<char*>(f.values.data()),
             static_cast<std::streamsize>(f.values.size() * sizeof(double)));
    if (!bin) throw Error("io-error", "short read from " + path);
    f.validate();
    return f;
}

}  // namespace fbd
