#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace fbd {

/// Regular vertex grid on the box [-L, L]^d with N intervals per axis.
/// Boundary nodes are included; node (i_0, ..., i_{d-1}) has flat index
/// sum_k i_k * stride_k with axis 0 varying slowest.
struct GridSpec {
    int dimension = 3;
    std::size_t intervals = 32;
    double half_width = 1.0;

    double spacing() const { return 2.0 * half_width / static_cast<double>(intervals); }
    std::size_t nodes_per_axis() const { return intervals + 1; }
    std::size_t node_count() const;
    std::size_t stride(int axis) const;
    double coordinate(std::size_t i) const { return -half_width + static_cast<double>(i) * spacing(); }
    /// Multi-index of a flat node index.
    void unflatten(std::size_t flat, std::span<std::size_t> idx) const;
    void position(std::size_t flat, std::span<double> x) const;
    bool on_boundary(std::size_t flat) const;
    /// Cell volume h^d used by the node quadrature.
    double cell_volume() const;
    void validate() const;
};

/// Scalar or vector field sampled on a GridSpec. Values are node-major:
/// values[node * components + c].
struct GridField {
    GridSpec grid;
    int components = 1;
    double time = 0.0;
    std::vector<double> values;

    GridField() = default;
    GridField(GridSpec g, int ncomp, double t = 0.0);

    double& at(std::size_t node, int c = 0) { return values[node * components + c]; }
    double at(std::size_t node, int c = 0) const { return values[node * components + c]; }

    /// Multilinear interpolation; returns false (and leaves out zero) when x
    /// lies outside the box.
    bool interpolate(std::span<const double> x, std::span<double> out) const;

    void validate() const;

    /// Flat little-endian float64 array at `path`, plus a JSON sidecar
    /// `path + ".json"` describing shape, box, spacing and time.
    void write(const std::string& path) const;
    static GridField read(const std::string& path);
};

}  // namespace fbd
