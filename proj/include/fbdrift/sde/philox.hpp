#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace fbd::sde {

/// Philox4x32-10 counter-based generator (Salmon et al. parameters).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

/// Uniform in (0, 1) from 64 random bits; never returns 0 or 1.
double uniform_open(std::uint32_t hi, std::uint32_t lo);

/// Fills `out` with independent standard normals that depend only on
/// (seed, path, step, out.size()). Box-Muller on Philox output; one
/// counter block per pair of normals.
void standard_normals(std::uint64_t seed, std::uint64_t path, std::uint64_t step, std::span<double> out);

}  // namespace fbd::sde
