#include "fbdrift/common/digest.hpp"
#include "fbdrift/common/errors.hpp"
#include "fbdrift/common/grid.hpp"
#include "fbdrift/common/parallel.hpp"
#include "fbdrift/common/quadrature.hpp"
#include "fbdrift/sde/philox.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <numeric>

using namespace fbd;

TEST_CASE("philox4x32-10 known-answer vectors") {
    using A4 = std::array<std::uint32_t, 4>;
    CHECK(sde::philox4x32({0, 0, 0, 0}, {0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(sde::philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
          A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(sde::philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
          A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("uniform_open stays inside the open interval") {
    CHECK(sde::uniform_open(0, 0) > 0.0);
    CHECK(sde::uniform_open(0xffffffff, 0xffffffff) < 1.0);
}

TEST_CASE("standard normals depend only on their key") {
    std::vector<double> a(7), b(7), c(7);
    sde::standard_normals(3, 11, 5, a);
    sde::standard_normals(3, 11, 5, b);
    sde::standard_normals(3, 11, 6, c);
    CHECK(a == b);
    CHECK(a != c);

    // Moments over many keys.
    double s1 = 0.0, s2 = 0.0;
    const int n = 40000;
    std::vector<double> z(2);
    for (int i = 0; i < n / 2; ++i) {
        sde::standard_normals(1, static_cast<std::uint64_t>(i), 0, z);
        for (double v : z) {
            s1 += v;
            s2 += v * v;
        }
    }
    CHECK(std::abs(s1 / n) < 4.0 / std::sqrt(n));
    CHECK(std::abs(s2 / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("gauss-legendre integrates polynomials exactly") {
    const auto r = gauss_legendre(8, 0.0, 2.0);
    double s = 0.0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * std::pow(r.nodes[i], 15);
    CHECK(s == doctest::Approx(std::pow(2.0, 16) / 16).epsilon(1e-13));
}

TEST_CASE("sphere area and ball volume") {
    CHECK(sphere_area(3) == doctest::Approx(4.0 * std::numbers::pi).epsilon(1e-15));
    CHECK(ball_volume(3) == doctest::Approx(4.0 * std::numbers::pi / 3.0).epsilon(1e-15));
    CHECK(sphere_area(4) == doctest::Approx(2.0 * std::numbers::pi * std::numbers::pi).epsilon(1e-15));
}

TEST_CASE("grid interpolation reproduces affine functions") {
    GridSpec g{3, 8, 1.5};
    GridField f(g, 1);
    std::vector<double> x(3);
    for (std::size_t p = 0; p < g.node_count(); ++p) {
        g.position(p, x);
        f.at(p) = 1.0 + 2.0 * x[0] - x[1] + 0.5 * x[2];
    }
    std::vector<double> y{0.31, -0.77, 1.2}, out(1);
    REQUIRE(f.interpolate(y, out));
    CHECK(out[0] == doctest::Approx(1.0 + 0.62 + 0.77 + 0.6).epsilon(1e-13));
    std::vector<double> far{2.0, 0.0, 0.0};
    CHECK_FALSE(f.interpolate(far, out));
    CHECK(out[0] == 0.0);
}

TEST_CASE("grid field round-trips through its binary format") {
    GridSpec g{2, 4, 1.0};
    GridField f(g, 2, 0.25);
    std::iota(f.values.begin(), f.values.end(), 0.5);
    const auto path = (std::filesystem::temp_directory_path() / "fbdrift_grid_roundtrip.bin").string();
    f.write(path);
    const auto h = GridField::read(path);
    CHECK(h.values == f.values);
    CHECK(h.components == 2);
    CHECK(h.time == 0.25);
    CHECK(h.grid.intervals == 4);
    std::filesystem::remove(path);
    std::filesystem::remove(path + ".json");
}

TEST_CASE("sha256 matches the FIPS test vector") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("parallel_for output does not depend on the worker count") {
    std::vector<double> a(1000), b(1000);
    parallel_for(a.size(), 1, [&](std::size_t i) { a[i] = std::sin(static_cast<double>(i)); });
    parallel_for(b.size(), 3, [&](std::size_t i) { b[i] = std::sin(static_cast<double>(i)); });
    CHECK(a == b);
    CHECK_THROWS_AS(parallel_for(10, 2, [](std::size_t i) {
                        if (i == 7) throw InvalidArgument("x");
                    }),
                    InvalidArgument);
}
