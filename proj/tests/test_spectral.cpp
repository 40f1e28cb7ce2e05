#include "psdoflow/spectral.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace psdoflow;
using Catch::Approx;

namespace {

constexpr double pi = std::numbers::pi;

RealField sample(const Grid& g, auto&& f) {
    RealField out(g);
    for (int j = 0; j < g.components(); ++j) {
        for (std::size_t p = 0; p < g.points(); ++p) {
            double x[3] = {};
            for (int a = 0; a < g.dim(); ++a) x[a] = g.coordinate(p, a);
            out(j, p) = f(j, x);
        }
    }
    return out;
}

std::size_t index1(const Grid& g, int k) {
    int f[1] = {k};
    return g.flat_index(f);
}

}  // namespace

TEST_CASE("forward transform of a constant and of sin x") {
    Grid g(1, 1, 32);
    auto one = to_spectral(sample(g, [](int, const double*) { return 1.0; }));
    CHECK(std::abs(one(0, 0) - Complex(2 * pi, 0)) < 1e-12);
    for (std::size_t k = 1; k < g.points(); ++k) CHECK(std::abs(one(0, k)) < 1e-12);

    auto s = to_spectral(sample(g, [](int, const double* x) { return std::sin(x[0]); }));
    CHECK(std::abs(s(0, index1(g, 1)) - Complex(0, -pi)) < 1e-12);
    CHECK(std::abs(s(0, index1(g, -1)) - Complex(0, pi)) < 1e-12);

    auto back = to_real(s);
    for (std::size_t p = 0; p < g.points(); ++p) {
        CHECK(back(0, p) == Approx(std::sin(g.coordinate(p, 0))).margin(1e-13));
    }
}

TEST_CASE("round trip on random band-limited fields") {
    for (int d = 1; d <= 3; ++d) {
        Grid g(d, 2, d == 3 ? 8 : 16, d == 2 ? 3.0 : 2 * pi);
        auto u = random_band_limited(g, 11 + d, 5);
        auto f = to_real(u);
        auto v = to_spectral(f);
        auto f2 = to_real(v);
        for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(f.values()[i] - f2.values()[i]) < 1e-12);
    }
}

TEST_CASE("broken Hermitian symmetry is rejected") {
    Grid g(1, 1, 16);
    SpectralField u(g);
    u(0, index1(g, 2)) = Complex(1.0, 0.0);
    CHECK_THROWS_AS(to_real(u), Error);
    RealField bad(g);
    bad(0, 3) = std::nan("");
    CHECK_THROWS_AS(to_spectral(bad), Error);
}

TEST_CASE("sobolev inner products of single modes") {
    Grid g(1, 1, 32);
    auto s = to_spectral(sample(g, [](int, const double* x) { return std::sin(x[0]); }));
    auto c3 = to_spectral(sample(g, [](int, const double* x) { return std::cos(3 * x[0]); }));
    CHECK(sobolev_inner(s, s, 0.0) == Approx(pi).epsilon(1e-13));
    CHECK(sobolev_inner(s, s, 1.0) == Approx(2 * pi).epsilon(1e-13));
    CHECK(std::abs(sobolev_inner(s, c3, 2.0)) < 1e-12);
    CHECK_THROWS_AS(sobolev_inner(s, random_band_limited(Grid(1, 1, 16), 1, 3), 0.0), Error);
}

TEST_CASE("Parseval and monotonicity in s") {
    Grid g(2, 1, 16, 5.0);
    auto u = random_band_limited(g, 3, 6, 0.2);
    auto f = to_real(u);
    double quad = 0.0;
    for (double v : f.values()) quad += v * v;
    quad *= g.weight();
    CHECK(sobolev_inner(u, u, 0.0) == Approx(quad).epsilon(1e-10));
    double prev = -1.0;
    for (double s : {-1.0, -0.5, 0.0, 0.5, 1.0, 2.5}) {
        const double v = sobolev_inner(u, u, s);
        CHECK(v >= prev);
        prev = v;
    }
}

TEST_CASE("W^{l,inf} norms of sin x") {
    Grid g(1, 1, 32);
    auto s = to_spectral(sample(g, [](int, const double* x) { return std::sin(x[0]); }));
    CHECK(wk_inf_norm(s, 0) == Approx(1.0).margin(1e-8));
    CHECK(wk_inf_norm(s, 1) == Approx(2.0).margin(1e-8));
    CHECK(wk_inf_norm(SpectralField(g), 2) == 0.0);
    // off-grid maximum: sin(x + 0.3) sampled on 8 points misses its peak
    Grid coarse(1, 1, 8);
    auto shifted = to_spectral(sample(coarse, [](int, const double* x) { return std::sin(x[0] + 0.3); }));
    CHECK(wk_inf_norm(shifted, 0, true) > wk_inf_norm(shifted, 0));
}

TEST_CASE("W^{1,inf} in two dimensions sums every first derivative") {
    Grid g(2, 1, 16);
    auto u = to_spectral(sample(g, [](int, const double* x) { return std::sin(x[0]) * std::sin(2 * x[1]); }));
    // |u| + |d1 u| + |d2 u| maxima: 1 + 1 + 2
    CHECK(wk_inf_norm(u, 1) == Approx(4.0).margin(1e-10));
}

TEST_CASE("grid Sobolev embedding constant bounds the sup norm") {
    Grid g(1, 1, 32);
    const double c = sobolev_embedding_constant(g, 1.0);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto u = random_band_limited(g, seed, 15);
        CHECK(sup_norm(u, true) <= c * sobolev_norm(u, 1.0) * (1 + 1e-12));
    }
    // equality for the extremal field with coefficients (1+|k|^2)^{-sigma}
    SpectralField e(g);
    for (std::size_t k = 0; k < g.points(); ++k) e(0, k) = std::pow(1.0 + g.wavenumber_sq(k), -1.0);
    CHECK(sup_norm(e) == Approx(c * sobolev_norm(e, 1.0)).epsilon(1e-12));
}

TEST_CASE("padding preserves the field and truncation inverts it") {
    Grid g(2, 1, 8);
    auto u = random_band_limited(g, 5, 4);
    auto p = pad(u, 16);
    CHECK(l2_norm(p) == Approx(l2_norm(u)).epsilon(1e-13));
    auto back = truncate(p, 8);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(back.coeffs()[i] - u.coeffs()[i]) < 1e-14);

    // A Nyquist cosine is split across +-N/2 and keeps its point values.
    Grid g1(1, 1, 8);
    auto c4 = to_spectral(sample(g1, [](int, const double* x) { return std::cos(4 * x[0]); }));
    auto fine = to_real(pad(c4, 16));
    for (std::size_t p2 = 0; p2 < 16; p2 += 2) {
        CHECK(fine(0, p2) == Approx(std::cos(4 * fine.grid().coordinate(p2, 0))).margin(1e-13));
    }
}

TEST_CASE("dealiased products are exact for representable results") {
    Grid g(1, 1, 16);
    auto s2 = to_spectral(sample(g, [](int, const double* x) { return std::sin(2 * x[0]); }));
    auto c3 = to_spectral(sample(g, [](int, const double* x) { return std::cos(3 * x[0]); }));
    auto prod = dealiased_product({&s2, &c3});
    // sin 2x cos 3x = (sin 5x - sin x) / 2
    auto oracle = to_spectral(sample(g, [](int, const double* x) { return 0.5 * (std::sin(5 * x[0]) - std::sin(x[0])); }));
    for (std::size_t k = 0; k < g.points(); ++k) CHECK(std::abs(prod(0, k) - oracle(0, k)) < 1e-12);

    // high modes whose product aliases on the plain grid: sin 6x sin 5x has a cos 11x part
    auto s6 = to_spectral(sample(g, [](int, const double* x) { return std::sin(6 * x[0]); }));
    auto s5 = to_spectral(sample(g, [](int, const double* x) { return std::sin(5 * x[0]); }));
    auto p65 = dealiased_product({&s6, &s5});
    auto cos1 = to_spectral(sample(g, [](int, const double* x) { return 0.5 * std::cos(x[0]); }));
    for (std::size_t k = 0; k < g.points(); ++k) CHECK(std::abs(p65(0, k) - cos1(0, k)) < 1e-12);
    CHECK(dealias_size(16, 2) == 24);
    CHECK(dealias_size(64, 4) == 160);
}

TEST_CASE("derivatives and divergence") {
    Grid g(1, 1, 16);
    auto s = to_spectral(sample(g, [](int, const double* x) { return std::sin(3 * x[0]); }));
    auto ds = to_real(derivative(s, 0, 1));
    auto d3 = to_real(derivative(s, 0, 3));
    for (std::size_t p = 0; p < g.points(); ++p) {
        const double x = g.coordinate(p, 0);
        CHECK(ds(0, p) == Approx(3 * std::cos(3 * x)).margin(1e-12));
        CHECK(d3(0, p) == Approx(-27 * std::cos(3 * x)).margin(1e-11));
    }
    Grid g2(2, 2, 16);
    auto v = to_spectral(sample(g2, [](int j, const double* x) {
        return j == 0 ? std::sin(x[0]) * std::cos(x[1]) : -std::cos(x[0]) * std::sin(x[1]);
    }));
    CHECK(divergence(v).max_abs() < 1e-12);
}

TEST_CASE("snapshot round trip") {
    Grid g(2, 2, 8, 3.5);
    auto u = random_band_limited(g, 9, 3);
    std::stringstream ss;
    write_snapshot(ss, u);
    CHECK(ss.str().size() == 4 + 4 * 4 + 8 + g.size() * 8);
    CHECK(ss.str().substr(0, 4) == "PSDF");
    auto v = read_snapshot(ss);
    CHECK(v.grid() == g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        CHECK(std::abs(v.coeffs()[i] - u.coeffs()[i]) <= 1e-6 * std::max(1.0, std::abs(u.coeffs()[i])));
    }
    std::stringstream bad("PSDX....");
    CHECK_THROWS_AS(read_snapshot(bad), Error);
}
