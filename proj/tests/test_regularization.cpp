#include "psdoflow/regularization.hpp"
#include "psdoflow/spectral.hpp"
#include "support.hpp"

#include <catch_amalgamated.hpp>

using namespace psdoflow;
using namespace testing_support;
using Catch::Approx;

namespace {

ModelSpec heat(const Grid& g, double nu = 1.0) {
    ModelParams p;
    p.nu = nu;
    return make_model(ModelName::linear, g, p);
}

SpectralField sine(const Grid& g) {
    return sample(g, [](int, const double* p) { return std::sin(p[0]); });
}

std::vector<SpectralField> smooth_samples(const Grid& g, int count, double decay = 1.0) {
    std::vector<SpectralField> out;
    for (int s = 0; s < count; ++s) out.push_back(random_band_limited(g, s, g.n() / 2 - 1, decay));
    return out;
}

NoiseFamily variable_transport(const Grid& g) {
    XSymbol sym{[](std::span<const double> x, std::span<const double> k) {
                    return Complex(0.0, k[0] * (1.0 + 0.5 * std::cos(x[0])));
                },
                1.0, "K"};
    NoiseFamily fam;
    fam.q = {1.0};
    fam.K = {quantize(sym, g)};
    return fam;
}

NoiseFamily transport_dx(double a) {
    NoiseFamily fam;
    fam.a = {a};
    fam.J = {derivative_operator(0, 1)};
    return fam;
}

SimConfig deterministic_burgers(const Grid& g) {
    SimConfig cfg;
    cfg.model = make_model(ModelName::burgers, g);
    cfg.initial = sine(g);
    cfg.dt = 1e-3;
    cfg.t_end = 0.5;
    cfg.scheme = Scheme::strat_heun;
    return cfg;
}

}  // namespace

TEST_CASE("g_n at a level above the box is the unregularized drift") {
    Grid g(1, 1, 32);
    ModelParams p;
    p.nu = 0.1;
    const auto model = make_model(ModelName::burgers, g, p);
    const auto fam = validated(transport_dx(0.3), g);
    const auto x = random_band_limited(g, 3, 15, 0.3);

    SimConfig cfg;
    cfg.model = model;
    cfg.noise = fam;
    cfg.initial = x;
    const Integrator plain(cfg);
    cfg.mollify_n = 1000;
    const Integrator big(cfg);
    const RegularizedSystem sys(model, fam, 1000);

    SpectralField gn = sys.g_n(x);
    gn += sys.b(x);
    CHECK(max_diff(gn, plain.drift(0.0, x, true)) == 0.0);
    CHECK(max_diff(big.drift(0.0, x, true), plain.drift(0.0, x, true)) == 0.0);
}

TEST_CASE("mollified heat drift on one mode") {
    Grid g(1, 1, 32);
    for (int n : {1, 2, 4}) {
        const RegularizedSystem sys(heat(g), NoiseFamily{}, n);
        const double phi = mollifier_profile(1.0 / n);
        auto want = sine(g);
        want *= -phi * phi;
        CHECK(max_diff(sys.g_n(sine(g)), want) < 1e-14);
    }
}

TEST_CASE("g_n of a field above the cutoff has no nonlinear part") {
    Grid g(1, 1, 64);
    const RegularizedSystem sys(make_model(ModelName::burgers, g), NoiseFamily{}, 4);
    SpectralField x(g);
    x(0, index1(g, 20)) = 1.0;
    x(0, index1(g, -20)) = 1.0;
    CHECK(max_diff(sys.g_n(x), SpectralField(g)) == 0.0);
}

TEST_CASE("h_n columns follow the sandwich") {
    Grid g(1, 1, 32);
    const RegularizedSystem sys(heat(g), transport_dx(0.5), 4);
    const auto cols = sys.h_n(0.0, sine(g));
    REQUIRE(cols.size() == 1);
    CHECK(cols[0].mode == 0);
    const double phi = mollifier_profile(0.25);
    auto want = sample(g, [](int, const double* p) { return std::cos(p[0]); });
    want *= 0.5 * phi * phi;
    CHECK(max_diff(cols[0].value, want) < 1e-14);
}

TEST_CASE("r4 vanishes for skew x-independent noise") {
    Grid g(1, 1, 64);
    const auto rep = check_r4(make_model(ModelName::linear, g), transport_dx(1.0), {2, 4, 8, 16}, smooth_samples(g, 4),
                              2.0);
    CHECK(rep.at("r4_quartic").vanishing);
    CHECK(rep.pass());
}

TEST_CASE("r4 quadratic form is nonpositive for the heat equation") {
    Grid g(1, 1, 64);
    const auto rep = check_r4(heat(g), NoiseFamily{}, {2, 4, 8, 16}, smooth_samples(g, 4, 0.2), 2.0);
    const auto& q = rep.at("r4_quadratic");
    for (double v : q.values) CHECK(v <= 0.0);
    CHECK(q.pass);
}

TEST_CASE("r4 ratio of burgers is n-stable on smooth samples") {
    Grid g(1, 1, 64);
    const auto rep = check_r4(make_model(ModelName::burgers, g), NoiseFamily{}, {2, 4, 8, 16}, smooth_samples(g, 8), 2.0);
    const auto& q = rep.at("r4_quadratic");
    CHECK(q.pass);
    CHECK(q.spread < kSpreadLimit);
}

TEST_CASE("lak: variable transport is n-stable") {
    Grid g(1, 1, 64);
    const auto rep = check_lak(variable_transport(g), 1.0, smooth_samples(g, 8), {4, 8, 16});
    for (const char* name : {"lo1", "lo2", "lo3"}) {
        INFO(name);
        CHECK(rep.at(name).pass);
        CHECK(rep.at(name).spread < kSpreadLimit);
    }
}

TEST_CASE("lak: x-independent skew family cancels exactly") {
    Grid g(1, 1, 64);
    const auto rep = check_lak(transport_dx(1.0), 1.0, smooth_samples(g, 8), {4, 8, 16});
    CHECK(rep.at("lo1").vanishing);
    for (double v : rep.at("lo1").values) CHECK(v <= kZeroTolerance);
    CHECK(rep.pass());
}

TEST_CASE("lak: self-adjoint family fails lo1") {
    Grid g(1, 1, 64);
    NoiseFamily fam;
    fam.a = {1.0};
    fam.J = {fractional_laplacian(1.0)};
    const auto rep = check_lak(fam, 1.0, smooth_samples(g, 8), {4, 8, 16});
    CHECK_FALSE(rep.at("lo1").pass);
    CHECK_FALSE(rep.pass());
    CHECK_FALSE(rep.warnings.empty());
}

TEST_CASE("lak: the single terms grow while the combination stays put") {
    Grid g(1, 1, 64);
    std::vector<SpectralField> samples;
    for (int k = 1; k <= 31; k += 2) {
        SpectralField u(g);
        u(0, index1(g, k)) = 1.0;
        u(0, index1(g, -k)) = 1.0;
        samples.push_back(u);
    }
    const auto rep = check_lak(variable_transport(g), 0.0, samples, {4, 8, 16});
    const auto& naive = rep.at("naive").values;
    CHECK(naive.back() / naive.front() > 8.0);
    const auto& lo2 = rep.at("lo2").values;
    CHECK(lo2.back() / lo2.front() < 2.0);
}

TEST_CASE("lak: no noise gives zero everywhere") {
    Grid g(1, 1, 32);
    const auto rep = check_lak(NoiseFamily{}, 0.0, smooth_samples(g, 2), {4, 8});
    for (const auto& c : rep.checks) CHECK(c.vanishing);
}

TEST_CASE("cauchy gap of a level with itself is zero") {
    Grid g(1, 1, 32);
    auto cfg = deterministic_burgers(g);
    cfg.noise = transport_dx(0.3);
    cfg.t_end = 0.1;
    const auto r = cauchy_gap(cfg, 4, 4, 3);
    for (double v : r.per_path) CHECK(v == 0.0);
}

TEST_CASE("deterministic burgers gap shrinks in n") {
    Grid g(1, 1, 64);
    const auto cfg = deterministic_burgers(g);
    double prev = std::numeric_limits<double>::infinity();
    for (int n : {4, 8, 16}) {
        const double gap = cauchy_gap(cfg, n, 32, 1).mean;
        CHECK(gap < prev);
        CHECK(gap > 0.0);
        prev = gap;
    }
}

TEST_CASE("linear noise gap agrees with the closed form") {
    Grid g(1, 1, 64);
    SimConfig cfg;
    cfg.model = heat(g, 0.1);
    cfg.noise = transport_dx(0.5);
    cfg.initial = random_band_limited(g, 1, 31, 0.2);
    cfg.dt = 1e-3;
    cfg.t_end = 0.5;
    cfg.scheme = Scheme::strat_heun;
    for (int n : {4, 8, 16}) {
        const double num = cauchy_gap(cfg, n, 32, 10).mean;
        const double exact = linear_gap_closed_form(cfg, n, 32, 10).mean;
        INFO("n = " << n << " numeric " << num << " closed form " << exact);
        CHECK(num < 2.0 * exact);
        CHECK(exact < 2.0 * num);
    }
}

TEST_CASE("closed form rejects nonlinear models") {
    Grid g(1, 1, 16);
    auto cfg = deterministic_burgers(g);
    CHECK_THROWS_AS(linear_gap_closed_form(cfg, 4, 8, 1), Error);
}

TEST_CASE("gauge routes coincide without noise") {
    for (auto scheme : {Scheme::ito_euler, Scheme::strat_heun}) {
        GaugeSetup s;
        s.mu = 0.0;
        s.dt = 1e-4;
        s.paths = 2;
        s.scheme = scheme;
        const auto r = burgers_gauge_test(s);
        CHECK(r.aborted == 0);
        CHECK(r.mean < 1e-6);
    }
}

TEST_CASE("gauge routes vanish on zero data") {
    GaugeSetup s;
    s.amplitude = 0.0;
    s.paths = 3;
    s.t_end = 0.1;
    const auto r = burgers_gauge_test(s);
    for (double v : r.per_path) CHECK(v == 0.0);
}

TEST_CASE("gauge discrepancy halves like sqrt(dt) under euler") {
    GaugeSetup s;
    s.paths = 20;
    s.t_end = 0.25;
    double e[3];
    for (int i = 0; i < 3; ++i) {
        s.dt = 1e-3 / (1 << i);
        s.substeps = 4 >> i;
        e[i] = burgers_gauge_test(s).mean;
    }
    const double order = std::log2(e[0] / e[2]) / 2.0;
    INFO("order " << order);
    CHECK(order > 0.3);
    CHECK(order < 0.75);
}

TEST_CASE("gauge guard aborts paths with a diagnostic") {
    GaugeSetup s;
    s.exponent_cap = 1e-3;
    s.paths = 4;
    s.t_end = 0.1;
    const auto r = burgers_gauge_test(s);
    CHECK(r.aborted == 4);
    CHECK_FALSE(r.message.empty());
}

TEST_CASE("gauge rejects alpha outside (0, 1/2]") {
    GaugeSetup s;
    s.alpha = 0.75;
    CHECK_THROWS_AS(burgers_gauge_test(s), Error);
}
