#include "app.hpp"

#include "psdoflow/spectral.hpp"

#include <algorithm>
#include <cmath>

namespace psdoflow::app {

bool SuiteReport::pass() const {
    return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

json SuiteReport::to_json() const {
    json list = json::array();
    for (const auto& c : checks) {
        list.push_back({{"name", c.name}, {"quantities", c.quantities}, {"thresholds", c.thresholds}, {"pass", c.pass}});
    }
    return {{"suite", suite}, {"pass", pass()}, {"checks", list}};
}

std::vector<SpectralField> smooth_samples(const Grid& g, int count) {
    std::vector<SpectralField> out;
    for (int s = 0; s < count; ++s) out.push_back(random_band_limited(g, s, g.n() / 2 - 1, 1.0));
    return out;
}

OperatorHandle variable_transport(const Grid& g, int axis, double amp, int mode) {
    XSymbol sym{[axis, amp, mode](std::span<const double> x, std::span<const double> k) {
                    return Complex(0.0, k[axis] * (1.0 + amp * std::cos(mode * x[axis])));
                },
                1.0, "variable_transport"};
    return quantize(sym, g);
}

namespace {

double rel_diff(const SpectralField& a, const SpectralField& b) {
    SpectralField d = a;
    d -= b;
    return l2_norm(d) / std::max(l2_norm(b), 1e-300);
}

Check threshold_check(const std::string& name, double value, double tol, const std::string& label = "error") {
    Check c;
    c.name = name;
    c.quantities[label] = value;
    c.thresholds[label] = tol;
    c.pass = std::isfinite(value) && value <= tol;
    return c;
}

json ladder_json(const LadderReport& rep) {
    json out = json::object();
    for (const auto& c : rep.checks) {
        out[c.name] = {{"values", c.values}, {"spread", c.spread}, {"vanishing", c.vanishing}, {"pass", c.pass}};
    }
    if (!rep.warnings.empty()) out["warnings"] = rep.warnings;
    return out;
}

Check ladder_check(const std::string& name, const LadderReport& rep) {
    Check c;
    c.name = name;
    c.quantities = ladder_json(rep);
    c.thresholds = {{"spread", kSpreadLimit}, {"zero", kZeroTolerance}};
    c.pass = rep.pass();
    return c;
}

const std::vector<int> kLakLadder = {4, 8, 16};

}  // namespace

SuiteReport verify_ops() {
    SuiteReport rep;
    rep.suite = "ops";
    constexpr double tol = 1e-12;

    for (int d : {2, 3}) {
        const Grid g(d, d, d == 2 ? 32 : 16);
        const auto u = random_band_limited(g, 11, g.n() / 2 - 1, 0.2);
        const auto v = random_band_limited(g, 12, g.n() / 2 - 1, 0.2);
        const auto P = leray_projection(g);
        const auto pu = P.apply(u);
        const std::string tag = "leray_d" + std::to_string(d);
        rep.checks.push_back(threshold_check(tag + "_idempotent", rel_diff(P.apply(pu), pu), tol));
        const double lhs = l2_inner(pu, v), rhs = l2_inner(u, P.apply(v));
        rep.checks.push_back(threshold_check(tag + "_self_adjoint", std::abs(lhs - rhs) / (l2_norm(u) * l2_norm(v)), tol));
        rep.checks.push_back(threshold_check(tag + "_divergence_free", l2_norm(divergence(pu)) / l2_norm(u), tol));
    }
    {
        const Grid g(2, 1, 32);
        const auto u = random_band_limited(g, 13, 15, 0.2);
        const auto v = random_band_limited(g, 14, 15, 0.2);
        const auto P = zero_average_projection(g);
        const auto pu = P.apply(u);
        rep.checks.push_back(threshold_check("zero_mean_idempotent", rel_diff(P.apply(pu), pu), tol));
        const double lhs = l2_inner(pu, v), rhs = l2_inner(u, P.apply(v));
        rep.checks.push_back(
            threshold_check("zero_mean_self_adjoint", std::abs(lhs - rhs) / (l2_norm(u) * l2_norm(v)), tol));
        rep.checks.push_back(threshold_check("zero_mean_output", std::abs(pu.mean(0)), tol));
    }
    {
        const Grid g(1, 1, 64);
        const auto u = random_band_limited(g, 15, 31, 0.1);
        const std::vector<OperatorHandle> ops = {fractional_laplacian(1.5), derivative_operator(0, 1),
                                                 bessel_potential(-2.0), mollifier(8, g), derivative_operator(0, 3)};
        double worst = 0.0;
        for (std::size_t i = 0; i < ops.size(); ++i) {
            for (std::size_t j = i + 1; j < ops.size(); ++j) {
                const auto ab = ops[i].apply(ops[j].apply(u));
                const auto ba = ops[j].apply(ops[i].apply(u));
                worst = std::max(worst, rel_diff(ab, ba));
            }
        }
        rep.checks.push_back(threshold_check("multiplier_commutation", worst, tol));
    }
    {
        const Grid g(2, 1, 32);
        double growth = 0.0, peak = 0.0;
        for (int n : {1, 2, 4, 8, 16}) {
            const auto J = mollifier(n, g);
            for (const auto& v : diagonal_table(J, g)) peak = std::max(peak, std::abs(v));
            for (double s : {-1.0, 0.0, 1.0, 2.5}) {
                for (int seed = 0; seed < 3; ++seed) {
                    const auto u = random_band_limited(g, 20 + seed, 15, 0.1);
                    growth = std::max(growth, sobolev_norm(J.apply(u), s) / sobolev_norm(u, s) - 1.0);
                }
            }
        }
        Check c = threshold_check("mollifier_norm_bound", std::max(growth, 0.0), tol, "excess");
        c.quantities["max_symbol"] = peak;
        c.pass = c.pass && std::abs(peak - 1.0) <= tol;
        rep.checks.push_back(c);
    }
    {
        const Grid g(1, 1, 64);
        const auto K = variable_transport(g, 0, 0.5, 1);
        const auto u = random_band_limited(g, 31, 31, 0.2);
        const auto v = random_band_limited(g, 32, 31, 0.2);
        const double lhs = l2_inner(K.apply(u), v), rhs = l2_inner(u, K.apply_adjoint(v));
        const double scale = l2_norm(K.apply(u)) * l2_norm(v);
        rep.checks.push_back(threshold_check("quantized_adjoint_1d", std::abs(lhs - rhs) / scale, 1e-10));
        const Grid g2(2, 1, 16);
        XSymbol sym{[](std::span<const double> x, std::span<const double> k) {
                        return Complex(0.0, k[0] * (1.0 + 0.3 * std::sin(x[1])) + k[1] * 0.2 * std::cos(x[0]));
                    },
                    1.0, "xy"};
        const auto K2 = quantize(sym, g2);
        const auto a = random_band_limited(g2, 33, 7, 0.2);
        const auto b = random_band_limited(g2, 34, 7, 0.2);
        const double l2 = l2_inner(K2.apply(a), b), r2 = l2_inner(a, K2.apply_adjoint(b));
        rep.checks.push_back(threshold_check("quantized_adjoint_2d",
                                             std::abs(l2 - r2) / (l2_norm(K2.apply(a)) * l2_norm(b)), 1e-10));
    }
    return rep;
}

SuiteReport verify_lak(const std::optional<std::pair<NoiseFamily, Grid>>& custom) {
    SuiteReport rep;
    rep.suite = "lak";
    if (custom) {
        const auto& [fam, g] = *custom;
        rep.checks.push_back(ladder_check("lak_custom", check_lak(fam, 1.0, smooth_samples(g, 8), kLakLadder)));
        return rep;
    }
    const Grid g(1, 1, 64);
    NoiseFamily k_fam;
    k_fam.q = {1.0};
    k_fam.K = {variable_transport(g, 0, 0.5, 1)};
    rep.checks.push_back(ladder_check("lak_variable_transport", check_lak(k_fam, 1.0, smooth_samples(g, 8), kLakLadder)));

    NoiseFamily skew;
    skew.a = {1.0};
    skew.J = {derivative_operator(0, 1)};
    const auto srep = check_lak(skew, 1.0, smooth_samples(g, 8), kLakLadder);
    Check c = ladder_check("lak_skew_exact_zero", srep);
    c.pass = srep.pass() && srep.at("lo1").vanishing;
    rep.checks.push_back(c);
    return rep;
}

SuiteReport verify_r4() {
    SuiteReport rep;
    rep.suite = "r4";
    const Grid g(1, 1, 64);
    const std::vector<int> ladder = {2, 4, 8, 16};
    const auto samples = smooth_samples(g, 8);

    NoiseFamily skew;
    skew.a = {1.0};
    skew.J = {derivative_operator(0, 1)};
    const auto r1 = check_r4(make_model(ModelName::linear, g), skew, ladder, samples, 2.0);
    Check c1 = ladder_check("r4_skew_vanishing", r1);
    c1.pass = r1.pass() && r1.at("r4_quartic").vanishing;
    rep.checks.push_back(c1);

    ModelParams heat;
    heat.nu = 1.0;
    const auto r2 = check_r4(make_model(ModelName::linear, g, heat), NoiseFamily{}, ladder, samples, 2.0);
    Check c2 = ladder_check("r4_heat_nonpositive", r2);
    const auto& q = r2.at("r4_quadratic").values;
    c2.pass = r2.pass() && std::all_of(q.begin(), q.end(), [](double v) { return v <= 0.0; });
    rep.checks.push_back(c2);

    const auto r3 = check_r4(make_model(ModelName::burgers, g), NoiseFamily{}, ladder, samples, 2.0);
    rep.checks.push_back(ladder_check("r4_burgers_n_stable", r3));
    return rep;
}

SuiteReport verify_gauge() {
    SuiteReport rep;
    rep.suite = "gauge";
    {
        GaugeSetup s;
        s.mu = 0.0;
        s.dt = 1e-4;
        s.paths = 2;
        const auto r = burgers_gauge_test(s);
        Check c = threshold_check("gauge_noise_free", r.mean, 1e-6, "discrepancy");
        c.pass = c.pass && r.aborted == 0;
        rep.checks.push_back(c);
    }
    {
        GaugeSetup s;  // mu = 0.05, alpha = 1/2, N = 64, 50 paths
        std::vector<double> errs;
        int aborted = 0;
        for (int i = 0; i < 3; ++i) {
            s.dt = 1e-3 / (1 << i);
            s.substeps = 4 >> i;
            const auto r = burgers_gauge_test(s);
            errs.push_back(r.mean);
            aborted += r.aborted;
        }
        const double order = std::log2(errs[0] / errs[2]) / 2.0;
        Check c;
        c.name = "gauge_order";
        c.quantities = {{"dt", {1e-3, 5e-4, 2.5e-4}}, {"mean_discrepancy", errs}, {"order", order}, {"aborted", aborted}};
        c.thresholds = {{"order_min", 0.35}, {"order_max", 0.7}};
        c.pass = aborted == 0 && order >= 0.35 && order <= 0.7;
        rep.checks.push_back(c);
    }
    return rep;
}

SuiteReport verify_suite(const std::string& suite, const std::optional<std::pair<NoiseFamily, Grid>>& custom) {
    if (suite == "ops") return verify_ops();
    if (suite == "lak") return verify_lak(custom);
    if (suite == "r4") return verify_r4();
    if (suite == "gauge") return verify_gauge();
    if (suite == "all") {
        SuiteReport all;
        all.suite = "all";
        for (const auto& part : {verify_ops(), verify_lak(), verify_r4(), verify_gauge()}) {
            for (auto c : part.checks) {
                c.name = part.suite + "." + c.name;
                all.checks.push_back(std::move(c));
            }
        }
        return all;
    }
    throw Error("verify: unknown suite '" + suite + "'");
}

}  // namespace psdoflow::app
