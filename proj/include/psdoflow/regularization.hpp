#pragma once

#include "psdoflow/integrator.hpp"

#include <string>
#include <vector>

namespace psdoflow {

/// Proper regularization (g_n, h_n) of a model with transport noise:
///   g_n(X) = J_n E J_n X + J_n g(J_n X) + 1/2 sum_k J_n^3 Y_k^2 J_n X,
///   h_n e  = J_n Y_k J_n X for the transport terms, h_k(t, X) for the regular ones.
/// The regular part b is not regularized.
class RegularizedSystem {
public:
    RegularizedSystem(ModelSpec model, NoiseFamily noise, int n);

    [[nodiscard]] int n() const noexcept { return n_; }
    [[nodiscard]] const ModelSpec& model() const noexcept { return model_; }
    [[nodiscard]] const NoiseFamily& noise() const noexcept { return noise_; }
    [[nodiscard]] const OperatorHandle& mollifier_op() const noexcept { return J_; }

    [[nodiscard]] SpectralField g_n(const SpectralField& x) const;
    [[nodiscard]] SpectralField b(const SpectralField& x) const;

    struct Column {
        int mode = 0;
        SpectralField value;
    };
    /// Nonzero columns h_n(t, X) e_mode.
    [[nodiscard]] std::vector<Column> h_n(double t, const SpectralField& x) const;

private:
    ModelSpec model_;
    NoiseFamily noise_;
    int n_;
    OperatorHandle J_;
    OperatorHandle linear_;
    OperatorHandle correction_;
    std::vector<NoiseTerm> transport_;
};

[[nodiscard]] RegularizedSystem assemble_gn(const ModelSpec& model, const NoiseFamily& noise, int n);

/// One measured quantity per n, with its verdict.
struct LadderCheck {
    std::string name;
    std::vector<int> n_list;
    std::vector<double> values;  // sup over samples of the normalized quantity, per n
    double spread = 1.0;         // max / min over n (1 when vanishing)
    bool vanishing = false;      // every value <= zero_tol
    bool pass = false;
};

struct LadderReport {
    std::vector<LadderCheck> checks;
    std::vector<std::string> warnings;
    [[nodiscard]] bool pass() const;
    [[nodiscard]] const LadderCheck& at(const std::string& name) const;
};

/// Spread factor defining "uniform in n" on a finite ladder.
inline constexpr double kSpreadLimit = 1.5;
/// Values at or below this (relative to the normalization) count as exact zero.
inline constexpr double kZeroTolerance = 1e-10;

/// Growth bounds of the regularized system, for every n and sample:
///   r4_quartic: sum_k <h_n e_k, X>^2_{H^s0} / (1 + |X|^4_{H^s0}),
///   r4_quadratic: (2 <g_n(X), X>_{H^s0} + sum_k |h_n e_k|^2_{H^s0}) / (1 + |X|^2_{H^s0}).
/// A quantity passes if it vanishes, is nonpositive throughout (quadratic form only),
/// or is positive with spread below kSpreadLimit.
[[nodiscard]] LadderReport check_r4(const ModelSpec& model, const NoiseFamily& noise, const std::vector<int>& n_list,
                                    const std::vector<SpectralField>& samples, double s0);

/// The three cancellation quantities for Y_k in {a_k Pi J_k, q_k Pi K_k}:
///   lo1: sum_k <J_n Y_k X, J_n X>^2 + <J_n Y_k J_n X, X>^2, over |X|^4,
///   lo2: sum_k |<J_n Y_k^2 X, J_n X> + |J_n Y_k X|^2|, over |X|^2,
///   lo3: sum_k |<J_n^3 Y_k^2 J_n X, X> + |J_n Y_k J_n X|^2|, over |X|^2,
/// all in H^sigma. For x-independent families lo1 must vanish; otherwise every
/// quantity must vanish or have spread below kSpreadLimit. Also reports naive = sum_k |J_n Y_k X|^2 / |X|^2 for comparison
/// (reported, never judged).
[[nodiscard]] LadderReport check_lak(const NoiseFamily& noise, double sigma, const std::vector<SpectralField>& samples,
                                     const std::vector<int>& n_list);

struct GapResult {
    std::vector<double> per_path;  // sup_t |X_n - X_l|_{H^theta}
    double mean = 0.0;
};

/// Integrates the regularized systems at levels n and l on shared Brownian paths
/// (seeds seed, seed + 1, ...) and records the sup over t of their H^theta
/// distance, stopping a path when either norm exceeds `stop_norm`.
[[nodiscard]] GapResult cauchy_gap(const SimConfig& base, int n, int l, int paths, double stop_norm = 1e6);

/// Closed-form gap for a linear multiplier system (g = b = 0, E and the J_k
/// diagonal multipliers, no K or h): mode by mode
///   X_n(t) = X(0) exp(phi_n^2 E t + phi_n^2 sum_k a_k J_k W_k(t)),
/// evaluated on the same path and the same time grid as cauchy_gap.
[[nodiscard]] GapResult linear_gap_closed_form(const SimConfig& base, int n, int l, int paths);

struct GaugeResult {
    std::vector<double> per_path;  // sup_t |Xi X - Y|_{L^2}; NaN for aborted paths
    double mean = 0.0;             // over completed paths
    int aborted = 0;
    std::string message;
};

struct GaugeSetup {
    double mu = 0.05;
    double alpha = 0.5;
    int n_points = 64;
    double dt = 1e-3;
    int substeps = 1;
    double t_end = 0.5;
    int paths = 50;
    std::uint64_t seed = 0;
    double amplitude = 0.5;  // X0 = amplitude * sin x
    double exponent_cap = 40.0;
    /// Route A scheme; route B uses the matching deterministic scheme
    /// (Euler for ito_euler, Heun for strat_heun).
    Scheme scheme = Scheme::ito_euler;
};

/// Route A: dX + X dX dt = sqrt(2 mu) (-d^2)^alpha X o dW.
/// Route B: Y' = -Xi (Xi^{-1} Y d Xi^{-1} Y), Xi(t) = exp(-sqrt(2 mu) W(t) |k|^{2 alpha}),
/// integrated on the same path. Returns sup_t |Xi X - Y|_{L^2} per path.
[[nodiscard]] GaugeResult burgers_gauge_test(const GaugeSetup& setup);

}  // namespace psdoflow
