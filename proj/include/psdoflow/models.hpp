#pragma once

#include "psdoflow/psdo.hpp"

#include <array>
#include <cstdint>
#include <string>

namespace psdoflow {

enum class ModelName { linear, burgers, ch, mch, kdv, mhd, ad, sqg };

[[nodiscard]] std::string to_string(ModelName name);
[[nodiscard]] ModelName parse_model_name(const std::string& name);

struct ModelParams {
    // scalar models: E = -nu Lambda^{2 beta}
    double nu = 0.0;
    double beta = 1.0;
    // MHD: E = -diag(mu1 Lambda^{2 alpha1}, mu2 Lambda^{2 alpha2})
    double mu1 = 0.0;
    double mu2 = 0.0;
    double alpha1 = 1.0;
    double alpha2 = 1.0;
    // CH: coefficients of X, X^2, X^3, X^4 and of |dX|^2
    std::array<double, 4> a_poly{0.0, 0.0, 0.0, 0.0};
    double a_grad = 0.0;
    // AD: -gamma div(X grad(Phi * X)); Phi given by its Fourier symbol (default Bessel)
    double gamma = 1.0;
    OperatorHandle phi = bessel_potential(-2.0);
};

/// Drift triple and projection of one concrete equation on one grid.
struct ModelSpec {
    ModelName name = ModelName::linear;
    Grid grid{1, 1, 4};
    ModelParams params;
    OperatorHandle dissipation;  // E, negative semi-definite
    OperatorHandle dispersion;   // skew linear part kept out of g (KdV: -d^3)
    OperatorHandle projection;   // Pi
    int blowup_l = 1;            // W^{l,inf} index of the blow-up functional
};

/// Validates dimensions and parameters and assembles the operators.
[[nodiscard]] ModelSpec make_model(ModelName name, const Grid& grid, ModelParams params = {});

/// Regular part b and singular part g of the nonlinear drift.
struct DriftParts {
    SpectralField b;
    SpectralField g;
};

/// -X dX = -1/2 d(X^2), dealiased. d = m = 1.
[[nodiscard]] SpectralField drift_burgers(const SpectralField& x);
/// g = -X dX, b = -d D^{-2}(sum_i a_i X^i + a |dX|^2) with powers on a 3x mesh.
[[nodiscard]] DriftParts drift_ch(const SpectralField& x, const ModelParams& params);
/// g = -X dX, b = -dD^{-4}(X^2) - 2 dD^{-4}[(dX)^2] + 7/2 dD^{-4}[(d^2X)^2] + 3 dD^{-4}d[X d^3X].
[[nodiscard]] DriftParts drift_mch(const SpectralField& x);
/// -X dX - d^3 X
[[nodiscard]] SpectralField drift_kdv(const SpectralField& x);
/// (Pi[(M.grad)M - (V.grad)V], (M.grad)V - (V.grad)M) for X = (V, M), Pi = Leray with zero mean.
/// Throws when the input divergence exceeds 1e-8 relative to the field.
[[nodiscard]] SpectralField drift_mhd(const SpectralField& x);
/// -gamma div(X B X) with B = grad(Phi *), B applied as the multiplier i k Phi(k).
[[nodiscard]] SpectralField drift_ad(const SpectralField& x, const OperatorHandle& phi, double gamma);
/// -Pi_0 [(R_perp X) . grad X]. d = 2, m = 1, zero mean.
[[nodiscard]] SpectralField drift_sqg(const SpectralField& x);

/// Nonlinear parts for any model (zero for the linear model; KdV dispersion excluded).
[[nodiscard]] DriftParts nonlinear_drift(const ModelSpec& model, const SpectralField& x);
/// E X + dispersion X
[[nodiscard]] SpectralField linear_drift(const ModelSpec& model, const SpectralField& x);
/// The model's dissipation operator E.
[[nodiscard]] const OperatorHandle& dissipation(const ModelSpec& model);

/// Named initial data: "zero", "sine" (amplitude * sin(mode x_1)), "cosine",
/// "taylor-green", "ch-smooth", "sqg-shear", "random" (seeded band-limited).
struct InitialData {
    std::string preset = "sine";
    double amplitude = 1.0;
    int mode = 1;
    std::uint64_t seed = 0;
    int max_freq = 4;
    double decay = 0.5;
};
[[nodiscard]] SpectralField initial_data(const InitialData& spec, const ModelSpec& model);

}  // namespace psdoflow
