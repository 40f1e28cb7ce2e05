#pragma once

#include "psdoflow/psdo.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace psdoflow {

/// State-dependent regular noise coefficient h_k(t, X).
using RegularMap = std::function<SpectralField(double t, const SpectralField& x)>;

struct ValidationReport;

/// Transport noise ({a_k, J_k}, {q_k, K_k}, {h_k}) with projection Pi.
///
/// Mode numbering for the Brownian path: the k-th term (0-based) of the three
/// families uses modes 3k, 3k+1, 3k+2 respectively, so adding terms to one
/// family never changes the increments seen by another.
struct NoiseFamily {
    std::vector<double> a;
    std::vector<OperatorHandle> J;  // x-independent diagonal multipliers
    std::vector<double> q;
    std::vector<OperatorHandle> K;  // any kind, possibly x-dependent
    std::vector<RegularMap> h;
    OperatorHandle projection = identity_operator();
    double r1 = 1.0;
    double r2 = 1.0;
    /// Decay exponent gamma of the amplitude profile a_k ~ k^{-gamma}, recorded
    /// in manifests; finite K makes the l2 sums trivially finite.
    double decay_exponent = 1.0;
    /// Set by validated(); ito_correction refuses families without it.
    std::shared_ptr<const ValidationReport> report;

    [[nodiscard]] int size() const noexcept;  // max(|a|, |q|, |h|)
    [[nodiscard]] bool empty() const noexcept;
};

struct DefectEstimate {
    int k = 0;
    char family = 'J';        // 'J' or 'K'
    double defect_full = 0.0; // operator size of J* + J on the full box
    double defect_half = 0.0; // ... on the box of half radius
    double order = 0.0;       // log2(defect_full / defect_half); -inf when zero
    bool ok = false;          // order <= 0 up to sampling tolerance
};

struct ValidationReport {
    Grid grid{1, 1, 4};
    bool orthogonality_ok = true;     // a_k q_k = 0
    bool structure_ok = true;         // J_k diagonal multipliers, orders within r1/r2
    bool skew_ok = true;              // every defect has order <= 0
    bool projection_ok = true;        // scalar multiplier or idempotent on samples
    double projection_residual = 0.0;
    std::vector<DefectEstimate> defects;
    std::vector<std::string> errors;    // hard failures
    std::vector<std::string> warnings;  // soft failures (skew defect order)

    /// No hard failures. Skew-defect violations are reported as warnings only.
    [[nodiscard]] bool usable() const noexcept { return errors.empty(); }
    [[nodiscard]] bool passed() const noexcept {
        return orthogonality_ok && structure_ok && skew_ok && projection_ok;
    }
};

/// Check the family against the structural assumptions on `grid`:
/// a_k q_k = 0, J_k x-independent and diagonal, declared orders, the order of
/// the skew defects J* + J and K* + K (<= 0 expected), and compatibility of
/// the projection.
[[nodiscard]] ValidationReport validate_noise(const NoiseFamily& fam, const Grid& grid);
/// Copy of `fam` carrying its validation report. Throws when the report has
/// hard failures (a_k q_k != 0, malformed operators).
[[nodiscard]] NoiseFamily validated(NoiseFamily fam, const Grid& grid);

/// Noise operators Y_k = a_k Pi J_k and q_k Pi K_k, in mode order
/// (entries for zero amplitudes are zero operators).
struct NoiseTerm {
    int mode = 0;
    OperatorHandle op;
};
[[nodiscard]] std::vector<NoiseTerm> noise_operators(const NoiseFamily& fam);

/// 1/2 sum_k [(a_k Pi J_k)^2 + (q_k Pi K_k)^2]. Requires a validated family.
[[nodiscard]] OperatorHandle ito_correction(const NoiseFamily& fam);

/// Brownian increments derived from (seed, mode, fine step) by a counter-based
/// generator. One step of size dt is the sum of `substeps` fine increments of
/// size dt / substeps, so paths with dt and dt/2 (substeps 2 and 1) are coupled.
class BrownianPath {
public:
    BrownianPath(std::uint64_t seed, double dt, int substeps = 1);

    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
    [[nodiscard]] double dt() const noexcept { return dt_; }
    [[nodiscard]] int substeps() const noexcept { return substeps_; }

    [[nodiscard]] double increment(int mode, std::int64_t step) const;
    /// Increments of modes [first, first + count) at `step`.
    [[nodiscard]] std::vector<double> sample_increments(std::int64_t step, int first, int count) const;

private:
    std::uint64_t seed_;
    double dt_;
    int substeps_;
    double fine_scale_;
};

/// a_k = a0 * k^{-gamma}, k = 1..count.
[[nodiscard]] std::vector<double> power_profile(int count, double a0, double gamma);
/// h(t, X) = c X
[[nodiscard]] RegularMap linear_regular_noise(double c);
/// h(t, X) = c * clip * tanh(X / clip) pointwise (Lipschitz, bounded), Nyquist cleared.
[[nodiscard]] RegularMap clipped_regular_noise(double c, double clip);

/// Dense coefficient-space matrix of a scalar operator on `mesh` (one component),
/// built from the images of the unit vectors. For small meshes only.
[[nodiscard]] Eigen::MatrixXcd dense_matrix(const OperatorHandle& op, const Grid& mesh);

}  // namespace psdoflow
