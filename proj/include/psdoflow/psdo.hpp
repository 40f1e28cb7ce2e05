#pragma once

#include "psdoflow/field.hpp"

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace psdoflow {

/// Symbol of an x-independent Fourier multiplier.
///
/// A scalar multiplier (`in == out == 0`) acts identically on every component
/// of its input. A matrix multiplier maps `in` components to `out` components;
/// `eval` then writes the out x in matrix row-major.
///
/// Symbols are evaluated at physical wavenumbers. On a Nyquist plane the table
/// entry is the average over the +-N/2 images, so an odd symbol (a first
/// derivative, an off-diagonal Leray entry) contributes zero there.
struct Multiplier {
    int in = 0;
    int out = 0;
    std::function<void(std::span<const double> k, Complex* values)> eval;

    [[nodiscard]] bool is_scalar() const noexcept { return in == 0; }
    [[nodiscard]] int entries() const noexcept { return is_scalar() ? 1 : in * out; }
};

/// Symbol of an x-dependent operator: value at grid point x and wavenumber k.
/// Acts componentwise (the same scalar operator on every component).
struct XSymbol {
    std::function<Complex(std::span<const double> x, std::span<const double> k)> eval;
    double order = 0.0;
    std::string label = "xsymbol";
};

/// Uniform handle over linear operators on spectral fields.
///
/// Multipliers are grid independent and tabulated lazily per mesh. Quantized
/// operators carry a dense N^d x N^d matrix in coefficient space, bound to the
/// mesh they were built on, applied to each component. Composites wrap
/// arbitrary apply/adjoint callables.
class OperatorHandle {
public:
    enum class Kind { multiplier, quantized_dense, composite };
    using ApplyFn = std::function<SpectralField(const SpectralField&)>;

    OperatorHandle();  // zero operator (scalar multiplier 0)

    static OperatorHandle from_multiplier(Multiplier m, double order, std::string label);
    static OperatorHandle from_dense(Grid mesh, Eigen::MatrixXcd matrix, double order,
                                     std::string label);
    /// in/out component counts of 0 mean "any, preserved".
    static OperatorHandle from_functions(ApplyFn apply, ApplyFn adjoint, double order, int in,
                                         int out, std::string label);

    [[nodiscard]] Kind kind() const noexcept { return kind_; }
    [[nodiscard]] double order() const noexcept { return order_; }
    [[nodiscard]] const std::string& label() const noexcept { return label_; }
    [[nodiscard]] int in_components() const noexcept { return in_; }
    [[nodiscard]] int out_components() const noexcept { return out_; }
    /// True for the scalar multiplier 0 created by the default constructor or zero().
    [[nodiscard]] bool is_zero() const noexcept { return zero_; }

    [[nodiscard]] SpectralField apply(const SpectralField& u) const;
    [[nodiscard]] SpectralField apply_adjoint(const SpectralField& u) const;
    [[nodiscard]] OperatorHandle adjoint() const;

    /// Multiplier symbol, or nullptr for other kinds.
    [[nodiscard]] const Multiplier* multiplier() const noexcept;
    /// Dense matrix and the mesh it acts on, or nullptr for other kinds.
    [[nodiscard]] const Eigen::MatrixXcd* dense() const noexcept;
    [[nodiscard]] const Grid* dense_mesh() const noexcept;
    /// Tabulated symbol on `mesh`: points() * entries() values, frequency-major.
    /// Only valid for multipliers. Cached and thread safe.
    [[nodiscard]] std::shared_ptr<const std::vector<Complex>> table(const Grid& mesh) const;

private:
    struct TableCache;

    Kind kind_ = Kind::multiplier;
    double order_ = 0.0;
    std::string label_;
    int in_ = 0;
    int out_ = 0;
    bool zero_ = false;
    std::shared_ptr<const Multiplier> mult_;
    std::shared_ptr<TableCache> cache_;
    std::shared_ptr<const Eigen::MatrixXcd> dense_;
    std::shared_ptr<const Grid> mesh_;
    ApplyFn apply_fn_;
    ApplyFn adjoint_fn_;
};

// ---------------------------------------------------------------------------
// Algebra. Multipliers fold into multipliers and dense operators on a common
// mesh fold into dense operators; anything else becomes a composite.

[[nodiscard]] OperatorHandle compose(const OperatorHandle& a, const OperatorHandle& b);
[[nodiscard]] OperatorHandle add(const OperatorHandle& a, const OperatorHandle& b);
[[nodiscard]] OperatorHandle scale(Complex factor, const OperatorHandle& a);
[[nodiscard]] OperatorHandle zero_operator();
[[nodiscard]] OperatorHandle identity_operator();

// ---------------------------------------------------------------------------
// Multipliers

/// (1+|k|^2)^{s/2}
[[nodiscard]] OperatorHandle bessel_potential(double s);
/// |k|^s with the k = 0 entry set to 0 for every s.
[[nodiscard]] OperatorHandle fractional_laplacian(double s);
/// d^order / dx_axis^order, symbol (i k_axis)^order.
[[nodiscard]] OperatorHandle derivative_operator(int axis, int order = 1);
/// delta_ij - k_i k_j / |k|^2 on a d-component field (identity block at k = 0,
/// or zero there when `zero_average` is set). Requires m = d >= 2.
[[nodiscard]] OperatorHandle leray_projection(const Grid& grid, bool zero_average = false);
/// Block-diagonal Leray projection on `blocks` consecutive d-vectors.
[[nodiscard]] OperatorHandle leray_blocks(int dim, int blocks, bool zero_average);
/// 1 for k != 0, 0 at k = 0.
[[nodiscard]] OperatorHandle zero_average_projection(const Grid& grid);
/// Scalar -> 2-vector multiplier (-i k2/|k|, i k1/|k|), zero at k = 0. Requires d = 2, m = 1.
[[nodiscard]] OperatorHandle riesz_perp(const Grid& grid);
/// Friedrichs mollifier J_n with symbol phi(|k|/n).
[[nodiscard]] OperatorHandle mollifier(int n, const Grid& grid);

/// Cutoff profile: 1 for |y| <= 1, 0 for |y| >= 2, quintic smoothstep between.
[[nodiscard]] double mollifier_profile(double y) noexcept;

// ---------------------------------------------------------------------------
// x-dependent symbols

/// Dense quantization of `sym` on `grid` (componentwise): the matrix of
/// f -> P [OP(p) f] on the frequency box, where P keeps the box frequencies
/// (Nyquist excluded) of the exact output. Size guard: N <= 64 for d = 1,
/// N <= 32 for d = 2, no 3-d support.
[[nodiscard]] OperatorHandle quantize(const XSymbol& sym, const Grid& grid);
/// Pointwise multiplication by a real field g (dense, order 0).
[[nodiscard]] OperatorHandle multiplication_operator(const SpectralField& g);

/// A B f - B A f
[[nodiscard]] SpectralField commutator_apply(const OperatorHandle& a, const OperatorHandle& b,
                                             const SpectralField& f);

struct SeminormReport {
    double value = 0.0;       // sup over the full frequency box
    double value_half = 0.0;  // sup over the box of half radius
    double growth = 0.0;      // value / value_half
    bool bounded = false;     // growth < 1.2
};

/// sup over sampled (x, k) of |Delta_k^alpha d_x^beta p(x, k)| / (1 + |k|)^{s - |alpha|},
/// evaluated on the frequency box of `grid` and on the box of half radius.
/// Differences are forward differences in integer frequency; d_x is spectral.
/// Multi-index orders above `cap` are rejected.
[[nodiscard]] SeminormReport symbol_seminorm(const XSymbol& sym, const Grid& grid,
                                             std::span<const int> beta,
                                             std::span<const int> alpha, double s, int cap = 3);
[[nodiscard]] SeminormReport symbol_seminorm(const Multiplier& sym, const Grid& grid,
                                             std::span<const int> beta,
                                             std::span<const int> alpha, double s, int cap = 3);

/// Largest entry modulus of a multiplier table on `mesh` (spectral radius for
/// diagonal symbols). Used for explicit stability caps.
[[nodiscard]] double max_symbol_magnitude(const OperatorHandle& op, const Grid& mesh);

/// Per-component diagonal of a multiplier on `mesh` (m * N^d values,
/// component-major). Throws if the symbol has off-diagonal entries.
[[nodiscard]] std::vector<Complex> diagonal_table(const OperatorHandle& op, const Grid& mesh);

}  // namespace psdoflow
