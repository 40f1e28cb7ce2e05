#pragma once

#include "psdoflow/field.hpp"

#include <initializer_list>
#include <iosfwd>
#include <span>
#include <string>

namespace psdoflow {

/// coeffs(j,k) = (L/N)^d sum_x f_j(x) exp(-i k.x), symmetrized so the result
/// is exactly Hermitian. Throws on non-finite input.
[[nodiscard]] SpectralField to_spectral(const RealField& f);

/// Pointwise inverse L^-d sum_k coeffs(k) exp(i k.x). Throws when the input
/// breaks Hermitian symmetry by more than 1e-10 relative to its largest
/// coefficient (floor 1).
[[nodiscard]] RealField to_real(const SpectralField& u);

/// Unnormalized in-place complex DFT over every component of `grid`
/// (exp(-i k.x) when `inverse` is false, exp(+i k.x) otherwise).
void fft(std::span<Complex> data, const Grid& grid, bool inverse);

/// Zero-padded copy on a finer mesh with `n_fine` points per axis. Coefficients
/// are grid independent, so padding preserves the represented function.
[[nodiscard]] SpectralField pad(const SpectralField& u, int n_fine);
/// Restriction to the coarse frequency box of `n_coarse` points per axis.
/// Nyquist planes of the coarse box are cleared since they have no partner.
[[nodiscard]] SpectralField truncate(const SpectralField& u, int n_coarse);

/// Padded mesh size that evaluates a product of `degree` band-limited factors
/// without aliasing: the smallest even size >= (degree + 1) * N / 2.
[[nodiscard]] int dealias_size(int n, int degree) noexcept;

/// Product of scalar fields (component 0 of each factor), evaluated on a padded
/// mesh large enough for exactness and truncated back. The result has one
/// component on the factors' mesh.
[[nodiscard]] SpectralField dealiased_product(std::span<const SpectralField* const> factors);
[[nodiscard]] SpectralField dealiased_product(std::initializer_list<const SpectralField*> factors);
/// Same as above with an explicit padded size (>= N).
[[nodiscard]] SpectralField dealiased_product(std::span<const SpectralField* const> factors,
                                              int n_padded);

/// Spectral derivative d^alpha u (multiplier (ik)^alpha), Nyquist planes along
/// differentiated axes cleared.
[[nodiscard]] SpectralField derivative(const SpectralField& u, std::span<const int> alpha);
[[nodiscard]] SpectralField derivative(const SpectralField& u, int axis, int order = 1);

/// Divergence of a d-component field (or of each d-block when m is a multiple of d),
/// returned as m/d scalar components.
[[nodiscard]] SpectralField divergence(const SpectralField& u);

// ---------------------------------------------------------------------------
// Norms

/// L^-d sum_{j,k} (1+|k|^2)^s u(j,k) conj(v(j,k)), real part.
[[nodiscard]] double sobolev_inner(const SpectralField& u, const SpectralField& v, double s);
[[nodiscard]] double sobolev_norm(const SpectralField& u, double s);
[[nodiscard]] inline double l2_inner(const SpectralField& u, const SpectralField& v) {
    return sobolev_inner(u, v, 0.0);
}
[[nodiscard]] inline double l2_norm(const SpectralField& u) { return sobolev_norm(u, 0.0); }

/// Grid W^{l,inf} norm: sum over components and multi-indices |alpha|_1 <= l of
/// max_x |d^alpha u_j(x)|. With `oversample` the maxima are taken on a 2x mesh.
[[nodiscard]] double wk_inf_norm(const SpectralField& u, int l, bool oversample = false);
/// max_x |u_j(x)| over all components.
[[nodiscard]] double sup_norm(const SpectralField& u, bool oversample = false);

/// Exact grid constant of ||u||_inf <= C ||u||_{H^sigma} for a scalar field on
/// this frequency box: L^{-d/2} sqrt(sum_k (1+|k|^2)^{-sigma}).
[[nodiscard]] double sobolev_embedding_constant(const Grid& grid, double sigma);

// ---------------------------------------------------------------------------
// Snapshot format
//
// Little-endian: "PSDF", u32 version, u32 d, u32 m, u32 N, f64 L, then
// m * N^d complex values as interleaved float32 (re, im). Components are
// stored one after another; inside a component the frequency index runs
// row-major over the axes with each axis in ascending order
// -N/2+1, ..., N/2.

inline constexpr std::uint32_t kSnapshotVersion = 1;

void write_snapshot(std::ostream& os, const SpectralField& u);
[[nodiscard]] SpectralField read_snapshot(std::istream& is);
void write_snapshot_file(const std::string& path, const SpectralField& u);
[[nodiscard]] SpectralField read_snapshot_file(const std::string& path);

}  // namespace psdoflow
