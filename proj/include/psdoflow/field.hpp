#pragma once

#include "psdoflow/grid.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace psdoflow {

/// Real vector field sampled on the collocation grid, stored component-major.
class RealField {
public:
    explicit RealField(Grid grid);
    RealField(Grid grid, std::vector<double> values);

    [[nodiscard]] const Grid& grid() const noexcept { return grid_; }
    [[nodiscard]] std::span<double> values() noexcept { return values_; }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] std::span<double> component(int j) noexcept;
    [[nodiscard]] std::span<const double> component(int j) const noexcept;

    double& operator()(int j, std::size_t point) noexcept { return values_[j * grid_.points() + point]; }
    double operator()(int j, std::size_t point) const noexcept { return values_[j * grid_.points() + point]; }

    [[nodiscard]] bool all_finite() const noexcept;

private:
    Grid grid_;
    std::vector<double> values_;
};

/// Fourier coefficients of a real field: coeffs(j, k) approximates the
/// integral of x_j(x) exp(-i k.x) over the torus. Hermitian symmetry
/// coeffs(j, -k) = conj(coeffs(j, k)) holds for fields built by this library.
class SpectralField {
public:
    explicit SpectralField(Grid grid);
    SpectralField(Grid grid, std::vector<Complex> coeffs);

    [[nodiscard]] const Grid& grid() const noexcept { return grid_; }
    [[nodiscard]] std::span<Complex> coeffs() noexcept { return coeffs_; }
    [[nodiscard]] std::span<const Complex> coeffs() const noexcept { return coeffs_; }
    [[nodiscard]] std::span<Complex> component(int j) noexcept;
    [[nodiscard]] std::span<const Complex> component(int j) const noexcept;

    Complex& operator()(int j, std::size_t flat) noexcept { return coeffs_[j * grid_.points() + flat]; }
    Complex operator()(int j, std::size_t flat) const noexcept { return coeffs_[j * grid_.points() + flat]; }

    SpectralField& operator+=(const SpectralField& other);
    SpectralField& operator-=(const SpectralField& other);
    SpectralField& operator*=(double factor) noexcept;
    /// this += factor * other
    SpectralField& axpy(double factor, const SpectralField& other);

    [[nodiscard]] bool all_finite() const noexcept;
    /// Largest |coeffs(j,k) - conj(coeffs(j,-k))|.
    [[nodiscard]] double hermitian_defect() const noexcept;
    /// Replace coefficients by their Hermitian part (c(k) + conj c(-k)) / 2.
    void symmetrize() noexcept;
    /// Largest coefficient modulus.
    [[nodiscard]] double max_abs() const noexcept;
    /// Mean value of component j (coefficient at k = 0 divided by the volume).
    [[nodiscard]] double mean(int j) const noexcept;

    static SpectralField zeros_like(const SpectralField& u) { return SpectralField(u.grid()); }

private:
    Grid grid_;
    std::vector<Complex> coeffs_;
};

[[nodiscard]] SpectralField operator+(SpectralField a, const SpectralField& b);
[[nodiscard]] SpectralField operator-(SpectralField a, const SpectralField& b);
[[nodiscard]] SpectralField operator*(double factor, SpectralField a);

/// Stack single-block fields into one multi-component field (same mesh).
[[nodiscard]] SpectralField concatenate(std::span<const SpectralField> blocks);
/// Components [first, first+count) as a new field.
[[nodiscard]] SpectralField slice_components(const SpectralField& u, int first, int count);

/// Random real field with coefficients drawn as (N(0,1) + i N(0,1)) * exp(-decay*|k|)
/// on integer frequencies with every |k_i| <= max_freq, Hermitian by construction.
/// The Nyquist plane is never populated. Deterministic in `seed`.
[[nodiscard]] SpectralField random_band_limited(const Grid& grid, std::uint64_t seed,
                                                int max_freq, double decay = 0.0);

/// Zero every coefficient that sits on a Nyquist plane.
void clear_nyquist(SpectralField& u) noexcept;

}  // namespace psdoflow
