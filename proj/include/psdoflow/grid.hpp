#pragma once

#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace psdoflow {

using Complex = std::complex<double>;

/// Raised for every contract violation in the library (bad shapes, non-finite
/// data, invalid parameters). The message names the offending quantity.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Uniform periodic collocation grid on the d-torus of period L carrying an
/// m-component field.
///
/// Spectral storage follows FFT order along every axis: index i maps to the
/// integer frequency i for i <= N/2 and i - N for i > N/2, so each axis holds
/// {-N/2+1, ..., N/2}. Physical wavenumbers are (2*pi/L) times the integer
/// frequency.
class Grid {
public:
    Grid(int dim, int components, int points_per_dim,
         double period = 2.0 * std::numbers::pi);

    [[nodiscard]] int dim() const noexcept { return dim_; }
    [[nodiscard]] int components() const noexcept { return components_; }
    [[nodiscard]] int n() const noexcept { return n_; }
    [[nodiscard]] double period() const noexcept { return period_; }

    /// N^d, the number of collocation points (and frequencies) per component.
    [[nodiscard]] std::size_t points() const noexcept { return points_; }
    /// m * N^d.
    [[nodiscard]] std::size_t size() const noexcept { return points_ * components_; }

    /// Quadrature weight (L/N)^d.
    [[nodiscard]] double weight() const noexcept;
    /// L^d, the torus volume.
    [[nodiscard]] double volume() const noexcept;
    /// 2*pi/L.
    [[nodiscard]] double wavenumber_scale() const noexcept;

    /// Integer frequency of `flat` (index into one component) along `axis`.
    [[nodiscard]] int frequency(std::size_t flat, int axis) const noexcept;
    /// Physical wavenumber vector of `flat`, written into `out` (size dim).
    void wavenumber(std::size_t flat, std::span<double> out) const noexcept;
    /// |k|^2 with physical wavenumbers.
    [[nodiscard]] double wavenumber_sq(std::size_t flat) const noexcept;
    /// True if any axis sits at the unpaired frequency N/2.
    [[nodiscard]] bool is_nyquist(std::size_t flat) const noexcept;
    /// Flat index of -k with wrap-around (N/2 maps to itself).
    [[nodiscard]] std::size_t negate(std::size_t flat) const noexcept;
    /// Flat index for an integer frequency vector; frequencies are wrapped mod N.
    [[nodiscard]] std::size_t flat_index(std::span<const int> freq) const noexcept;
    /// Coordinate of collocation point `flat` along `axis`.
    [[nodiscard]] double coordinate(std::size_t flat, int axis) const noexcept;

    [[nodiscard]] Grid with_components(int m) const { return Grid(dim_, m, n_, period_); }
    /// Same dimension, resolution and period (component count may differ).
    [[nodiscard]] bool same_mesh(const Grid& other) const noexcept;

    friend bool operator==(const Grid& a, const Grid& b) noexcept {
        return a.same_mesh(b) && a.components_ == b.components_;
    }

    [[nodiscard]] std::string describe() const;

private:
    int dim_;
    int components_;
    int n_;
    double period_;
    std::size_t points_;
};

}  // namespace psdoflow
