#include "psdoflow/grid.hpp"

#include <cmath>
#include <sstream>

namespace psdoflow {

Grid::Grid(int dim, int components, int points_per_dim, double period)
    : dim_(dim), components_(components), n_(points_per_dim), period_(period), points_(1) {
    if (dim < 1 || dim > 3) {
        throw Error("grid: dim must be 1, 2 or 3, got " + std::to_string(dim));
    }
    if (components < 1) {
        throw Error("grid: components must be positive, got " + std::to_string(components));
    }
    if (points_per_dim < 4 || points_per_dim % 2 != 0) {
        throw Error("grid: points_per_dim must be even and >= 4, got " +
                    std::to_string(points_per_dim));
    }
    if (!(period > 0.0) || !std::isfinite(period)) {
        throw Error("grid: period must be positive and finite");
    }
    for (int a = 0; a < dim; ++a) points_ *= static_cast<std::size_t>(n_);
}

double Grid::weight() const noexcept { return std::pow(period_ / n_, dim_); }

double Grid::volume() const noexcept { return std::pow(period_, dim_); }

double Grid::wavenumber_scale() const noexcept { return 2.0 * std::numbers::pi / period_; }

int Grid::frequency(std::size_t flat, int axis) const noexcept {
    // row-major: the last axis varies fastest
    std::size_t stride = 1;
    for (int a = dim_ - 1; a > axis; --a) stride *= static_cast<std::size_t>(n_);
    const int i = static_cast<int>((flat / stride) % static_cast<std::size_t>(n_));
    return i <= n_ / 2 ? i : i - n_;
}

void Grid::wavenumber(std::size_t flat, std::span<double> out) const noexcept {
    const double scale = wavenumber_scale();
    for (int a = 0; a < dim_; ++a) out[a] = scale * frequency(flat, a);
}

double Grid::wavenumber_sq(std::size_t flat) const noexcept {
    const double scale = wavenumber_scale();
    double sum = 0.0;
    for (int a = 0; a < dim_; ++a) {
        const double k = scale * frequency(flat, a);
        sum += k * k;
    }
    return sum;
}

bool Grid::is_nyquist(std::size_t flat) const noexcept {
    for (int a = 0; a < dim_; ++a) {
        if (frequency(flat, a) == n_ / 2) return true;
    }
    return false;
}

std::size_t Grid::negate(std::size_t flat) const noexcept {
    std::size_t out = 0;
    for (int a = 0; a < dim_; ++a) {
        const int f = frequency(flat, a);
        const int neg = ((-f) % n_ + n_) % n_;
        out = out * static_cast<std::size_t>(n_) + static_cast<std::size_t>(neg);
    }
    return out;
}

std::size_t Grid::flat_index(std::span<const int> freq) const noexcept {
    std::size_t out = 0;
    for (int a = 0; a < dim_; ++a) {
        const int i = ((freq[a] % n_) + n_) % n_;
        out = out * static_cast<std::size_t>(n_) + static_cast<std::size_t>(i);
    }
    return out;
}

double Grid::coordinate(std::size_t flat, int axis) const noexcept {
    std::size_t stride = 1;
    for (int a = dim_ - 1; a > axis; --a) stride *= static_cast<std::size_t>(n_);
    const auto i = (flat / stride) % static_cast<std::size_t>(n_);
    return period_ * static_cast<double>(i) / n_;
}

bool Grid::same_mesh(const Grid& other) const noexcept {
    return dim_ == other.dim_ && n_ == other.n_ && period_ == other.period_;
}

std::string Grid::describe() const {
    std::ostringstream os;
    os << "Grid(d=" << dim_ << ", m=" << components_ << ", N=" << n_ << ", L=" << period_ << ")";
    return os.str();
}

}  // namespace psdoflow
