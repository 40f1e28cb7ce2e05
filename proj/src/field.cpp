#include "psdoflow/field.hpp"

#include "psdoflow/rng.hpp"

#include <algorithm>
#include <cmath>

namespace psdoflow {

RealField::RealField(Grid grid) : grid_(grid), values_(grid.size(), 0.0) {}

RealField::RealField(Grid grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size()) {
        throw Error("RealField: value count " + std::to_string(values_.size()) +
                    " does not match " + grid_.describe());
    }
}

std::span<double> RealField::component(int j) noexcept {
    return std::span<double>(values_).subspan(j * grid_.points(), grid_.points());
}

std::span<const double> RealField::component(int j) const noexcept {
    return std::span<const double>(values_).subspan(j * grid_.points(), grid_.points());
}

bool RealField::all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

SpectralField::SpectralField(Grid grid) : grid_(grid), coeffs_(grid.size(), Complex{}) {}

SpectralField::SpectralField(Grid grid, std::vector<Complex> coeffs)
    : grid_(grid), coeffs_(std::move(coeffs)) {
    if (coeffs_.size() != grid_.size()) {
        throw Error("SpectralField: coefficient count " + std::to_string(coeffs_.size()) +
                    " does not match " + grid_.describe());
    }
}

std::span<Complex> SpectralField::component(int j) noexcept {
    return std::span<Complex>(coeffs_).subspan(j * grid_.points(), grid_.points());
}

std::span<const Complex> SpectralField::component(int j) const noexcept {
    return std::span<const Complex>(coeffs_).subspan(j * grid_.points(), grid_.points());
}

namespace {
void require_same(const Grid& a, const Grid& b, const char* what) {
    if (!(a == b)) {
        throw Error(std::string(what) + ": grid mismatch " + a.describe() + " vs " + b.describe());
    }
}
}  // namespace

SpectralField& SpectralField::operator+=(const SpectralField& other) {
    require_same(grid_, other.grid_, "SpectralField +=");
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += other.coeffs_[i];
    return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& other) {
    require_same(grid_, other.grid_, "SpectralField -=");
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= other.coeffs_[i];
    return *this;
}

SpectralField& SpectralField::operator*=(double factor) noexcept {
    for (auto& c : coeffs_) c *= factor;
    return *this;
}

SpectralField& SpectralField::axpy(double factor, const SpectralField& other) {
    require_same(grid_, other.grid_, "SpectralField axpy");
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += factor * other.coeffs_[i];
    return *this;
}

bool SpectralField::all_finite() const noexcept {
    return std::all_of(coeffs_.begin(), coeffs_.end(), [](const Complex& c) {
        return std::isfinite(c.real()) && std::isfinite(c.imag());
    });
}

double SpectralField::hermitian_defect() const noexcept {
    double defect = 0.0;
    const std::size_t np = grid_.points();
    for (int j = 0; j < grid_.components(); ++j) {
        const Complex* c = coeffs_.data() + j * np;
        for (std::size_t k = 0; k < np; ++k) {
            defect = std::max(defect, std::abs(c[k] - std::conj(c[grid_.negate(k)])));
        }
    }
    return defect;
}

void SpectralField::symmetrize() noexcept {
    const std::size_t np = grid_.points();
    for (int j = 0; j < grid_.components(); ++j) {
        Complex* c = coeffs_.data() + j * np;
        for (std::size_t k = 0; k < np; ++k) {
            const std::size_t nk = grid_.negate(k);
            if (nk < k) continue;
            if (nk == k) {
                c[k] = Complex(c[k].real(), 0.0);
                continue;
            }
            const Complex avg = 0.5 * (c[k] + std::conj(c[nk]));
            c[k] = avg;
            c[nk] = std::conj(avg);
        }
    }
}

double SpectralField::max_abs() const noexcept {
    double m = 0.0;
    for (const auto& c : coeffs_) m = std::max(m, std::abs(c));
    return m;
}

double SpectralField::mean(int j) const noexcept {
    return coeffs_[j * grid_.points()].real() / grid_.volume();
}

SpectralField operator+(SpectralField a, const SpectralField& b) {
    a += b;
    return a;
}

SpectralField operator-(SpectralField a, const SpectralField& b) {
    a -= b;
    return a;
}

SpectralField operator*(double factor, SpectralField a) {
    a *= factor;
    return a;
}

SpectralField concatenate(std::span<const SpectralField> blocks) {
    if (blocks.empty()) throw Error("concatenate: no blocks");
    int m = 0;
    for (const auto& b : blocks) {
        if (!b.grid().same_mesh(blocks.front().grid())) throw Error("concatenate: mesh mismatch");
        m += b.grid().components();
    }
    SpectralField out(blocks.front().grid().with_components(m));
    auto dst = out.coeffs().begin();
    for (const auto& b : blocks) dst = std::copy(b.coeffs().begin(), b.coeffs().end(), dst);
    return out;
}

SpectralField slice_components(const SpectralField& u, int first, int count) {
    if (first < 0 || count < 1 || first + count > u.grid().components()) {
        throw Error("slice_components: range out of bounds");
    }
    SpectralField out(u.grid().with_components(count));
    const std::size_t np = u.grid().points();
    std::copy_n(u.coeffs().begin() + first * np, count * np, out.coeffs().begin());
    return out;
}

SpectralField random_band_limited(const Grid& grid, std::uint64_t seed, int max_freq,
                                  double decay) {
    SpectralField out(grid);
    const std::size_t np = grid.points();
    const int cap = std::min(max_freq, grid.n() / 2 - 1);
    const double scale = 0.5 * grid.volume();
    for (int j = 0; j < grid.components(); ++j) {
        for (std::size_t k = 0; k < np; ++k) {
            const std::size_t nk = grid.negate(k);
            if (nk < k || grid.is_nyquist(k)) continue;
            double kabs = 0.0;
            bool inside = true;
            for (int a = 0; a < grid.dim(); ++a) {
                const int f = grid.frequency(k, a);
                if (std::abs(f) > cap) inside = false;
                kabs += static_cast<double>(f) * f;
            }
            if (!inside) continue;
            const double amp = scale * std::exp(-decay * std::sqrt(kabs));
            const double re = rng::gaussian(seed, static_cast<std::uint64_t>(j), k, 0);
            const double im = rng::gaussian(seed, static_cast<std::uint64_t>(j), k, 1);
            if (nk == k) {
                out(j, k) = Complex(amp * re, 0.0);
            } else {
                out(j, k) = amp * Complex(re, im);
                out(j, nk) = std::conj(out(j, k));
            }
        }
    }
    return out;
}

void clear_nyquist(SpectralField& u) noexcept {
    const Grid& g = u.grid();
    for (std::size_t k = 0; k < g.points(); ++k) {
        if (!g.is_nyquist(k)) continue;
        for (int j = 0; j < g.components(); ++j) u(j, k) = Complex{};
    }
}

}  // namespace psdoflow
