#include "psdoflow/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <mutex>
#include <tuple>
#include <vector>

namespace psdoflow {

namespace {

// FFTW plans are created once per (d, N, m, sign) and executed through the
// new-array interface, which is thread safe. Planning itself is serialized.
class PlanCache {
public:
    fftw_plan get(int dim, int n, int howmany, int sign) {
        const auto key = std::make_tuple(dim, n, howmany, sign);
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        std::array<int, 3> dims{n, n, n};
        int dist = 1;
        for (int a = 0; a < dim; ++a) dist *= n;
        auto* buffer = fftw_alloc_complex(static_cast<std::size_t>(dist) * howmany);
        fftw_plan plan = fftw_plan_many_dft(dim, dims.data(), howmany, buffer, nullptr, 1, dist,
                                            buffer, nullptr, 1, dist, sign,
                                            FFTW_ESTIMATE | FFTW_UNALIGNED);
        fftw_free(buffer);
        if (plan == nullptr) throw Error("fft: FFTW failed to create a plan");
        plans_.emplace(key, plan);
        return plan;
    }

private:
    std::mutex mutex_;
    std::map<std::tuple<int, int, int, int>, fftw_plan> plans_;
};

PlanCache& plan_cache() {
    static PlanCache cache;
    return cache;
}

void fft_inplace(std::vector<Complex>& data, const Grid& grid, int sign) {
    fftw_plan plan = plan_cache().get(grid.dim(), grid.n(), grid.components(), sign);
    auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(plan, ptr, ptr);
}

// Inverse transform without the Hermitian check; returns real parts.
std::vector<double> inverse_values(const SpectralField& u) {
    std::vector<Complex> work(u.coeffs().begin(), u.coeffs().end());
    fft_inplace(work, u.grid(), FFTW_BACKWARD);
    const double inv_volume = 1.0 / u.grid().volume();
    std::vector<double> out(work.size());
    for (std::size_t i = 0; i < work.size(); ++i) out[i] = work[i].real() * inv_volume;
    return out;
}

SpectralField forward_values(const Grid& grid, std::span<const double> values) {
    std::vector<Complex> work(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) work[i] = Complex(values[i], 0.0);
    fft_inplace(work, grid, FFTW_FORWARD);
    const double w = grid.weight();
    for (auto& c : work) c *= w;
    SpectralField out(grid, std::move(work));
    out.symmetrize();
    return out;
}

}  // namespace

void fft(std::span<Complex> data, const Grid& grid, bool inverse) {
    if (data.size() != grid.size()) throw Error("fft: buffer size does not match " + grid.describe());
    fftw_plan plan = plan_cache().get(grid.dim(), grid.n(), grid.components(),
                                      inverse ? FFTW_BACKWARD : FFTW_FORWARD);
    auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(plan, ptr, ptr);
}

SpectralField to_spectral(const RealField& f) {
    if (!f.all_finite()) throw Error("to_spectral: non-finite input values");
    return forward_values(f.grid(), f.values());
}

RealField to_real(const SpectralField& u) {
    const double defect = u.hermitian_defect();
    const double tol = 1e-10 * std::max(1.0, u.max_abs());
    if (!(defect <= tol)) {
        throw Error("to_real: Hermitian symmetry violated (defect " + std::to_string(defect) + ")");
    }
    return RealField(u.grid(), inverse_values(u));
}

SpectralField pad(const SpectralField& u, int n_fine) {
    const Grid& g = u.grid();
    if (n_fine < g.n()) throw Error("pad: target mesh is coarser than the field");
    if (n_fine == g.n()) return u;
    Grid fine(g.dim(), g.components(), n_fine, g.period());
    SpectralField out(fine);
    const int half = g.n() / 2;
    std::array<int, 3> freq{};
    for (std::size_t k = 0; k < g.points(); ++k) {
        int nyq_mask = 0;
        int nyq_count = 0;
        for (int a = 0; a < g.dim(); ++a) {
            freq[a] = g.frequency(k, a);
            if (freq[a] == half) {
                nyq_mask |= 1 << a;
                ++nyq_count;
            }
        }
        const double share = 1.0 / static_cast<double>(1 << nyq_count);
        // Unpaired Nyquist coefficients are split evenly over the +/- images.
        for (int subset = 0; subset < (1 << g.dim()); ++subset) {
            if ((subset & ~nyq_mask) != 0) continue;
            std::array<int, 3> f = freq;
            for (int a = 0; a < g.dim(); ++a) {
                if (subset & (1 << a)) f[a] = -f[a];
            }
            const std::size_t dst = fine.flat_index(std::span<const int>(f.data(), g.dim()));
            for (int j = 0; j < g.components(); ++j) out(j, dst) += share * u(j, k);
        }
    }
    return out;
}

SpectralField truncate(const SpectralField& u, int n_coarse) {
    const Grid& g = u.grid();
    if (n_coarse > g.n()) throw Error("truncate: target mesh is finer than the field");
    Grid coarse(g.dim(), g.components(), n_coarse, g.period());
    SpectralField out(coarse);
    std::array<int, 3> freq{};
    for (std::size_t k = 0; k < coarse.points(); ++k) {
        if (coarse.is_nyquist(k)) continue;
        for (int a = 0; a < g.dim(); ++a) freq[a] = coarse.frequency(k, a);
        const std::size_t src = g.flat_index(std::span<const int>(freq.data(), g.dim()));
        for (int j = 0; j < g.components(); ++j) out(j, k) = u(j, src);
    }
    return out;
}

int dealias_size(int n, int degree) noexcept {
    const int needed = ((degree + 1) * n + 1) / 2;
    return needed % 2 == 0 ? needed : needed + 1;
}

SpectralField dealiased_product(std::span<const SpectralField* const> factors, int n_padded) {
    if (factors.empty()) throw Error("dealiased_product: no factors");
    const Grid& g = factors.front()->grid();
    if (n_padded < g.n()) throw Error("dealiased_product: padded size smaller than mesh");
    Grid scalar = g.with_components(1);
    std::vector<double> product;
    for (const SpectralField* f : factors) {
        if (!f->grid().same_mesh(g)) throw Error("dealiased_product: mesh mismatch");
        SpectralField first = f->grid().components() == 1 ? *f : slice_components(*f, 0, 1);
        const std::vector<double> values = inverse_values(pad(first, n_padded));
        if (product.empty()) {
            product = values;
        } else {
            for (std::size_t i = 0; i < product.size(); ++i) product[i] *= values[i];
        }
    }
    Grid fine(g.dim(), 1, n_padded, g.period());
    SpectralField out = truncate(forward_values(fine, product), g.n());
    return SpectralField(scalar, std::vector<Complex>(out.coeffs().begin(), out.coeffs().end()));
}

SpectralField dealiased_product(std::span<const SpectralField* const> factors) {
    if (factors.empty()) throw Error("dealiased_product: no factors");
    const int degree = static_cast<int>(factors.size());
    return dealiased_product(factors, dealias_size(factors.front()->grid().n(), degree));
}

SpectralField dealiased_product(std::initializer_list<const SpectralField*> factors) {
    return dealiased_product(std::span<const SpectralField* const>(factors.begin(), factors.size()));
}

SpectralField derivative(const SpectralField& u, std::span<const int> alpha) {
    const Grid& g = u.grid();
    if (static_cast<int>(alpha.size()) != g.dim()) throw Error("derivative: multi-index size != dim");
    SpectralField out(g);
    const double scale = g.wavenumber_scale();
    const int half = g.n() / 2;
    for (std::size_t k = 0; k < g.points(); ++k) {
        Complex factor(1.0, 0.0);
        bool zero = false;
        for (int a = 0; a < g.dim(); ++a) {
            if (alpha[a] == 0) continue;
            const int f = g.frequency(k, a);
            if (f == half && alpha[a] % 2 == 1) zero = true;
            const Complex ik(0.0, scale * f);
            for (int p = 0; p < alpha[a]; ++p) factor *= ik;
        }
        if (zero) continue;
        for (int j = 0; j < g.components(); ++j) out(j, k) = factor * u(j, k);
    }
    return out;
}

SpectralField derivative(const SpectralField& u, int axis, int order) {
    std::array<int, 3> alpha{};
    if (axis < 0 || axis >= u.grid().dim()) throw Error("derivative: axis out of range");
    alpha[axis] = order;
    return derivative(u, std::span<const int>(alpha.data(), u.grid().dim()));
}

SpectralField divergence(const SpectralField& u) {
    const Grid& g = u.grid();
    const int d = g.dim();
    if (g.components() % d != 0) throw Error("divergence: component count is not a multiple of dim");
    const int blocks = g.components() / d;
    SpectralField out(g.with_components(blocks));
    const double scale = g.wavenumber_scale();
    const int half = g.n() / 2;
    for (int b = 0; b < blocks; ++b) {
        for (int a = 0; a < d; ++a) {
            for (std::size_t k = 0; k < g.points(); ++k) {
                const int f = g.frequency(k, a);
                if (f == half) continue;
                out(b, k) += Complex(0.0, scale * f) * u(b * d + a, k);
            }
        }
    }
    return out;
}

double sobolev_inner(const SpectralField& u, const SpectralField& v, double s) {
    if (!(u.grid() == v.grid())) {
        throw Error("sobolev_inner: grid mismatch " + u.grid().describe() + " vs " +
                    v.grid().describe());
    }
    const Grid& g = u.grid();
    double sum = 0.0;
    for (std::size_t k = 0; k < g.points(); ++k) {
        const double w = s == 0.0 ? 1.0 : std::pow(1.0 + g.wavenumber_sq(k), s);
        double acc = 0.0;
        for (int j = 0; j < g.components(); ++j) {
            const Complex a = u(j, k);
            const Complex b = v(j, k);
            acc += a.real() * b.real() + a.imag() * b.imag();
        }
        sum += w * acc;
    }
    return sum / g.volume();
}

double sobolev_norm(const SpectralField& u, double s) {
    return std::sqrt(std::max(0.0, sobolev_inner(u, u, s)));
}

namespace {

double max_abs_values(const SpectralField& u, bool oversample, int component) {
    SpectralField c = slice_components(u, component, 1);
    if (oversample) c = pad(c, 2 * u.grid().n());
    const std::vector<double> values = inverse_values(c);
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
}

void enumerate_multi_indices(int dim, int max_order, std::vector<std::array<int, 3>>& out) {
    std::array<int, 3> alpha{};
    auto rec = [&](auto&& self, int axis, int remaining) -> void {
        if (axis == dim) {
            out.push_back(alpha);
            return;
        }
        for (int p = 0; p <= remaining; ++p) {
            alpha[axis] = p;
            self(self, axis + 1, remaining - p);
        }
        alpha[axis] = 0;
    };
    rec(rec, 0, max_order);
}

}  // namespace

double wk_inf_norm(const SpectralField& u, int l, bool oversample) {
    if (l < 0) throw Error("wk_inf_norm: l must be nonnegative");
    std::vector<std::array<int, 3>> indices;
    enumerate_multi_indices(u.grid().dim(), l, indices);
    double total = 0.0;
    for (const auto& alpha : indices) {
        const SpectralField d = derivative(u, std::span<const int>(alpha.data(), u.grid().dim()));
        for (int j = 0; j < u.grid().components(); ++j) total += max_abs_values(d, oversample, j);
    }
    return total;
}

double sup_norm(const SpectralField& u, bool oversample) {
    double m = 0.0;
    for (int j = 0; j < u.grid().components(); ++j) {
        m = std::max(m, max_abs_values(u, oversample, j));
    }
    return m;
}

double sobolev_embedding_constant(const Grid& grid, double sigma) {
    double sum = 0.0;
    for (std::size_t k = 0; k < grid.points(); ++k) {
        sum += std::pow(1.0 + grid.wavenumber_sq(k), -sigma);
    }
    return std::sqrt(sum / grid.volume());
}

// ---------------------------------------------------------------------------

namespace {

template <typename T>
void put_le(std::ostream& os, T value) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    os.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
T get_le(std::istream& is) {
    std::array<unsigned char, sizeof(T)> bytes{};
    is.read(reinterpret_cast<char*>(bytes.data()), sizeof(T));
    if (!is) throw Error("read_snapshot: truncated stream");
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
}

// Flat FFT-order index of the p-th entry in ascending frequency order.
std::size_t ascending_to_flat(const Grid& g, std::size_t p) {
    std::array<int, 3> freq{};
    std::size_t rest = p;
    for (int a = g.dim() - 1; a >= 0; --a) {
        const int pos = static_cast<int>(rest % static_cast<std::size_t>(g.n()));
        rest /= static_cast<std::size_t>(g.n());
        freq[a] = pos - g.n() / 2 + 1;
    }
    return g.flat_index(std::span<const int>(freq.data(), g.dim()));
}

}  // namespace

void write_snapshot(std::ostream& os, const SpectralField& u) {
    const Grid& g = u.grid();
    os.write("PSDF", 4);
    put_le<std::uint32_t>(os, kSnapshotVersion);
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(g.dim()));
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(g.components()));
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(g.n()));
    put_le<double>(os, g.period());
    for (int j = 0; j < g.components(); ++j) {
        for (std::size_t p = 0; p < g.points(); ++p) {
            const Complex c = u(j, ascending_to_flat(g, p));
            put_le<float>(os, static_cast<float>(c.real()));
            put_le<float>(os, static_cast<float>(c.imag()));
        }
    }
    if (!os) throw Error("write_snapshot: stream error");
}

SpectralField read_snapshot(std::istream& is) {
    char magic[4] = {};
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "PSDF", 4) != 0) throw Error("read_snapshot: bad magic");
    const auto version = get_le<std::uint32_t>(is);
    if (version != kSnapshotVersion) {
        throw Error("read_snapshot: unsupported version " + std::to_string(version));
    }
    const auto d = get_le<std::uint32_t>(is);
    const auto m = get_le<std::uint32_t>(is);
    const auto n = get_le<std::uint32_t>(is);
    const auto period = get_le<double>(is);
    Grid g(static_cast<int>(d), static_cast<int>(m), static_cast<int>(n), period);
    SpectralField u(g);
    for (int j = 0; j < g.components(); ++j) {
        for (std::size_t p = 0; p < g.points(); ++p) {
            const float re = get_le<float>(is);
            const float im = get_le<float>(is);
            u(j, ascending_to_flat(g, p)) = Complex(re, im);
        }
    }
    return u;
}

void write_snapshot_file(const std::string& path, const SpectralField& u) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("write_snapshot: cannot open " + path);
    write_snapshot(os, u);
}

SpectralField read_snapshot_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("read_snapshot: cannot open " + path);
    return read_snapshot(is);
}

}  // namespace psdoflow
