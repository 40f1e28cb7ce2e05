#include "psdoflow/psdo.hpp"

#include "psdoflow/spectral.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

namespace psdoflow {

struct OperatorHandle::TableCache {
    std::mutex mutex;
    std::map<std::tuple<int, int, double>, std::shared_ptr<const std::vector<Complex>>> tables;
};

namespace {

// Images of a frequency under sign flips of its Nyquist axes.
template <typename F>
void for_each_nyquist_image(const Grid& g, std::size_t k, F&& f) {
    std::array<double, 3> base{};
    int mask = 0;
    int count = 0;
    const double scale = g.wavenumber_scale();
    for (int a = 0; a < g.dim(); ++a) {
        const int fr = g.frequency(k, a);
        base[a] = scale * fr;
        if (fr == g.n() / 2) {
            mask |= 1 << a;
            ++count;
        }
    }
    const double share = 1.0 / static_cast<double>(1 << count);
    for (int subset = 0; subset < (1 << g.dim()); ++subset) {
        if ((subset & ~mask) != 0) continue;
        std::array<double, 3> kv = base;
        for (int a = 0; a < g.dim(); ++a) {
            if (subset & (1 << a)) kv[a] = -kv[a];
        }
        f(std::span<const double>(kv.data(), g.dim()), share);
    }
}

std::vector<Complex> build_table(const Multiplier& m, const Grid& g) {
    const int e = m.entries();
    std::vector<Complex> table(g.points() * e, Complex{});
    std::vector<Complex> scratch(e);
    for (std::size_t k = 0; k < g.points(); ++k) {
        Complex* dst = table.data() + k * e;
        for_each_nyquist_image(g, k, [&](std::span<const double> kv, double share) {
            m.eval(kv, scratch.data());
            for (int i = 0; i < e; ++i) dst[i] += share * scratch[i];
        });
    }
    return table;
}

Multiplier scalar_multiplier(std::function<Complex(std::span<const double>)> f) {
    Multiplier m;
    m.eval = [f = std::move(f)](std::span<const double> k, Complex* v) { v[0] = f(k); };
    return m;
}

double norm_sq(std::span<const double> k) {
    double s = 0.0;
    for (double x : k) s += x * x;
    return s;
}

void require_compatible(const OperatorHandle& op, const SpectralField& u) {
    if (op.in_components() != 0 && op.in_components() != u.grid().components()) {
        throw Error("operator '" + op.label() + "' expects " + std::to_string(op.in_components()) +
                    " components, got " + std::to_string(u.grid().components()));
    }
}

SpectralField apply_table(const std::vector<Complex>& t, const Multiplier& m, const SpectralField& u) {
    const Grid& g = u.grid();
    const std::size_t np = g.points();
    if (m.is_scalar()) {
        SpectralField out(g);
        for (int j = 0; j < g.components(); ++j) {
            const Complex* src = u.coeffs().data() + j * np;
            Complex* dst = out.coeffs().data() + j * np;
            for (std::size_t k = 0; k < np; ++k) dst[k] = t[k] * src[k];
        }
        return out;
    }
    SpectralField out(g.with_components(m.out));
    const int e = m.entries();
    for (std::size_t k = 0; k < np; ++k) {
        const Complex* row = t.data() + k * e;
        for (int i = 0; i < m.out; ++i) {
            Complex acc{};
            for (int j = 0; j < m.in; ++j) acc += row[i * m.in + j] * u(j, k);
            out(i, k) = acc;
        }
    }
    return out;
}

Multiplier adjoint_multiplier(const Multiplier& m) {
    Multiplier a;
    a.in = m.out;
    a.out = m.in;
    const int e = m.entries();
    auto inner = std::make_shared<const Multiplier>(m);
    a.eval = [inner, e](std::span<const double> k, Complex* v) {
        std::vector<Complex> tmp(e);
        inner->eval(k, tmp.data());
        if (inner->is_scalar()) {
            v[0] = std::conj(tmp[0]);
            return;
        }
        for (int i = 0; i < inner->out; ++i) {
            for (int j = 0; j < inner->in; ++j) v[j * inner->out + i] = std::conj(tmp[i * inner->in + j]);
        }
    };
    return a;
}

// Expand a scalar symbol value to an m x m matrix when combining with matrix symbols.
Multiplier compose_multipliers(const Multiplier& a, const Multiplier& b) {
    Multiplier c;
    auto pa = std::make_shared<const Multiplier>(a);
    auto pb = std::make_shared<const Multiplier>(b);
    if (a.is_scalar() && b.is_scalar()) {
        c.eval = [pa, pb](std::span<const double> k, Complex* v) {
            Complex x, y;
            pa->eval(k, &x);
            pb->eval(k, &y);
            v[0] = x * y;
        };
        return c;
    }
    if (a.is_scalar() || b.is_scalar()) {
        const auto& mat = a.is_scalar() ? pb : pa;
        const auto& sca = a.is_scalar() ? pa : pb;
        c.in = mat->in;
        c.out = mat->out;
        const int e = mat->entries();
        c.eval = [mat, sca, e](std::span<const double> k, Complex* v) {
            Complex s;
            sca->eval(k, &s);
            mat->eval(k, v);
            for (int i = 0; i < e; ++i) v[i] *= s;
        };
        return c;
    }
    if (a.in != b.out) throw Error("compose: component mismatch between multipliers");
    c.in = b.in;
    c.out = a.out;
    c.eval = [pa, pb](std::span<const double> k, Complex* v) {
        std::vector<Complex> x(pa->entries()), y(pb->entries());
        pa->eval(k, x.data());
        pb->eval(k, y.data());
        for (int i = 0; i < pa->out; ++i) {
            for (int j = 0; j < pb->in; ++j) {
                Complex acc{};
                for (int l = 0; l < pa->in; ++l) acc += x[i * pa->in + l] * y[l * pb->in + j];
                v[i * pb->in + j] = acc;
            }
        }
    };
    return c;
}

Multiplier add_multipliers(const Multiplier& a, const Multiplier& b) {
    Multiplier c;
    auto pa = std::make_shared<const Multiplier>(a);
    auto pb = std::make_shared<const Multiplier>(b);
    if (a.is_scalar() && b.is_scalar()) {
        c.eval = [pa, pb](std::span<const double> k, Complex* v) {
            Complex x, y;
            pa->eval(k, &x);
            pb->eval(k, &y);
            v[0] = x + y;
        };
        return c;
    }
    const Multiplier& mat = a.is_scalar() ? b : a;
    if (!a.is_scalar() && !b.is_scalar() && (a.in != b.in || a.out != b.out)) {
        throw Error("add: component mismatch between multipliers");
    }
    if ((a.is_scalar() || b.is_scalar()) && mat.in != mat.out) {
        throw Error("add: scalar plus non-square matrix multiplier");
    }
    c.in = mat.in;
    c.out = mat.out;
    const int m = mat.in;
    auto expand = [m](const Multiplier& s, std::span<const double> k, Complex* v) {
        if (!s.is_scalar()) {
            s.eval(k, v);
            return;
        }
        Complex x;
        s.eval(k, &x);
        for (int i = 0; i < m * m; ++i) v[i] = Complex{};
        for (int i = 0; i < m; ++i) v[i * m + i] = x;
    };
    c.eval = [pa, pb, expand, m](std::span<const double> k, Complex* v) {
        std::vector<Complex> y(m * m);
        expand(*pa, k, v);
        expand(*pb, k, y.data());
        for (int i = 0; i < m * m; ++i) v[i] += y[i];
    };
    return c;
}

Eigen::VectorXcd scalar_table_vector(const OperatorHandle& op, const Grid& mesh) {
    auto t = op.table(mesh.with_components(1));
    return Eigen::Map<const Eigen::VectorXcd>(t->data(), static_cast<Eigen::Index>(t->size()));
}

bool scalar_multiplier_kind(const OperatorHandle& op) {
    return op.kind() == OperatorHandle::Kind::multiplier && op.multiplier()->is_scalar();
}

}  // namespace

// ---------------------------------------------------------------------------

OperatorHandle::OperatorHandle() {
    Multiplier m = scalar_multiplier([](std::span<const double>) { return Complex{}; });
    mult_ = std::make_shared<const Multiplier>(std::move(m));
    cache_ = std::make_shared<TableCache>();
    label_ = "zero";
    zero_ = true;
}

OperatorHandle OperatorHandle::from_multiplier(Multiplier m, double order, std::string label) {
    if (!m.eval) throw Error("multiplier '" + label + "' has no symbol");
    if ((m.in == 0) != (m.out == 0)) throw Error("multiplier '" + label + "': invalid shape");
    OperatorHandle h;
    h.zero_ = false;
    h.kind_ = Kind::multiplier;
    h.order_ = order;
    h.label_ = std::move(label);
    h.in_ = m.in;
    h.out_ = m.out;
    h.mult_ = std::make_shared<const Multiplier>(std::move(m));
    h.cache_ = std::make_shared<TableCache>();
    return h;
}

OperatorHandle OperatorHandle::from_dense(Grid mesh, Eigen::MatrixXcd matrix, double order,
                                          std::string label) {
    const auto p = static_cast<Eigen::Index>(mesh.points());
    if (matrix.rows() != p || matrix.cols() != p) {
        throw Error("dense operator '" + label + "': matrix size does not match " + mesh.describe());
    }
    OperatorHandle h;
    h.zero_ = false;
    h.kind_ = Kind::quantized_dense;
    h.order_ = order;
    h.label_ = std::move(label);
    h.mult_.reset();
    h.dense_ = std::make_shared<const Eigen::MatrixXcd>(std::move(matrix));
    h.mesh_ = std::make_shared<const Grid>(mesh.with_components(1));
    return h;
}

OperatorHandle OperatorHandle::from_functions(ApplyFn apply, ApplyFn adjoint, double order, int in,
                                              int out, std::string label) {
    OperatorHandle h;
    h.zero_ = false;
    h.kind_ = Kind::composite;
    h.order_ = order;
    h.label_ = std::move(label);
    h.in_ = in;
    h.out_ = out;
    h.mult_.reset();
    h.apply_fn_ = std::move(apply);
    h.adjoint_fn_ = std::move(adjoint);
    return h;
}

const Multiplier* OperatorHandle::multiplier() const noexcept {
    return kind_ == Kind::multiplier ? mult_.get() : nullptr;
}

const Eigen::MatrixXcd* OperatorHandle::dense() const noexcept {
    return kind_ == Kind::quantized_dense ? dense_.get() : nullptr;
}

const Grid* OperatorHandle::dense_mesh() const noexcept {
    return kind_ == Kind::quantized_dense ? mesh_.get() : nullptr;
}

std::shared_ptr<const std::vector<Complex>> OperatorHandle::table(const Grid& mesh) const {
    if (kind_ != Kind::multiplier) throw Error("operator '" + label_ + "' is not a multiplier");
    const auto key = std::make_tuple(mesh.dim(), mesh.n(), mesh.period());
    std::lock_guard<std::mutex> lock(cache_->mutex);
    auto it = cache_->tables.find(key);
    if (it != cache_->tables.end()) return it->second;
    auto t = std::make_shared<const std::vector<Complex>>(build_table(*mult_, mesh));
    cache_->tables.emplace(key, t);
    return t;
}

SpectralField OperatorHandle::apply(const SpectralField& u) const {
    require_compatible(*this, u);
    switch (kind_) {
        case Kind::multiplier:
            if (zero_) return SpectralField(u.grid());
            return apply_table(*table(u.grid()), *mult_, u);
        case Kind::quantized_dense: {
            if (!u.grid().same_mesh(*mesh_)) {
                throw Error("operator '" + label_ + "' was quantized on " + mesh_->describe() +
                            ", applied on " + u.grid().describe());
            }
            SpectralField out(u.grid());
            const auto p = static_cast<Eigen::Index>(u.grid().points());
            for (int j = 0; j < u.grid().components(); ++j) {
                Eigen::Map<const Eigen::VectorXcd> src(u.component(j).data(), p);
                Eigen::Map<Eigen::VectorXcd> dst(out.component(j).data(), p);
                dst.noalias() = (*dense_) * src;
            }
            return out;
        }
        case Kind::composite:
            return apply_fn_(u);
    }
    throw Error("unreachable");
}

SpectralField OperatorHandle::apply_adjoint(const SpectralField& u) const {
    if (out_ != 0 && out_ != u.grid().components()) {
        throw Error("adjoint of '" + label_ + "' expects " + std::to_string(out_) + " components");
    }
    switch (kind_) {
        case Kind::multiplier: {
            if (zero_) return SpectralField(u.grid());
            const auto t = table(u.grid());
            const Multiplier& m = *mult_;
            const std::size_t np = u.grid().points();
            if (m.is_scalar()) {
                SpectralField out(u.grid());
                for (int j = 0; j < u.grid().components(); ++j) {
                    for (std::size_t k = 0; k < np; ++k) out(j, k) = std::conj((*t)[k]) * u(j, k);
                }
                return out;
            }
            SpectralField out(u.grid().with_components(m.in));
            const int e = m.entries();
            for (std::size_t k = 0; k < np; ++k) {
                const Complex* row = t->data() + k * e;
                for (int j = 0; j < m.in; ++j) {
                    Complex acc{};
                    for (int i = 0; i < m.out; ++i) acc += std::conj(row[i * m.in + j]) * u(i, k);
                    out(j, k) = acc;
                }
            }
            return out;
        }
        case Kind::quantized_dense: {
            if (!u.grid().same_mesh(*mesh_)) throw Error("operator '" + label_ + "': mesh mismatch");
            SpectralField out(u.grid());
            const auto p = static_cast<Eigen::Index>(u.grid().points());
            for (int j = 0; j < u.grid().components(); ++j) {
                Eigen::Map<const Eigen::VectorXcd> src(u.component(j).data(), p);
                Eigen::Map<Eigen::VectorXcd> dst(out.component(j).data(), p);
                dst.noalias() = dense_->adjoint() * src;
            }
            return out;
        }
        case Kind::composite:
            return adjoint_fn_(u);
    }
    throw Error("unreachable");
}

OperatorHandle OperatorHandle::adjoint() const {
    switch (kind_) {
        case Kind::multiplier:
            if (zero_) return *this;
            return from_multiplier(adjoint_multiplier(*mult_), order_, label_ + "*");
        case Kind::quantized_dense:
            return from_dense(*mesh_, dense_->adjoint(), order_, label_ + "*");
        case Kind::composite:
            return from_functions(adjoint_fn_, apply_fn_, order_, out_, in_, label_ + "*");
    }
    throw Error("unreachable");
}

// ---------------------------------------------------------------------------

OperatorHandle zero_operator() { return OperatorHandle(); }

OperatorHandle identity_operator() {
    return OperatorHandle::from_multiplier(
        scalar_multiplier([](std::span<const double>) { return Complex(1.0, 0.0); }), 0.0, "I");
}

OperatorHandle compose(const OperatorHandle& a, const OperatorHandle& b) {
    using Kind = OperatorHandle::Kind;
    if (a.is_zero() || b.is_zero()) return zero_operator();
    const double order = a.order() + b.order();
    const std::string label = a.label() + "." + b.label();
    if (a.kind() == Kind::multiplier && b.kind() == Kind::multiplier) {
        return OperatorHandle::from_multiplier(compose_multipliers(*a.multiplier(), *b.multiplier()),
                                               order, label);
    }
    const Grid* ma = a.dense_mesh();
    const Grid* mb = b.dense_mesh();
    if (ma && mb && ma->same_mesh(*mb)) {
        return OperatorHandle::from_dense(*ma, (*a.dense()) * (*b.dense()), order, label);
    }
    if (ma && scalar_multiplier_kind(b)) {
        return OperatorHandle::from_dense(
            *ma, (*a.dense()) * scalar_table_vector(b, *ma).asDiagonal(), order, label);
    }
    if (mb && scalar_multiplier_kind(a)) {
        return OperatorHandle::from_dense(
            *mb, scalar_table_vector(a, *mb).asDiagonal() * (*b.dense()), order, label);
    }
    const int in = b.in_components() != 0 ? b.in_components() : a.in_components();
    const int out = a.out_components() != 0 ? a.out_components() : b.out_components();
    return OperatorHandle::from_functions(
        [a, b](const SpectralField& u) { return a.apply(b.apply(u)); },
        [a, b](const SpectralField& u) { return b.apply_adjoint(a.apply_adjoint(u)); }, order, in,
        out, label);
}

OperatorHandle add(const OperatorHandle& a, const OperatorHandle& b) {
    using Kind = OperatorHandle::Kind;
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    const double order = std::max(a.order(), b.order());
    const std::string label = "(" + a.label() + "+" + b.label() + ")";
    if (a.kind() == Kind::multiplier && b.kind() == Kind::multiplier) {
        return OperatorHandle::from_multiplier(add_multipliers(*a.multiplier(), *b.multiplier()),
                                               order, label);
    }
    const Grid* ma = a.dense_mesh();
    const Grid* mb = b.dense_mesh();
    if (ma && mb && ma->same_mesh(*mb)) {
        return OperatorHandle::from_dense(*ma, (*a.dense()) + (*b.dense()), order, label);
    }
    if (ma && scalar_multiplier_kind(b)) {
        Eigen::MatrixXcd m = *a.dense();
        m.diagonal() += scalar_table_vector(b, *ma);
        return OperatorHandle::from_dense(*ma, std::move(m), order, label);
    }
    if (mb && scalar_multiplier_kind(a)) {
        Eigen::MatrixXcd m = *b.dense();
        m.diagonal() += scalar_table_vector(a, *mb);
        return OperatorHandle::from_dense(*mb, std::move(m), order, label);
    }
    if (a.in_components() != b.in_components() || a.out_components() != b.out_components()) {
        throw Error("add: component mismatch between '" + a.label() + "' and '" + b.label() + "'");
    }
    return OperatorHandle::from_functions(
        [a, b](const SpectralField& u) { return a.apply(u) + b.apply(u); },
        [a, b](const SpectralField& u) { return a.apply_adjoint(u) + b.apply_adjoint(u); }, order,
        a.in_components(), a.out_components(), label);
}

OperatorHandle scale(Complex factor, const OperatorHandle& a) {
    using Kind = OperatorHandle::Kind;
    if (a.is_zero() || factor == Complex{}) return zero_operator();
    std::string label = std::to_string(factor.real());
    if (factor.imag() != 0.0) label += (factor.imag() > 0 ? "+" : "") + std::to_string(factor.imag()) + "i";
    label += "*" + a.label();
    if (a.kind() == Kind::multiplier) {
        Multiplier m = *a.multiplier();
        auto inner = std::make_shared<const Multiplier>(m);
        const int e = m.entries();
        m.eval = [inner, factor, e](std::span<const double> k, Complex* v) {
            inner->eval(k, v);
            for (int i = 0; i < e; ++i) v[i] *= factor;
        };
        return OperatorHandle::from_multiplier(std::move(m), a.order(), label);
    }
    if (a.kind() == Kind::quantized_dense) {
        return OperatorHandle::from_dense(*a.dense_mesh(), factor * (*a.dense()), a.order(), label);
    }
    return OperatorHandle::from_functions(
        [a, factor](const SpectralField& u) {
            SpectralField v = a.apply(u);
            for (auto& c : v.coeffs()) c *= factor;
            return v;
        },
        [a, factor](const SpectralField& u) {
            SpectralField v = a.apply_adjoint(u);
            for (auto& c : v.coeffs()) c *= std::conj(factor);
            return v;
        },
        a.order(), a.in_components(), a.out_components(), label);
}

// ---------------------------------------------------------------------------

double mollifier_profile(double y) noexcept {
    const double r = std::abs(y);
    if (r <= 1.0) return 1.0;
    if (r >= 2.0) return 0.0;
    const double t = r - 1.0;
    return 1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
}

OperatorHandle bessel_potential(double s) {
    return OperatorHandle::from_multiplier(
        scalar_multiplier([s](std::span<const double> k) {
            return Complex(std::pow(1.0 + norm_sq(k), 0.5 * s), 0.0);
        }),
        s, "D^" + std::to_string(s));
}

OperatorHandle fractional_laplacian(double s) {
    return OperatorHandle::from_multiplier(
        scalar_multiplier([s](std::span<const double> k) {
            const double k2 = norm_sq(k);
            return Complex(k2 == 0.0 ? 0.0 : std::pow(k2, 0.5 * s), 0.0);
        }),
        s, "Lambda^" + std::to_string(s));
}

OperatorHandle derivative_operator(int axis, int order) {
    if (axis < 0 || axis > 2) throw Error("derivative_operator: axis out of range");
    if (order < 0) throw Error("derivative_operator: negative order");
    return OperatorHandle::from_multiplier(
        scalar_multiplier([axis, order](std::span<const double> k) {
            if (axis >= static_cast<int>(k.size())) throw Error("derivative_operator: axis exceeds dim");
            Complex v(1.0, 0.0);
            for (int p = 0; p < order; ++p) v *= Complex(0.0, k[axis]);
            return v;
        }),
        order, "d" + std::to_string(axis) + "^" + std::to_string(order));
}

OperatorHandle leray_blocks(int dim, int blocks, bool zero_average) {
    if (dim < 2) throw Error("leray_projection: requires d >= 2");
    if (blocks < 1) throw Error("leray_projection: blocks must be positive");
    Multiplier m;
    m.in = m.out = dim * blocks;
    const int size = dim * blocks;
    m.eval = [dim, blocks, size, zero_average](std::span<const double> k, Complex* v) {
        if (static_cast<int>(k.size()) != dim) throw Error("leray_projection: grid dimension mismatch");
        std::fill(v, v + size * size, Complex{});
        const double k2 = norm_sq(k);
        for (int b = 0; b < blocks; ++b) {
            for (int i = 0; i < dim; ++i) {
                for (int j = 0; j < dim; ++j) {
                    double val;
                    if (k2 == 0.0) {
                        val = (i == j && !zero_average) ? 1.0 : 0.0;
                    } else {
                        val = (i == j ? 1.0 : 0.0) - k[i] * k[j] / k2;
                    }
                    v[(b * dim + i) * size + (b * dim + j)] = val;
                }
            }
        }
    };
    return OperatorHandle::from_multiplier(std::move(m), 0.0, zero_average ? "Pi_d.Pi_0" : "Pi_d");
}

OperatorHandle leray_projection(const Grid& grid, bool zero_average) {
    if (grid.components() != grid.dim() || grid.dim() < 2) {
        throw Error("leray_projection: requires m = d >= 2, got " + grid.describe());
    }
    return leray_blocks(grid.dim(), 1, zero_average);
}

OperatorHandle zero_average_projection(const Grid&) {
    return OperatorHandle::from_multiplier(
        scalar_multiplier([](std::span<const double> k) {
            return Complex(norm_sq(k) == 0.0 ? 0.0 : 1.0, 0.0);
        }),
        0.0, "Pi_0");
}

OperatorHandle riesz_perp(const Grid& grid) {
    if (grid.dim() != 2 || grid.components() != 1) {
        throw Error("riesz_perp: requires d = 2, m = 1, got " + grid.describe());
    }
    Multiplier m;
    m.in = 1;
    m.out = 2;
    m.eval = [](std::span<const double> k, Complex* v) {
        if (k.size() != 2) throw Error("riesz_perp: grid dimension mismatch");
        const double kn = std::sqrt(norm_sq(k));
        if (kn == 0.0) {
            v[0] = v[1] = Complex{};
            return;
        }
        v[0] = Complex(0.0, -k[1] / kn);
        v[1] = Complex(0.0, k[0] / kn);
    };
    return OperatorHandle::from_multiplier(std::move(m), 0.0, "R_perp");
}

OperatorHandle mollifier(int n, const Grid&) {
    if (n < 1) throw Error("mollifier: n must be >= 1, got " + std::to_string(n));
    const double inv = 1.0 / n;
    return OperatorHandle::from_multiplier(
        scalar_multiplier([inv](std::span<const double> k) {
            return Complex(mollifier_profile(std::sqrt(norm_sq(k)) * inv), 0.0);
        }),
        0.0, "J_" + std::to_string(n));
}

// ---------------------------------------------------------------------------

namespace {

void quantize_guard(const Grid& grid) {
    const int n = grid.n();
    const bool ok = (grid.dim() == 1 && n <= 64) || (grid.dim() == 2 && n <= 32);
    if (!ok) throw Error("quantize: dense representation too large for " + grid.describe());
}

// Column k of the dense matrix holds the coefficients of p(x, k) e^{ik.x} / L^d
// on the frequency box. The product is sampled on a 2x mesh so the symbol's x
// content does not wrap around the box; Nyquist rows are dropped.
template <typename SymbolAt>
Eigen::MatrixXcd assemble_dense(const Grid& mesh, SymbolAt&& symbol_at) {
    const std::size_t np = mesh.points();
    const Grid fine(mesh.dim(), 1, 2 * mesh.n(), mesh.period());
    const std::size_t nf = fine.points();
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(np), static_cast<Eigen::Index>(np));
    std::vector<Complex> column(nf);
    std::vector<std::size_t> row_in_fine(np);
    std::array<int, 3> freq{};
    for (std::size_t r = 0; r < np; ++r) {
        for (int a = 0; a < mesh.dim(); ++a) freq[a] = mesh.frequency(r, a);
        row_in_fine[r] = fine.flat_index(std::span<const int>(freq.data(), mesh.dim()));
    }
    std::array<double, 3> kv{};
    const double inv_volume = 1.0 / mesh.volume();
    const double w = fine.weight();
    for (std::size_t k = 0; k < np; ++k) {
        mesh.wavenumber(k, std::span<double>(kv.data(), mesh.dim()));
        for (std::size_t p = 0; p < nf; ++p) {
            double phase = 0.0;
            for (int a = 0; a < mesh.dim(); ++a) phase += kv[a] * fine.coordinate(p, a);
            Complex value{};
            for_each_nyquist_image(mesh, k, [&](std::span<const double> img, double share) {
                value += share * symbol_at(fine, p, img);
            });
            column[p] = value * std::polar(inv_volume, phase);
        }
        fft(column, fine, false);
        for (std::size_t r = 0; r < np; ++r) {
            if (mesh.is_nyquist(r)) continue;
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = w * column[row_in_fine[r]];
        }
    }
    return m;
}

}  // namespace

OperatorHandle quantize(const XSymbol& sym, const Grid& grid) {
    if (!sym.eval) throw Error("quantize: symbol has no evaluator");
    quantize_guard(grid);
    Grid mesh = grid.with_components(1);
    const std::size_t np = mesh.points();
    std::array<double, 3> x{}, kv{}, nk{};
    // reality condition p(x, -k) = conj p(x, k) off the Nyquist planes
    for (std::size_t k = 0; k < np; ++k) {
        if (mesh.is_nyquist(k)) continue;
        mesh.wavenumber(k, std::span<double>(kv.data(), mesh.dim()));
        for (int a = 0; a < mesh.dim(); ++a) nk[a] = -kv[a];
        for (std::size_t p = 0; p < np; ++p) {
            for (int a = 0; a < mesh.dim(); ++a) x[a] = mesh.coordinate(p, a);
            const std::span<const double> xs(x.data(), mesh.dim());
            const Complex v = sym.eval(xs, std::span<const double>(kv.data(), mesh.dim()));
            const Complex w = sym.eval(xs, std::span<const double>(nk.data(), mesh.dim()));
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
                throw Error("quantize: symbol '" + sym.label + "' is not finite");
            }
            if (std::abs(w - std::conj(v)) > 1e-12 * std::max(1.0, std::abs(v))) {
                throw Error("quantize: symbol '" + sym.label + "' violates the reality condition");
            }
        }
    }
    Eigen::MatrixXcd m = assemble_dense(mesh, [&](const Grid& fine, std::size_t p, std::span<const double> k) {
        for (int a = 0; a < fine.dim(); ++a) x[a] = fine.coordinate(p, a);
        return sym.eval(std::span<const double>(x.data(), fine.dim()), k);
    });
    return OperatorHandle::from_dense(mesh, std::move(m), sym.order, sym.label);
}

OperatorHandle multiplication_operator(const SpectralField& g) {
    if (g.grid().components() != 1) throw Error("multiplication_operator: g must be scalar");
    quantize_guard(g.grid());
    const RealField values = to_real(pad(g, 2 * g.grid().n()));
    Eigen::MatrixXcd m = assemble_dense(g.grid(), [&](const Grid&, std::size_t p, std::span<const double>) {
        return Complex(values(0, p), 0.0);
    });
    return OperatorHandle::from_dense(g.grid(), std::move(m), 0.0, "g*");
}

SpectralField commutator_apply(const OperatorHandle& a, const OperatorHandle& b,
                               const SpectralField& f) {
    return a.apply(b.apply(f)) - b.apply(a.apply(f));
}

// ---------------------------------------------------------------------------

namespace {

long binomial(int n, int k) {
    long r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// values_at(freq) returns the symbol sampled over x (one entry per grid point,
// or a single entry for x-independent symbols), already differentiated in x.
template <typename ValuesAt>
SeminormReport seminorm_impl(const Grid& grid, std::span<const int> alpha, double s,
                             ValuesAt&& values_at) {
    const int d = grid.dim();
    int alpha_abs = 0;
    for (int a : alpha) alpha_abs += a;
    const int radius = grid.n() / 2 - 1;
    std::map<std::vector<int>, std::vector<Complex>> memo;
    auto get = [&](const std::vector<int>& f) -> const std::vector<Complex>& {
        auto it = memo.find(f);
        if (it != memo.end()) return it->second;
        return memo.emplace(f, values_at(f)).first->second;
    };
    auto sup_over = [&](int r) {
        double best = 0.0;
        std::vector<int> f(d, -r);
        while (true) {
            bool inside = true;
            for (int a = 0; a < d; ++a) inside = inside && f[a] + alpha[a] <= r;
            if (inside) {
                std::vector<Complex> acc;
                // forward difference Delta^alpha = sum_gamma (-1)^{|alpha-gamma|} C(alpha,gamma) p(k+gamma)
                std::vector<int> gamma(d, 0);
                while (true) {
                    long coeff = 1;
                    int sign_exp = 0;
                    std::vector<int> shifted(f);
                    for (int a = 0; a < d; ++a) {
                        coeff *= binomial(alpha[a], gamma[a]);
                        sign_exp += alpha[a] - gamma[a];
                        shifted[a] += gamma[a];
                    }
                    const double c = (sign_exp % 2 == 0 ? 1.0 : -1.0) * static_cast<double>(coeff);
                    const auto& vals = get(shifted);
                    if (acc.empty()) acc.assign(vals.size(), Complex{});
                    for (std::size_t i = 0; i < vals.size(); ++i) acc[i] += c * vals[i];
                    int a = 0;
                    for (; a < d; ++a) {
                        if (++gamma[a] <= alpha[a]) break;
                        gamma[a] = 0;
                    }
                    if (a == d) break;
                }
                double kn = 0.0;
                for (int a = 0; a < d; ++a) {
                    const double k = grid.wavenumber_scale() * f[a];
                    kn += k * k;
                }
                const double weight = std::pow(1.0 + std::sqrt(kn), s - alpha_abs);
                for (const auto& v : acc) best = std::max(best, std::abs(v) / weight);
            }
            int a = 0;
            for (; a < d; ++a) {
                if (++f[a] <= r) break;
                f[a] = -r;
            }
            if (a == d) break;
        }
        return best;
    };
    SeminormReport rep;
    rep.value = sup_over(radius);
    rep.value_half = sup_over(std::max(1, radius / 2));
    if (rep.value_half > 0.0) {
        rep.growth = rep.value / rep.value_half;
    } else {
        rep.growth = rep.value > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
    }
    rep.bounded = rep.growth < 1.2;
    return rep;
}

void check_indices(const Grid& grid, std::span<const int> beta, std::span<const int> alpha, int cap) {
    if (static_cast<int>(beta.size()) != grid.dim() || static_cast<int>(alpha.size()) != grid.dim()) {
        throw Error("symbol_seminorm: multi-index size must equal dim");
    }
    int ab = 0, bb = 0;
    for (int a : alpha) {
        if (a < 0) throw Error("symbol_seminorm: negative multi-index");
        ab += a;
    }
    for (int b : beta) {
        if (b < 0) throw Error("symbol_seminorm: negative multi-index");
        bb += b;
    }
    if (ab > cap || bb > cap) {
        throw Error("symbol_seminorm: multi-index order exceeds cap " + std::to_string(cap));
    }
}

}  // namespace

SeminormReport symbol_seminorm(const XSymbol& sym, const Grid& grid, std::span<const int> beta,
                               std::span<const int> alpha, double s, int cap) {
    check_indices(grid, beta, alpha, cap);
    Grid mesh = grid.with_components(1);
    const std::size_t np = mesh.points();
    bool any_beta = false;
    for (int b : beta) any_beta = any_beta || b > 0;
    return seminorm_impl(mesh, alpha, s, [&](const std::vector<int>& f) {
        std::array<double, 3> kv{};
        for (int a = 0; a < mesh.dim(); ++a) kv[a] = mesh.wavenumber_scale() * f[a];
        std::vector<Complex> vals(np);
        std::array<double, 3> x{};
        for (std::size_t p = 0; p < np; ++p) {
            for (int a = 0; a < mesh.dim(); ++a) x[a] = mesh.coordinate(p, a);
            vals[p] = sym.eval(std::span<const double>(x.data(), mesh.dim()),
                               std::span<const double>(kv.data(), mesh.dim()));
        }
        if (!any_beta) return vals;
        fft(vals, mesh, false);
        for (std::size_t q = 0; q < np; ++q) {
            Complex factor(1.0 / static_cast<double>(np), 0.0);
            for (int a = 0; a < mesh.dim(); ++a) {
                const int fr = mesh.frequency(q, a);
                if (fr == mesh.n() / 2 && beta[a] % 2 == 1) factor = 0.0;
                for (int p = 0; p < beta[a]; ++p) factor *= Complex(0.0, mesh.wavenumber_scale() * fr);
            }
            vals[q] *= factor;
        }
        fft(vals, mesh, true);
        return vals;
    });
}

SeminormReport symbol_seminorm(const Multiplier& sym, const Grid& grid, std::span<const int> beta,
                               std::span<const int> alpha, double s, int cap) {
    check_indices(grid, beta, alpha, cap);
    for (int b : beta) {
        if (b > 0) return SeminormReport{0.0, 0.0, 1.0, true};
    }
    Grid mesh = grid.with_components(1);
    const int e = sym.entries();
    return seminorm_impl(mesh, alpha, s, [&](const std::vector<int>& f) {
        std::array<double, 3> kv{};
        for (int a = 0; a < mesh.dim(); ++a) kv[a] = mesh.wavenumber_scale() * f[a];
        std::vector<Complex> vals(e);
        sym.eval(std::span<const double>(kv.data(), mesh.dim()), vals.data());
        return vals;
    });
}

double max_symbol_magnitude(const OperatorHandle& op, const Grid& mesh) {
    if (op.is_zero()) return 0.0;
    const auto t = op.table(mesh);
    double m = 0.0;
    for (const auto& v : *t) m = std::max(m, std::abs(v));
    return m;
}

std::vector<Complex> diagonal_table(const OperatorHandle& op, const Grid& mesh) {
    const std::size_t np = mesh.points();
    const int m = mesh.components();
    std::vector<Complex> out(np * m, Complex{});
    if (op.is_zero()) return out;
    const Multiplier* mult = op.multiplier();
    if (!mult) throw Error("diagonal_table: operator '" + op.label() + "' is not a multiplier");
    const auto t = op.table(mesh);
    if (mult->is_scalar()) {
        for (int j = 0; j < m; ++j) std::copy(t->begin(), t->end(), out.begin() + j * np);
        return out;
    }
    if (mult->in != m || mult->out != m) throw Error("diagonal_table: component mismatch");
    const int e = mult->entries();
    for (std::size_t k = 0; k < np; ++k) {
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < m; ++j) {
                const Complex v = (*t)[k * e + i * m + j];
                if (i == j) {
                    out[i * np + k] = v;
                } else if (v != Complex{}) {
                    throw Error("diagonal_table: operator '" + op.label() + "' is not diagonal");
                }
            }
        }
    }
    return out;
}

}  // namespace psdoflow
