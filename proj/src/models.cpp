#include "psdoflow/models.hpp"

#include "psdoflow/spectral.hpp"

#include <cmath>
#include <map>

namespace psdoflow {

std::string to_string(ModelName name) {
    switch (name) {
        case ModelName::linear: return "linear";
        case ModelName::burgers: return "burgers";
        case ModelName::ch: return "ch";
        case ModelName::mch: return "mch";
        case ModelName::kdv: return "kdv";
        case ModelName::mhd: return "mhd";
        case ModelName::ad: return "ad";
        case ModelName::sqg: return "sqg";
    }
    return "unknown";
}

ModelName parse_model_name(const std::string& name) {
    static const std::map<std::string, ModelName> names = {
        {"linear", ModelName::linear}, {"burgers", ModelName::burgers}, {"ch", ModelName::ch},
        {"mch", ModelName::mch},       {"kdv", ModelName::kdv},         {"mhd", ModelName::mhd},
        {"ad", ModelName::ad},         {"sqg", ModelName::sqg}};
    auto it = names.find(name);
    if (it == names.end()) throw Error("model.name: unknown model '" + name + "'");
    return it->second;
}

namespace {

void require_scalar_1d(const SpectralField& x, const char* what) {
    if (x.grid().dim() != 1 || x.grid().components() != 1) {
        throw Error(std::string(what) + ": requires d = m = 1, got " + x.grid().describe());
    }
}

RealField padded_values(const SpectralField& u, int n) { return to_real(pad(u, n)); }

SpectralField from_padded(const RealField& f, int n_coarse) {
    return truncate(to_spectral(f), n_coarse);
}

// -d D^{-2p}, the smoothing derivative used by the CH-type regular parts.
const OperatorHandle& smoothing_derivative(int p) {
    static const OperatorHandle d2 = scale(-1.0, compose(derivative_operator(0), bessel_potential(-2.0)));
    static const OperatorHandle d4 = scale(-1.0, compose(derivative_operator(0), bessel_potential(-4.0)));
    return p == 1 ? d2 : d4;
}

SpectralField minus_half_d_square(const SpectralField& x) {
    SpectralField sq = dealiased_product({&x, &x});
    SpectralField out = derivative(sq, 0, 1);
    out *= -0.5;
    return out;
}

// sum_j a_j d_j b, every factor sampled on the padded mesh.
RealField advect(const RealField& a, int a_first, const std::vector<RealField>& grad_b, int comp) {
    const Grid& g = a.grid();
    const int d = g.dim();
    RealField out(g.with_components(1));
    for (int j = 0; j < d; ++j) {
        const auto aj = a.component(a_first + j);
        const auto dj = grad_b[j].component(comp);
        auto o = out.component(0);
        for (std::size_t p = 0; p < g.points(); ++p) o[p] += aj[p] * dj[p];
    }
    return out;
}

}  // namespace

SpectralField drift_burgers(const SpectralField& x) {
    require_scalar_1d(x, "drift_burgers");
    return minus_half_d_square(x);
}

DriftParts drift_ch(const SpectralField& x, const ModelParams& params) {
    require_scalar_1d(x, "drift_ch");
    DriftParts out{SpectralField(x.grid()), minus_half_d_square(x)};
    bool any = params.a_grad != 0.0;
    for (double a : params.a_poly) any = any || a != 0.0;
    if (!any) return out;
    const int nf = 3 * x.grid().n();
    const RealField xv = padded_values(x, nf);
    const RealField dx = padded_values(derivative(x, 0, 1), nf);
    RealField poly(xv.grid());
    for (std::size_t p = 0; p < xv.grid().points(); ++p) {
        const double v = xv(0, p);
        const auto& a = params.a_poly;
        poly(0, p) = v * (a[0] + v * (a[1] + v * (a[2] + v * a[3]))) + params.a_grad * dx(0, p) * dx(0, p);
    }
    out.b = smoothing_derivative(1).apply(from_padded(poly, x.grid().n()));
    return out;
}

DriftParts drift_mch(const SpectralField& x) {
    require_scalar_1d(x, "drift_mch");
    const SpectralField d1 = derivative(x, 0, 1);
    const SpectralField d2 = derivative(x, 0, 2);
    const SpectralField d3 = derivative(x, 0, 3);
    SpectralField inner = dealiased_product({&x, &x});
    inner.axpy(2.0, dealiased_product({&d1, &d1}));
    inner.axpy(-3.5, dealiased_product({&d2, &d2}));
    inner.axpy(-3.0, derivative(dealiased_product({&x, &d3}), 0, 1));
    return DriftParts{smoothing_derivative(2).apply(inner), minus_half_d_square(x)};
}

SpectralField drift_kdv(const SpectralField& x) {
    require_scalar_1d(x, "drift_kdv");
    SpectralField out = minus_half_d_square(x);
    out -= derivative(x, 0, 3);
    return out;
}

SpectralField drift_mhd(const SpectralField& x) {
    const Grid& g = x.grid();
    const int d = g.dim();
    if (d < 2 || g.components() != 2 * d) {
        throw Error("drift_mhd: requires d >= 2 and m = 2d, got " + g.describe());
    }
    const double div = l2_norm(divergence(x));
    if (div > 1e-8 * std::max(1.0, l2_norm(x))) {
        throw Error("drift_mhd: input is not divergence free (residue " + std::to_string(div) + ")");
    }
    const int nf = dealias_size(g.n(), 2);
    const RealField values = padded_values(x, nf);
    std::vector<RealField> grad;
    grad.reserve(d);
    for (int j = 0; j < d; ++j) grad.push_back(padded_values(derivative(x, j, 1), nf));
    // components 0..d-1 are V, d..2d-1 are M
    const Grid fine = values.grid();
    RealField out(fine);
    for (int i = 0; i < d; ++i) {
        const RealField mm = advect(values, d, grad, d + i);
        const RealField vv = advect(values, 0, grad, i);
        const RealField mv = advect(values, d, grad, i);
        const RealField vm = advect(values, 0, grad, d + i);
        for (std::size_t p = 0; p < fine.points(); ++p) {
            out(i, p) = mm(0, p) - vv(0, p);
            out(d + i, p) = mv(0, p) - vm(0, p);
        }
    }
    SpectralField result = from_padded(out, g.n());
    static const OperatorHandle leray_zero_mean = leray_blocks(2, 1, true);
    const OperatorHandle P = d == 2 ? leray_zero_mean : leray_blocks(d, 1, true);
    SpectralField first = P.apply(slice_components(result, 0, d));
    const SpectralField parts[2] = {first, slice_components(result, d, d)};
    return concatenate(parts);
}

SpectralField drift_ad(const SpectralField& x, const OperatorHandle& phi, double gamma) {
    const Grid& g = x.grid();
    if (g.components() != 1) throw Error("drift_ad: requires m = 1, got " + g.describe());
    const int d = g.dim();
    const SpectralField potential = phi.apply(x);
    const int nf = dealias_size(g.n(), 2);
    const RealField xv = padded_values(x, nf);
    SpectralField flux_div(g);
    for (int j = 0; j < d; ++j) {
        const RealField bj = padded_values(derivative(potential, j, 1), nf);
        RealField prod(xv.grid());
        for (std::size_t p = 0; p < xv.grid().points(); ++p) prod(0, p) = xv(0, p) * bj(0, p);
        flux_div += derivative(from_padded(prod, g.n()), j, 1);
    }
    flux_div *= -gamma;
    return flux_div;
}

SpectralField drift_sqg(const SpectralField& x) {
    const Grid& g = x.grid();
    if (g.dim() != 2 || g.components() != 1) throw Error("drift_sqg: requires d = 2, m = 1, got " + g.describe());
    if (std::abs(x(0, 0)) > 1e-10 * std::max(1.0, x.max_abs())) {
        throw Error("drift_sqg: input must have zero mean");
    }
    static const OperatorHandle R = riesz_perp(Grid(2, 1, 4));
    static const OperatorHandle P0 = zero_average_projection(Grid(2, 1, 4));
    const int nf = dealias_size(g.n(), 2);
    const RealField u = padded_values(R.apply(x), nf);
    const RealField d1 = padded_values(derivative(x, 0, 1), nf);
    const RealField d2 = padded_values(derivative(x, 1, 1), nf);
    RealField adv(d1.grid());
    for (std::size_t p = 0; p < adv.grid().points(); ++p) {
        adv(0, p) = -(u(0, p) * d1(0, p) + u(1, p) * d2(0, p));
    }
    return P0.apply(from_padded(adv, g.n()));
}

// ---------------------------------------------------------------------------

ModelSpec make_model(ModelName name, const Grid& grid, ModelParams params) {
    ModelSpec spec;
    spec.name = name;
    spec.grid = grid;
    const int d = grid.dim();
    const int m = grid.components();
    auto require = [&](bool ok, const std::string& what) {
        if (!ok) throw Error("model " + to_string(name) + ": " + what + " (grid " + grid.describe() + ")");
    };
    switch (name) {
        case ModelName::burgers:
        case ModelName::ch:
        case ModelName::mch:
        case ModelName::kdv:
            require(d == 1 && m == 1, "requires d = m = 1");
            break;
        case ModelName::mhd:
            require(d >= 2 && m == 2 * d, "requires d >= 2 and m = 2d");
            break;
        case ModelName::ad:
            require(m == 1, "requires m = 1");
            break;
        case ModelName::sqg:
            require(d == 2 && m == 1, "requires d = 2, m = 1");
            break;
        case ModelName::linear:
            break;
    }
    if (name == ModelName::mhd) {
        require(params.mu1 >= 0.0 && params.mu2 >= 0.0, "negative viscosity");
        require(params.alpha1 >= 0.0 && params.alpha1 <= 1.0 && params.alpha2 >= 0.0 && params.alpha2 <= 1.0,
                "alpha1, alpha2 must lie in [0, 1]");
        Multiplier diss;
        diss.in = diss.out = 2 * d;
        const double mu[2] = {params.mu1, params.mu2};
        const double al[2] = {params.alpha1, params.alpha2};
        const int size = 2 * d;
        diss.eval = [=](std::span<const double> k, Complex* v) {
            double k2 = 0.0;
            for (double x : k) k2 += x * x;
            std::fill(v, v + size * size, Complex{});
            for (int b = 0; b < 2; ++b) {
                const double val = k2 == 0.0 ? 0.0 : -mu[b] * std::pow(k2, al[b]);
                for (int i = 0; i < d; ++i) v[(b * d + i) * size + b * d + i] = val;
            }
        };
        spec.dissipation = (params.mu1 == 0.0 && params.mu2 == 0.0)
                               ? zero_operator()
                               : OperatorHandle::from_multiplier(std::move(diss), 2.0 * std::max(params.alpha1, params.alpha2),
                                                                 "E_mhd");
        spec.projection = leray_blocks(d, 2, true);
    } else {
        require(params.nu >= 0.0, "negative viscosity");
        require(params.beta >= 0.0 && params.beta <= 1.0, "beta must lie in [0, 1]");
        spec.dissipation = params.nu == 0.0 ? zero_operator()
                                            : scale(-params.nu, fractional_laplacian(2.0 * params.beta));
        spec.projection = name == ModelName::sqg ? zero_average_projection(grid) : identity_operator();
    }
    if (name == ModelName::kdv) spec.dispersion = scale(-1.0, derivative_operator(0, 3));
    if (name == ModelName::ad) {
        require(params.gamma >= 0.0, "gamma must be nonnegative");
        const Multiplier* sym = params.phi.multiplier();
        require(sym != nullptr && sym->is_scalar(), "Phi must be a scalar multiplier");
        const int zero[3] = {0, 0, 0};
        const auto rep = symbol_seminorm(*sym, grid.with_components(1), std::span<const int>(zero, d),
                                         std::span<const int>(zero, d), -2.0);
        require(rep.bounded, "Phi symbol is not of order -2");
    }
    spec.params = std::move(params);
    return spec;
}

DriftParts nonlinear_drift(const ModelSpec& model, const SpectralField& x) {
    switch (model.name) {
        case ModelName::linear:
            return DriftParts{SpectralField(x.grid()), SpectralField(x.grid())};
        case ModelName::burgers:
            return DriftParts{SpectralField(x.grid()), drift_burgers(x)};
        case ModelName::ch:
            return drift_ch(x, model.params);
        case ModelName::mch:
            return drift_mch(x);
        case ModelName::kdv:
            require_scalar_1d(x, "drift_kdv");
            return DriftParts{SpectralField(x.grid()), minus_half_d_square(x)};
        case ModelName::mhd:
            return DriftParts{SpectralField(x.grid()), drift_mhd(x)};
        case ModelName::ad:
            return DriftParts{SpectralField(x.grid()), drift_ad(x, model.params.phi, model.params.gamma)};
        case ModelName::sqg:
            return DriftParts{SpectralField(x.grid()), drift_sqg(x)};
    }
    throw Error("unreachable");
}

SpectralField linear_drift(const ModelSpec& model, const SpectralField& x) {
    SpectralField out = model.dissipation.apply(x);
    if (!model.dispersion.is_zero()) out += model.dispersion.apply(x);
    return out;
}

const OperatorHandle& dissipation(const ModelSpec& model) { return model.dissipation; }

// ---------------------------------------------------------------------------

SpectralField initial_data(const InitialData& spec, const ModelSpec& model) {
    const Grid& g = model.grid;
    const int d = g.dim();
    const double amp = spec.amplitude;
    RealField f(g);
    auto fill = [&](auto&& fn) {
        for (int j = 0; j < g.components(); ++j) {
            for (std::size_t p = 0; p < g.points(); ++p) {
                double x[3] = {};
                for (int a = 0; a < d; ++a) x[a] = g.coordinate(p, a);
                f(j, p) = fn(j, x);
            }
        }
    };
    const double s = g.wavenumber_scale();
    const std::string& name = spec.preset;
    if (name == "zero") {
        return SpectralField(g);
    } else if (name == "sine" || name == "cosine") {
        const bool sine = name == "sine";
        fill([&](int, const double* x) {
            const double arg = spec.mode * s * x[0];
            return amp * (sine ? std::sin(arg) : std::cos(arg));
        });
    } else if (name == "taylor-green") {
        if (d != 2 || (g.components() != 2 && g.components() != 4)) {
            throw Error("initial.preset taylor-green: requires d = 2 with m = 2 or 4");
        }
        fill([&](int j, const double* x) {
            const double a = s * x[0], b = s * x[1];
            switch (j) {
                case 0: return amp * std::sin(a) * std::cos(b);
                case 1: return -amp * std::cos(a) * std::sin(b);
                case 2: return 0.5 * amp * std::cos(b);
                default: return 0.5 * amp * std::cos(a);
            }
        });
    } else if (name == "ch-smooth") {
        if (d != 1) throw Error("initial.preset ch-smooth: requires d = 1");
        fill([&](int, const double* x) { return amp * (std::cos(s * x[0]) + 0.3 * std::sin(2 * s * x[0])); });
    } else if (name == "sqg-shear") {
        if (d != 2) throw Error("initial.preset sqg-shear: requires d = 2");
        fill([&](int, const double* x) {
            return amp * (std::sin(s * x[1]) + 0.2 * std::cos(s * x[0]) * std::sin(s * x[1]));
        });
    } else if (name == "random") {
        SpectralField u = random_band_limited(g, spec.seed, spec.max_freq, spec.decay);
        if (model.name == ModelName::mhd || model.name == ModelName::sqg) u = model.projection.apply(u);
        const double rms = l2_norm(u) / std::sqrt(g.volume() * g.components());
        if (rms > 0.0) u *= amp / rms;
        return u;
    } else {
        throw Error("initial.preset: unknown preset '" + name + "'");
    }
    SpectralField u = to_spectral(f);
    clear_nyquist(u);
    return u;
}

}  // namespace psdoflow
