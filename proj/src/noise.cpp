#include "psdoflow/noise.hpp"

#include "psdoflow/rng.hpp"
#include "psdoflow/spectral.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace psdoflow {

int NoiseFamily::size() const noexcept {
    return static_cast<int>(std::max({a.size(), q.size(), h.size()}));
}

bool NoiseFamily::empty() const noexcept {
    auto nonzero = [](const std::vector<double>& v) {
        return std::any_of(v.begin(), v.end(), [](double x) { return x != 0.0; });
    };
    return !nonzero(a) && !nonzero(q) && h.empty();
}

Eigen::MatrixXcd dense_matrix(const OperatorHandle& op, const Grid& mesh) {
    Grid g = mesh.with_components(1);
    if (const Eigen::MatrixXcd* d = op.dense()) {
        if (!op.dense_mesh()->same_mesh(g)) throw Error("dense_matrix: mesh mismatch");
        return *d;
    }
    const auto np = static_cast<Eigen::Index>(g.points());
    Eigen::MatrixXcd m(np, np);
    for (Eigen::Index k = 0; k < np; ++k) {
        SpectralField e(g);
        e(0, static_cast<std::size_t>(k)) = 1.0;
        const SpectralField col = op.apply(e);
        if (col.grid().components() != 1) throw Error("dense_matrix: operator is not scalar");
        for (Eigen::Index r = 0; r < np; ++r) m(r, k) = col(0, static_cast<std::size_t>(r));
    }
    return m;
}

namespace {

int max_abs_frequency(const Grid& g, std::size_t k) {
    int m = 0;
    for (int a = 0; a < g.dim(); ++a) m = std::max(m, std::abs(g.frequency(k, a)));
    return m;
}

double order_from(double full, double half) {
    if (full <= 1e-12) return -std::numeric_limits<double>::infinity();
    if (half <= 1e-12) return std::numeric_limits<double>::infinity();
    return std::log2(full / half);
}

// Sampling tolerance: a bounded defect may still wiggle a little between boxes.
constexpr double kOrderTolerance = 0.25;

DefectEstimate multiplier_defect(const OperatorHandle& op, const Grid& grid) {
    const Multiplier* m = op.multiplier();
    const Grid g = grid.with_components(1);
    const auto t = op.table(g);
    const int e = m->entries();
    const int n = m->is_scalar() ? 1 : m->in;
    const int radius = g.n() / 2 - 1;
    DefectEstimate d;
    for (std::size_t k = 0; k < g.points(); ++k) {
        if (g.is_nyquist(k)) continue;
        const Complex* s = t->data() + k * e;
        double size = 0.0;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                const Complex v = m->is_scalar() ? 2.0 * s[0].real() : s[i * n + j] + std::conj(s[j * n + i]);
                size = std::max(size, std::abs(v));
            }
        }
        d.defect_full = std::max(d.defect_full, size);
        if (max_abs_frequency(g, k) <= radius / 2) d.defect_half = std::max(d.defect_half, size);
    }
    return d;
}

double hermitian_norm(const Eigen::MatrixXcd& h) {
    if (h.rows() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

DefectEstimate dense_defect(const OperatorHandle& op, const Grid& grid) {
    const Grid g = grid.with_components(1);
    const Eigen::MatrixXcd m = dense_matrix(op, g);
    const Eigen::MatrixXcd h = m.adjoint() + m;
    const int radius = g.n() / 2 - 1;
    std::vector<Eigen::Index> full, half;
    for (std::size_t k = 0; k < g.points(); ++k) {
        if (g.is_nyquist(k)) continue;
        full.push_back(static_cast<Eigen::Index>(k));
        if (max_abs_frequency(g, k) <= radius / 2) half.push_back(static_cast<Eigen::Index>(k));
    }
    DefectEstimate d;
    d.defect_full = hermitian_norm(h(full, full));
    d.defect_half = hermitian_norm(h(half, half));
    return d;
}

}  // namespace

ValidationReport validate_noise(const NoiseFamily& fam, const Grid& grid) {
    ValidationReport rep;
    rep.grid = grid;
    const std::size_t terms = std::max(fam.a.size(), fam.q.size());
    if (fam.J.size() < fam.a.size() || fam.K.size() < fam.q.size()) {
        rep.structure_ok = false;
        rep.errors.push_back("operator lists are shorter than the amplitude lists");
        return rep;
    }
    for (std::size_t k = 0; k < terms; ++k) {
        const double a = k < fam.a.size() ? fam.a[k] : 0.0;
        const double q = k < fam.q.size() ? fam.q[k] : 0.0;
        if (a * q != 0.0) {
            rep.orthogonality_ok = false;
            rep.errors.push_back("a_k q_k != 0 at k = " + std::to_string(k + 1));
        }
    }
    if (fam.r1 < 0.0 || fam.r1 > 1.0) {
        rep.structure_ok = false;
        rep.errors.push_back("r1 must lie in [0, 1]");
    }
    const bool dense_ok = (grid.dim() == 1 && grid.n() <= 64) || (grid.dim() == 2 && grid.n() <= 32);

    auto examine = [&](const OperatorHandle& op, double amp, char family, int k, double max_order) {
        if (amp == 0.0 || op.is_zero()) return;
        if (op.order() > max_order + 1e-12) {
            rep.structure_ok = false;
            std::ostringstream os;
            os << family << "_" << k + 1 << " has order " << op.order() << " above the declared "
               << (family == 'J' ? "r2" : "r1") << " = " << max_order;
            rep.errors.push_back(os.str());
        }
        if (family == 'J') {
            if (op.kind() != OperatorHandle::Kind::multiplier) {
                rep.structure_ok = false;
                rep.errors.push_back("J_" + std::to_string(k + 1) + " must be an x-independent multiplier");
                return;
            }
            if (!op.multiplier()->is_scalar()) {
                try {
                    (void)diagonal_table(op, grid.with_components(op.multiplier()->in));
                } catch (const Error&) {
                    rep.structure_ok = false;
                    rep.errors.push_back("J_" + std::to_string(k + 1) + " must be diagonal");
                    return;
                }
            }
        }
        DefectEstimate d;
        if (op.kind() == OperatorHandle::Kind::multiplier) {
            d = multiplier_defect(op, grid);
        } else if (dense_ok) {
            d = dense_defect(op, grid);
        } else {
            rep.warnings.push_back(std::string(1, family) + "_" + std::to_string(k + 1) +
                                   ": skew defect not estimated (mesh too large for dense check)");
            return;
        }
        d.k = k + 1;
        d.family = family;
        d.order = order_from(d.defect_full, d.defect_half);
        d.ok = d.order <= kOrderTolerance;
        if (!d.ok) {
            rep.skew_ok = false;
            std::ostringstream os;
            os << family << "_" << k + 1 << ": skew defect has estimated order " << d.order
               << " (expected <= 0)";
            rep.warnings.push_back(os.str());
        }
        rep.defects.push_back(d);
    };
    for (std::size_t k = 0; k < fam.a.size(); ++k) examine(fam.J[k], fam.a[k], 'J', static_cast<int>(k), fam.r2);
    for (std::size_t k = 0; k < fam.q.size(); ++k) examine(fam.K[k], fam.q[k], 'K', static_cast<int>(k), fam.r1);

    // projection compatibility
    const OperatorHandle& P = fam.projection;
    const bool scalar_mult = P.kind() == OperatorHandle::Kind::multiplier && P.multiplier()->is_scalar();
    if (!scalar_mult) {
        const int m = P.in_components() != 0 ? P.in_components() : grid.components();
        const Grid g = grid.with_components(m);
        double worst = 0.0;
        for (std::uint64_t s = 0; s < 4; ++s) {
            const SpectralField u = random_band_limited(g, 0x5eedULL + s, g.n() / 2 - 1, 0.1);
            const SpectralField pu = P.apply(u);
            const SpectralField ppu = P.apply(pu);
            worst = std::max(worst, l2_norm(ppu - pu) / std::max(1e-300, l2_norm(u)));
        }
        rep.projection_residual = worst;
        if (worst > 1e-9) {
            rep.projection_ok = false;
            rep.errors.push_back("projection is not idempotent on sampled fields (residual " +
                                 std::to_string(worst) + ")");
        }
    }
    return rep;
}

NoiseFamily validated(NoiseFamily fam, const Grid& grid) {
    auto rep = std::make_shared<const ValidationReport>(validate_noise(fam, grid));
    if (!rep->usable()) {
        std::string msg = "noise family failed validation:";
        for (const auto& e : rep->errors) msg += " " + e + ";";
        throw Error(msg);
    }
    fam.report = std::move(rep);
    return fam;
}

std::vector<NoiseTerm> noise_operators(const NoiseFamily& fam) {
    std::vector<NoiseTerm> out;
    for (std::size_t k = 0; k < fam.a.size(); ++k) {
        if (fam.a[k] == 0.0 || fam.J[k].is_zero()) continue;
        out.push_back({static_cast<int>(3 * k), scale(fam.a[k], compose(fam.projection, fam.J[k]))});
    }
    for (std::size_t k = 0; k < fam.q.size(); ++k) {
        if (fam.q[k] == 0.0 || fam.K[k].is_zero()) continue;
        out.push_back({static_cast<int>(3 * k + 1), scale(fam.q[k], compose(fam.projection, fam.K[k]))});
    }
    std::sort(out.begin(), out.end(), [](const NoiseTerm& x, const NoiseTerm& y) { return x.mode < y.mode; });
    return out;
}

OperatorHandle ito_correction(const NoiseFamily& fam) {
    if (!fam.report) throw Error("ito_correction: noise family has not been validated");
    OperatorHandle total = zero_operator();
    for (const auto& term : noise_operators(fam)) total = add(total, compose(term.op, term.op));
    if (total.is_zero()) return total;
    return scale(0.5, total);
}

// ---------------------------------------------------------------------------

BrownianPath::BrownianPath(std::uint64_t seed, double dt, int substeps)
    : seed_(seed), dt_(dt), substeps_(substeps) {
    if (!(dt >= 0.0) || !std::isfinite(dt)) throw Error("BrownianPath: dt must be finite and >= 0");
    if (substeps < 1) throw Error("BrownianPath: substeps must be >= 1");
    fine_scale_ = std::sqrt(dt / substeps);
}

double BrownianPath::increment(int mode, std::int64_t step) const {
    if (step < 0) throw Error("BrownianPath: negative step");
    if (fine_scale_ == 0.0) return 0.0;
    double sum = 0.0;
    const auto first = static_cast<std::uint64_t>(step) * static_cast<std::uint64_t>(substeps_);
    for (int s = 0; s < substeps_; ++s) {
        sum += rng::gaussian(seed_, static_cast<std::uint64_t>(mode), first + s, 0);
    }
    return fine_scale_ * sum;
}

std::vector<double> BrownianPath::sample_increments(std::int64_t step, int first, int count) const {
    std::vector<double> out(static_cast<std::size_t>(std::max(0, count)));
    for (int i = 0; i < count; ++i) out[i] = increment(first + i, step);
    return out;
}

// ---------------------------------------------------------------------------

std::vector<double> power_profile(int count, double a0, double gamma) {
    std::vector<double> out(static_cast<std::size_t>(std::max(0, count)));
    for (int k = 1; k <= count; ++k) out[k - 1] = a0 * std::pow(static_cast<double>(k), -gamma);
    return out;
}

RegularMap linear_regular_noise(double c) {
    return [c](double, const SpectralField& x) { return c * x; };
}

RegularMap clipped_regular_noise(double c, double clip) {
    if (!(clip > 0.0)) throw Error("clipped_regular_noise: clip must be positive");
    return [c, clip](double, const SpectralField& x) {
        RealField f = to_real(x);
        for (double& v : f.values()) v = c * clip * std::tanh(v / clip);
        SpectralField out = to_spectral(f);
        clear_nyquist(out);
        return out;
    };
}

}  // namespace psdoflow
