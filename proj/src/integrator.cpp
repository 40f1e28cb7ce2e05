#include "psdoflow/integrator.hpp"

#include "psdoflow/spectral.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numbers>
#include <ostream>
#include <thread>

namespace psdoflow {

std::string to_string(Scheme s) {
    switch (s) {
        case Scheme::ito_euler: return "ito_euler";
        case Scheme::strat_heun: return "strat_heun";
        case Scheme::semi_implicit_ito: return "semi_implicit_ito";
    }
    return "unknown";
}

Scheme parse_scheme(const std::string& name) {
    if (name == "ito_euler") return Scheme::ito_euler;
    if (name == "strat_heun") return Scheme::strat_heun;
    if (name == "semi_implicit_ito") return Scheme::semi_implicit_ito;
    throw Error("scheme: unknown scheme '" + name + "'");
}

std::string to_string(RunStatus s) {
    switch (s) {
        case RunStatus::completed: return "completed";
        case RunStatus::blown_up: return "blown_up";
        case RunStatus::unstable: return "unstable";
        case RunStatus::error: return "error";
    }
    return "unknown";
}

int exit_code(RunStatus s) noexcept {
    switch (s) {
        case RunStatus::completed: return 0;
        case RunStatus::blown_up: return 2;
        default: return 1;
    }
}

// ---------------------------------------------------------------------------

double BlowupMonitor::evaluate(const SpectralField& x) const {
    switch (kind) {
        case MonitorKind::sobolev: return sobolev_norm(x, index);
        case MonitorKind::wk_inf: return wk_inf_norm(x, static_cast<int>(index));
        case MonitorKind::custom:
            if (!functional) throw Error("monitor '" + name + "': custom monitor without functional");
            return functional(x);
    }
    return 0.0;
}

BlowupMonitor sobolev_monitor(double theta, double threshold) {
    BlowupMonitor m;
    m.kind = MonitorKind::sobolev;
    m.index = theta;
    m.threshold = threshold;
    char buf[32];
    std::snprintf(buf, sizeof buf, "H^%g", theta);
    m.name = buf;
    return m;
}

BlowupMonitor wk_inf_monitor(int l, double threshold) {
    BlowupMonitor m;
    m.kind = MonitorKind::wk_inf;
    m.index = l;
    m.threshold = threshold;
    m.name = "W^" + std::to_string(l) + ",inf";
    return m;
}

BlowupMonitor gradient_sup_monitor(double threshold) {
    BlowupMonitor m;
    m.kind = MonitorKind::custom;
    m.threshold = threshold;
    m.name = "grad_sup";
    m.functional = [](const SpectralField& x) {
        double out = 0.0;
        for (int a = 0; a < x.grid().dim(); ++a) out = std::max(out, sup_norm(derivative(x, a, 1)));
        return out;
    };
    return m;
}

// ---------------------------------------------------------------------------

double chi_R(double r, double R) {
    if (!(R > 0.0)) throw Error("chi_R: R must be positive");
    const double t = std::abs(r) / R - 1.0;
    if (t <= 0.0) return 1.0;
    if (t >= 1.0) return 0.0;
    return 1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
}

double lyapunov(double norm_sq) { return std::log(std::numbers::e + norm_sq); }

std::vector<double> lyapunov_trace(const TrajectoryRecord& record) {
    std::vector<double> out;
    out.reserve(record.h_theta.size());
    for (double h : record.h_theta) out.push_back(lyapunov(h * h));
    return out;
}

double psi_functional(const SpectralField& x, double theta, const NoiseFamily& fam, double T, int samples) {
    if (!(theta > 0.0)) throw Error("psi_functional: theta must be positive");
    if (fam.h.empty()) return 0.0;
    const double xn = sobolev_norm(x, theta);
    const double denom = std::numbers::e + xn * xn;
    const int count = T > 0.0 ? std::max(samples, 1) : 1;
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < count; ++i) {
        const double t = count == 1 ? 0.0 : T * i / (count - 1);
        double sum = 0.0;
        for (const auto& h : fam.h) {
            if (!h) continue;
            const SpectralField hk = fam.projection.apply(h(t, x));
            const double nh = sobolev_norm(hk, theta);
            const double ip = sobolev_inner(hk, x, theta);
            sum += nh * nh - 2.0 * ip * ip / denom;
        }
        best = std::max(best, sum);
    }
    return best;
}

// ---------------------------------------------------------------------------

namespace {

bool all_finite(const SpectralField& x) {
    for (const auto& c : x.coeffs()) {
        if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) return false;
    }
    return true;
}

bool mollifier_is_identity(int n, const Grid& g) {
    const double kmax = g.wavenumber_scale() * std::sqrt(static_cast<double>(g.dim())) * (g.n() / 2);
    return kmax <= n;
}

}  // namespace

Integrator::Integrator(SimConfig cfg) : cfg_(std::move(cfg)), path_(cfg_.seed, cfg_.dt, cfg_.substeps) {
    const Grid& g = cfg_.grid();
    if (!(cfg_.dt > 0.0)) throw Error("dt: must be positive");
    if (!(cfg_.t_end >= 0.0)) throw Error("t_end: must be nonnegative");
    if (cfg_.record_every < 1) throw Error("record_every: must be >= 1");
    if (cfg_.substeps < 1) throw Error("substeps: must be >= 1");
    if (!(cfg_.initial.grid() == g)) {
        throw Error("initial: grid " + cfg_.initial.grid().describe() + " does not match model grid " + g.describe());
    }
    if (cfg_.cutoff && !(cfg_.cutoff->R > 0.0)) throw Error("cutoff.R: must be positive");
    if (!cfg_.noise.report) cfg_.noise = validated(std::move(cfg_.noise), g);
    if (cfg_.monitors.empty() && cfg_.default_monitors) {
        cfg_.monitors.push_back(wk_inf_monitor(cfg_.model.blowup_l, 1e3));
        cfg_.monitors.push_back(sobolev_monitor(cfg_.s0, 1e6));
    }

    OperatorHandle lin = cfg_.model.dissipation;
    if (!cfg_.model.dispersion.is_zero()) lin = add(lin, cfg_.model.dispersion);
    OperatorHandle corr = ito_correction(cfg_.noise);
    transport_ = noise_operators(cfg_.noise);

    mollified_ = cfg_.mollify_n > 0 && !mollifier_is_identity(cfg_.mollify_n, g);
    if (mollified_) {
        const OperatorHandle J = mollifier(cfg_.mollify_n, g);
        mollifier_ = J;
        auto sandwich = [&](const OperatorHandle& op, int left) {
            if (op.is_zero()) return op;
            OperatorHandle out = compose(op, J);
            for (int i = 0; i < left; ++i) out = compose(J, out);
            return out;
        };
        lin = sandwich(lin, 1);
        corr = sandwich(corr, 3);
        for (auto& term : transport_) term.op = sandwich(term.op, 1);
    }
    linear_ = lin;
    correction_ = corr;

    if (cfg_.scheme == Scheme::semi_implicit_ito) {
        exp_linear_ = diagonal_table(linear_, g);
        for (auto& v : exp_linear_) v = std::exp(cfg_.dt * v);
    }
}

double Integrator::stability_number() const {
    const Grid& g = cfg_.grid();
    double m = 0.0;
    auto consider = [&](const OperatorHandle& op) {
        if (op.multiplier()) m = std::max(m, max_symbol_magnitude(op, g));
    };
    if (cfg_.scheme != Scheme::semi_implicit_ito) consider(linear_);
    if (cfg_.scheme != Scheme::strat_heun) consider(correction_);
    return cfg_.dt * m;
}

double Integrator::cutoff_factor(const SpectralField& x) const {
    if (!cfg_.cutoff) return 1.0;
    SpectralField diff = x;
    diff -= cfg_.initial;
    return chi_R(sobolev_norm(diff, cfg_.cutoff->theta), cfg_.cutoff->R);
}

SpectralField Integrator::nonlinear(const SpectralField& x) const {
    if (!mollified_) {
        DriftParts parts = nonlinear_drift(cfg_.model, x);
        parts.g += parts.b;
        return std::move(parts.g);
    }
    // b stays unregularized, g is sandwiched: J g(J X)
    SpectralField out = mollifier_.apply(nonlinear_drift(cfg_.model, mollifier_.apply(x)).g);
    out += nonlinear_drift(cfg_.model, x).b;
    return out;
}

SpectralField Integrator::drift(double, const SpectralField& x, bool ito) const {
    SpectralField out = nonlinear(x);
    if (!linear_.is_zero()) out += linear_.apply(x);
    if (ito && !correction_.is_zero()) out += correction_.apply(x);
    return out;
}

SpectralField Integrator::noise(double t, const SpectralField& x, std::int64_t step, bool transport,
                                bool regular) const {
    SpectralField out(x.grid());
    if (transport) {
        for (const auto& term : transport_) {
            if (term.op.is_zero()) continue;
            out.axpy(path_.increment(term.mode, step), term.op.apply(x));
        }
    }
    if (regular) {
        const auto& fam = cfg_.noise;
        for (std::size_t k = 0; k < fam.h.size(); ++k) {
            if (!fam.h[k]) continue;
            out.axpy(path_.increment(static_cast<int>(3 * k + 2), step), fam.projection.apply(fam.h[k](t, x)));
        }
    }
    return out;
}

SpectralField Integrator::finish(SpectralField x) const {
    return cfg_.model.projection.apply(x);
}

SpectralField Integrator::step_ito_euler(const SpectralField& x, double t, std::int64_t step) const {
    const double chi = cutoff_factor(x);
    SpectralField out = x;
    out.axpy(chi * chi * cfg_.dt, drift(t, x, true));
    out.axpy(chi, noise(t, x, step, true, true));
    return finish(std::move(out));
}

SpectralField Integrator::step_strat_heun(const SpectralField& x, double t, std::int64_t step) const {
    const double chi = cutoff_factor(x);
    const double dt = cfg_.dt;
    const SpectralField f0 = drift(t, x, false);
    const SpectralField n0 = noise(t, x, step, true, false);
    SpectralField pred = x;
    pred.axpy(chi * chi * dt, f0);
    pred.axpy(chi, n0);
    // the regular noise is Ito: evaluated at the left point only
    SpectralField out = x;
    out.axpy(0.5 * chi * chi * dt, f0);
    out.axpy(0.5 * chi * chi * dt, drift(t + dt, pred, false));
    out.axpy(0.5 * chi, n0);
    out.axpy(0.5 * chi, noise(t + dt, pred, step, true, false));
    out.axpy(chi, noise(t, x, step, false, true));
    return finish(std::move(out));
}

SpectralField Integrator::step_semi_implicit(const SpectralField& x, double t, std::int64_t step) const {
    const double chi = cutoff_factor(x);
    const double c2 = chi * chi;
    SpectralField out = x;
    SpectralField explicit_part = nonlinear(x);
    if (!correction_.is_zero()) explicit_part += correction_.apply(x);
    out.axpy(c2 * cfg_.dt, explicit_part);
    out.axpy(chi, noise(t, x, step, true, true));
    auto c = out.coeffs();
    const std::size_t np = out.grid().points();
    for (int j = 0; j < out.grid().components(); ++j) {
        for (std::size_t p = 0; p < np; ++p) {
            const std::size_t i = j * np + p;
            c[i] *= c2 == 1.0 ? exp_linear_[i] : std::pow(exp_linear_[i], c2);
        }
    }
    return finish(std::move(out));
}

SpectralField Integrator::step(const SpectralField& x, double t, std::int64_t step) const {
    switch (cfg_.scheme) {
        case Scheme::ito_euler: return step_ito_euler(x, t, step);
        case Scheme::strat_heun: return step_strat_heun(x, t, step);
        case Scheme::semi_implicit_ito: return step_semi_implicit(x, t, step);
    }
    throw Error("unreachable");
}

TrajectoryRecord Integrator::run() const {
    TrajectoryRecord rec;
    for (const auto& m : cfg_.monitors) rec.monitors.push_back(MonitorEvent{m.name, m.threshold});
    const double stab = stability_number();
    if (stab > cfg_.stability_cap) {
        rec.status = RunStatus::unstable;
        rec.message = "stability cap violated: dt * max|symbol| = " + std::to_string(stab) + " > " +
                      std::to_string(cfg_.stability_cap);
        rec.final_state = cfg_.initial;
        return rec;
    }
    const std::int64_t steps = std::llround(cfg_.t_end / cfg_.dt);
    SpectralField x = cfg_.initial;
    bool fired = false;

    auto record = [&](std::int64_t n) {
        const double t = n * cfg_.dt;
        rec.times.push_back(t);
        rec.h_theta.push_back(sobolev_norm(x, cfg_.theta));
        rec.h_s0.push_back(sobolev_norm(x, cfg_.s0));
        rec.wk_inf.push_back(wk_inf_norm(x, cfg_.model.blowup_l));
        std::uint32_t flags = 0;
        for (std::size_t i = 0; i < cfg_.monitors.size(); ++i) {
            const double v = cfg_.monitors[i].evaluate(x);
            auto& ev = rec.monitors[i];
            if ((!std::isfinite(v) || v > ev.threshold / 10.0) && std::isnan(ev.sensitivity_at)) ev.sensitivity_at = t;
            if (!std::isfinite(v) || v > ev.threshold) {
                flags |= 1u << i;
                if (std::isnan(ev.fired_at)) ev.fired_at = t;
            }
        }
        rec.flags.push_back(flags);
        if (flags && !fired) {
            fired = true;
            rec.status = RunStatus::blown_up;
            rec.t_star = t;
            rec.t_last_safe = rec.times.size() > 1 ? rec.times[rec.times.size() - 2] : 0.0;
        }
        if (cfg_.snapshot_every > 0 && n % cfg_.snapshot_every == 0) rec.snapshots.emplace_back(t, x);
    };

    record(0);
    for (std::int64_t n = 0; n < steps && !fired; ++n) {
        x = step(x, n * cfg_.dt, n);
        rec.steps = n + 1;
        if (!all_finite(x)) {
            rec.status = RunStatus::unstable;
            rec.message = "non-finite state at t = " + std::to_string((n + 1) * cfg_.dt);
            rec.t_last_safe = rec.times.back();
            break;
        }
        if ((n + 1) % cfg_.record_every == 0 || n + 1 == steps) record(n + 1);
    }
    rec.final_state = std::move(x);
    return rec;
}

TrajectoryRecord integrate(const SimConfig& cfg) {
    try {
        return Integrator(cfg).run();
    } catch (const Error& e) {
        TrajectoryRecord rec;
        rec.status = RunStatus::error;
        rec.message = e.what();
        return rec;
    }
}

void write_norms_csv(const TrajectoryRecord& record, std::ostream& out) {
    out << "t,h_theta,h_s0,wk_inf,V,flags\n";
    const auto v = lyapunov_trace(record);
    char buf[256];
    for (std::size_t i = 0; i < record.times.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%u\n", record.times[i], record.h_theta[i],
                      record.h_s0[i], record.wk_inf[i], v[i], record.flags[i]);
        out << buf;
    }
}

// ---------------------------------------------------------------------------

int worker_count() {
    int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    if (const char* env = std::getenv("PSDOFLOW_THREADS")) {
        const int cap = std::atoi(env);
        if (cap >= 1) n = std::min(n, cap);
    }
    return n;
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& job) {
    const std::size_t workers = std::min<std::size_t>(worker_count(), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) job(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        threads.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    job(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace psdoflow
