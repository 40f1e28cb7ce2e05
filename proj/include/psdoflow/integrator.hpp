#pragma once

#include "psdoflow/models.hpp"
#include "psdoflow/noise.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace psdoflow {

enum class Scheme { ito_euler, strat_heun, semi_implicit_ito };
[[nodiscard]] std::string to_string(Scheme s);
[[nodiscard]] Scheme parse_scheme(const std::string& name);

/// Localization of drift and noise by chi_R(|X(t) - X(0)|_{H^theta}).
struct Cutoff {
    double R = 1.0;
    double theta = 1.0;
};

enum class MonitorKind { sobolev, wk_inf, custom };

struct BlowupMonitor {
    MonitorKind kind = MonitorKind::wk_inf;
    double index = 1.0;  // theta for sobolev, l for wk_inf
    double threshold = 1e3;
    std::string name;
    std::function<double(const SpectralField&)> functional;  // custom only

    [[nodiscard]] double evaluate(const SpectralField& x) const;
};

[[nodiscard]] BlowupMonitor sobolev_monitor(double theta, double threshold);
[[nodiscard]] BlowupMonitor wk_inf_monitor(int l, double threshold);
/// max_j |d_j X|_{L^inf} over axes and components.
[[nodiscard]] BlowupMonitor gradient_sup_monitor(double threshold);

struct SimConfig {
    ModelSpec model;
    NoiseFamily noise;
    SpectralField initial{Grid(1, 1, 4)};
    double dt = 1e-3;
    double t_end = 1.0;
    Scheme scheme = Scheme::ito_euler;
    std::optional<Cutoff> cutoff;
    /// Empty together with default_monitors: W^{l,inf} > 1e3 and H^{s0} > 1e6.
    std::vector<BlowupMonitor> monitors;
    bool default_monitors = true;
    std::uint64_t seed = 0;
    /// Brownian fine steps per dt; see BrownianPath.
    int substeps = 1;
    int record_every = 1;
    int snapshot_every = 0;
    double theta = 1.0;
    double s0 = 2.0;
    /// Regularization level n of (g_n, h_n); 0 runs the unregularized system.
    int mollify_n = 0;
    double stability_cap = 1.5;

    [[nodiscard]] const Grid& grid() const noexcept { return model.grid; }
};

enum class RunStatus { completed, blown_up, unstable, error };
[[nodiscard]] std::string to_string(RunStatus s);
/// 0 completed, 2 blown up, 1 otherwise.
[[nodiscard]] int exit_code(RunStatus s) noexcept;

struct MonitorEvent {
    std::string name;
    double threshold = 0.0;
    double fired_at = std::numeric_limits<double>::quiet_NaN();
    /// First time the functional exceeded threshold / 10.
    double sensitivity_at = std::numeric_limits<double>::quiet_NaN();
};

struct TrajectoryRecord {
    std::vector<double> times;
    std::vector<double> h_theta;
    std::vector<double> h_s0;
    std::vector<double> wk_inf;
    std::vector<std::uint32_t> flags;  // bit i: monitor i above threshold
    std::vector<MonitorEvent> monitors;
    std::vector<std::pair<double, SpectralField>> snapshots;
    SpectralField final_state{Grid(1, 1, 4)};
    RunStatus status = RunStatus::completed;
    double t_star = std::numeric_limits<double>::quiet_NaN();
    double t_last_safe = std::numeric_limits<double>::quiet_NaN();
    std::int64_t steps = 0;
    std::string message;
};

/// Prepared operators of one configuration. Stateless between steps; the
/// Brownian increments come from (seed, mode, step).
class Integrator {
public:
    explicit Integrator(SimConfig cfg);

    [[nodiscard]] const SimConfig& config() const noexcept { return cfg_; }
    [[nodiscard]] const BrownianPath& path() const noexcept { return path_; }

    /// Linear part with the Ito correction when `ito`, plus b and g.
    [[nodiscard]] SpectralField drift(double t, const SpectralField& x, bool ito) const;
    /// sum_k Y_k X dW_k + sum_k Pi h_k(t, X) dW_k for the increments of `step`.
    [[nodiscard]] SpectralField noise(double t, const SpectralField& x, std::int64_t step, bool transport,
                                      bool regular) const;

    [[nodiscard]] SpectralField step_ito_euler(const SpectralField& x, double t, std::int64_t step) const;
    [[nodiscard]] SpectralField step_strat_heun(const SpectralField& x, double t, std::int64_t step) const;
    [[nodiscard]] SpectralField step_semi_implicit(const SpectralField& x, double t, std::int64_t step) const;
    [[nodiscard]] SpectralField step(const SpectralField& x, double t, std::int64_t step) const;

    /// dt * max |symbol| of the explicitly treated stiff multipliers.
    [[nodiscard]] double stability_number() const;

    [[nodiscard]] TrajectoryRecord run() const;

    [[nodiscard]] double cutoff_factor(const SpectralField& x) const;

private:
    SimConfig cfg_;
    BrownianPath path_;
    OperatorHandle mollifier_;  // zero kind when the run is unregularized
    bool mollified_ = false;
    OperatorHandle linear_;     // J E J (+ dispersion)
    OperatorHandle correction_; // J^3 C J
    std::vector<NoiseTerm> transport_;
    std::vector<Complex> exp_linear_;

    [[nodiscard]] SpectralField nonlinear(const SpectralField& x) const;
    [[nodiscard]] SpectralField finish(SpectralField x) const;
};

[[nodiscard]] TrajectoryRecord integrate(const SimConfig& cfg);

/// 1 on [0, R], 0 on [2R, inf), quintic smoothstep in between.
[[nodiscard]] double chi_R(double r, double R);

/// sup over `samples` times in [0, T] of
/// sum_k |Pi h_k(t, X)|^2_{H^theta} - 2 <Pi h_k(t, X), X>^2_{H^theta} / (e + |X|^2_{H^theta}).
[[nodiscard]] double psi_functional(const SpectralField& x, double theta, const NoiseFamily& fam, double T,
                                    int samples = 16);

/// V(|X(t)|^2_{H^theta}) with V(x) = log(e + x).
[[nodiscard]] std::vector<double> lyapunov_trace(const TrajectoryRecord& record);
[[nodiscard]] double lyapunov(double norm_sq);

/// t, h_theta, h_s0, wk_inf, V, flags; fixed 17-digit formatting.
void write_norms_csv(const TrajectoryRecord& record, std::ostream& out);

/// Worker count: hardware concurrency capped by PSDOFLOW_THREADS.
[[nodiscard]] int worker_count();
/// Runs job(i) for i in [0, count) on worker_count() threads. Exceptions are rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& job);

}  // namespace psdoflow
