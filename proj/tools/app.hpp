#pragma once

#include "psdoflow/integrator.hpp"
#include "psdoflow/regularization.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace psdoflow::app {

using json = nlohmann::json;

inline constexpr const char* kToolVersion = "0.1.0";

/// Malformed or invalid configuration; the message starts with the offending key path.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A parsed experiment. `source` is the effective config tree (after overrides).
struct Experiment {
    json source;
    SimConfig sim;
    InitialData initial;
};

[[nodiscard]] json load_json(const std::filesystem::path& path);
[[nodiscard]] Experiment parse_experiment(const json& config);
[[nodiscard]] Experiment load_experiment(const std::filesystem::path& path);
/// Grid and noise sections only (used by `verify lak --noise`).
[[nodiscard]] NoiseFamily parse_noise_section(const json& config, Grid& grid_out);

/// Compact serialization with sorted keys; stable under key reordering.
[[nodiscard]] std::string canonical(const json& j);
/// Hex SHA-256 of canonical(j).
[[nodiscard]] std::string content_hash(const json& j);

struct RunOutcome {
    TrajectoryRecord record;
    json manifest;
    int exit_code = 1;
};

/// Integrates and writes norms.csv, manifest.json, final.psdf and snapshots/ into `out`.
RunOutcome run_experiment(const Experiment& exp, const std::filesystem::path& out);

/// Strong error |X(T) - X_exact(T)|_{L^2} for linear multiplier systems
/// (linear model, J_k noise only, no cutoff, no regularization), else empty.
[[nodiscard]] std::optional<double> linear_strong_error(const SimConfig& cfg, const TrajectoryRecord& record);

/// Sets the numeric value at a dotted path ("run.dt", "noise.transport.0.amplitude").
/// Throws ConfigError when the key is missing or not numeric.
void set_numeric(json& config, const std::string& key, double value);
[[nodiscard]] double get_numeric(const json& config, const std::string& key);

/// One run per value into out/run_<i>/ and out/summary.csv. Returns the summary rows.
std::vector<json> sweep(const json& config, const std::string& axis, const std::vector<double>& values,
                        const std::filesystem::path& out);

// ---------------------------------------------------------------------------
// Verification suites

struct Check {
    std::string name;
    json quantities = json::object();
    json thresholds = json::object();
    bool pass = false;
};

struct SuiteReport {
    std::string suite;
    std::vector<Check> checks;
    [[nodiscard]] bool pass() const;
    [[nodiscard]] json to_json() const;
};

[[nodiscard]] SuiteReport verify_ops();
/// Default families: K = (1 + cos(x)/2) d and the skew J = d. `custom` replaces both.
[[nodiscard]] SuiteReport verify_lak(const std::optional<std::pair<NoiseFamily, Grid>>& custom = std::nullopt);
[[nodiscard]] SuiteReport verify_r4();
[[nodiscard]] SuiteReport verify_gauge();
[[nodiscard]] SuiteReport verify_suite(const std::string& suite,
                                       const std::optional<std::pair<NoiseFamily, Grid>>& custom = std::nullopt);

/// Samples used by the LAK and R4 checks: seeded band-limited fields with exp(-|k|) decay.
[[nodiscard]] std::vector<SpectralField> smooth_samples(const Grid& g, int count);
/// K = (1 + amp cos(mode x_axis)) d_axis, quantized on g.
[[nodiscard]] OperatorHandle variable_transport(const Grid& g, int axis, double amp, int mode);

int main_cli(int argc, char** argv);

}  // namespace psdoflow::app
