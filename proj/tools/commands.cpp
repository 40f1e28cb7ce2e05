#include "app.hpp"

#include "psdoflow/spectral.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <mutex>

namespace psdoflow::app {

namespace fs = std::filesystem;

namespace {

std::string utc_now() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string fmt(double v) {
    if (!std::isfinite(v)) return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

RunOutcome run_experiment(const Experiment& exp, const fs::path& out) {
    fs::create_directories(out);
    const std::string started = utc_now();
    const auto t0 = std::chrono::steady_clock::now();
    RunOutcome res;
    res.record = integrate(exp.sim);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto& rec = res.record;
    res.exit_code = exit_code(rec.status);

    {
        std::ofstream csv(out / "norms.csv", std::ios::binary);
        write_norms_csv(rec, csv);
    }
    json outputs = {{"norms", "norms.csv"}, {"manifest", "manifest.json"}};
    if (rec.status != RunStatus::error) {
        write_snapshot_file((out / "final.psdf").string(), rec.final_state);
        outputs["final_state"] = "final.psdf";
    }
    if (!rec.snapshots.empty()) {
        fs::create_directories(out / "snapshots");
        json list = json::array();
        for (std::size_t i = 0; i < rec.snapshots.size(); ++i) {
            char name[48];
            std::snprintf(name, sizeof name, "snapshots/snap_%06zu.psdf", i);
            write_snapshot_file((out / name).string(), rec.snapshots[i].second);
            list.push_back({{"t", rec.snapshots[i].first}, {"path", name}});
        }
        outputs["snapshots"] = list;
    }

    json monitors = json::array();
    for (const auto& m : rec.monitors) {
        monitors.push_back({{"name", m.name},
                            {"threshold", m.threshold},
                            {"fired_at", number_or_null(m.fired_at)},
                            {"sensitivity_at", number_or_null(m.sensitivity_at)}});
    }
    json warnings = json::array();
    if (exp.sim.noise.report) {
        for (const auto& w : exp.sim.noise.report->warnings) warnings.push_back(w);
    }
    res.manifest = {{"tool", "psdoflow"},
                    {"version", kToolVersion},
                    {"config", exp.source},
                    {"config_hash", content_hash(exp.source)},
                    {"seed", exp.sim.seed},
                    {"started_at", started},
                    {"finished_at", utc_now()},
                    {"wall_seconds", wall},
                    {"threads", worker_count()},
                    {"status", to_string(rec.status)},
                    {"exit_code", res.exit_code},
                    {"message", rec.message},
                    {"steps", rec.steps},
                    {"t_final", rec.times.empty() ? json(nullptr) : json(rec.times.back())},
                    {"t_star", number_or_null(rec.t_star)},
                    {"t_last_safe", number_or_null(rec.t_last_safe)},
                    {"monitors", monitors},
                    {"noise_warnings", warnings},
                    {"outputs", outputs}};
    std::ofstream(out / "manifest.json") << res.manifest.dump(2) << "\n";
    return res;
}

std::optional<double> linear_strong_error(const SimConfig& cfg, const TrajectoryRecord& rec) {
    if (cfg.model.name != ModelName::linear || cfg.cutoff || cfg.mollify_n != 0) return std::nullopt;
    if (rec.status != RunStatus::completed || rec.times.empty()) return std::nullopt;
    const auto& fam = cfg.noise;
    if (!fam.h.empty()) return std::nullopt;
    for (std::size_t k = 0; k < fam.q.size(); ++k) {
        if (fam.q[k] != 0.0 && !fam.K[k].is_zero()) return std::nullopt;
    }
    const Grid& g = cfg.grid();
    if (g.components() != 1) return std::nullopt;
    OperatorHandle lin = cfg.model.dissipation;
    if (!cfg.model.dispersion.is_zero()) lin = add(lin, cfg.model.dispersion);
    const auto lambda = diagonal_table(lin, g);
    std::vector<std::pair<int, std::vector<Complex>>> ys;
    const NoiseFamily checked = fam.report ? fam : validated(fam, g);
    for (const auto& t : noise_operators(checked)) {
        if (t.op.is_zero()) continue;
        if (!t.op.multiplier()) return std::nullopt;
        ys.emplace_back(t.mode, diagonal_table(t.op, g));
    }
    const BrownianPath path(cfg.seed, cfg.dt, cfg.substeps);
    const double T = rec.steps * cfg.dt;
    std::vector<double> w(ys.size(), 0.0);
    for (std::size_t k = 0; k < ys.size(); ++k) {
        for (std::int64_t s = 0; s < rec.steps; ++s) w[k] += path.increment(ys[k].first, s);
    }
    SpectralField exact(g);
    for (std::size_t i = 0; i < lambda.size(); ++i) {
        Complex e = lambda[i] * T;
        for (std::size_t k = 0; k < ys.size(); ++k) e += ys[k].second[i] * w[k];
        exact.coeffs()[i] = cfg.initial.coeffs()[i] * std::exp(e);
    }
    clear_nyquist(exact);
    SpectralField d = rec.final_state;
    clear_nyquist(d);
    d -= exact;
    return l2_norm(d);
}

std::vector<json> sweep(const json& config, const std::string& axis, const std::vector<double>& values,
                        const fs::path& out) {
    if (values.empty()) throw ConfigError("sweep: empty values list");
    (void)get_numeric(config, axis);
    // dt sweeps share one Brownian path: the finest dt sets the fine step
    const bool dt_axis = axis == "run.dt";
    const double dt_min = *std::min_element(values.begin(), values.end());
    std::vector<json> configs;
    for (double v : values) {
        json c = config;
        set_numeric(c, axis, v);
        if (dt_axis) {
            const double ratio = v / dt_min;
            const int base = c["run"].value("substeps", 1);
            if (std::abs(ratio - std::round(ratio)) < 1e-9) c["run"]["substeps"] = base * static_cast<int>(std::round(ratio));
        }
        configs.push_back(std::move(c));
    }
    std::vector<Experiment> exps;
    for (const auto& c : configs) exps.push_back(parse_experiment(c));  // fail before running anything

    fs::create_directories(out);
    std::vector<json> rows(values.size());
    std::mutex io;
    parallel_for(values.size(), [&](std::size_t i) {
        const fs::path dir = out / ("run_" + std::to_string(i));
        const RunOutcome r = run_experiment(exps[i], dir);
        const auto& rec = r.record;
        const auto err = linear_strong_error(exps[i].sim, rec);
        json row = {{"index", i},
                    {"value", values[i]},
                    {"status", to_string(rec.status)},
                    {"exit_code", r.exit_code},
                    {"t_final", rec.times.empty() ? json(nullptr) : json(rec.times.back())},
                    {"final_h_theta", rec.h_theta.empty() ? json(nullptr) : number_or_null(rec.h_theta.back())},
                    {"final_h_s0", rec.h_s0.empty() ? json(nullptr) : number_or_null(rec.h_s0.back())},
                    {"final_wk_inf", rec.wk_inf.empty() ? json(nullptr) : number_or_null(rec.wk_inf.back())},
                    {"t_star", number_or_null(rec.t_star)},
                    {"strong_error", err ? json(*err) : json(nullptr)},
                    {"dir", dir.filename().string()}};
        const std::lock_guard lock(io);
        rows[i] = std::move(row);
    });

    std::ofstream csv(out / "summary.csv", std::ios::binary);
    csv << "index," << axis << ",status,exit_code,t_final,final_h_theta,final_h_s0,final_wk_inf,t_star,strong_error,dir\n";
    auto cell = [](const json& v) { return v.is_null() ? std::string() : fmt(v.get<double>()); };
    for (const auto& r : rows) {
        csv << r["index"].get<std::size_t>() << ',' << fmt(r["value"].get<double>()) << ','
            << r["status"].get<std::string>() << ',' << r["exit_code"].get<int>() << ',' << cell(r["t_final"]) << ','
            << cell(r["final_h_theta"]) << ',' << cell(r["final_h_s0"]) << ',' << cell(r["final_wk_inf"]) << ','
            << cell(r["t_star"]) << ',' << cell(r["strong_error"]) << ',' << r["dir"].get<std::string>() << "\n";
    }
    return rows;
}

namespace {

std::vector<double> parse_values(const std::string& text) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= text.size() && !text.empty()) {
        const std::size_t next = text.find(',', pos);
        const std::string item = text.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
        if (item.empty()) throw ConfigError("--values: empty entry in '" + text + "'");
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size()) throw ConfigError("--values: '" + item + "' is not a number");
        out.push_back(v);
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    if (out.empty()) throw ConfigError("--values: empty values list");
    return out;
}

}  // namespace

int main_cli(int argc, char** argv) {
    CLI::App cli{"Pseudodifferential SPDE flows: run, verify and sweep experiments"};
    cli.require_subcommand(1);
    cli.set_version_flag("--version", kToolVersion);

    std::string run_cfg, run_out;
    std::optional<std::uint64_t> run_seed;
    auto* run = cli.add_subcommand("run", "Integrate one configuration");
    run->add_option("config", run_cfg, "JSON config file")->required();
    run->add_option("--seed", run_seed, "Override run.seed");
    run->add_option("--out", run_out, "Output directory (default out/<config name>)");

    std::string suite, json_path, noise_cfg;
    auto* verify = cli.add_subcommand("verify", "Run a verification suite");
    verify->add_option("suite", suite, "ops, lak, r4, gauge or all")
        ->required()
        ->check(CLI::IsMember({"ops", "lak", "r4", "gauge", "all"}));
    verify->add_option("--json", json_path, "Write the JSON report here");
    verify->add_option("--noise", noise_cfg, "Config whose grid and noise replace the lak families");

    std::string sweep_cfg, axis, values_text, sweep_out;
    std::optional<std::uint64_t> sweep_seed;
    auto* sw = cli.add_subcommand("sweep", "Run one configuration over values of a numeric key");
    sw->add_option("config", sweep_cfg, "JSON config file")->required();
    sw->add_option("--axis", axis, "Dotted numeric key, e.g. run.dt")->required();
    sw->add_option("--values", values_text, "Comma separated values")->required();
    sw->add_option("--seed", sweep_seed, "Override run.seed");
    sw->add_option("--out", sweep_out, "Output directory (default out/sweep_<config name>)");

    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return cli.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (*run) {
            json config = load_json(run_cfg);
            if (run_seed) {
                if (!config.contains("run") || !config["run"].is_object()) throw ConfigError("run: missing required key");
                config["run"]["seed"] = *run_seed;
            }
            const Experiment exp = parse_experiment(config);
            const fs::path out = run_out.empty() ? fs::path("out") / fs::path(run_cfg).stem() : fs::path(run_out);
            const RunOutcome r = run_experiment(exp, out);
            std::cout << "status " << to_string(r.record.status);
            if (std::isfinite(r.record.t_star)) std::cout << " t_star " << r.record.t_star;
            if (!r.record.message.empty()) std::cout << " (" << r.record.message << ")";
            std::cout << "\nwrote " << (out / "norms.csv").string() << " and " << (out / "manifest.json").string()
                      << "\n";
            return r.exit_code;
        }
        if (*verify) {
            std::optional<std::pair<NoiseFamily, Grid>> custom;
            if (!noise_cfg.empty()) {
                if (suite != "lak") throw ConfigError("--noise applies to the lak suite only");
                Grid g(1, 1, 4);
                NoiseFamily fam = parse_noise_section(load_json(noise_cfg), g);
                custom.emplace(std::move(fam), g);
            }
            const SuiteReport rep = verify_suite(suite, custom);
            for (const auto& c : rep.checks) {
                std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << "  " << c.quantities.dump() << "\n";
            }
            std::cout << (rep.pass() ? "suite " + suite + " passed" : "suite " + suite + " failed") << "\n";
            if (!json_path.empty()) std::ofstream(json_path) << rep.to_json().dump(2) << "\n";
            return rep.pass() ? 0 : 1;
        }
        if (*sw) {
            json config = load_json(sweep_cfg);
            if (sweep_seed) {
                if (!config.contains("run") || !config["run"].is_object()) throw ConfigError("run: missing required key");
                config["run"]["seed"] = *sweep_seed;
            }
            const auto values = parse_values(values_text);
            const fs::path out =
                sweep_out.empty() ? fs::path("out") / ("sweep_" + fs::path(sweep_cfg).stem().string()) : fs::path(sweep_out);
            const auto rows = sweep(config, axis, values, out);
            for (const auto& r : rows) {
                std::cout << axis << " = " << r["value"].get<double>() << "  " << r["status"].get<std::string>();
                if (!r["strong_error"].is_null()) std::cout << "  strong_error " << r["strong_error"].get<double>();
                std::cout << "\n";
            }
            std::cout << "wrote " << (out / "summary.csv").string() << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

}  // namespace psdoflow::app
