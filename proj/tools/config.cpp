#include "app.hpp"

#include "psdoflow/spectral.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace psdoflow::app {

namespace {

// A JSON object with a key path for messages; unknown keys are rejected on finish().
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail(path_, "expected an object");
    }

    [[noreturn]] static void fail(const std::string& key, const std::string& what) {
        throw ConfigError(key + ": " + what);
    }

    [[nodiscard]] std::string key(const std::string& name) const { return path_.empty() ? name : path_ + "." + name; }
    [[nodiscard]] bool has(const std::string& name) const { return j_.contains(name); }

    const json& raw(const std::string& name) {
        seen_.insert(name);
        if (!j_.contains(name)) fail(key(name), "missing required key");
        return j_.at(name);
    }

    double number(const std::string& name) {
        const json& v = raw(name);
        if (!v.is_number()) fail(key(name), "expected a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) fail(key(name), "must be finite");
        return x;
    }
    double number(const std::string& name, double fallback) { return has(name) ? number(name) : (seen_.insert(name), fallback); }

    int integer(const std::string& name) {
        const json& v = raw(name);
        if (!v.is_number_integer()) fail(key(name), "expected an integer");
        return v.get<int>();
    }
    int integer(const std::string& name, int fallback) { return has(name) ? integer(name) : (seen_.insert(name), fallback); }

    std::uint64_t seed(const std::string& name, std::uint64_t fallback) {
        if (!has(name)) return fallback;
        const json& v = raw(name);
        if (!v.is_number_unsigned()) fail(key(name), "expected a nonnegative integer");
        return v.get<std::uint64_t>();
    }

    std::string text(const std::string& name) {
        const json& v = raw(name);
        if (!v.is_string()) fail(key(name), "expected a string");
        return v.get<std::string>();
    }
    std::string text(const std::string& name, const std::string& fallback) {
        return has(name) ? text(name) : (seen_.insert(name), fallback);
    }

    bool flag(const std::string& name, bool fallback) {
        if (!has(name)) return fallback;
        const json& v = raw(name);
        if (!v.is_boolean()) fail(key(name), "expected true or false");
        return v.get<bool>();
    }

    void finish() const {
        for (const auto& [k, v] : j_.items()) {
            if (!seen_.count(k)) fail(key(k), "unknown key");
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

// Wraps library errors raised while building an object from one section.
template <typename F>
auto at_key(const std::string& key, F&& f) {
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(key + ": " + e.what());
    }
}

Grid parse_grid(Section& root, ModelName model) {
    Section s(root.raw("grid"), "grid");
    const int d = s.integer("dim", 1);
    const int n = s.integer("n");
    const double length = s.number("length", 2.0 * std::numbers::pi);
    const int m = s.integer("components", model == ModelName::mhd ? 2 * d : 1);
    s.finish();
    return at_key("grid", [&] { return Grid(d, m, n, length); });
}

ModelParams parse_params(Section& s) {
    ModelParams p;
    p.nu = s.number("nu", p.nu);
    p.beta = s.number("beta", p.beta);
    p.mu1 = s.number("mu1", p.mu1);
    p.mu2 = s.number("mu2", p.mu2);
    p.alpha1 = s.number("alpha1", p.alpha1);
    p.alpha2 = s.number("alpha2", p.alpha2);
    p.a_grad = s.number("a_grad", p.a_grad);
    p.gamma = s.number("gamma", p.gamma);
    if (s.has("a_poly")) {
        const json& v = s.raw("a_poly");
        if (!v.is_array() || v.size() != 4) Section::fail(s.key("a_poly"), "expected an array of 4 numbers");
        for (std::size_t i = 0; i < 4; ++i) {
            if (!v[i].is_number()) Section::fail(s.key("a_poly") + "." + std::to_string(i), "expected a number");
            p.a_poly[i] = v[i].get<double>();
        }
    }
    if (s.has("phi_order")) p.phi = bessel_potential(s.number("phi_order"));
    return p;
}

OperatorHandle parse_transport_op(Section& t, const Grid& g, double& order) {
    const std::string op = t.text("op");
    if (op == "d") {
        const int axis = t.integer("axis", 0);
        const int k = t.integer("order", 1);
        if (axis < 0 || axis >= g.dim()) Section::fail(t.key("axis"), "out of range for d = " + std::to_string(g.dim()));
        if (k < 1) Section::fail(t.key("order"), "must be >= 1");
        order = k;
        return derivative_operator(axis, k);
    }
    if (op == "lambda") {
        const double s = t.number("s", 1.0);
        order = s;
        return fractional_laplacian(s);
    }
    if (op == "variable") {
        const int axis = t.integer("axis", 0);
        if (axis < 0 || axis >= g.dim()) Section::fail(t.key("axis"), "out of range for d = " + std::to_string(g.dim()));
        const double amp = t.number("coef", 0.5);
        const int mode = t.integer("coef_mode", 1);
        order = 1.0;
        return at_key(t.key("op"), [&] { return variable_transport(g, axis, amp, mode); });
    }
    Section::fail(t.key("op"), "unknown operator '" + op + "' (d, lambda, variable)");
}

NoiseFamily parse_noise(Section& root, const Grid& g, const ModelSpec* model) {
    NoiseFamily fam;
    Section s(root.raw("noise"), "noise");
    double r1 = 0.0, r2 = 0.0;
    if (s.has("transport")) {
        const json& list = s.raw("transport");
        if (!list.is_array()) Section::fail(s.key("transport"), "expected an array");
        for (std::size_t i = 0; i < list.size(); ++i) {
            Section t(list[i], s.key("transport") + "." + std::to_string(i));
            const double amp = t.number("amplitude");
            double order = 0.0;
            OperatorHandle op = parse_transport_op(t, g, order);
            t.finish();
            // one family per index keeps a_k q_k = 0
            if (op.multiplier()) {
                fam.a.push_back(amp);
                fam.J.push_back(op);
                fam.q.push_back(0.0);
                fam.K.push_back(zero_operator());
                r2 = std::max(r2, order);
            } else {
                fam.a.push_back(0.0);
                fam.J.push_back(zero_operator());
                fam.q.push_back(amp);
                fam.K.push_back(op);
                r1 = std::max(r1, order);
            }
        }
    }
    if (s.has("regular")) {
        const json& list = s.raw("regular");
        if (!list.is_array()) Section::fail(s.key("regular"), "expected an array");
        for (std::size_t i = 0; i < list.size(); ++i) {
            Section r(list[i], s.key("regular") + "." + std::to_string(i));
            const std::string kind = r.text("kind");
            const double c = r.number("c");
            if (kind == "linear") {
                fam.h.push_back(linear_regular_noise(c));
            } else if (kind == "clipped") {
                const double clip = r.number("clip");
                if (!(clip > 0.0)) Section::fail(r.key("clip"), "must be positive");
                fam.h.push_back(clipped_regular_noise(c, clip));
            } else {
                Section::fail(r.key("kind"), "unknown regular noise '" + kind + "' (linear, clipped)");
            }
            r.finish();
        }
    }
    fam.r1 = s.number("r1", std::max(1.0, r1));
    fam.r2 = s.number("r2", std::max(1.0, r2));
    fam.decay_exponent = s.number("decay_exponent", fam.decay_exponent);
    const std::string proj = s.text("projection", "model");
    if (proj == "model") {
        if (model) fam.projection = model->projection;
    } else if (proj == "identity") {
        fam.projection = identity_operator();
    } else if (proj == "zero_mean") {
        fam.projection = zero_average_projection(g);
    } else {
        Section::fail(s.key("projection"), "unknown projection '" + proj + "' (model, identity, zero_mean)");
    }
    s.finish();
    return at_key("noise", [&] { return validated(std::move(fam), g); });
}

BlowupMonitor parse_monitor(Section& m) {
    const std::string kind = m.text("kind");
    const double threshold = m.number("threshold");
    if (!(threshold > 0.0)) Section::fail(m.key("threshold"), "must be positive");
    if (kind == "gradient_sup") return gradient_sup_monitor(threshold);
    if (kind == "sobolev") return sobolev_monitor(m.number("index"), threshold);
    if (kind == "wk_inf") return wk_inf_monitor(m.integer("index"), threshold);
    Section::fail(m.key("kind"), "unknown monitor '" + kind + "' (gradient_sup, sobolev, wk_inf)");
}

void parse_run(Section& root, SimConfig& cfg) {
    Section s(root.raw("run"), "run");
    cfg.dt = s.number("dt");
    cfg.t_end = s.number("t_end");
    if (!(cfg.dt > 0.0)) Section::fail(s.key("dt"), "must be positive");
    if (!(cfg.t_end > 0.0)) Section::fail(s.key("t_end"), "must be positive");
    cfg.scheme = at_key(s.key("scheme"), [&] { return parse_scheme(s.text("scheme", "ito_euler")); });
    cfg.seed = s.seed("seed", 0);
    cfg.substeps = s.integer("substeps", 1);
    if (cfg.substeps < 1) Section::fail(s.key("substeps"), "must be >= 1");
    cfg.record_every = s.integer("record_every", 1);
    if (cfg.record_every < 1) Section::fail(s.key("record_every"), "must be >= 1");
    cfg.snapshot_every = s.integer("snapshot_every", 0);
    if (cfg.snapshot_every < 0) Section::fail(s.key("snapshot_every"), "must be >= 0");
    cfg.theta = s.number("theta", cfg.theta);
    cfg.s0 = s.number("s0", cfg.s0);
    cfg.mollify_n = s.integer("mollify_n", 0);
    if (cfg.mollify_n < 0) Section::fail(s.key("mollify_n"), "must be >= 0");
    cfg.stability_cap = s.number("stability_cap", cfg.stability_cap);
    cfg.default_monitors = s.flag("default_monitors", true);
    if (s.has("cutoff")) {
        Section c(s.raw("cutoff"), s.key("cutoff"));
        Cutoff cut;
        cut.R = c.number("R");
        if (!(cut.R > 0.0)) Section::fail(c.key("R"), "must be positive");
        cut.theta = c.number("theta", cfg.theta);
        c.finish();
        cfg.cutoff = cut;
    }
    if (s.has("monitors")) {
        const json& list = s.raw("monitors");
        if (!list.is_array()) Section::fail(s.key("monitors"), "expected an array");
        for (std::size_t i = 0; i < list.size(); ++i) {
            Section m(list[i], s.key("monitors") + "." + std::to_string(i));
            cfg.monitors.push_back(parse_monitor(m));
            m.finish();
        }
    }
    s.finish();
}

}  // namespace

json load_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
    try {
        return json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError("config '" + path.string() + "': " + e.what());
    }
}

Experiment parse_experiment(const json& config) {
    Section root(config, "");
    Experiment exp;
    exp.source = config;
    Section model_sec(root.raw("model"), "model");
    const ModelName name = at_key("model.name", [&] { return parse_model_name(model_sec.text("name")); });
    const ModelParams params = parse_params(model_sec);
    model_sec.finish();
    const Grid grid = parse_grid(root, name);
    exp.sim.model = at_key("model", [&] { return make_model(name, grid, params); });
    if (root.has("noise")) exp.sim.noise = parse_noise(root, grid, &exp.sim.model);

    Section init(root.raw("initial"), "initial");
    exp.initial.preset = init.text("preset");
    exp.initial.amplitude = init.number("amplitude", exp.initial.amplitude);
    exp.initial.mode = init.integer("mode", exp.initial.mode);
    exp.initial.seed = init.seed("seed", exp.initial.seed);
    exp.initial.max_freq = init.integer("max_freq", exp.initial.max_freq);
    exp.initial.decay = init.number("decay", exp.initial.decay);
    init.finish();
    exp.sim.initial = at_key("initial", [&] { return initial_data(exp.initial, exp.sim.model); });

    parse_run(root, exp.sim);
    root.text("name", "");
    root.text("description", "");
    root.finish();
    return exp;
}

Experiment load_experiment(const std::filesystem::path& path) { return parse_experiment(load_json(path)); }

NoiseFamily parse_noise_section(const json& config, Grid& grid_out) {
    Section root(config, "");
    ModelName name = ModelName::linear;
    if (root.has("model")) {
        Section m(root.raw("model"), "model");
        name = at_key("model.name", [&] { return parse_model_name(m.text("name")); });
    }
    grid_out = parse_grid(root, name);
    return parse_noise(root, grid_out, nullptr);
}

std::string canonical(const json& j) { return j.dump(); }

std::string content_hash(const json& j) {
    const std::string text = canonical(j);
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("content_hash: digest failed");
    }
    std::ostringstream os;
    os << std::hex;
    for (unsigned int i = 0; i < len; ++i) os << static_cast<int>(digest[i] >> 4) << static_cast<int>(digest[i] & 15);
    return os.str();
}

namespace {

json* locate(json& config, const std::string& key) {
    json* node = &config;
    std::istringstream parts(key);
    std::string part;
    while (std::getline(parts, part, '.')) {
        if (node->is_object() && node->contains(part)) {
            node = &(*node)[part];
        } else if (node->is_array() && !part.empty() &&
                   part.find_first_not_of("0123456789") == std::string::npos &&
                   std::stoul(part) < node->size()) {
            node = &(*node)[std::stoul(part)];
        } else {
            return nullptr;
        }
    }
    return node;
}

}  // namespace

double get_numeric(const json& config, const std::string& key) {
    json copy = config;
    const json* node = locate(copy, key);
    if (!node) throw ConfigError(key + ": no such key in the config");
    if (!node->is_number()) throw ConfigError(key + ": sweep axis must be numeric");
    return node->get<double>();
}

void set_numeric(json& config, const std::string& key, double value) {
    json* node = locate(config, key);
    if (!node) throw ConfigError(key + ": no such key in the config");
    if (!node->is_number()) throw ConfigError(key + ": sweep axis must be numeric");
    if (node->is_number_integer()) {
        if (value != std::floor(value)) throw ConfigError(key + ": integer key cannot take " + std::to_string(value));
        if (node->is_number_unsigned() && value >= 0) {
            *node = static_cast<std::uint64_t>(value);
        } else {
            *node = static_cast<std::int64_t>(value);
        }
    } else {
        *node = value;
    }
}

}  // namespace psdoflow::app
