#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "onmf/datagen.hpp"
#include "onmf/divergence.hpp"
#include "onmf/errors.hpp"
#include "onmf/online.hpp"

namespace onmf {

// Flat key = value experiment configuration. Absent keys take the canonical
// defaults; unknown keys are rejected.
struct ExperimentConfig {
    std::string divergence = "kl";
    std::string data = "synth";  // "synth" or a matrix file path

    std::size_t k = 40;
    double eps = 1e-8;
    double eps_prime = 1e-8;
    double u_bound = 1e8;

    double a = 2e4;
    double b = 2e4;
    std::uint64_t tau = 0;    // 0: auto, max(1, round(1e-4 N))
    std::uint64_t iters = 0;  // 0: auto, one pass over the replicated stream
    std::uint64_t seed = 0;
    std::uint64_t eval_every = 100;

    std::string h_policy = "auto";
    int h_max_iters = 500;
    double h_tol = 1e-6;
    double armijo_alpha = 0.01;
    double armijo_gamma = 0.1;
    int armijo_q = 10;
    double polyak_delta = 0.01;
    bool warm_start = false;

    std::string history = "window";
    std::size_t window = 1000;
    std::size_t eval_holdout = 0;
    bool timing = false;

    std::size_t f = 100;  // synthetic ambient dimension
    std::size_t k_truth = 40;
    std::size_t n_samples = 1000;
    double kappa = 1.0;
    double sigma = 5.0;
    std::string noise = "auto";
    double clip_hi = 4000.0;
    double floor = 1e-8;
    std::uint64_t replication = 0;  // 0: auto
    bool shuffle = true;
    double scale_l = 1.0;
    int batch_iters = 200;
};

namespace detail {

inline std::string render_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

struct ConfigField {
    std::function<void(ExperimentConfig&, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

inline double parse_num(const std::string& key, const std::string& val) {
    try {
        std::size_t used = 0;
        const double x = std::stod(val, &used);
        if (used != val.size()) throw std::invalid_argument(val);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected a number, got '" + val + "'");
    }
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& val) {
    const double x = parse_num(key, val);
    if (x < 0.0 || x != std::floor(x))
        throw ConfigError("config key '" + key + "': expected a nonnegative integer");
    return static_cast<std::uint64_t>(x);
}

inline bool parse_bool(const std::string& key, const std::string& val) {
    if (val == "true" || val == "1") return true;
    if (val == "false" || val == "0") return false;
    throw ConfigError("config key '" + key + "': expected true or false");
}

inline const std::map<std::string, ConfigField>& config_fields() {
    using C = ExperimentConfig;
    auto str = [](std::string C::* m) {
        return ConfigField{[m](C& c, const std::string& v) { c.*m = v; },
                           [m](const C& c) { return c.*m; }};
    };
    auto num = [](double C::* m) {
        return ConfigField{[m](C& c, const std::string& v) { c.*m = parse_num("", v); },
                           [m](const C& c) { return render_double(c.*m); }};
    };
    auto uint = [](std::uint64_t C::* m) {
        return ConfigField{[m](C& c, const std::string& v) { c.*m = parse_uint("", v); },
                           [m](const C& c) { return std::to_string(c.*m); }};
    };
    auto size = [](std::size_t C::* m) {
        return ConfigField{
            [m](C& c, const std::string& v) { c.*m = static_cast<std::size_t>(parse_uint("", v)); },
            [m](const C& c) { return std::to_string(c.*m); }};
    };
    auto integer = [](int C::* m) {
        return ConfigField{
            [m](C& c, const std::string& v) { c.*m = static_cast<int>(parse_uint("", v)); },
            [m](const C& c) { return std::to_string(c.*m); }};
    };
    auto boolean = [](bool C::* m) {
        return ConfigField{[m](C& c, const std::string& v) { c.*m = parse_bool("", v); },
                           [m](const C& c) { return c.*m ? "true" : "false"; }};
    };
    static const std::map<std::string, ConfigField> fields = {
        {"divergence", str(&C::divergence)},
        {"data", str(&C::data)},
        {"k", size(&C::k)},
        {"eps", num(&C::eps)},
        {"eps_prime", num(&C::eps_prime)},
        {"u_bound", num(&C::u_bound)},
        {"a", num(&C::a)},
        {"b", num(&C::b)},
        {"tau", uint(&C::tau)},
        {"iters", uint(&C::iters)},
        {"seed", uint(&C::seed)},
        {"eval_every", uint(&C::eval_every)},
        {"h_policy", str(&C::h_policy)},
        {"h_max_iters", integer(&C::h_max_iters)},
        {"h_tol", num(&C::h_tol)},
        {"armijo_alpha", num(&C::armijo_alpha)},
        {"armijo_gamma", num(&C::armijo_gamma)},
        {"armijo_q", integer(&C::armijo_q)},
        {"polyak_delta", num(&C::polyak_delta)},
        {"warm_start", boolean(&C::warm_start)},
        {"history", str(&C::history)},
        {"window", size(&C::window)},
        {"eval_holdout", size(&C::eval_holdout)},
        {"timing", boolean(&C::timing)},
        {"f", size(&C::f)},
        {"k_truth", size(&C::k_truth)},
        {"n_samples", size(&C::n_samples)},
        {"kappa", num(&C::kappa)},
        {"sigma", num(&C::sigma)},
        {"noise", str(&C::noise)},
        {"clip_hi", num(&C::clip_hi)},
        {"floor", num(&C::floor)},
        {"replication", uint(&C::replication)},
        {"shuffle", boolean(&C::shuffle)},
        {"scale_l", num(&C::scale_l)},
        {"batch_iters", integer(&C::batch_iters)},
    };
    return fields;
}

}  // namespace detail

inline void set_config_key(ExperimentConfig& cfg, const std::string& key,
                           const std::string& value) {
    const auto& fields = detail::config_fields();
    const auto it = fields.find(key);
    if (it == fields.end()) throw ConfigError("unknown config key '" + key + "'");
    try {
        it->second.set(cfg, value);
    } catch (const ConfigError&) {
        throw ConfigError("config key '" + key + "': bad value '" + value + "'");
    }
}

inline ExperimentConfig parse_config_text(std::istream& is, const std::string& what) {
    ExperimentConfig cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(what + ":" + std::to_string(lineno) + ": expected key = value");
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError(what + ":" + std::to_string(lineno) + ": empty key or value");
        set_config_key(cfg, key, value);
    }
    return cfg;
}

inline ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path);
    return parse_config_text(is, path);
}

// Canonical key = value rendering; parse(render(c)) == c.
inline std::string render_config(const ExperimentConfig& cfg) {
    std::ostringstream os;
    for (const auto& [key, field] : detail::config_fields())
        os << key << " = " << field.get(cfg) << '\n';
    return os.str();
}

inline NoiseSpec resolve_noise(const ExperimentConfig& cfg, const DivergenceSpec& div) {
    std::string text = cfg.noise;
    if (text == "auto") {
        switch (div.kind()) {
            case DivKind::IS: text = "gamma"; break;
            case DivKind::KL: text = "poisson"; break;
            case DivKind::Huber:
            case DivKind::RobustL1:
            case DivKind::CsiszarL1:
            case DivKind::RobustL2: text = "outliers"; break;
            default: text = "gaussian"; break;
        }
    }
    std::vector<std::string> parts;
    std::istringstream ps(text);
    for (std::string tok; std::getline(ps, tok, ':');) parts.push_back(tok);
    const std::string& head = parts[0];
    auto arg = [&](std::size_t i, double dflt) {
        return parts.size() > i ? detail::parse_num("noise", parts[i]) : dflt;
    };
    if (head == "none") return NoiseSpec::none();
    if (head == "poisson") return NoiseSpec::poisson();
    if (head == "gamma") return NoiseSpec::gamma_mult(arg(1, 1000.0));
    if (head == "gaussian") return NoiseSpec::gaussian(arg(1, 30.0));
    if (head == "outliers") return NoiseSpec::uniform_outliers(arg(1, 2000.0), arg(2, 0.3));
    throw ConfigError("unknown noise '" + cfg.noise + "'");
}

inline DivergenceSpec resolve_divergence(
    const ExperimentConfig& cfg,
    const std::function<Matrix(const std::string&)>& load_matrix = nullptr) {
    return parse_divergence(cfg.divergence, load_matrix);
}

struct ResolvedRun {
    std::uint64_t tau = 1;
    std::uint64_t iters = 1;
    std::uint64_t replication = 1;
    std::size_t total_samples = 0;
};

// Fill in the auto values: tau from the canonical rule, then the replication
// factor and iteration count so one covers the other.
inline ResolvedRun resolve_run(const ExperimentConfig& cfg, std::size_t source_samples) {
    if (source_samples == 0) throw DataError("resolve_run: empty data source");
    ResolvedRun r;
    r.tau = cfg.tau ? cfg.tau
                    : std::max<std::uint64_t>(
                          1, static_cast<std::uint64_t>(
                                 std::llround(1e-4 * static_cast<double>(source_samples))));
    const std::uint64_t holdout = cfg.eval_holdout;
    if (cfg.iters != 0) {
        r.iters = cfg.iters;
        const std::uint64_t need = r.iters * r.tau + holdout;
        r.replication = cfg.replication
                            ? cfg.replication
                            : (need + source_samples - 1) / source_samples;
    } else {
        r.replication = cfg.replication ? cfg.replication : 1;
        const std::uint64_t avail = source_samples * r.replication;
        if (avail <= holdout + r.tau)
            throw ConfigError("resolve_run: not enough samples for holdout plus one batch");
        r.iters = (avail - holdout) / r.tau;
    }
    r.total_samples = source_samples * r.replication;
    return r;
}

inline StepPolicy resolve_policy_params(const ExperimentConfig& cfg, StepPolicyKind kind) {
    StepPolicy p;
    p.kind = kind;
    p.armijo_alpha = cfg.armijo_alpha;
    p.armijo_gamma = cfg.armijo_gamma;
    p.armijo_q = cfg.armijo_q;
    p.polyak_delta = cfg.polyak_delta;
    p.validate();
    return p;
}

// Build the learner-level config; dimensions come from the resolved data
// source since file-backed data fixes F.
inline LearnerConfig make_learner_config(const ExperimentConfig& cfg,
                                         const DivergenceSpec& div, std::size_t dim,
                                         const ResolvedRun& run) {
    LearnerConfig lc;
    lc.divergence = div;
    lc.F = dim;
    lc.K = cfg.k;
    lc.eps = cfg.eps;
    lc.eps_prime = cfg.eps_prime;
    lc.u_bound = cfg.u_bound;
    lc.schedule = StepSchedule(cfg.a, cfg.b, static_cast<int>(run.tau));
    lc.T = run.iters;
    lc.seed = cfg.seed;
    lc.eval_every = cfg.eval_every;
    if (cfg.h_policy == "auto")
        lc.h_policy = resolve_policy_params(cfg, default_policy(div).kind);
    else if (cfg.h_policy == "armijo")
        lc.h_policy = resolve_policy_params(cfg, StepPolicyKind::Armijo);
    else if (cfg.h_policy == "constant-mm")
        lc.h_policy = resolve_policy_params(cfg, StepPolicyKind::ConstantMM);
    else if (cfg.h_policy == "polyak")
        lc.h_policy = resolve_policy_params(cfg, StepPolicyKind::Polyak);
    else
        throw ConfigError("unknown h_policy '" + cfg.h_policy + "'");
    lc.h_max_iters = cfg.h_max_iters;
    lc.h_tol = cfg.h_tol;
    lc.warm_start = cfg.warm_start;
    if (cfg.history == "window")
        lc.history = HistoryMode::Window;
    else if (cfg.history == "diagnostic")
        lc.history = HistoryMode::Diagnostic;
    else
        throw ConfigError("unknown history mode '" + cfg.history + "'");
    lc.window = cfg.window;
    lc.eval_holdout = cfg.eval_holdout;
    lc.timing = cfg.timing;
    lc.validate();
    return lc;
}

}  // namespace onmf
