#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "malsched/relaxed.hpp"
#include "malsched/sweep.hpp"
#include "malsched/workload.hpp"

namespace malsched {

// Configuration problems keep their category so the CLI can report
// parse/schema/axiom failures distinctly.
class ConfigError : public std::runtime_error {
  public:
    enum class Kind { parse, schema, axiom };

    ConfigError(Kind kind, const std::string& what)
        : std::runtime_error(prefix(kind) + what), kind_(kind) {}

    Kind kind() const { return kind_; }

  private:
    static std::string prefix(Kind k) {
        switch (k) {
            case Kind::parse: return "parse error: ";
            case Kind::schema: return "schema error: ";
            case Kind::axiom: return "axiom violation: ";
        }
        return "";
    }
    Kind kind_;
};

struct ExperimentConfig {
    WorkloadSpec workload;
    SweepOptions sweep;
    std::string out_path;
};

namespace detail {

using nlohmann::json;

inline const json& require(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end())
        throw ConfigError(ConfigError::Kind::schema, where + ": missing key \"" + key + "\"");
    return *it;
}

inline double require_number(const json& obj, const char* key, const std::string& where) {
    const json& v = require(obj, key, where);
    if (!v.is_number())
        throw ConfigError(ConfigError::Kind::schema, where + "." + key + ": expected a number");
    return v.get<double>();
}

inline std::string require_string(const json& obj, const char* key, const std::string& where) {
    const json& v = require(obj, key, where);
    if (!v.is_string())
        throw ConfigError(ConfigError::Kind::schema, where + "." + key + ": expected a string");
    return v.get<std::string>();
}

inline std::vector<double> number_list(const json& v, const std::string& where) {
    if (!v.is_array())
        throw ConfigError(ConfigError::Kind::schema, where + ": expected an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
        if (!x.is_number())
            throw ConfigError(ConfigError::Kind::schema, where + ": expected numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

inline ArrivalProcess parse_arrival(const json& v, const std::string& where) {
    std::string type = require_string(v, "type", where);
    double rate = require_number(v, "rate", where);
    try {
        if (type == "poisson") return ArrivalProcess::poisson(rate);
        if (type == "deterministic") return ArrivalProcess::deterministic(rate);
        if (type == "gamma")
            return ArrivalProcess::gamma_renewal(rate, require_number(v, "shape", where));
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(ConfigError::Kind::axiom, where + ": " + e.what());
    }
    throw ConfigError(ConfigError::Kind::schema, where + ": unknown arrival type \"" + type + "\"");
}

inline PhaseTypeDist parse_size(const json& v, const std::string& where) {
    std::string type = require_string(v, "type", where);
    try {
        if (type == "exponential") return PhaseTypeDist::exponential(require_number(v, "rate", where));
        if (type == "hyperexp")
            return PhaseTypeDist::hyperexponential(
                number_list(require(v, "probs", where), where + ".probs"),
                number_list(require(v, "rates", where), where + ".rates"));
        if (type == "erlang")
            return PhaseTypeDist::erlang(static_cast<int>(require_number(v, "phases", where)),
                                         require_number(v, "rate", where));
        if (type == "phase") {
            auto p = number_list(require(v, "p", where), where + ".p");
            const json& qj = require(v, "Q", where);
            if (!qj.is_array())
                throw ConfigError(ConfigError::Kind::schema, where + ".Q: expected a matrix");
            std::vector<std::vector<double>> Q;
            for (const auto& row : qj) Q.push_back(number_list(row, where + ".Q"));
            return PhaseTypeDist(p, Q);
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(ConfigError::Kind::axiom, where + ": " + e.what());
    }
    throw ConfigError(ConfigError::Kind::schema, where + ": unknown size type \"" + type + "\"");
}

inline SpeedupFunction parse_speedup(const json& v, const std::string& where) {
    std::string type = require_string(v, "type", where);
    try {
        if (type == "power") return SpeedupFunction::power(require_number(v, "p", where));
        if (type == "amdahl") return SpeedupFunction::amdahl(require_number(v, "sigma", where));
        if (type == "table") {
            const json& kj = require(v, "knots", where);
            if (!kj.is_array())
                throw ConfigError(ConfigError::Kind::schema,
                                  where + ".knots: expected [[k, s], ...]");
            std::vector<std::pair<double, double>> knots;
            for (const auto& kn : kj) {
                auto pair = number_list(kn, where + ".knots");
                if (pair.size() != 2)
                    throw ConfigError(ConfigError::Kind::schema,
                                      where + ".knots: each knot is [k, s]");
                knots.emplace_back(pair[0], pair[1]);
            }
            return SpeedupFunction::table(std::move(knots));
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(ConfigError::Kind::axiom, where + ": " + e.what());
    }
    throw ConfigError(ConfigError::Kind::schema,
                      where + ": unknown speedup type \"" + type + "\"");
}

}  // namespace detail

inline void validate_config(const ExperimentConfig& cfg);

inline ExperimentConfig parse_config(const std::string& text) {
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(ConfigError::Kind::parse, e.what());
    }
    if (!root.is_object())
        throw ConfigError(ConfigError::Kind::schema, "top level: expected an object");

    ExperimentConfig cfg;
    const auto& classes = detail::require(root, "classes", "top level");
    if (!classes.is_array() || classes.empty())
        throw ConfigError(ConfigError::Kind::schema, "classes: expected a non-empty array");
    std::size_t idx = 0;
    for (const auto& cj : classes) {
        std::string where = "classes[" + std::to_string(idx) + "]";
        if (!cj.is_object())
            throw ConfigError(ConfigError::Kind::schema, where + ": expected an object");
        std::string name = cj.contains("name") ? cj["name"].get<std::string>()
                                               : "class" + std::to_string(idx);
        double c = detail::require_number(cj, "holding_cost", where);
        if (!(c > 0.0))
            throw ConfigError(ConfigError::Kind::axiom, where + ".holding_cost: must be > 0");
        try {
            cfg.workload.classes.emplace_back(
                name, detail::parse_arrival(detail::require(cj, "arrival", where), where + ".arrival"),
                detail::parse_size(detail::require(cj, "size", where), where + ".size"), c,
                detail::parse_speedup(detail::require(cj, "speedup", where), where + ".speedup"));
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            throw ConfigError(ConfigError::Kind::axiom, where + ": " + e.what());
        }
        ++idx;
    }
    cfg.workload.n_cores = detail::require_number(root, "n", "top level");

    if (root.contains("scales")) cfg.sweep.scales = detail::number_list(root["scales"], "scales");
    for (double d : cfg.sweep.scales)
        if (!(d >= 1.0))
            throw ConfigError(ConfigError::Kind::schema, "scales: every scale must be >= 1");
    if (root.contains("policies")) {
        cfg.sweep.policies.clear();
        for (const auto& p : root["policies"]) {
            if (!p.is_string())
                throw ConfigError(ConfigError::Kind::schema, "policies: expected strings");
            cfg.sweep.policies.push_back(p.get<std::string>());
        }
    }
    if (root.contains("beta")) cfg.sweep.beta = root["beta"].get<double>();
    if (root.contains("replicas")) cfg.sweep.replicas = root["replicas"].get<std::size_t>();
    if (root.contains("seed")) cfg.sweep.base_seed = root["seed"].get<std::uint64_t>();
    if (root.contains("warmup_frac")) cfg.sweep.warmup_frac = root["warmup_frac"].get<double>();
    if (root.contains("completions"))
        cfg.sweep.completions_target = root["completions"].get<double>();
    if (root.contains("horizon")) cfg.sweep.horizon_override = root["horizon"].get<double>();
    if (root.contains("live_cap")) cfg.sweep.live_cap = root["live_cap"].get<std::size_t>();
    if (root.contains("out")) cfg.out_path = root["out"].get<std::string>();

    validate_config(cfg);
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError(ConfigError::Kind::parse, "cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

inline void validate_config(const ExperimentConfig& cfg) {
    if (!(cfg.sweep.beta > 0.75 && cfg.sweep.beta < 1.0))
        throw ConfigError(ConfigError::Kind::schema, "beta: must lie in (0.75, 1)");
    if (!(cfg.sweep.warmup_frac >= 0.0 && cfg.sweep.warmup_frac < 1.0))
        throw ConfigError(ConfigError::Kind::schema, "warmup_frac: must lie in [0, 1)");
    if (cfg.sweep.replicas == 0)
        throw ConfigError(ConfigError::Kind::schema, "replicas: must be >= 1");
    double rho = cfg.workload.system_load();
    if (!(rho < 1.0))
        throw ConfigError(ConfigError::Kind::axiom,
                          "workload: system load rho = " + std::to_string(rho) + " must be < 1");
    bool wants_wham = false;
    for (const auto& p : cfg.sweep.policies) {
        if (p != "wham" && p != "fwcam" && p != "equi" && p != "greedy" && p != "fcfs1")
            throw ConfigError(ConfigError::Kind::schema, "policies: unknown policy \"" + p + "\"");
        if (p == "wham") wants_wham = true;
    }
    if (wants_wham)
        for (const auto& c : cfg.workload.classes)
            if (!c.speedup.strictly_concave())
                throw ConfigError(ConfigError::Kind::axiom,
                                  "class " + c.name +
                                      ": tabulated speedups lack curvature and cannot be used "
                                      "with the wham policy");
    try {
        solve_relaxed(cfg.workload);
    } catch (const std::exception& e) {
        throw ConfigError(ConfigError::Kind::axiom,
                          std::string("relaxed program infeasible: ") + e.what());
    }
}

}  // namespace malsched
