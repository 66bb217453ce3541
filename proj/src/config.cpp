#include "m3a/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "json.hpp"

#include "m3a/errors.hpp"

namespace m3a {

namespace {

using nlohmann::json;

// Pulls `key` out of `obj` if present, type-checked; wrong types become
// violations rather than exceptions so every problem is reported together.
template <typename T>
void take(const json& obj, const char* key, T& into, std::vector<std::string>& violations) {
    const auto it = obj.find(key);
    if (it == obj.end()) return;
    try {
        into = it->get<T>();
    } catch (const json::exception&) {
        violations.push_back(std::string(key) + ": wrong type");
    }
}

void check(bool ok, const char* message, std::vector<std::string>& violations) {
    if (!ok) violations.push_back(message);
}

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> known,
                         const std::string& prefix, std::vector<std::string>& violations) {
    for (const auto& [key, value] : obj.items()) {
        bool found = false;
        for (const char* k : known) {
            if (key == k) {
                found = true;
                break;
            }
        }
        if (!found) violations.push_back(prefix + key + ": unknown key");
    }
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError("config must be a JSON object");

    RunConfig cfg;
    std::vector<std::string> violations;

    reject_unknown_keys(root,
                        {"em", "split_ratio", "seed", "bins_per_decade", "orphan", "flag",
                         "min_users", "threads", "landed_only", "pareto_log_floor", "out_dir"},
                        "", violations);

    if (root.contains("em")) {
        const auto& em = root["em"];
        if (em.is_object()) {
            reject_unknown_keys(em, {"tolerance", "max_iterations", "restarts", "min_fit_size"},
                                "em.", violations);
            take(em, "tolerance", cfg.em.tolerance, violations);
            take(em, "max_iterations", cfg.em.max_iterations, violations);
            take(em, "restarts", cfg.em.restarts, violations);
            take(em, "min_fit_size", cfg.em.min_fit_size, violations);
        } else {
            violations.emplace_back("em: must be an object");
        }
    }
    if (root.contains("orphan")) {
        const auto& orphan = root["orphan"];
        if (orphan.is_object()) {
            reject_unknown_keys(orphan,
                                {"query_threshold", "click_threshold", "max_iat_query_floor",
                                 "max_iat_ceiling"},
                                "orphan.", violations);
            take(orphan, "query_threshold", cfg.orphan_query_threshold, violations);
            take(orphan, "click_threshold", cfg.orphan_click_threshold, violations);
            take(orphan, "max_iat_query_floor", cfg.max_iat_query_floor, violations);
            take(orphan, "max_iat_ceiling", cfg.max_iat_ceiling, violations);
        } else {
            violations.emplace_back("orphan: must be an object");
        }
    }
    if (root.contains("flag")) {
        const auto& flag = root["flag"];
        if (flag.is_object()) {
            reject_unknown_keys(flag, {"rule", "quantile", "margin"}, "flag.", violations);
            take(flag, "rule", cfg.flag_rule, violations);
            take(flag, "quantile", cfg.flag_quantile, violations);
            take(flag, "margin", cfg.flag_margin, violations);
        } else {
            violations.emplace_back("flag: must be an object");
        }
    }
    take(root, "split_ratio", cfg.split_ratio, violations);
    take(root, "seed", cfg.seed, violations);
    take(root, "bins_per_decade", cfg.bins_per_decade, violations);
    take(root, "min_users", cfg.min_users, violations);
    take(root, "threads", cfg.threads, violations);
    take(root, "landed_only", cfg.landed_only, violations);
    take(root, "pareto_log_floor", cfg.pareto_log_floor, violations);
    take(root, "out_dir", cfg.out_dir, violations);

    check(cfg.em.tolerance > 0.0 && std::isfinite(cfg.em.tolerance),
          "em.tolerance: must be positive and finite", violations);
    check(cfg.em.max_iterations >= 1, "em.max_iterations: must be >= 1", violations);
    check(cfg.em.restarts >= 1, "em.restarts: must be >= 1", violations);
    check(cfg.em.min_fit_size >= 2, "em.min_fit_size: must be >= 2", violations);
    check(cfg.split_ratio > 0.0 && cfg.split_ratio < 1.0,
          "split_ratio: must lie strictly between 0 and 1", violations);
    check(cfg.bins_per_decade >= 1, "bins_per_decade: must be >= 1", violations);
    check(cfg.orphan_query_threshold >= 1, "orphan.query_threshold: must be >= 1", violations);
    check(cfg.orphan_click_threshold >= 1, "orphan.click_threshold: must be >= 1", violations);
    check(cfg.max_iat_query_floor >= 1, "orphan.max_iat_query_floor: must be >= 1", violations);
    check(cfg.max_iat_ceiling > 0.0 && std::isfinite(cfg.max_iat_ceiling),
          "orphan.max_iat_ceiling: must be positive and finite", violations);
    check(cfg.flag_rule == "reference-min" || cfg.flag_rule == "reference-quantile",
          "flag.rule: must be 'reference-min' or 'reference-quantile'", violations);
    check(cfg.flag_quantile >= 0.0 && cfg.flag_quantile <= 1.0,
          "flag.quantile: must lie in [0,1]", violations);
    check(cfg.flag_margin >= 0.0 && std::isfinite(cfg.flag_margin),
          "flag.margin: must be finite and >= 0", violations);
    check(cfg.min_users >= 2, "min_users: must be >= 2", violations);
    check(cfg.threads >= 1, "threads: must be >= 1", violations);
    check(std::isfinite(cfg.pareto_log_floor) && cfg.pareto_log_floor <= 0.0,
          "pareto_log_floor: must be finite and <= 0", violations);
    check(!cfg.out_dir.empty(), "out_dir: must not be empty", violations);

    if (!violations.empty()) {
        std::string msg = "invalid config:";
        for (const auto& v : violations) msg += "\n  - " + v;
        throw ConfigError(msg);
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string config_to_json(const RunConfig& cfg) {
    json root;
    root["em"] = {{"tolerance", cfg.em.tolerance},
                  {"max_iterations", cfg.em.max_iterations},
                  {"restarts", cfg.em.restarts},
                  {"min_fit_size", cfg.em.min_fit_size}};
    root["split_ratio"] = cfg.split_ratio;
    root["seed"] = cfg.seed;
    root["bins_per_decade"] = cfg.bins_per_decade;
    root["orphan"] = {{"query_threshold", cfg.orphan_query_threshold},
                      {"click_threshold", cfg.orphan_click_threshold},
                      {"max_iat_query_floor", cfg.max_iat_query_floor},
                      {"max_iat_ceiling", cfg.max_iat_ceiling}};
    root["flag"] = {{"rule", cfg.flag_rule},
                    {"quantile", cfg.flag_quantile},
                    {"margin", cfg.flag_margin}};
    root["min_users"] = cfg.min_users;
    root["threads"] = cfg.threads;
    root["landed_only"] = cfg.landed_only;
    root["pareto_log_floor"] = cfg.pareto_log_floor;
    root["out_dir"] = cfg.out_dir;
    return root.dump(2) + "\n";
}

GofConfig to_gof_config(const RunConfig& cfg) {
    GofConfig g;
    g.split_ratio = cfg.split_ratio;
    g.em = cfg.em;
    g.pareto_log_floor = cfg.pareto_log_floor;
    return g;
}

AnomalyConfig to_anomaly_config(const RunConfig& cfg) {
    AnomalyConfig a;
    a.em = cfg.em;
    a.min_users = cfg.min_users;
    a.orphan_query_threshold = cfg.orphan_query_threshold;
    a.orphan_click_threshold = cfg.orphan_click_threshold;
    a.max_iat_query_floor = cfg.max_iat_query_floor;
    a.max_iat_ceiling = cfg.max_iat_ceiling;
    a.flag_rule = cfg.flag_rule == "reference-quantile" ? FlagRule::kReferenceQuantile
                                                        : FlagRule::kReferenceMin;
    a.flag_quantile = cfg.flag_quantile;
    a.flag_margin = cfg.flag_margin;
    a.seed = cfg.seed;
    a.threads = cfg.threads;
    a.landed_only = cfg.landed_only;
    return a;
}

}  // namespace m3a
