#pragma once

#include <string>

#include "m3a/anomaly.hpp"
#include "m3a/gof.hpp"
#include "m3a/mixtures.hpp"

namespace m3a {

// Everything a run needs beyond its input paths. Serializes to/from JSON;
// missing keys keep their defaults, unknown or out-of-range keys fail
// validation with every violation listed at once.
struct RunConfig {
    EmConfig em;
    double split_ratio = 0.5;
    std::uint64_t seed = 0;
    int bins_per_decade = 10;
    std::size_t orphan_query_threshold = 1000;
    std::size_t orphan_click_threshold = 100;
    std::size_t max_iat_query_floor = 1000;
    double max_iat_ceiling = 3600.0;
    std::string flag_rule = "reference-min";  // or "reference-quantile"
    double flag_quantile = 0.001;
    double flag_margin = 4.605170185988091;  // ln(100)
    std::size_t min_users = 30;
    int threads = 1;
    bool landed_only = true;
    double pareto_log_floor = kParetoLogFloor;
    std::string out_dir = ".";
};

RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);
std::string config_to_json(const RunConfig& config);  // pretty, key-sorted

// Views of the run config consumed by specific pipeline stages.
GofConfig to_gof_config(const RunConfig& config);
AnomalyConfig to_anomaly_config(const RunConfig& config);

}  // namespace m3a
