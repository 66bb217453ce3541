#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "m3a/ingest.hpp"
#include "m3a/metamodel.hpp"
#include "m3a/mixtures.hpp"

namespace m3a {

// One user's place in the weirdness ordering. Scored users carry features,
// a log-density, and a 1-based rank; users excluded before scoring carry the
// exclusion reason instead and rank 0.
struct AnomalyRecord {
    std::string user_id;
    UserFeatures features;
    double log_density = 0.0;
    std::size_t rank = 0;
    std::string auto_outlier_reason;  // empty for scored users
    bool score_clamped = false;
};

enum class FlagRule {
    kReferenceMin,       // cut at the minimum reference density
    kReferenceQuantile,  // cut at a low reference quantile
};

struct AnomalyConfig {
    EmConfig em;
    std::size_t min_users = 30;  // group-fit floor
    // screens applied before per-user fitting (no-ops when the series lack
    // query totals, e.g. when loaded from an IAT file)
    std::size_t orphan_query_threshold = 1000;
    std::size_t orphan_click_threshold = 100;
    std::size_t max_iat_query_floor = 1000;
    double max_iat_ceiling = 3600.0;
    FlagRule flag_rule = FlagRule::kReferenceMin;
    double flag_quantile = 0.001;       // used by kReferenceQuantile
    double flag_margin = 4.605170185988091;  // ln(100): flag only well below the cut
    std::uint64_t seed = 0;
    int threads = 1;
    bool landed_only = true;
};

struct RankWeirdnessReport {
    std::vector<AnomalyRecord> scored;         // ascending log-density
    std::vector<AnomalyRecord> auto_outliers;  // sorted by user_id
    std::vector<double> reference;             // sorted ascending
    std::vector<std::string> flagged;          // subset of scored, weirdest first
    MetaClickParams params;
    double tau = 0.0;
    std::uint64_t reference_seed = 0;
    double threshold = 0.0;  // log-density cut actually applied
};

// Joint log-density of the user's (r, m); lower means weirder.
ClampedLog score_user(const UserFeatures& features, const MetaClickParams& p);

// Ascending sort by (log_density, user_id), 1-based ranks, an equal-size
// reference population sampled from p with reference_seed and re-scored
// through score_user, then the configured flag rule minus flag_margin.
RankWeirdnessReport rank_weirdness(std::vector<AnomalyRecord> scored,
                                   std::uint64_t reference_seed, const MetaClickParams& p,
                                   const AnomalyConfig& config = {});

// The full pipeline on pre-extracted per-user IAT series: screens ->
// per-user Camel-Log fits (fanned out across config.threads; results do not
// depend on the worker count) -> feature extraction -> group fit ->
// scoring -> ranking. Throws FitError with per-reason counts if too few
// users survive to the group fit.
RankWeirdnessReport run_m3a_on_series(std::span<const IatSeries> series,
                                      const AnomalyConfig& config);

// Convenience composition: extract_iats + run_m3a_on_series.
RankWeirdnessReport run_m3a(std::span<const QueryEvent> events, const AnomalyConfig& config);

}  // namespace m3a
