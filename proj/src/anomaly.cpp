#include "m3a/anomaly.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <thread>
#include <unordered_map>

#include "m3a/errors.hpp"
#include "m3a/rng.hpp"

namespace m3a {

ClampedLog score_user(const UserFeatures& features, const MetaClickParams& p) {
    return metaclick_logpdf(features.r, features.m, p);
}

namespace {

void check_anomaly_config(const AnomalyConfig& c) {
    if (!(c.flag_quantile >= 0.0 && c.flag_quantile <= 1.0)) {
        throw ConfigError("flag_quantile must lie in [0,1]");
    }
    if (!(c.flag_margin >= 0.0) || !std::isfinite(c.flag_margin)) {
        throw ConfigError("flag_margin must be finite and >= 0");
    }
    if (c.threads < 1) throw ConfigError("threads must be >= 1");
}

}  // namespace

RankWeirdnessReport rank_weirdness(std::vector<AnomalyRecord> scored,
                                   std::uint64_t reference_seed, const MetaClickParams& p,
                                   const AnomalyConfig& config) {
    check_anomaly_config(config);
    if (scored.empty()) throw DomainError("rank_weirdness requires at least one scored user");

    std::sort(scored.begin(), scored.end(), [](const AnomalyRecord& a, const AnomalyRecord& b) {
        if (a.log_density != b.log_density) return a.log_density < b.log_density;
        return a.user_id < b.user_id;
    });
    for (std::size_t i = 0; i < scored.size(); ++i) scored[i].rank = i + 1;

    RankWeirdnessReport report;
    report.params = p;
    report.reference_seed = reference_seed;

    const auto sims = metaclick_sample(scored.size(), p, reference_seed);
    report.reference.reserve(sims.size());
    for (const auto& f : sims) report.reference.push_back(score_user(f, p).value);
    std::sort(report.reference.begin(), report.reference.end());

    double cut = report.reference.front();
    if (config.flag_rule == FlagRule::kReferenceQuantile) {
        const auto idx = static_cast<std::size_t>(
            config.flag_quantile * double(report.reference.size() - 1));
        cut = report.reference[idx];
    }
    report.threshold = cut - config.flag_margin;
    for (const auto& rec : scored) {
        if (rec.log_density < report.threshold) report.flagged.push_back(rec.user_id);
    }
    report.scored = std::move(scored);
    return report;
}

namespace {

struct FitOutcome {
    bool excluded = false;
    std::string reason;
    UserFeatures features;
};

FitOutcome fit_one(const IatSeries& s, const AnomalyConfig& config) {
    FitOutcome out;
    out.features.user_id = s.user_id;
    if (s.iats.size() < config.em.min_fit_size) {
        out.excluded = true;
        out.reason = "insufficient-data";
        return out;
    }
    EmConfig em = config.em;
    em.seed = derive_seed(config.seed, s.user_id);
    CamelLogFitReport report;
    try {
        report = camellog_fit_em(s.iats, em);
    } catch (const InsufficientDataError&) {
        out.excluded = true;
        out.reason = "insufficient-data";
        return out;
    } catch (const DegenerateDataError&) {
        out.excluded = true;
        out.reason = "fit-failure";
        return out;
    } catch (const FitError&) {
        out.excluded = true;
        out.reason = "fit-failure";
        return out;
    }
    const double theta = report.params.theta;
    if (theta >= 1.0 - 1e-6) {
        out.excluded = true;
        out.reason = "theta-one";  // R = theta/(1-theta) diverges
        return out;
    }
    if (theta <= 1e-6) {
        out.excluded = true;
        out.reason = "theta-zero";  // no in-session component survived
        return out;
    }
    if (report.params.in_component.alpha <= 1.0) {
        out.excluded = true;
        out.reason = "sub-second-median";  // m = ln(alpha_in) <= 0
        return out;
    }
    out.features.r = theta / (1.0 - theta);
    out.features.m = std::log(report.params.in_component.alpha);
    return out;
}

}  // namespace

RankWeirdnessReport run_m3a_on_series(std::span<const IatSeries> series,
                                      const AnomalyConfig& config) {
    check_anomaly_config(config);

    // Pre-fit screens. Series without query totals (synthetic or file-loaded)
    // never trip these.
    std::unordered_map<std::string, std::string> screened;
    for (auto& id : orphan_flags(series, config.orphan_query_threshold,
                                 config.orphan_click_threshold)) {
        screened.emplace(std::move(id), "orphan-flag");
    }
    for (auto& id :
         max_iat_flags(series, config.max_iat_query_floor, config.max_iat_ceiling)) {
        screened.emplace(std::move(id), "max-iat");
    }

    std::vector<const IatSeries*> to_fit;
    std::vector<AnomalyRecord> outliers;
    for (const auto& s : series) {
        const auto hit = screened.find(s.user_id);
        if (hit != screened.end()) {
            AnomalyRecord rec;
            rec.user_id = s.user_id;
            rec.features.user_id = s.user_id;
            rec.auto_outlier_reason = hit->second;
            rec.log_density = std::numeric_limits<double>::quiet_NaN();
            outliers.push_back(std::move(rec));
        } else {
            to_fit.push_back(&s);
        }
    }

    // Per-user fits, fanned out. Each user's seed depends only on its id, and
    // results land in fixed slots, so the outcome is worker-count independent.
    std::vector<FitOutcome> outcomes(to_fit.size());
    const auto n_threads = static_cast<std::size_t>(
        std::min<long long>(config.threads, 256));
    if (n_threads <= 1 || to_fit.size() <= 1) {
        for (std::size_t i = 0; i < to_fit.size(); ++i) {
            outcomes[i] = fit_one(*to_fit[i], config);
        }
    } else {
        std::atomic<std::size_t> next{0};
        auto work = [&] {
            for (std::size_t i = next.fetch_add(1); i < to_fit.size();
                 i = next.fetch_add(1)) {
                outcomes[i] = fit_one(*to_fit[i], config);
            }
        };
        std::vector<std::thread> pool;
        const std::size_t n_workers = std::min(n_threads, to_fit.size());
        pool.reserve(n_workers);
        for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }

    std::vector<UserFeatures> features;
    for (auto& o : outcomes) {
        if (o.excluded) {
            AnomalyRecord rec;
            rec.user_id = o.features.user_id;
            rec.features = o.features;
            rec.auto_outlier_reason = std::move(o.reason);
            rec.log_density = std::numeric_limits<double>::quiet_NaN();
            outliers.push_back(std::move(rec));
        } else {
            features.push_back(std::move(o.features));
        }
    }

    MetaClickFit group;
    try {
        group = fit_metaclick(features, config.min_users);
    } catch (const std::exception& e) {
        std::unordered_map<std::string, std::size_t> reasons;
        for (const auto& rec : outliers) ++reasons[rec.auto_outlier_reason];
        std::string msg = "group fit failed: ";
        msg += e.what();
        msg += " (fittable users: " + std::to_string(features.size());
        for (const auto& [reason, count] : std::map<std::string, std::size_t>(
                 reasons.begin(), reasons.end())) {
            msg += "; " + reason + ": " + std::to_string(count);
        }
        msg += ")";
        throw FitError(msg);
    }

    std::vector<AnomalyRecord> records;
    records.reserve(features.size());
    for (const auto& f : features) {
        AnomalyRecord rec;
        rec.user_id = f.user_id;
        rec.features = f;
        const ClampedLog score = score_user(f, group.params);
        rec.log_density = score.value;
        rec.score_clamped = score.clamped;
        records.push_back(std::move(rec));
    }

    RankWeirdnessReport report = rank_weirdness(
        std::move(records), derive_seed(config.seed, "reference"), group.params, config);
    report.tau = group.tau;
    std::sort(outliers.begin(), outliers.end(),
              [](const AnomalyRecord& a, const AnomalyRecord& b) {
                  return a.user_id < b.user_id;
              });
    report.auto_outliers = std::move(outliers);
    return report;
}

RankWeirdnessReport run_m3a(std::span<const QueryEvent> events, const AnomalyConfig& config) {
    const auto series = extract_iats(events, config.landed_only);
    return run_m3a_on_series(series, config);
}

}  // namespace m3a
