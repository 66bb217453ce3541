#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "m3a/anomaly.hpp"
#include "m3a/errors.hpp"

using namespace m3a;

namespace {

MetaClickParams paper_population() {
    return {1.12, LogLogisticParams(3.0, 6.0), LogLogisticParams(5.7, 18.0)};
}

CamelLogParams canonical_truth() {
    return {0.75, LogLogisticParams(300.0, 2.0), LogLogisticParams(25200.0, 2.0)};
}

AnomalyRecord scored_record(const std::string& id, double r, double m,
                            const MetaClickParams& p) {
    AnomalyRecord rec;
    rec.user_id = id;
    rec.features = {id, r, m};
    const auto s = score_user(rec.features, p);
    rec.log_density = s.value;
    rec.score_clamped = s.clamped;
    return rec;
}

}  // namespace

TEST_SUITE("anomaly") {

TEST_CASE("score is the metamodel joint log-density") {
    const auto p = paper_population();
    const UserFeatures f{"u", 2.5, 6.1};
    CHECK(score_user(f, p).value == metaclick_logpdf(2.5, 6.1, p).value);
}

TEST_CASE("ranking is ascending density with id tiebreak") {
    const auto p = paper_population();
    std::vector<AnomalyRecord> recs;
    recs.push_back(scored_record("mid", 3.0, 5.7, p));
    recs.push_back(scored_record("weird", 40.0, 5.7, p));
    recs.push_back(scored_record("tie_b", 2.0, 5.0, p));
    recs.push_back(scored_record("tie_a", 2.0, 5.0, p));
    AnomalyConfig cfg;
    const auto rep = rank_weirdness(recs, 99, p, cfg);
    REQUIRE(rep.scored.size() == 4);
    CHECK(rep.scored[0].user_id == "weird");
    CHECK(rep.scored[0].rank == 1);
    // equal densities fall back to lexicographic ids
    CHECK(rep.scored[1].user_id == "tie_a");
    CHECK(rep.scored[2].user_id == "tie_b");
    CHECK(rep.scored[3].rank == 4);
    CHECK(rep.reference.size() == 4);
    CHECK(std::is_sorted(rep.reference.begin(), rep.reference.end()));
    CHECK(rep.threshold == rep.reference.front() - cfg.flag_margin);
    // every flagged user sits strictly below the threshold
    for (const auto& id : rep.flagged) {
        const auto it = std::find_if(rep.scored.begin(), rep.scored.end(),
                                     [&](const AnomalyRecord& r) { return r.user_id == id; });
        REQUIRE(it != rep.scored.end());
        CHECK(it->log_density < rep.threshold);
    }
}

TEST_CASE("reference population is reproducible per seed") {
    const auto p = paper_population();
    std::vector<AnomalyRecord> recs;
    for (int i = 0; i < 50; ++i) {
        recs.push_back(scored_record("u" + std::to_string(i), 2.0 + 0.05 * i,
                                     5.0 + 0.02 * i, p));
    }
    const auto a = rank_weirdness(recs, 1234, p, {});
    const auto b = rank_weirdness(recs, 1234, p, {});
    CHECK(a.reference == b.reference);
    CHECK(a.threshold == b.threshold);
    const auto c = rank_weirdness(recs, 1235, p, {});
    CHECK(a.reference != c.reference);
}

TEST_CASE("quantile flag rule cuts at the configured reference quantile") {
    const auto p = paper_population();
    std::vector<AnomalyRecord> recs;
    for (int i = 0; i < 200; ++i) {
        recs.push_back(
            scored_record("u" + std::to_string(i), 2.0 + 0.01 * i, 5.5 + 0.001 * i, p));
    }
    AnomalyConfig cfg;
    cfg.flag_rule = FlagRule::kReferenceQuantile;
    cfg.flag_quantile = 0.05;
    cfg.flag_margin = 0.0;
    const auto rep = rank_weirdness(recs, 7, p, cfg);
    const std::size_t idx =
        static_cast<std::size_t>(0.05 * double(rep.reference.size() - 1));
    CHECK(rep.threshold == rep.reference[idx]);

    cfg.flag_quantile = 1.5;
    CHECK_THROWS_AS((void)rank_weirdness(recs, 7, p, cfg), ConfigError);
    cfg.flag_quantile = 0.05;
    cfg.flag_margin = -1.0;
    CHECK_THROWS_AS((void)rank_weirdness(recs, 7, p, cfg), ConfigError);
}

TEST_CASE("pipeline integration: planted bot surfaces, broken users are routed") {
    const auto truth = canonical_truth();
    std::vector<IatSeries> series;

    const auto add_user = [&](const std::string& id, const CamelLogParams& p,
                              std::uint64_t seed) {
        IatSeries s;
        s.user_id = id;
        s.iats = camellog_sample(260, p, seed);
        s.n_total_queries = s.iats.size() + 1;
        s.n_landed = s.n_total_queries;
        series.push_back(std::move(s));
    };

    for (int i = 0; i < 36; ++i) {
        add_user("user" + std::to_string(100 + i), truth, 7000 + i);
    }
    // planted: R ~ 30 (theta ~ 0.97), same time scales otherwise
    const CamelLogParams bot{30.0 / 31.0, LogLogisticParams(300.0, 2.0),
                             LogLogisticParams(25200.0, 2.0)};
    add_user("planted_bot", bot, 424242);

    // orphan screen victim: totals say heavy, clicks say almost none
    IatSeries orphan;
    orphan.user_id = "orphan_user";
    orphan.iats = camellog_sample(50, truth, 515151);
    orphan.n_total_queries = 1400;
    orphan.n_landed = 51;
    series.push_back(orphan);

    // constant IATs: no two distinct values, the fit cannot start
    IatSeries constant;
    constant.user_id = "metronome";
    constant.iats.assign(40, 60.0);
    constant.n_total_queries = 41;
    constant.n_landed = 41;
    series.push_back(constant);

    AnomalyConfig cfg;
    cfg.seed = 5150;
    cfg.threads = 2;
    const auto rep = run_m3a_on_series(series, cfg);

    REQUIRE(!rep.scored.empty());
    CHECK(rep.scored.front().user_id == "planted_bot");
    CHECK(rep.scored.front().rank == 1);
    CHECK(std::find(rep.flagged.begin(), rep.flagged.end(), "planted_bot") !=
          rep.flagged.end());

    std::set<std::string> outlier_ids;
    std::set<std::string> reasons;
    for (const auto& rec : rep.auto_outliers) {
        outlier_ids.insert(rec.user_id);
        reasons.insert(rec.auto_outlier_reason);
    }
    CHECK(outlier_ids.count("orphan_user") == 1);
    CHECK(outlier_ids.count("metronome") == 1);
    CHECK(reasons.count("orphan-flag") == 1);
    CHECK(reasons.count("insufficient-data") == 1);

    // an auto-outlier never appears in the scored ranking
    for (const auto& rec : rep.scored) {
        CHECK(outlier_ids.count(rec.user_id) == 0);
    }
}

TEST_CASE("worker count does not change the result") {
    const auto truth = canonical_truth();
    std::vector<IatSeries> series;
    for (int i = 0; i < 34; ++i) {
        IatSeries s;
        s.user_id = "w" + std::to_string(i);
        s.iats = camellog_sample(150, truth, 9900 + i);
        s.n_total_queries = s.iats.size() + 1;
        s.n_landed = s.n_total_queries;
        series.push_back(std::move(s));
    }
    AnomalyConfig one;
    one.seed = 22;
    one.threads = 1;
    AnomalyConfig many = one;
    many.threads = 5;
    const auto a = run_m3a_on_series(series, one);
    const auto b = run_m3a_on_series(series, many);
    REQUIRE(a.scored.size() == b.scored.size());
    for (std::size_t i = 0; i < a.scored.size(); ++i) {
        CHECK(a.scored[i].user_id == b.scored[i].user_id);
        CHECK(a.scored[i].log_density == b.scored[i].log_density);
    }
    CHECK(a.params.eta == b.params.eta);
    CHECK(a.threshold == b.threshold);
}

TEST_CASE("too few usable users is a fit error that explains itself") {
    const auto truth = canonical_truth();
    std::vector<IatSeries> series;
    for (int i = 0; i < 8; ++i) {
        IatSeries s;
        s.user_id = "few" + std::to_string(i);
        s.iats = camellog_sample(80, truth, 300 + i);
        s.n_total_queries = s.iats.size() + 1;
        s.n_landed = s.n_total_queries;
        series.push_back(std::move(s));
    }
    AnomalyConfig cfg;
    cfg.seed = 1;
    try {
        (void)run_m3a_on_series(series, cfg);
        FAIL("expected FitError");
    } catch (const FitError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("8") != std::string::npos);
    }
}

TEST_CASE("config validation happens before any work") {
    AnomalyConfig cfg;
    cfg.threads = 0;
    CHECK_THROWS_AS((void)run_m3a_on_series(std::vector<IatSeries>{}, cfg), ConfigError);
}

}  // TEST_SUITE
