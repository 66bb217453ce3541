#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "m3a/anomaly.hpp"
#include "m3a/gof.hpp"
#include "m3a/ingest.hpp"
#include "m3a/mixtures.hpp"

namespace m3a {

// Shortest round-trip decimal representation (std::to_chars); the one true
// way doubles reach output files, so reruns are byte-identical.
std::string format_double(double v);

// Minimal quoting: fields containing comma, quote, or newline get wrapped
// and inner quotes doubled. Everything this project writes is plain, but
// user ids are opaque input.
std::string csv_escape(const std::string& field);

// iats.csv: user_id,iat_seconds (chronological within user)
void write_iats_csv(const std::string& path, std::span<const IatSeries> series);
// Read back; query totals are not stored in this format and stay zero.
std::vector<IatSeries> read_iats_csv(const std::string& path);

// summary.csv: user_id,n_total_queries,n_landed,n_orphan,n_zero_iats,n_iats,
//              min_iat,median_iat,max_iat (stats empty when there are no IATs)
void write_summary_csv(const std::string& path, std::span<const IatSeries> series);

// histogram.csv: bin_low,bin_high,count
void write_histogram_csv(const std::string& path, const LogHistogram& h);

struct UserFitRow {
    std::string user_id;
    CamelLogFitReport report;
    std::string error;  // nonempty when the fit threw; report fields then empty
};
// params.csv: user_id,theta,alpha_in,beta_in,alpha_off,beta_off,train_loglik,
//             n_iterations,converged,collapsed,error
void write_params_csv(const std::string& path, std::span<const UserFitRow> rows);

struct UserGofRow {
    std::string user_id;
    GofScore score;
};
// gof.csv: user_id,model,test_loglik,bic,ks_statistic,ks_p_value,n_effective,error
void write_gof_csv(const std::string& path, std::span<const UserGofRow> rows);

// report.csv: user_id,r,m,log_density,rank,flagged,reason — scored users in
// rank order, then auto-outliers by user_id with the numeric fields empty.
void write_report_csv(const std::string& path, const RankWeirdnessReport& report);

// reference.csv: rank,log_density (ascending)
void write_reference_csv(const std::string& path, const RankWeirdnessReport& report);

// qq.csv: user_id,empirical_q,model_q
void write_qq_csv(const std::string& path, const std::string& user_id,
                  std::span<const std::pair<double, double>> points);

// Synthetic log in the minimal ingestable format:
// user_id<TAB>epoch_seconds<TAB>landed
void write_minimal_log(const std::string& path, std::span<const QueryEvent> events);

}  // namespace m3a
