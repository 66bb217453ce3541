#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "m3a/mixtures.hpp"

namespace m3a {

struct KsResult {
    double statistic = 0.0;    // sup-gap between the compared CDFs
    double p_value = 1.0;      // asymptotic Kolmogorov tail probability
    double n_effective = 0.0;  // n, or na*nb/(na+nb) for two samples
};

// Per-model evaluation on one user's IAT series. `error` is empty on
// success; a failed fit reports its message here while the other models
// still get scored.
struct GofScore {
    std::string model_name;
    double test_loglik = 0.0;
    double bic = 0.0;
    KsResult ks;
    std::string error;
};

struct GofConfig {
    double split_ratio = 0.5;  // fraction of IATs used for training
    EmConfig em;
    double pareto_log_floor = kParetoLogFloor;
};

// Tail probability Q(lambda) = 2 * sum_{k>=1} (-1)^(k-1) exp(-2 k^2 lambda^2),
// truncated once a term drops below 1e-12.
double kolmogorov_pvalue(double lambda);

// Exact D_n = sup_x |F_n(x) - F(x)| (both step edges checked at every sorted
// point); p-value from Q(sqrt(n) * D_n).
KsResult ks_one_sample(std::span<const double> data,
                       const std::function<double(double)>& cdf);

// Two-sample sup-gap; the statistic is assembled from integer counts so it
// is exact. n_effective = na*nb/(na+nb).
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

// -2 * train_loglik + k * ln(n); lower is better.
double bic(double train_loglik, int k, std::size_t n);

// Deterministic shuffle-split, fit of all three mixture families on the
// train part, then test log-likelihood + BIC(train) + one-sample K-S of the
// test part against each fitted CDF. Scores come back in fixed order:
// camel_log, exp_mixture, pareto_mixture.
std::vector<GofScore> evaluate_models(std::span<const double> data, std::uint64_t split_seed,
                                      const GofConfig& config);

// (sorted data[i], quantile_fn((i + 0.5) / n)) for i = 0..n-1.
std::vector<std::pair<double, double>> qq_points(
    std::span<const double> data, const std::function<double(double)>& quantile_fn);

}  // namespace m3a
