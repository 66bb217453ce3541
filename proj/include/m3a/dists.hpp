#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace m3a {

// Log-logistic distribution. alpha is the median (same units as the data),
// beta the dimensionless shape; F(t) = 1 / (1 + (t/alpha)^-beta) on [0, inf).
struct LogLogisticParams {
    double alpha = 1.0;
    double beta = 1.0;

    LogLogisticParams() = default;
    LogLogisticParams(double alpha_, double beta_);  // validates positivity
};

struct ExponentialParams {
    double rate = 1.0;  // 1/seconds

    ExponentialParams() = default;
    explicit ExponentialParams(double rate_);
};

// Pareto type I: F(t) = 1 - (xmin/t)^shape for t >= xmin.
struct ParetoParams {
    double xmin = 1.0;
    double shape = 1.0;

    ParetoParams() = default;
    ParetoParams(double xmin_, double shape_);
};

// ---- Log-logistic ----------------------------------------------------------

double ll_cdf(double t, const LogLogisticParams& p);
double ll_pdf(double t, const LogLogisticParams& p);
double ll_logpdf(double t, const LogLogisticParams& p);
double ll_quantile(double u, const LogLogisticParams& p);
std::vector<double> ll_sample(std::size_t n, const LogLogisticParams& p, std::uint64_t seed);

// F(t)/(1-F(t)) = (t/alpha)^beta; log odds ratio is linear in log t with
// slope beta and intercept -beta*log(alpha).
double odds_ratio(double t, const LogLogisticParams& p);

// Weighted maximum-likelihood fit. Empty `weights` means unit weights.
// Requires at least two distinct positive values with positive weight;
// effectively constant data has no finite shape MLE and is rejected with
// DegenerateDataError so that EM callers can reseed.
LogLogisticParams ll_fit_mle(std::span<const double> data,
                             std::span<const double> weights = {});

// Warm-started variant; skips the median/log-std initial guess. Used by EM
// M-steps, where the previous iteration's component is the natural start.
LogLogisticParams ll_fit_mle(std::span<const double> data,
                             std::span<const double> weights,
                             const LogLogisticParams& init);

// ---- Exponential -----------------------------------------------------------

double exp_cdf(double t, const ExponentialParams& p);
double exp_logpdf(double t, const ExponentialParams& p);
double exp_quantile(double u, const ExponentialParams& p);
std::vector<double> exp_sample(std::size_t n, const ExponentialParams& p, std::uint64_t seed);
ExponentialParams exp_fit(std::span<const double> data,
                          std::span<const double> weights = {});

// ---- Pareto ----------------------------------------------------------------

double pareto_cdf(double t, const ParetoParams& p);
double pareto_logpdf(double t, const ParetoParams& p);  // t < xmin is a domain error
double pareto_quantile(double u, const ParetoParams& p);
std::vector<double> pareto_sample(std::size_t n, const ParetoParams& p, std::uint64_t seed);

// Closed-form weighted shape MLE with xmin held fixed.
ParetoParams pareto_fit(std::span<const double> data, double xmin,
                        std::span<const double> weights = {});
// Convenience overload: xmin = min(data).
ParetoParams pareto_fit(std::span<const double> data);

}  // namespace m3a
