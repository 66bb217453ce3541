#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "m3a/dists.hpp"

namespace m3a {

// Log-density assigned to observations below a Pareto mixture's xmin at
// evaluation time. Keeps model comparisons finite; the resulting penalty is
// the honest consequence of the Pareto's bounded support.
inline constexpr double kParetoLogFloor = -745.0;

struct EmConfig {
    double tolerance = 1e-8;       // relative train log-likelihood change
    int max_iterations = 500;
    int restarts = 3;              // jittered re-initializations, best kept
    std::size_t min_fit_size = 10; // fewer IATs -> InsufficientDataError
    std::uint64_t seed = 0;        // drives restart jitter only
};

// Two-component log-logistic mixture over inter-arrival times. Canonical
// labeling: the in-session component has the smaller median (alpha_in <=
// alpha_off); theta is the in-session proportion.
struct CamelLogParams {
    double theta = 0.5;
    LogLogisticParams in_component;
    LogLogisticParams off_component;
};

// Two-component exponential mixture; rate_in >= rate_off (in-session IATs
// are the shorter ones).
struct ExpMixtureParams {
    double theta = 0.5;
    ExponentialParams in_component;
    ExponentialParams off_component;
};

// Two-component Pareto mixture with a shared xmin fixed at the minimum
// observed value, so each component contributes one free shape parameter.
struct ParetoMixtureParams {
    double theta = 0.5;
    ParetoParams in_component;   // larger shape = smaller median
    ParetoParams off_component;
};

template <typename Params>
struct MixtureFitReport {
    Params params;
    double train_loglik = 0.0;
    int n_iterations = 0;
    bool converged = false;
    bool collapsed = false;  // one component's weight fell below 1e-6
    int n_params = 0;        // 5 for Camel-Log, 3 for the others
    std::vector<double> loglik_trace;  // per-iteration train log-likelihood
};

using CamelLogFitReport = MixtureFitReport<CamelLogParams>;
using ExpMixtureFitReport = MixtureFitReport<ExpMixtureParams>;
using ParetoMixtureFitReport = MixtureFitReport<ParetoMixtureParams>;

// ---- Camel-Log -------------------------------------------------------------

double camellog_logpdf(double t, const CamelLogParams& p);
double camellog_pdf(double t, const CamelLogParams& p);
double camellog_cdf(double t, const CamelLogParams& p);
double camellog_quantile(double u, const CamelLogParams& p);  // monotone bisection
std::vector<double> camellog_sample(std::size_t n, const CamelLogParams& p, std::uint64_t seed);
CamelLogFitReport camellog_fit_em(std::span<const double> data, const EmConfig& config);

// ---- Exponential mixture ----------------------------------------------------

double expmix_logpdf(double t, const ExpMixtureParams& p);
double expmix_cdf(double t, const ExpMixtureParams& p);
std::vector<double> expmix_sample(std::size_t n, const ExpMixtureParams& p, std::uint64_t seed);
ExpMixtureFitReport expmix_fit_em(std::span<const double> data, const EmConfig& config);

// ---- Pareto mixture ---------------------------------------------------------

double paretomix_logpdf(double t, const ParetoMixtureParams& p,
                        double log_floor = kParetoLogFloor);
double paretomix_cdf(double t, const ParetoMixtureParams& p);
std::vector<double> paretomix_sample(std::size_t n, const ParetoMixtureParams& p,
                                     std::uint64_t seed);
ParetoMixtureFitReport paretomix_fit_em(std::span<const double> data, const EmConfig& config);

// ---- Model scoring -----------------------------------------------------------

double loglikelihood(const CamelLogParams& p, std::span<const double> data);
double loglikelihood(const ExpMixtureParams& p, std::span<const double> data);
double loglikelihood(const ParetoMixtureParams& p, std::span<const double> data,
                     double log_floor = kParetoLogFloor);

}  // namespace m3a
