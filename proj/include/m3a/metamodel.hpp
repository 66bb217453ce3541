#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "m3a/dists.hpp"

namespace m3a {

// Group-level summary of one user's fitted Camel-Log: r = theta/(1-theta)
// (in-session odds) and m = ln(alpha_in) with alpha_in in seconds. Users for
// whom these are undefined or nonpositive never reach this module; the
// anomaly pipeline routes them to the outlier report instead.
struct UserFeatures {
    std::string user_id;
    double r = 1.0;
    double m = 1.0;
};

// Joint model over (R, M): log-logistic marginals tied by a Gumbel copula.
// eta = 1 is independence; larger eta, stronger positive dependence.
struct MetaClickParams {
    double eta = 1.0;
    LogLogisticParams r_marginal;
    LogLogisticParams m_marginal;
};

// Log-density together with a note that an input landed outside the safe
// numeric window and was clamped before evaluation.
struct ClampedLog {
    double value = 0.0;
    bool clamped = false;
};

struct MetaClickFit {
    MetaClickParams params;
    double tau = 0.0;        // Kendall tau of the (r, m) pairs
    std::size_t n_users = 0;
    bool negative_dependence = false;  // tau < 0; eta clamped to 1
};

// C(u,v) = exp(-[(-log u)^eta + (-log v)^eta]^(1/eta)). Exact product at
// eta = 1; boundaries honored exactly; interior arguments are clamped to
// [1e-15, 1-1e-15] before evaluation.
double gumbel_copula_cdf(double u, double v, double eta);

// Analytic log of the copula density c = d2C/dudv; identically 0 at eta = 1.
double gumbel_copula_logdensity(double u, double v, double eta);

double metaclick_cdf(double r, double m, const MetaClickParams& p);

// log[c(F_R(r), F_M(m)) * f_R(r) * f_M(m)]; the anomaly score. Extreme
// inputs whose marginal CDFs leave the safe window come back flagged.
ClampedLog metaclick_logpdf(double r, double m, const MetaClickParams& p);

// (#concordant - #discordant) / (n(n-1)/2); ties count as neither.
// O(n log n) merge-based counting; exact integer arithmetic throughout.
double kendall_tau(std::span<const double> x, std::span<const double> y);
// O(n^2) transcription of the definition; reference implementation.
double kendall_tau_direct(std::span<const double> x, std::span<const double> y);

// Marginals by MLE on {r} and {m}; eta = 1/(1 - tau), clamped to >= 1.
// Throws InsufficientDataError below min_users and DegenerateDataError when
// tau >= 1 (comonotone data has no finite eta).
MetaClickFit fit_metaclick(std::span<const UserFeatures> features,
                           std::size_t min_users = 30);

// Joint draws: (u,v) from the Gumbel copula (Marshall-Olkin construction via
// a positive-stable mixer), then marginal inverse transforms. user_id is
// left empty. Deterministic per seed.
std::vector<UserFeatures> metaclick_sample(std::size_t n, const MetaClickParams& p,
                                           std::uint64_t seed);

}  // namespace m3a
