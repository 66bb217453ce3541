#include "m3a/gof.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "m3a/errors.hpp"
#include "m3a/rng.hpp"

namespace m3a {

double kolmogorov_pvalue(double lambda) {
    if (!(lambda >= 0.0)) throw DomainError("kolmogorov_pvalue requires lambda >= 0");
    // Near zero the theta-dual form gives 1 - Q ~ (sqrt(2*pi)/lambda) *
    // exp(-pi^2/(8 lambda^2)); at lambda = 0.17 that is ~4e-18, below one ulp
    // of 1.0, so Q is exactly 1 in double precision. Short-circuiting there
    // also keeps the alternating series (noise ~1e-12 near its clamp) from
    // breaking monotonicity.
    if (lambda < 0.17) return 1.0;
    double sum = 0.0;
    double sign = 1.0;
    for (int k = 1; k < 100000; ++k) {
        const double term = std::exp(-2.0 * double(k) * double(k) * lambda * lambda);
        sum += sign * term;
        if (term < 1e-12) break;
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_one_sample(std::span<const double> data,
                       const std::function<double(double)>& cdf) {
    if (data.empty()) throw DomainError("ks_one_sample requires data");
    std::vector<double> x(data.begin(), data.end());
    std::sort(x.begin(), x.end());
    const std::size_t n = x.size();
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double f = cdf(x[i]);
        if (!(f >= 0.0 && f <= 1.0)) {
            throw DomainError("ks_one_sample: reference CDF left [0,1]");
        }
        // empirical CDF steps from i/n to (i+1)/n at x[i]
        d = std::max(d, std::max(f - double(i) / double(n),
                                 double(i + 1) / double(n) - f));
    }
    KsResult r;
    r.statistic = d;
    r.n_effective = double(n);
    r.p_value = kolmogorov_pvalue(std::sqrt(r.n_effective) * d);
    return r;
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw DomainError("ks_two_sample requires two nonempty samples");
    std::vector<double> xa(a.begin(), a.end());
    std::vector<double> xb(b.begin(), b.end());
    std::sort(xa.begin(), xa.end());
    std::sort(xb.begin(), xb.end());
    const long long na = static_cast<long long>(xa.size());
    const long long nb = static_cast<long long>(xb.size());

    // Walk the merged order; after consuming every copy of a value, the gap is
    // |i*nb - j*na| / (na*nb). Integer numerators make the sup exact.
    long long best = 0;
    std::size_t i = 0, j = 0;
    while (i < xa.size() || j < xb.size()) {
        double v;
        if (j >= xb.size() || (i < xa.size() && xa[i] <= xb[j])) {
            v = xa[i];
        } else {
            v = xb[j];
        }
        while (i < xa.size() && xa[i] == v) ++i;
        while (j < xb.size() && xb[j] == v) ++j;
        best = std::max(best, std::llabs(static_cast<long long>(i) * nb -
                                         static_cast<long long>(j) * na));
    }

    KsResult r;
    r.statistic = double(best) / (double(na) * double(nb));
    r.n_effective = double(na) * double(nb) / double(na + nb);
    r.p_value = kolmogorov_pvalue(std::sqrt(r.n_effective) * r.statistic);
    return r;
}

double bic(double train_loglik, int k, std::size_t n) {
    if (k < 1) throw DomainError("bic requires k >= 1");
    if (n < 1) throw DomainError("bic requires n >= 1");
    return -2.0 * train_loglik + double(k) * std::log(double(n));
}

namespace {

// Fisher-Yates with the project's pinned uniform mapping, so splits are
// reproducible across platforms and standard-library versions.
void shuffle_indices(std::vector<std::size_t>& idx, std::uint64_t seed) {
    RngEngine rng(seed);
    for (std::size_t i = 0; i + 1 < idx.size(); ++i) {
        const auto span = double(idx.size() - i);
        const auto j = i + static_cast<std::size_t>(uniform01(rng) * span);
        std::swap(idx[i], idx[j]);
    }
}

template <typename FitFn, typename LoglikFn, typename CdfFn>
GofScore score_model(const std::string& name, std::span<const double> train,
                     std::span<const double> test, FitFn&& fit, LoglikFn&& loglik,
                     CdfFn&& cdf_of) {
    GofScore s;
    s.model_name = name;
    constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
    try {
        const auto report = fit(train);
        s.test_loglik = loglik(report.params, test);
        s.bic = bic(report.train_loglik, report.n_params, train.size());
        auto cdf = cdf_of(report.params);
        s.ks = ks_one_sample(test, cdf);
    } catch (const std::exception& e) {
        s.error = e.what();
        s.test_loglik = kNan;
        s.bic = kNan;
        s.ks = KsResult{kNan, kNan, double(test.size())};
    }
    return s;
}

}  // namespace

std::vector<GofScore> evaluate_models(std::span<const double> data, std::uint64_t split_seed,
                                      const GofConfig& config) {
    if (!(config.split_ratio > 0.0 && config.split_ratio < 1.0)) {
        throw ConfigError("split_ratio must lie strictly between 0 and 1");
    }
    const std::size_t min_fit = std::max<std::size_t>(config.em.min_fit_size, 2);
    if (data.size() < 2 * min_fit) {
        throw InsufficientDataError("evaluate_models requires at least " +
                                    std::to_string(2 * min_fit) + " observations, got " +
                                    std::to_string(data.size()));
    }

    std::vector<std::size_t> idx(data.size());
    std::iota(idx.begin(), idx.end(), 0);
    shuffle_indices(idx, split_seed);
    auto n_train = static_cast<std::size_t>(
        std::llround(config.split_ratio * double(data.size())));
    n_train = std::clamp(n_train, min_fit, data.size() - min_fit);

    std::vector<double> train(n_train), test(data.size() - n_train);
    for (std::size_t i = 0; i < n_train; ++i) train[i] = data[idx[i]];
    for (std::size_t i = n_train; i < data.size(); ++i) test[i - n_train] = data[idx[i]];

    const double floor = config.pareto_log_floor;
    std::vector<GofScore> out;
    out.push_back(score_model(
        "camel_log", train, test,
        [&](std::span<const double> tr) { return camellog_fit_em(tr, config.em); },
        [](const CamelLogParams& p, std::span<const double> te) {
            return loglikelihood(p, te);
        },
        [](const CamelLogParams& p) {
            return std::function<double(double)>(
                [p](double t) { return camellog_cdf(t, p); });
        }));
    out.push_back(score_model(
        "exp_mixture", train, test,
        [&](std::span<const double> tr) { return expmix_fit_em(tr, config.em); },
        [](const ExpMixtureParams& p, std::span<const double> te) {
            return loglikelihood(p, te);
        },
        [](const ExpMixtureParams& p) {
            return std::function<double(double)>(
                [p](double t) { return expmix_cdf(t, p); });
        }));
    out.push_back(score_model(
        "pareto_mixture", train, test,
        [&](std::span<const double> tr) { return paretomix_fit_em(tr, config.em); },
        [floor](const ParetoMixtureParams& p, std::span<const double> te) {
            return loglikelihood(p, te, floor);
        },
        [](const ParetoMixtureParams& p) {
            return std::function<double(double)>(
                [p](double t) { return paretomix_cdf(t, p); });
        }));
    return out;
}

std::vector<std::pair<double, double>> qq_points(
    std::span<const double> data, const std::function<double(double)>& quantile_fn) {
    if (data.size() < 2) throw DomainError("qq_points requires at least 2 observations");
    std::vector<double> x(data.begin(), data.end());
    std::sort(x.begin(), x.end());
    std::vector<std::pair<double, double>> out(x.size());
    const double n = double(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = {x[i], quantile_fn((double(i) + 0.5) / n)};
    }
    return out;
}

}  // namespace m3a
