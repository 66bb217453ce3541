#include "m3a/dists.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "m3a/errors.hpp"
#include "m3a/rng.hpp"

namespace m3a {

namespace {

void require_finite_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw DomainError(std::string(name) + " must be positive and finite, got " +
                          std::to_string(v));
    }
}

// log(1 + e^x) without overflow.
double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

struct WeightedData {
    std::vector<double> values;
    std::vector<double> weights;
    double total_weight = 0.0;
};

WeightedData check_weighted(std::span<const double> data, std::span<const double> weights,
                            bool require_distinct) {
    if (data.size() < 2) {
        throw InsufficientDataError("fit requires at least 2 observations, got " +
                                    std::to_string(data.size()));
    }
    if (!weights.empty() && weights.size() != data.size()) {
        throw DomainError("weights length does not match data length");
    }
    WeightedData wd;
    wd.values.assign(data.begin(), data.end());
    if (weights.empty()) {
        wd.weights.assign(data.size(), 1.0);
        wd.total_weight = static_cast<double>(data.size());
    } else {
        wd.weights.assign(weights.begin(), weights.end());
        for (const double w : wd.weights) {
            if (!(w >= 0.0) || !std::isfinite(w)) {
                throw DomainError("weights must be nonnegative and finite");
            }
            wd.total_weight += w;
        }
        if (!(wd.total_weight > 0.0)) throw DomainError("weights must not all be zero");
    }
    double first_positive = std::numeric_limits<double>::quiet_NaN();
    bool distinct = false;
    for (std::size_t i = 0; i < wd.values.size(); ++i) {
        const double t = wd.values[i];
        if (!(t > 0.0) || !std::isfinite(t)) {
            throw DomainError("data must be positive and finite");
        }
        if (wd.weights[i] <= 0.0) continue;
        if (std::isnan(first_positive)) {
            first_positive = t;
        } else if (t != first_positive) {
            distinct = true;
        }
    }
    if (require_distinct && !distinct) {
        throw DegenerateDataError("all weighted observations are identical; shape MLE diverges");
    }
    return wd;
}

double weighted_median(std::vector<double> values, std::vector<double> weights) {
    std::vector<std::size_t> idx(values.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    double acc = 0.0;
    for (const std::size_t i : idx) {
        acc += weights[i];
        if (acc >= 0.5 * total) return values[i];
    }
    return values[idx.back()];
}

}  // namespace

LogLogisticParams::LogLogisticParams(double alpha_, double beta_) : alpha(alpha_), beta(beta_) {
    require_finite_positive(alpha, "log-logistic alpha");
    require_finite_positive(beta, "log-logistic beta");
}

ExponentialParams::ExponentialParams(double rate_) : rate(rate_) {
    require_finite_positive(rate, "exponential rate");
}

ParetoParams::ParetoParams(double xmin_, double shape_) : xmin(xmin_), shape(shape_) {
    require_finite_positive(xmin, "pareto xmin");
    require_finite_positive(shape, "pareto shape");
}

// ---- Log-logistic ----------------------------------------------------------

double ll_cdf(double t, const LogLogisticParams& p) {
    if (std::isnan(t) || t < 0.0) throw DomainError("ll_cdf requires t >= 0");
    if (t == 0.0) return 0.0;
    if (std::isinf(t)) return 1.0;
    // 1 / (1 + (t/alpha)^-beta) = sigmoid(beta * log(t/alpha))
    return sigmoid(p.beta * (std::log(t) - std::log(p.alpha)));
}

double ll_logpdf(double t, const LogLogisticParams& p) {
    if (!(t > 0.0) || !std::isfinite(t)) {
        throw DomainError("ll_logpdf requires finite t > 0");
    }
    const double z = std::log(t) - std::log(p.alpha);
    const double bz = p.beta * z;
    // log f = log(beta) + beta*z - log(t) - 2*log(1 + e^(beta*z))
    return std::log(p.beta) + bz - std::log(t) - 2.0 * softplus(bz);
}

double ll_pdf(double t, const LogLogisticParams& p) {
    if (std::isnan(t) || t < 0.0) throw DomainError("ll_pdf requires t >= 0");
    if (t == 0.0) {
        // Density at the support edge: 0 for beta > 1, beta/alpha for beta = 1,
        // and a pole for beta < 1 which callers must treat as out of domain.
        if (p.beta > 1.0) return 0.0;
        if (p.beta == 1.0) return 1.0 / p.alpha;
        throw DomainError("log-logistic density has a singularity at t = 0 for beta < 1");
    }
    if (std::isinf(t)) return 0.0;
    return std::exp(ll_logpdf(t, p));
}

double ll_quantile(double u, const LogLogisticParams& p) {
    if (!(u > 0.0 && u < 1.0)) throw DomainError("ll_quantile requires u in (0,1)");
    // alpha * (u/(1-u))^(1/beta)
    return p.alpha * std::exp((std::log(u) - std::log1p(-u)) / p.beta);
}

std::vector<double> ll_sample(std::size_t n, const LogLogisticParams& p, std::uint64_t seed) {
    if (n < 1) throw DomainError("ll_sample requires n >= 1");
    RngEngine rng(seed);
    std::vector<double> out(n);
    for (double& v : out) v = ll_quantile(uniform01(rng), p);
    return out;
}

double odds_ratio(double t, const LogLogisticParams& p) {
    if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("odds_ratio requires finite t > 0");
    return std::exp(p.beta * (std::log(t) - std::log(p.alpha)));
}

namespace {

// Maximize the weighted log-likelihood over (a, b) = (log alpha, log beta);
// the unconstrained parameterization removes the positivity constraints.
LogLogisticParams ll_fit_core(const WeightedData& wd, const std::vector<double>& logt,
                              double a, double b) {
    const std::size_t n = wd.values.size();
    const auto eval = [&](double a_, double b_, double* grad_a, double* grad_b) {
        const double beta = std::exp(b_);
        double ll = 0.0;
        double ga = 0.0;
        double gb = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double w = wd.weights[i];
            if (w == 0.0) continue;
            const double z = logt[i] - a_;
            const double bz = beta * z;
            const double s = sigmoid(bz);
            ll += w * (b_ + bz - logt[i] - 2.0 * softplus(bz));
            ga += w * beta * (2.0 * s - 1.0);
            gb += w * (1.0 + bz * (1.0 - 2.0 * s));
        }
        if (grad_a) *grad_a = ga;
        if (grad_b) *grad_b = gb;
        return ll;
    };

    // Two-dimensional BFGS ascent with backtracking line search.
    double ga = 0.0, gb = 0.0;
    double ll = eval(a, b, &ga, &gb);
    double h00 = 1.0, h01 = 0.0, h11 = 1.0;  // inverse Hessian approximation
    const int kMaxIter = 200;
    const double kRelTol = 1e-10;
    for (int iter = 0; iter < kMaxIter; ++iter) {
        const double pa = h00 * ga + h01 * gb;
        const double pb = h01 * ga + h11 * gb;
        double slope = pa * ga + pb * gb;
        double da = pa, db = pb;
        if (!(slope > 0.0)) {  // reset to steepest ascent if curvature went bad
            da = ga;
            db = gb;
            slope = ga * ga + gb * gb;
            h00 = 1.0;
            h01 = 0.0;
            h11 = 1.0;
        }
        if (slope < 1e-24) break;

        double step = 1.0;
        double new_a = a, new_b = b, new_ll = ll;
        bool improved = false;
        for (int ls = 0; ls < 60; ++ls) {
            new_a = a + step * da;
            new_b = std::clamp(b + step * db, -30.0, 30.0);
            new_ll = eval(new_a, new_b, nullptr, nullptr);
            if (std::isfinite(new_ll) && new_ll >= ll + 1e-4 * step * slope) {
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if (!improved) break;

        double new_ga = 0.0, new_gb = 0.0;
        eval(new_a, new_b, &new_ga, &new_gb);
        const double sa = new_a - a, sb = new_b - b;
        const double ya = new_ga - ga, yb = new_gb - gb;
        const double sy = -(sa * ya + sb * yb);  // ascent: -(s.y) > 0 near optimum
        if (sy > 1e-14) {
            const double rho = 1.0 / sy;
            // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T, with y negated
            const double ua = -ya, ub = -yb;
            const double hu0 = h00 * ua + h01 * ub;
            const double hu1 = h01 * ua + h11 * ub;
            const double uhu = ua * hu0 + ub * hu1;
            const double c = rho * rho * uhu + rho;
            h00 += c * sa * sa - rho * (sa * hu0 + hu0 * sa);
            h01 += c * sa * sb - rho * (sa * hu1 + hu0 * sb);
            h11 += c * sb * sb - rho * (sb * hu1 + hu1 * sb);
        }
        const bool done = std::abs(new_ll - ll) < kRelTol * (std::abs(new_ll) + 1.0);
        a = new_a;
        b = new_b;
        ll = new_ll;
        ga = new_ga;
        gb = new_gb;
        if (done) break;
    }

    const double beta = std::exp(b);
    if (!(beta < 1e8)) {
        throw DegenerateDataError("log-logistic shape estimate diverged; data nearly constant");
    }
    return LogLogisticParams(std::exp(a), beta);
}

}  // namespace

LogLogisticParams ll_fit_mle(std::span<const double> data, std::span<const double> weights) {
    const WeightedData wd = check_weighted(data, weights, /*require_distinct=*/true);
    const std::size_t n = wd.values.size();

    std::vector<double> logt(n);
    for (std::size_t i = 0; i < n; ++i) logt[i] = std::log(wd.values[i]);

    // Initial guesses: alpha0 = weighted median; log of a log-logistic variate
    // is logistic with standard deviation pi/(beta*sqrt(3)), so beta0 comes
    // from the weighted std of log data.
    const double median = weighted_median(wd.values, wd.weights);
    double mean_log = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean_log += wd.weights[i] * logt[i];
    mean_log /= wd.total_weight;
    double var_log = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = logt[i] - mean_log;
        var_log += wd.weights[i] * d * d;
    }
    var_log /= wd.total_weight;
    const double sd_log = std::sqrt(std::max(var_log, 1e-30));
    const double kPi = 3.14159265358979323846;
    double beta0 = kPi / (std::sqrt(3.0) * sd_log);
    beta0 = std::clamp(beta0, 1e-3, 1e6);

    return ll_fit_core(wd, logt, std::log(median), std::log(beta0));
}

LogLogisticParams ll_fit_mle(std::span<const double> data, std::span<const double> weights,
                             const LogLogisticParams& init) {
    const WeightedData wd = check_weighted(data, weights, /*require_distinct=*/true);
    std::vector<double> logt(wd.values.size());
    for (std::size_t i = 0; i < logt.size(); ++i) logt[i] = std::log(wd.values[i]);
    return ll_fit_core(wd, logt, std::log(init.alpha), std::log(init.beta));
}

// ---- Exponential -----------------------------------------------------------

double exp_cdf(double t, const ExponentialParams& p) {
    if (std::isnan(t) || t < 0.0) throw DomainError("exp_cdf requires t >= 0");
    return -std::expm1(-p.rate * t);
}

double exp_logpdf(double t, const ExponentialParams& p) {
    if (std::isnan(t) || t < 0.0) throw DomainError("exp_logpdf requires t >= 0");
    return std::log(p.rate) - p.rate * t;
}

double exp_quantile(double u, const ExponentialParams& p) {
    if (!(u > 0.0 && u < 1.0)) throw DomainError("exp_quantile requires u in (0,1)");
    return -std::log1p(-u) / p.rate;
}

std::vector<double> exp_sample(std::size_t n, const ExponentialParams& p, std::uint64_t seed) {
    if (n < 1) throw DomainError("exp_sample requires n >= 1");
    RngEngine rng(seed);
    std::vector<double> out(n);
    for (double& v : out) v = exp_quantile(uniform01(rng), p);
    return out;
}

ExponentialParams exp_fit(std::span<const double> data, std::span<const double> weights) {
    const WeightedData wd = check_weighted(data, weights, /*require_distinct=*/false);
    double weighted_sum = 0.0;
    for (std::size_t i = 0; i < wd.values.size(); ++i) {
        weighted_sum += wd.weights[i] * wd.values[i];
    }
    return ExponentialParams(wd.total_weight / weighted_sum);
}

// ---- Pareto ----------------------------------------------------------------

double pareto_cdf(double t, const ParetoParams& p) {
    if (std::isnan(t)) throw DomainError("pareto_cdf requires a number");
    if (t <= p.xmin) return 0.0;
    return -std::expm1(p.shape * (std::log(p.xmin) - std::log(t)));
}

double pareto_logpdf(double t, const ParetoParams& p) {
    if (!(t >= p.xmin)) {
        throw DomainError("pareto_logpdf requires t >= xmin");
    }
    return std::log(p.shape) + p.shape * std::log(p.xmin) - (p.shape + 1.0) * std::log(t);
}

double pareto_quantile(double u, const ParetoParams& p) {
    if (!(u > 0.0 && u < 1.0)) throw DomainError("pareto_quantile requires u in (0,1)");
    return p.xmin * std::exp(-std::log1p(-u) / p.shape);
}

std::vector<double> pareto_sample(std::size_t n, const ParetoParams& p, std::uint64_t seed) {
    if (n < 1) throw DomainError("pareto_sample requires n >= 1");
    RngEngine rng(seed);
    std::vector<double> out(n);
    for (double& v : out) v = pareto_quantile(uniform01(rng), p);
    return out;
}

ParetoParams pareto_fit(std::span<const double> data, double xmin,
                        std::span<const double> weights) {
    require_finite_positive(xmin, "pareto xmin");
    const WeightedData wd = check_weighted(data, weights, /*require_distinct=*/false);
    double denom = 0.0;
    for (std::size_t i = 0; i < wd.values.size(); ++i) {
        if (wd.values[i] < xmin) throw DomainError("pareto_fit: data below xmin");
        denom += wd.weights[i] * (std::log(wd.values[i]) - std::log(xmin));
    }
    if (!(denom > 0.0)) {
        throw DegenerateDataError("pareto_fit: all weighted mass at xmin; shape MLE diverges");
    }
    const double shape = wd.total_weight / denom;
    if (!(shape < 1e8)) {
        throw DegenerateDataError("pareto_fit: shape estimate diverged");
    }
    return ParetoParams(xmin, shape);
}

ParetoParams pareto_fit(std::span<const double> data) {
    if (data.empty()) throw InsufficientDataError("pareto_fit requires data");
    return pareto_fit(data, *std::min_element(data.begin(), data.end()), {});
}

}  // namespace m3a
