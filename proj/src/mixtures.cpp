#include "m3a/mixtures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "m3a/errors.hpp"
#include "m3a/rng.hpp"

namespace m3a {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = 3.14159265358979323846;
// theta is kept strictly interior while iterating so responsibilities stay
// well-defined; a run whose final theta escapes [1e-6, 1-1e-6] is reported as
// collapsed instead.
constexpr double kThetaIterFloor = 1e-12;
constexpr double kThetaCollapse = 1e-6;

double lse2(double a, double b) {
    if (a == -kInf) return b;
    if (b == -kInf) return a;
    const double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

void check_theta(double theta, const char* where) {
    if (!(theta >= 0.0 && theta <= 1.0)) {
        throw DomainError(std::string(where) + ": theta must lie in [0,1], got " +
                          std::to_string(theta));
    }
}

void check_sample_args(std::size_t n, double theta, const char* where) {
    if (n < 1) throw DomainError(std::string(where) + " requires n >= 1");
    check_theta(theta, where);
}

double median_of_sorted(std::span<const double> v) {
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Two-means on log(t). Returns values sorted ascending plus the split index;
// [0, split) is the short-IAT cluster. In 1-D the assignment step is a
// threshold, so Lloyd reduces to moving the split point.
struct LogSplit {
    std::vector<double> sorted_values;
    std::size_t split = 0;
};

LogSplit two_means_log(std::span<const double> data) {
    LogSplit out;
    out.sorted_values.assign(data.begin(), data.end());
    std::sort(out.sorted_values.begin(), out.sorted_values.end());
    const std::size_t n = out.sorted_values.size();
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = std::log(out.sorted_values[i]);

    double c_lo = z[n / 4];
    double c_hi = z[(3 * n) / 4];
    if (!(c_lo < c_hi)) {  // heavily tied seeds; settle for a median split
        out.split = n / 2;
        return out;
    }
    std::size_t split = 0;
    for (int iter = 0; iter < 100; ++iter) {
        const double thr = 0.5 * (c_lo + c_hi);
        auto new_split = static_cast<std::size_t>(
            std::upper_bound(z.begin(), z.end(), thr) - z.begin());
        new_split = std::clamp<std::size_t>(new_split, 1, n - 1);
        if (new_split == split) break;
        split = new_split;
        c_lo = std::accumulate(z.begin(), z.begin() + split, 0.0) / double(split);
        c_hi = std::accumulate(z.begin() + split, z.end(), 0.0) / double(n - split);
    }
    out.split = split;
    return out;
}

// Method-of-moments seed for one log-logistic component: log of a
// log-logistic variate is logistic, whose std is pi/(beta*sqrt(3)).
LogLogisticParams ll_seed_from_cluster(std::span<const double> sorted_cluster) {
    const double med = median_of_sorted(sorted_cluster);
    double mean_log = 0.0;
    for (const double t : sorted_cluster) mean_log += std::log(t);
    mean_log /= double(sorted_cluster.size());
    double var_log = 0.0;
    for (const double t : sorted_cluster) {
        const double d = std::log(t) - mean_log;
        var_log += d * d;
    }
    var_log /= double(sorted_cluster.size());
    const double sd_log = std::sqrt(var_log);
    double beta = sd_log > 1e-9 ? kPi / (std::sqrt(3.0) * sd_log) : 10.0;
    return LogLogisticParams(med, std::clamp(beta, 1e-2, 1e4));
}

// ---- family adapters --------------------------------------------------------
// Each adapter supplies seeding, the weighted M-step (warm-startable), the
// per-point log-density, a jitter for restarts, and the canonical-order key
// (component mean; ascending mean = in-session first).

struct CamelLogFamily {
    using Component = LogLogisticParams;
    using Mix = CamelLogParams;
    static constexpr int n_params = 5;

    Component seed(std::span<const double> sorted_cluster) const {
        return ll_seed_from_cluster(sorted_cluster);
    }
    Component fit(std::span<const double> data, std::span<const double> w,
                  const Component& warm) const {
        return ll_fit_mle(data, w, warm);
    }
    double logpdf(double t, const Component& c) const { return ll_logpdf(t, c); }
    double order_key(const Component& c) const { return c.alpha; }
    Component jitter(const Component& c, RngEngine& rng) const {
        const double a = c.alpha * std::exp(0.5 * normal01(rng));
        const double b = std::clamp(c.beta * std::exp(0.25 * normal01(rng)), 1e-3, 1e6);
        return Component(a, b);
    }
    Mix make(double theta, const Component& in, const Component& off) const {
        Mix m;
        m.theta = theta;
        m.in_component = in;
        m.off_component = off;
        return m;
    }
};

struct ExpMixFamily {
    using Component = ExponentialParams;
    using Mix = ExpMixtureParams;
    static constexpr int n_params = 3;

    Component seed(std::span<const double> sorted_cluster) const {
        const double mean = std::accumulate(sorted_cluster.begin(), sorted_cluster.end(), 0.0) /
                            double(sorted_cluster.size());
        return ExponentialParams(1.0 / mean);
    }
    Component fit(std::span<const double> data, std::span<const double> w,
                  const Component&) const {
        return exp_fit(data, w);
    }
    double logpdf(double t, const Component& c) const { return exp_logpdf(t, c); }
    double order_key(const Component& c) const { return 1.0 / c.rate; }  // the mean
    Component jitter(const Component& c, RngEngine& rng) const {
        return ExponentialParams(c.rate * std::exp(0.5 * normal01(rng)));
    }
    Mix make(double theta, const Component& in, const Component& off) const {
        Mix m;
        m.theta = theta;
        m.in_component = in;
        m.off_component = off;
        return m;
    }
};

struct ParetoMixFamily {
    using Component = ParetoParams;
    using Mix = ParetoMixtureParams;
    static constexpr int n_params = 3;

    double xmin = 1.0;  // shared support edge, fixed at min(data)

    Component seed(std::span<const double> sorted_cluster) const {
        double denom = 0.0;
        for (const double t : sorted_cluster) denom += std::log(t) - std::log(xmin);
        double shape = denom > 0.0 ? double(sorted_cluster.size()) / denom : 1e4;
        return ParetoParams(xmin, std::clamp(shape, 1e-3, 1e5));
    }
    Component fit(std::span<const double> data, std::span<const double> w,
                  const Component&) const {
        return pareto_fit(data, xmin, w);
    }
    double logpdf(double t, const Component& c) const { return pareto_logpdf(t, c); }
    // Pareto means are infinite for shape <= 1; larger shape <=> smaller mean
    // holds wherever the mean exists, so the shape itself (descending) is the
    // ordering key.
    double order_key(const Component& c) const { return -c.shape; }
    Component jitter(const Component& c, RngEngine& rng) const {
        return ParetoParams(c.xmin,
                            std::clamp(c.shape * std::exp(0.25 * normal01(rng)), 1e-4, 1e7));
    }
    Mix make(double theta, const Component& in, const Component& off) const {
        Mix m;
        m.theta = theta;
        m.in_component = in;
        m.off_component = off;
        return m;
    }
};

// ---- shared EM skeleton ------------------------------------------------------

template <typename Family>
struct EmRun {
    double theta = 0.5;
    typename Family::Component c1, c2;
    double loglik = -kInf;
    bool converged = false;
    std::vector<double> trace;
};

template <typename Family>
EmRun<Family> run_em(const Family& fam, std::span<const double> data, double theta0,
                     typename Family::Component c1, typename Family::Component c2,
                     const EmConfig& cfg) {
    const std::size_t n = data.size();
    EmRun<Family> run;
    run.theta = std::clamp(theta0, kThetaIterFloor, 1.0 - kThetaIterFloor);
    run.c1 = c1;
    run.c2 = c2;

    std::vector<double> gamma(n), anti(n);
    double prev = -kInf;
    for (int iter = 0; iter < cfg.max_iterations; ++iter) {
        // E-step; also yields the log-likelihood of the current parameters.
        const double lt = std::log(run.theta);
        const double lo = std::log1p(-run.theta);
        double ll = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double l1 = lt + fam.logpdf(data[i], run.c1);
            const double l2 = lo + fam.logpdf(data[i], run.c2);
            const double li = lse2(l1, l2);
            ll += li;
            gamma[i] = std::exp(l1 - li);
        }
        run.trace.push_back(ll);
        run.loglik = ll;
        if (iter > 0 && std::abs(ll - prev) <= cfg.tolerance * (std::abs(ll) + 1.0)) {
            run.converged = true;
            break;
        }
        prev = ll;

        // M-step. theta's update is exact; component refits are warm-started
        // ascent, so the overall step is generalized EM and the trace stays
        // monotone. A refit that degenerates (responsibility mass collapsing
        // onto one value, or vanishing entirely) keeps the old component.
        double wsum = 0.0;
        for (const double g : gamma) wsum += g;
        run.theta = std::clamp(wsum / double(n), kThetaIterFloor, 1.0 - kThetaIterFloor);
        try {
            run.c1 = fam.fit(data, gamma, run.c1);
        } catch (const DegenerateDataError&) {
        } catch (const DomainError&) {
        }
        for (std::size_t i = 0; i < n; ++i) anti[i] = 1.0 - gamma[i];
        try {
            run.c2 = fam.fit(data, anti, run.c2);
        } catch (const DegenerateDataError&) {
        } catch (const DomainError&) {
        }
    }

    if (!run.converged) {
        // Ran out of iterations after an unscored M-step; score it.
        const double lt = std::log(run.theta);
        const double lo = std::log1p(-run.theta);
        double ll = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            ll += lse2(lt + fam.logpdf(data[i], run.c1), lo + fam.logpdf(data[i], run.c2));
        }
        run.trace.push_back(ll);
        run.loglik = ll;
    }
    return run;
}

template <typename Family>
MixtureFitReport<typename Family::Mix> fit_mixture(const Family& fam,
                                                   std::span<const double> data,
                                                   const EmConfig& cfg) {
    if (data.size() < cfg.min_fit_size || data.size() < 2) {
        throw InsufficientDataError("mixture fit requires at least " +
                                    std::to_string(std::max<std::size_t>(cfg.min_fit_size, 2)) +
                                    " observations, got " + std::to_string(data.size()));
    }
    for (const double t : data) {
        if (!(t > 0.0) || !std::isfinite(t)) {
            throw DomainError("mixture fit requires positive finite data");
        }
    }

    const LogSplit ls = two_means_log(data);
    if (ls.sorted_values.front() == ls.sorted_values.back()) {
        throw InsufficientDataError("mixture fit requires at least 2 distinct values");
    }
    const std::span<const double> low(ls.sorted_values.data(), ls.split);
    const std::span<const double> high(ls.sorted_values.data() + ls.split,
                                       ls.sorted_values.size() - ls.split);
    const double theta0 = double(ls.split) / double(data.size());
    const auto seed1 = fam.seed(low);
    const auto seed2 = fam.seed(high);

    EmRun<Family> best;
    bool have = false;
    const int runs = std::max(1, cfg.restarts);
    for (int k = 0; k < runs; ++k) {
        double th = theta0;
        auto c1 = seed1;
        auto c2 = seed2;
        if (k > 0) {
            RngEngine rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(k)));
            c1 = fam.jitter(c1, rng);
            c2 = fam.jitter(c2, rng);
            const double logit =
                std::log(th) - std::log1p(-th) + 0.5 * normal01(rng);
            th = 1.0 / (1.0 + std::exp(-logit));
        }
        EmRun<Family> run = run_em(fam, data, th, c1, c2, cfg);
        if (!have || run.loglik > best.loglik) {
            best = std::move(run);
            have = true;
        }
    }

    MixtureFitReport<typename Family::Mix> rep;
    rep.n_params = Family::n_params;
    rep.train_loglik = best.loglik;
    rep.n_iterations = static_cast<int>(best.trace.size());
    rep.loglik_trace = std::move(best.trace);
    rep.collapsed = best.theta < kThetaCollapse || best.theta > 1.0 - kThetaCollapse;
    rep.converged = best.converged && !rep.collapsed;
    if (fam.order_key(best.c1) <= fam.order_key(best.c2)) {
        rep.params = fam.make(best.theta, best.c1, best.c2);
    } else {
        rep.params = fam.make(1.0 - best.theta, best.c2, best.c1);
    }
    return rep;
}

template <typename LogPdfIn, typename LogPdfOff>
double mix_logpdf(double theta, LogPdfIn&& lp_in, LogPdfOff&& lp_off) {
    if (theta <= 0.0) return lp_off();
    if (theta >= 1.0) return lp_in();
    return lse2(std::log(theta) + lp_in(), std::log1p(-theta) + lp_off());
}

template <typename Params, typename Logpdf>
double sum_loglik(const Params& p, std::span<const double> data, Logpdf&& lp) {
    check_theta(p.theta, "loglikelihood");
    if (data.empty()) throw DomainError("loglikelihood requires nonempty data");
    double s = 0.0;
    for (const double t : data) s += lp(t, p);
    return s;
}

}  // namespace

// ---- Camel-Log -------------------------------------------------------------

double camellog_logpdf(double t, const CamelLogParams& p) {
    check_theta(p.theta, "camellog_logpdf");
    return mix_logpdf(
        p.theta, [&] { return ll_logpdf(t, p.in_component); },
        [&] { return ll_logpdf(t, p.off_component); });
}

double camellog_pdf(double t, const CamelLogParams& p) {
    check_theta(p.theta, "camellog_pdf");
    if (std::isnan(t) || t < 0.0) throw DomainError("camellog_pdf requires t >= 0");
    if (t > 0.0 && std::isfinite(t)) return std::exp(camellog_logpdf(t, p));
    // Support edges: defer to the components, skipping zero-weight ones so a
    // beta < 1 pole in an unused component cannot poison the call.
    double f = 0.0;
    if (p.theta > 0.0) f += p.theta * ll_pdf(t, p.in_component);
    if (p.theta < 1.0) f += (1.0 - p.theta) * ll_pdf(t, p.off_component);
    return f;
}

double camellog_cdf(double t, const CamelLogParams& p) {
    check_theta(p.theta, "camellog_cdf");
    double f = 0.0;
    if (p.theta > 0.0) f += p.theta * ll_cdf(t, p.in_component);
    if (p.theta < 1.0) f += (1.0 - p.theta) * ll_cdf(t, p.off_component);
    return f;
}

double camellog_quantile(double u, const CamelLogParams& p) {
    check_theta(p.theta, "camellog_quantile");
    if (!(u > 0.0 && u < 1.0)) throw DomainError("camellog_quantile requires u in (0,1)");
    if (p.theta >= 1.0) return ll_quantile(u, p.in_component);
    if (p.theta <= 0.0) return ll_quantile(u, p.off_component);
    // The mixture quantile is bracketed by the component quantiles; the CDF is
    // continuous and strictly increasing, so bisect.
    const double q1 = ll_quantile(u, p.in_component);
    const double q2 = ll_quantile(u, p.off_component);
    double lo = std::min(q1, q2);
    double hi = std::max(q1, q2);
    if (lo == hi) return lo;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;  // interval down to adjacent doubles
        if (camellog_cdf(mid, p) < u) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return camellog_cdf(lo, p) >= u ? lo : hi;
}

std::vector<double> camellog_sample(std::size_t n, const CamelLogParams& p,
                                    std::uint64_t seed) {
    check_sample_args(n, p.theta, "camellog_sample");
    RngEngine rng(seed);
    std::vector<double> out(n);
    for (double& v : out) {
        const bool in = uniform01(rng) < p.theta;
        v = ll_quantile(uniform01(rng), in ? p.in_component : p.off_component);
    }
    return out;
}

CamelLogFitReport camellog_fit_em(std::span<const double> data, const EmConfig& config) {
    return fit_mixture(CamelLogFamily{}, data, config);
}

// ---- Exponential mixture ----------------------------------------------------

double expmix_logpdf(double t, const ExpMixtureParams& p) {
    check_theta(p.theta, "expmix_logpdf");
    return mix_logpdf(
        p.theta, [&] { return exp_logpdf(t, p.in_component); },
        [&] { return exp_logpdf(t, p.off_component); });
}

double expmix_cdf(double t, const ExpMixtureParams& p) {
    check_theta(p.theta, "expmix_cdf");
    double f = 0.0;
    if (p.theta > 0.0) f += p.theta * exp_cdf(t, p.in_component);
    if (p.theta < 1.0) f += (1.0 - p.theta) * exp_cdf(t, p.off_component);
    return f;
}

std::vector<double> expmix_sample(std::size_t n, const ExpMixtureParams& p,
                                  std::uint64_t seed) {
    check_sample_args(n, p.theta, "expmix_sample");
    RngEngine rng(seed);
    std::vector<double> out(n);
    for (double& v : out) {
        const bool in = uniform01(rng) < p.theta;
        v = exp_quantile(uniform01(rng), in ? p.in_component : p.off_component);
    }
    return out;
}

ExpMixtureFitReport expmix_fit_em(std::span<const double> data, const EmConfig& config) {
    return fit_mixture(ExpMixFamily{}, data, config);
}

// ---- Pareto mixture ---------------------------------------------------------

double paretomix_logpdf(double t, const ParetoMixtureParams& p, double log_floor) {
    check_theta(p.theta, "paretomix_logpdf");
    if (std::isnan(t)) throw DomainError("paretomix_logpdf requires a number");
    const double xmin = std::min(p.in_component.xmin, p.off_component.xmin);
    if (t < xmin) return log_floor;  // off-support penalty, kept finite
    return mix_logpdf(
        p.theta, [&] { return pareto_logpdf(t, p.in_component); },
        [&] { return pareto_logpdf(t, p.off_component); });
}

double paretomix_cdf(double t, const ParetoMixtureParams& p) {
    check_theta(p.theta, "paretomix_cdf");
    double f = 0.0;
    if (p.theta > 0.0) f += p.theta * pareto_cdf(t, p.in_component);
    if (p.theta < 1.0) f += (1.0 - p.theta) * pareto_cdf(t, p.off_component);
    return f;
}

std::vector<double> paretomix_sample(std::size_t n, const ParetoMixtureParams& p,
                                     std::uint64_t seed) {
    check_sample_args(n, p.theta, "paretomix_sample");
    RngEngine rng(seed);
    std::vector<double> out(n);
    for (double& v : out) {
        const bool in = uniform01(rng) < p.theta;
        v = pareto_quantile(uniform01(rng), in ? p.in_component : p.off_component);
    }
    return out;
}

ParetoMixtureFitReport paretomix_fit_em(std::span<const double> data, const EmConfig& config) {
    if (!data.empty()) {
        for (const double t : data) {
            if (!(t > 0.0) || !std::isfinite(t)) {
                throw DomainError("mixture fit requires positive finite data");
            }
        }
    }
    ParetoMixFamily fam;
    if (!data.empty()) fam.xmin = *std::min_element(data.begin(), data.end());
    return fit_mixture(fam, data, config);
}

// ---- Model scoring -----------------------------------------------------------

double loglikelihood(const CamelLogParams& p, std::span<const double> data) {
    return sum_loglik(p, data, [](double t, const CamelLogParams& q) {
        return camellog_logpdf(t, q);
    });
}

double loglikelihood(const ExpMixtureParams& p, std::span<const double> data) {
    return sum_loglik(p, data, [](double t, const ExpMixtureParams& q) {
        return expmix_logpdf(t, q);
    });
}

double loglikelihood(const ParetoMixtureParams& p, std::span<const double> data,
                     double log_floor) {
    return sum_loglik(p, data, [log_floor](double t, const ParetoMixtureParams& q) {
        return paretomix_logpdf(t, q, log_floor);
    });
}

}  // namespace m3a
