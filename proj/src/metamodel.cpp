#include "m3a/metamodel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "m3a/errors.hpp"
#include "m3a/rng.hpp"

namespace m3a {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kUnitClamp = 1e-15;  // safe window for copula arguments

void check_unit_interval(double u, const char* name) {
    if (!(u >= 0.0 && u <= 1.0)) {
        throw DomainError(std::string(name) + " must lie in [0,1], got " + std::to_string(u));
    }
}

void check_eta(double eta) {
    if (!(eta >= 1.0) || !std::isfinite(eta)) {
        throw DomainError("copula eta must be finite and >= 1, got " + std::to_string(eta));
    }
}

double clamp_unit(double u) { return std::clamp(u, kUnitClamp, 1.0 - kUnitClamp); }

// log of w = (x^eta + y^eta)^(1/eta) given log x and log y; log-sum-exp keeps
// the powers from overflowing for extreme arguments.
double log_w(double lx, double ly, double eta) {
    const double a = eta * lx;
    const double b = eta * ly;
    const double m = std::max(a, b);
    return (m + std::log(std::exp(a - m) + std::exp(b - m))) / eta;
}

}  // namespace

double gumbel_copula_cdf(double u, double v, double eta) {
    check_unit_interval(u, "u");
    check_unit_interval(v, "v");
    check_eta(eta);
    if (u == 0.0 || v == 0.0) return 0.0;
    if (u == 1.0) return v;
    if (v == 1.0) return u;
    if (eta == 1.0) return u * v;  // independence case, kept exact
    u = clamp_unit(u);
    v = clamp_unit(v);
    const double lx = std::log(-std::log(u));
    const double ly = std::log(-std::log(v));
    return std::exp(-std::exp(log_w(lx, ly, eta)));
}

double gumbel_copula_logdensity(double u, double v, double eta) {
    check_unit_interval(u, "u");
    check_unit_interval(v, "v");
    check_eta(eta);
    if (eta == 1.0) return 0.0;  // c(u,v) = 1 under independence
    u = clamp_unit(u);
    v = clamp_unit(v);
    const double x = -std::log(u);
    const double y = -std::log(v);
    const double lx = std::log(x);
    const double ly = std::log(y);
    const double lw = log_w(lx, ly, eta);
    const double w = std::exp(lw);
    // c = C(u,v) * (xy)^(eta-1) / (uv) * w^(1-2eta) * (w + eta - 1)
    return (x + y) - w + (eta - 1.0) * (lx + ly) + (1.0 - 2.0 * eta) * lw +
           std::log(w + eta - 1.0);
}

double metaclick_cdf(double r, double m, const MetaClickParams& p) {
    if (!(r > 0.0) || !(m > 0.0)) throw DomainError("metaclick_cdf requires r, m > 0");
    return gumbel_copula_cdf(ll_cdf(r, p.r_marginal), ll_cdf(m, p.m_marginal), p.eta);
}

ClampedLog metaclick_logpdf(double r, double m, const MetaClickParams& p) {
    if (!(r > 0.0) || !(m > 0.0) || !std::isfinite(r) || !std::isfinite(m)) {
        throw DomainError("metaclick_logpdf requires finite r, m > 0");
    }
    const double u = ll_cdf(r, p.r_marginal);
    const double v = ll_cdf(m, p.m_marginal);
    ClampedLog out;
    out.clamped = u < kUnitClamp || u > 1.0 - kUnitClamp || v < kUnitClamp ||
                  v > 1.0 - kUnitClamp;
    out.value = gumbel_copula_logdensity(clamp_unit(u), clamp_unit(v), p.eta) +
                ll_logpdf(r, p.r_marginal) + ll_logpdf(m, p.m_marginal);
    return out;
}

// ---- Kendall tau -------------------------------------------------------------

namespace {

void check_pairs(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DomainError("kendall_tau: length mismatch");
    if (x.size() < 2) throw DomainError("kendall_tau requires at least 2 pairs");
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
            throw DomainError("kendall_tau requires finite values");
        }
    }
}

// Strict inversions (a[i] > a[j] for i < j) by merge sort; ties do not count.
long long count_inversions(std::vector<double>& a, std::vector<double>& buf,
                           std::size_t lo, std::size_t hi) {
    if (hi - lo < 2) return 0;
    const std::size_t mid = lo + (hi - lo) / 2;
    long long inv = count_inversions(a, buf, lo, mid) + count_inversions(a, buf, mid, hi);
    std::size_t i = lo, j = mid, k = lo;
    while (i < mid && j < hi) {
        if (a[j] < a[i]) {
            inv += static_cast<long long>(mid - i);
            buf[k++] = a[j++];
        } else {
            buf[k++] = a[i++];
        }
    }
    while (i < mid) buf[k++] = a[i++];
    while (j < hi) buf[k++] = a[j++];
    std::copy(buf.begin() + lo, buf.begin() + hi, a.begin() + lo);
    return inv;
}

long long tied_pairs(const std::vector<double>& sorted_keys) {
    long long total = 0;
    std::size_t i = 0;
    while (i < sorted_keys.size()) {
        std::size_t j = i + 1;
        while (j < sorted_keys.size() && sorted_keys[j] == sorted_keys[i]) ++j;
        const long long g = static_cast<long long>(j - i);
        total += g * (g - 1) / 2;
        i = j;
    }
    return total;
}

}  // namespace

double kendall_tau(std::span<const double> x, std::span<const double> y) {
    check_pairs(x, y);
    const std::size_t n = x.size();

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (x[a] != x[b]) return x[a] < x[b];
        return y[a] < y[b];
    });

    // Knight's decomposition: with pairs sorted by (x, y),
    //   concordant - discordant = n0 - n1 - n2 + n3 - 2 * inversions(y)
    // where n1, n2, n3 count pairs tied in x, in y, and in both.
    std::vector<double> ys(n);
    for (std::size_t i = 0; i < n; ++i) ys[i] = y[idx[i]];

    long long n1 = 0, n3 = 0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i + 1;
        while (j < n && x[idx[j]] == x[idx[i]]) ++j;
        const long long g = static_cast<long long>(j - i);
        n1 += g * (g - 1) / 2;
        std::size_t a = i;
        while (a < j) {  // runs tied in both x and y (ys is sorted within the run)
            std::size_t b = a + 1;
            while (b < j && ys[b] == ys[a]) ++b;
            const long long h = static_cast<long long>(b - a);
            n3 += h * (h - 1) / 2;
            a = b;
        }
        i = j;
    }

    std::vector<double> ysorted = ys;
    std::vector<double> buf(n);
    const long long inv = count_inversions(ysorted, buf, 0, n);
    const long long n2 = tied_pairs(ysorted);  // now globally sorted

    const long long n0 = static_cast<long long>(n) * static_cast<long long>(n - 1) / 2;
    const long long num = n0 - n1 - n2 + n3 - 2 * inv;
    return static_cast<double>(num) / static_cast<double>(n0);
}

double kendall_tau_direct(std::span<const double> x, std::span<const double> y) {
    check_pairs(x, y);
    const std::size_t n = x.size();
    long long concordant = 0, discordant = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (x[i] == x[j] || y[i] == y[j]) continue;
            const bool same = (x[i] < x[j]) == (y[i] < y[j]);
            if (same) {
                ++concordant;
            } else {
                ++discordant;
            }
        }
    }
    const long long n0 = static_cast<long long>(n) * static_cast<long long>(n - 1) / 2;
    return static_cast<double>(concordant - discordant) / static_cast<double>(n0);
}

// ---- Fitting and sampling ------------------------------------------------------

MetaClickFit fit_metaclick(std::span<const UserFeatures> features, std::size_t min_users) {
    if (features.size() < min_users) {
        throw InsufficientDataError("fit_metaclick requires at least " +
                                    std::to_string(min_users) + " users, got " +
                                    std::to_string(features.size()));
    }
    std::vector<double> r(features.size()), m(features.size());
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (!(features[i].r > 0.0) || !std::isfinite(features[i].r) ||
            !(features[i].m > 0.0) || !std::isfinite(features[i].m)) {
            throw DomainError("fit_metaclick requires positive finite r and m; user " +
                              features[i].user_id + " should have been screened out");
        }
        r[i] = features[i].r;
        m[i] = features[i].m;
    }

    MetaClickFit fit;
    fit.n_users = features.size();
    fit.params.r_marginal = ll_fit_mle(r);
    fit.params.m_marginal = ll_fit_mle(m);
    fit.tau = kendall_tau(r, m);
    if (fit.tau >= 1.0) {
        throw DegenerateDataError("fit_metaclick: tau = 1 (comonotone); eta diverges");
    }
    if (fit.tau < 0.0) {
        // The Gumbel family cannot express negative dependence; fall back to
        // independence and let the caller surface the warning.
        fit.negative_dependence = true;
        fit.params.eta = 1.0;
    } else {
        fit.params.eta = std::max(1.0, 1.0 / (1.0 - fit.tau));
    }
    return fit;
}

std::vector<UserFeatures> metaclick_sample(std::size_t n, const MetaClickParams& p,
                                           std::uint64_t seed) {
    if (n < 1) throw DomainError("metaclick_sample requires n >= 1");
    check_eta(p.eta);
    RngEngine rng(seed);
    std::vector<UserFeatures> out(n);
    const double eta = p.eta;
    for (auto& f : out) {
        double u, v;
        if (eta == 1.0) {
            u = uniform01(rng);
            v = uniform01(rng);
        } else {
            // Positive-stable mixer S with index 1/eta (Kanter's method), then
            // u_i = exp(-(E_i/S)^(1/eta)); everything in log space.
            const double alpha = 1.0 / eta;
            const double theta = kPi * uniform01(rng);
            const double e0 = exponential1(rng);
            const double log_a = std::log(std::sin((1.0 - alpha) * theta)) +
                                 (alpha / (1.0 - alpha)) * std::log(std::sin(alpha * theta)) -
                                 (1.0 / (1.0 - alpha)) * std::log(std::sin(theta));
            const double log_s = ((1.0 - alpha) / alpha) * (log_a - std::log(e0));
            const double e1 = exponential1(rng);
            const double e2 = exponential1(rng);
            u = std::exp(-std::exp((std::log(e1) - log_s) / eta));
            v = std::exp(-std::exp((std::log(e2) - log_s) / eta));
            u = std::clamp(u, 1e-300, 1.0 - 1e-16);
            v = std::clamp(v, 1e-300, 1.0 - 1e-16);
        }
        f.r = ll_quantile(u, p.r_marginal);
        f.m = ll_quantile(v, p.m_marginal);
    }
    return out;
}

}  // namespace m3a
