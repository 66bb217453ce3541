#include <cmath>
#include <vector>

#include "doctest.h"
#include "m3a/errors.hpp"
#include "m3a/gof.hpp"
#include "m3a/metamodel.hpp"
#include "m3a/rng.hpp"
#include "support/oracles.hpp"

using namespace m3a;

namespace {

MetaClickParams paper_population() {
    return {1.12, LogLogisticParams(3.0, 6.0), LogLogisticParams(5.7, 18.0)};
}

std::vector<UserFeatures> to_features(const std::vector<std::pair<double, double>>& rm) {
    std::vector<UserFeatures> out;
    out.reserve(rm.size());
    for (std::size_t i = 0; i < rm.size(); ++i) {
        out.push_back({"u" + std::to_string(i), rm[i].first, rm[i].second});
    }
    return out;
}

}  // namespace

TEST_SUITE("metamodel") {

TEST_CASE("gumbel copula boundary behavior is exact") {
    for (const double eta : {1.0, 1.12, 2.0, 5.0}) {
        CHECK(gumbel_copula_cdf(0.0, 0.7, eta) == 0.0);
        CHECK(gumbel_copula_cdf(0.7, 0.0, eta) == 0.0);
        CHECK(gumbel_copula_cdf(1.0, 0.7, eta) == 0.7);
        CHECK(gumbel_copula_cdf(0.3, 1.0, eta) == 0.3);
        CHECK(gumbel_copula_cdf(1.0, 1.0, eta) == 1.0);
    }
    // independence is the literal product
    CHECK(gumbel_copula_cdf(0.42, 0.913, 1.0) == 0.42 * 0.913);
    CHECK(gumbel_copula_logdensity(0.42, 0.913, 1.0) == 0.0);
}

TEST_CASE("copula respects symmetry and frechet bounds") {
    for (const double eta : {1.05, 1.5, 3.0}) {
        for (double u = 0.05; u < 1.0; u += 0.13) {
            for (double v = 0.05; v < 1.0; v += 0.17) {
                const double c = gumbel_copula_cdf(u, v, eta);
                CHECK(c == gumbel_copula_cdf(v, u, eta));
                CHECK(c >= std::max(0.0, u + v - 1.0) - 1e-15);
                CHECK(c <= std::min(u, v) + 1e-15);
            }
        }
    }
}

TEST_CASE("copula density matches finite differences of the cdf") {
    const double eta = 1.5;
    for (double u = 0.1; u < 0.95; u += 0.2) {
        for (double v = 0.15; v < 0.95; v += 0.2) {
            const double fd = oracle::diff_mixed(
                [&](double a, double b) { return gumbel_copula_cdf(a, b, eta); }, u, v);
            const double an = std::exp(gumbel_copula_logdensity(u, v, eta));
            CHECK(an == doctest::Approx(fd).epsilon(1e-6));
        }
    }
}

TEST_CASE("kendall tau reproduces the worked example and the limits") {
    const std::vector<double> x = {1.0, 2.0, 3.0};
    const std::vector<double> y = {1.0, 3.0, 2.0};
    CHECK(kendall_tau(x, y) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(kendall_tau_direct(x, y) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

    const std::vector<double> up = {1.0, 2.0, 5.0, 9.0};
    CHECK(kendall_tau(up, up) == 1.0);
    std::vector<double> down(up.rbegin(), up.rend());
    CHECK(kendall_tau(up, down) == -1.0);
}

TEST_CASE("fast kendall tau equals the direct pair count, ties included") {
    RngEngine rng(2024);
    for (int rep = 0; rep < 25; ++rep) {
        const std::size_t n = 10 + static_cast<std::size_t>(uniform01(rng) * 490);
        std::vector<double> x(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            // coarse rounding forces tie groups in both coordinates
            x[i] = std::floor(uniform01(rng) * 20.0) / 2.0;
            y[i] = std::floor(uniform01(rng) * 15.0) / 2.0;
        }
        CHECK(kendall_tau(x, y) == kendall_tau_direct(x, y));
    }
}

TEST_CASE("metamodel cdf recovers its marginals in the limit") {
    const auto p = paper_population();
    for (double m = 1.0; m < 12.0; m += 1.7) {
        CHECK(std::abs(metaclick_cdf(1e9 * p.r_marginal.alpha, m, p) -
                       ll_cdf(m, p.m_marginal)) < 1e-6);
    }
    for (double r = 0.5; r < 20.0; r += 2.3) {
        CHECK(std::abs(metaclick_cdf(r, 1e9 * p.m_marginal.alpha, p) -
                       ll_cdf(r, p.r_marginal)) < 1e-6);
    }
}

TEST_CASE("metamodel log-density integrates to one") {
    const auto p = paper_population();
    // integrate in log space on both axes; the marginals put all visible
    // mass well inside these shells
    const auto inner = [&](double lr) {
        return oracle::integrate(
            [&](double lm) {
                const double r = std::exp(lr);
                const double m = std::exp(lm);
                return std::exp(metaclick_logpdf(r, m, p).value) * r * m;
            },
            std::log(5.7) - 2.5, std::log(5.7) + 2.5, 1e-9);
    };
    const double mass =
        oracle::integrate(inner, std::log(3.0) - 8.0, std::log(3.0) + 8.0, 1e-7);
    CHECK(mass == doctest::Approx(1.0).epsilon(2e-3));
}

TEST_CASE("extreme inputs surface the clamp flag instead of nonsense") {
    const auto p = paper_population();
    CHECK(!metaclick_logpdf(3.0, 5.7, p).clamped);
    CHECK(metaclick_logpdf(1e300, 5.7, p).clamped);
    const auto s = metaclick_logpdf(1e300, 5.7, p);
    CHECK(std::isfinite(s.value));
}

TEST_CASE("fit recovers eta and the marginals") {
    const auto truth = paper_population();
    const auto sampled = metaclick_sample(3000, truth, 606060);
    const auto fit = fit_metaclick(sampled);
    CHECK(fit.n_users == 3000);
    CHECK(!fit.negative_dependence);
    CHECK(fit.params.eta == doctest::Approx(truth.eta).epsilon(0.06));
    CHECK(fit.params.r_marginal.alpha == doctest::Approx(3.0).epsilon(0.06));
    CHECK(fit.params.m_marginal.alpha == doctest::Approx(5.7).epsilon(0.06));
    CHECK(fit.params.eta >= 1.0);
}

TEST_CASE("fit rejects what it cannot estimate") {
    std::vector<std::pair<double, double>> rm;
    for (int i = 0; i < 10; ++i) rm.emplace_back(i + 1.0, 2.0 * i + 1.0);
    CHECK_THROWS_AS((void)fit_metaclick(to_features(rm)), InsufficientDataError);

    // comonotone: tau = 1, eta unbounded
    rm.clear();
    for (int i = 0; i < 40; ++i) rm.emplace_back(i + 1.0, (i + 1.0) * 2.0);
    CHECK_THROWS_AS((void)fit_metaclick(to_features(rm)), DegenerateDataError);

    // nonpositive feature
    rm[3] = {-1.0, 5.0};
    CHECK_THROWS_AS((void)fit_metaclick(to_features(rm)), DomainError);
}

TEST_CASE("negative dependence collapses to independence with a flag") {
    RngEngine rng(9);
    std::vector<std::pair<double, double>> rm;
    for (int i = 0; i < 200; ++i) {
        const double r = ll_quantile(uniform01(rng), LogLogisticParams(3.0, 4.0));
        // anti-monotone link plus noise
        const double m = 50.0 / r * std::exp(0.1 * normal01(rng));
        rm.emplace_back(r, m);
    }
    const auto fit = fit_metaclick(to_features(rm));
    CHECK(fit.negative_dependence);
    CHECK(fit.params.eta == 1.0);
    CHECK(fit.tau < 0.0);
}

TEST_CASE("copula sampler hits the tau it was asked for") {
    const auto p = paper_population();
    const auto sampled = metaclick_sample(4000, p, 123);
    std::vector<double> r, m;
    for (const auto& f : sampled) {
        r.push_back(f.r);
        m.push_back(f.m);
    }
    const double tau_target = 1.0 - 1.0 / p.eta;
    CHECK(kendall_tau(r, m) == doctest::Approx(tau_target).epsilon(0.35));
    const auto ks_r = ks_one_sample(r, [&](double t) { return ll_cdf(t, p.r_marginal); });
    const auto ks_m = ks_one_sample(m, [&](double t) { return ll_cdf(t, p.m_marginal); });
    CHECK(ks_r.p_value > 0.01);
    CHECK(ks_m.p_value > 0.01);
    const auto rep_a = metaclick_sample(4, p, 8);
    const auto rep_b = metaclick_sample(4, p, 8);
    CHECK(rep_a[2].r == rep_b[2].r);
    CHECK(rep_a[3].m == rep_b[3].m);
    // independence degenerates to two plain uniforms
    MetaClickParams ind = p;
    ind.eta = 1.0;
    const auto free = metaclick_sample(2000, ind, 55);
    std::vector<double> fr, fm;
    for (const auto& f : free) {
        fr.push_back(f.r);
        fm.push_back(f.m);
    }
    CHECK(std::abs(kendall_tau(fr, fm)) < 0.05);
}

}  // TEST_SUITE
