#include <cmath>
#include <vector>

#include "doctest.h"
#include "m3a/dists.hpp"
#include "m3a/errors.hpp"
#include "m3a/gof.hpp"
#include "support/oracles.hpp"

using namespace m3a;

TEST_SUITE("dists") {

TEST_CASE("log-logistic cdf hits the textbook landmarks") {
    const LogLogisticParams p(300.0, 2.0);
    CHECK(ll_cdf(0.0, p) == 0.0);
    CHECK(ll_cdf(300.0, p) == doctest::Approx(0.5).epsilon(1e-15));
    // F(2a) with beta=3: odds (2)^3 = 8, so F = 8/9
    const LogLogisticParams q(10.0, 3.0);
    CHECK(ll_cdf(20.0, q) == doctest::Approx(8.0 / 9.0).epsilon(1e-14));
    CHECK(ll_cdf(std::numeric_limits<double>::infinity(), p) == 1.0);
}

TEST_CASE("odds ratio is exactly log-linear in log t") {
    const LogLogisticParams p(42.0, 2.7);
    for (int k = -5; k <= 5; ++k) {
        const double t = 42.0 * std::pow(2.0, k);
        const double lhs = std::log(odds_ratio(t, p));
        const double rhs = p.beta * (std::log(t) - std::log(p.alpha));
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
    CHECK(odds_ratio(20.0, LogLogisticParams(10.0, 3.0)) == doctest::Approx(8.0).epsilon(1e-14));
}

TEST_CASE("pdf matches the cdf derivative and integrates to one") {
    const LogLogisticParams p(300.0, 2.0);
    for (const double t : {5.0, 50.0, 300.0, 2000.0, 40000.0}) {
        const double fd = oracle::diff1([&](double x) { return ll_cdf(x, p); }, t,
                                        1e-4 * t);
        CHECK(ll_pdf(t, p) == doctest::Approx(fd).epsilon(1e-8));
    }
    // substitute t = e^s so the infinite support becomes a thin shell
    const double mass = oracle::integrate(
        [&](double s) {
            const double t = std::exp(s);
            return ll_pdf(t, p) * t;
        },
        std::log(300.0) - 30.0, std::log(300.0) + 30.0, 1e-12);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("quantile and cdf are inverse to 1e-12") {
    const std::vector<LogLogisticParams> grid = {
        {1.0, 1.0}, {300.0, 2.0}, {5.0, 0.5}, {25200.0, 3.0}};
    for (const auto& p : grid) {
        for (double u = 1e-6; u < 1.0; u += 0.0317) {
            CHECK(ll_cdf(ll_quantile(u, p), p) == doctest::Approx(u).epsilon(1e-12));
        }
    }
}

TEST_CASE("mle recovers known parameters") {
    const LogLogisticParams truth(5.0, 3.0);
    const auto data = ll_sample(4000, truth, 987654321);
    const auto fit = ll_fit_mle(data);
    CHECK(fit.alpha == doctest::Approx(truth.alpha).epsilon(0.05));
    CHECK(fit.beta == doctest::Approx(truth.beta).epsilon(0.05));
}

TEST_CASE("integer weights replicate observations exactly") {
    const std::vector<double> data = {1.0, 2.0, 3.0, 4.0, 10.0, 2.0};
    const std::vector<double> dup = {1.0, 2.0, 2.0, 3.0, 4.0, 10.0, 10.0, 10.0};
    const std::vector<double> w = {1.0, 2.0, 1.0, 1.0, 3.0, 0.0};
    const auto a = ll_fit_mle(dup);
    const auto b = ll_fit_mle(data, w);
    CHECK(a.alpha == doctest::Approx(b.alpha).epsilon(1e-9));
    CHECK(a.beta == doctest::Approx(b.beta).epsilon(1e-9));
}

TEST_CASE("warm start lands on the same optimum as the cold start") {
    const auto data = ll_sample(500, LogLogisticParams(120.0, 1.7), 44);
    const auto cold = ll_fit_mle(data);
    const auto warm = ll_fit_mle(data, {}, LogLogisticParams(5000.0, 0.3));
    // objective tolerance 1e-10 pins parameters only to ~sqrt of that
    CHECK(warm.alpha == doctest::Approx(cold.alpha).epsilon(1e-4));
    CHECK(warm.beta == doctest::Approx(cold.beta).epsilon(1e-4));
}

TEST_CASE("fit rejects unusable data") {
    CHECK_THROWS_AS((void)ll_fit_mle(std::vector<double>{}), InsufficientDataError);
    CHECK_THROWS_AS((void)ll_fit_mle(std::vector<double>{3.0}), InsufficientDataError);
    CHECK_THROWS_AS((void)ll_fit_mle(std::vector<double>{2.0, 2.0, 2.0}),
                    DegenerateDataError);
    CHECK_THROWS_AS((void)ll_fit_mle(std::vector<double>{1.0, -2.0}), DomainError);
    CHECK_THROWS_AS((void)ll_fit_mle(std::vector<double>{0.0, 2.0}), DomainError);
    // positive but all weight on one point
    CHECK_THROWS_AS((void)ll_fit_mle(std::vector<double>{1.0, 2.0},
                                     std::vector<double>{0.0, 5.0}),
                    DegenerateDataError);
}

TEST_CASE("density singularity at zero is refused only when real") {
    CHECK(ll_pdf(0.0, LogLogisticParams(1.0, 2.0)) == 0.0);
    CHECK_THROWS_AS((void)ll_pdf(0.0, LogLogisticParams(1.0, 0.5)), DomainError);
}

TEST_CASE("sampler agrees with the analytic cdf") {
    const LogLogisticParams p(300.0, 2.0);
    const auto x = ll_sample(3000, p, 20060301);
    const auto ks = ks_one_sample(x, [&](double t) { return ll_cdf(t, p); });
    CHECK(ks.p_value > 0.01);
    // same seed, same stream
    CHECK(ll_sample(10, p, 7) == ll_sample(10, p, 7));
    CHECK(ll_sample(10, p, 7) != ll_sample(10, p, 8));
}

TEST_CASE("exponential closed-form fit and sampling") {
    const std::vector<double> data = {1.0, 2.0, 3.0, 6.0};
    CHECK(exp_fit(data).rate == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    // weighted: rate = sum w / sum w t
    const std::vector<double> w = {2.0, 1.0, 1.0, 0.0};
    CHECK(exp_fit(data, w).rate == doctest::Approx(4.0 / 7.0).epsilon(1e-14));

    const ExponentialParams p(0.01);
    const auto x = exp_sample(4000, p, 5);
    CHECK(oracle::mean(x) == doctest::Approx(100.0).epsilon(0.06));
    CHECK(exp_cdf(std::log(2.0) / 0.01, p) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("pareto respects its support and closed-form mle") {
    const ParetoParams p(2.0, 3.0);
    CHECK(pareto_cdf(1.0, p) == 0.0);
    CHECK(pareto_cdf(2.0, p) == 0.0);
    CHECK(pareto_cdf(4.0, p) == doctest::Approx(1.0 - std::pow(0.5, 3.0)).epsilon(1e-14));
    CHECK_THROWS_AS((void)pareto_logpdf(1.5, p), DomainError);

    // shape = n / sum log(t/xmin)
    const std::vector<double> data = {2.0, 4.0, 8.0};
    const auto fit = pareto_fit(data, 2.0);
    CHECK(fit.xmin == 2.0);
    CHECK(fit.shape ==
          doctest::Approx(3.0 / (std::log(2.0) + std::log(4.0))).epsilon(1e-14));
    CHECK_THROWS_AS((void)pareto_fit(std::vector<double>{2.0, 2.0, 2.0}, 2.0),
                    DegenerateDataError);

    const auto x = pareto_sample(3000, p, 99);
    const auto ks = ks_one_sample(x, [&](double t) { return pareto_cdf(t, p); });
    CHECK(ks.p_value > 0.01);
}

TEST_CASE("parameter structs validate on construction") {
    CHECK_THROWS_AS(LogLogisticParams(-1.0, 2.0), DomainError);
    CHECK_THROWS_AS(LogLogisticParams(1.0, 0.0), DomainError);
    CHECK_THROWS_AS(ExponentialParams(-0.1), DomainError);
    CHECK_THROWS_AS(ParetoParams(0.0, 1.0), DomainError);
}

}  // TEST_SUITE
