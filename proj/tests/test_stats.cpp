#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "doctest.h"

#include "homog1d/rng.hpp"
#include "homog1d/stats.hpp"

using namespace homog;

TEST_CASE("Kahan accumulator keeps the small addend a naive sum drops") {
    KahanAccumulator acc;
    acc.add(1e16);
    acc.add(1.0);
    acc.add(-1e16);
    CHECK(acc.sum() == 1.0);

    double naive = 1e16;
    naive += 1.0;
    naive += -1e16;
    CHECK(naive == 0.0);  // the failure mode the accumulator exists for
}

TEST_CASE("pairwise sum agrees with compensated summation") {
    NormalSampler draw(31);
    std::vector<double> xs(10001);
    KahanAccumulator acc;
    for (double& x : xs) {
        x = draw() * 1e6;
        acc.add(x);
    }
    CHECK(pairwise_sum(xs) == doctest::Approx(acc.sum()).epsilon(1e-12));
    CHECK(pairwise_sum(xs.data(), 0) == 0.0);
    CHECK(pairwise_sum(xs.data(), 1) == xs[0]);
}

TEST_CASE("running moments match two-pass formulas") {
    NormalSampler draw(32);
    std::vector<double> xs(1500);
    RunningMoments m;
    for (double& x : xs) {
        x = 3.0 + 2.0 * draw();
        m.add(x);
    }
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    CHECK(m.count() == xs.size());
    CHECK(m.mean() == doctest::Approx(mean).epsilon(1e-12));
    CHECK(m.variance() == doctest::Approx(ss / (xs.size() - 1)).epsilon(1e-10));
}

TEST_CASE("batch means interval covers an i.i.d. mean at roughly 95%") {
    std::size_t covered = 0;
    const std::size_t reps = 200;
    for (std::size_t r = 0; r < reps; ++r) {
        NormalSampler draw(derive_seed(555, r));
        std::vector<double> xs(2000);
        for (double& x : xs) x = draw();
        const MeanCI ci = batch_means_ci(xs, default_batch_count(xs.size()));
        if (std::fabs(ci.mean) <= ci.half_width) ++covered;
    }
    // Binomial(200, 0.95): seeing fewer than 178 hits has probability ~2e-4.
    CHECK(covered >= 178);
}

TEST_CASE("batch means rejects unusable splits") {
    std::vector<double> xs(10, 1.0);
    CHECK_THROWS_AS(batch_means_ci(xs, 1), std::invalid_argument);
    CHECK_THROWS_AS(batch_means_ci(xs, 6), std::invalid_argument);
    CHECK(default_batch_count(40) == 20);
    CHECK(default_batch_count(1000) == 20);
    CHECK(default_batch_count(10) == 5);
    CHECK(default_batch_count(3) == 2);
}

TEST_CASE("student t quantiles match table values") {
    CHECK(student_t_975(1) == doctest::Approx(12.706).epsilon(1e-3));
    CHECK(student_t_975(10) == doctest::Approx(2.228).epsilon(1e-3));
    CHECK(student_t_975(30) == doctest::Approx(2.042).epsilon(1e-3));
    CHECK(student_t_975(1000) == doctest::Approx(1.962).epsilon(1e-2));
}

TEST_CASE("normal cdf hits reference points") {
    CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-9));
    CHECK(normal_cdf(-3.0) == doctest::Approx(0.001349898).epsilon(1e-4));
    CHECK(normal_pdf(0.0) == doctest::Approx(0.3989422804).epsilon(1e-9));
}

TEST_CASE("KS test accepts its own law and rejects a wrong one") {
    NormalSampler draw(77);
    std::vector<double> xs(2000);
    for (double& x : xs) x = 2.0 + 3.0 * draw();

    const TestResult good = ks_test_normal(xs, 2.0, 9.0);
    CHECK(good.p_value > 0.01);
    CHECK(good.statistic < ks_critical_value(xs.size(), 0.01));

    const TestResult bad = ks_test_normal(xs, 0.0, 9.0);
    CHECK(bad.p_value < 1e-6);
    CHECK(bad.statistic > ks_critical_value(xs.size(), 0.01));

    // Uniform data against the normal with matched mean and variance: the
    // asymptotic KS distance is only ~0.057, so this needs a larger sample
    // for an unambiguous rejection.
    Xoshiro256pp eng(78);
    std::vector<double> us(5000);
    for (double& u : us) u = eng.uniform();
    CHECK(ks_test_normal(us, 0.5, 1.0 / 12.0).p_value < 1e-4);
}

TEST_CASE("KS preconditions: sample size and variance") {
    std::vector<double> xs(49, 0.0);
    CHECK_THROWS_AS(ks_test_normal(xs, 0.0, 1.0), std::invalid_argument);
    std::vector<double> ok(50, 0.0);
    CHECK_THROWS_AS(ks_test_normal(ok, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("KS critical values invert the asymptotic law") {
    // Stephens' rescaling: c(alpha) / (sqrt(n) + 0.12 + 0.11/sqrt(n)).
    CHECK(ks_critical_value(100, 0.05) == doctest::Approx(0.1340).epsilon(0.02));
    CHECK(ks_critical_value(10000, 0.01) == doctest::Approx(0.01627).epsilon(0.02));
    CHECK(ks_critical_value(1000, 0.01) > ks_critical_value(1000, 0.05));
}

TEST_CASE("Anderson-Darling separates normal from skewed and flat samples") {
    NormalSampler draw(91);
    std::vector<double> normal(600);
    for (double& x : normal) x = draw();
    CHECK(anderson_darling_normality(normal).p_value > 0.01);

    Xoshiro256pp eng(92);
    std::vector<double> expo(600), flat(600);
    for (double& x : expo) x = -std::log(eng.uniform_pos());
    for (double& x : flat) x = eng.uniform();
    CHECK(anderson_darling_normality(expo).p_value < 1e-4);
    CHECK(anderson_darling_normality(flat).p_value < 1e-3);
    std::vector<double> tiny(7, 1.0);
    CHECK_THROWS_AS(anderson_darling_normality(tiny), std::invalid_argument);
}

TEST_CASE("log-log fit recovers an exact power law") {
    const std::vector<double> xs{0.5, 1.0, 2.0, 4.0, 8.0};
    std::vector<double> ys;
    for (double x : xs) ys.push_back(3.0 * x * x);
    const PowerLawFit fit = fit_loglog(xs, ys);
    CHECK(fit.slope == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(fit.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-12));
    CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fit.slope_stderr < 1e-10);
}

TEST_CASE("log-log fit recovers a noisy exponent within its tolerance") {
    NormalSampler draw(404);
    const std::vector<double> xs{0.05, 0.1, 0.2, 0.4, 0.8, 1.6};
    std::vector<double> ys, ci;
    for (double x : xs) {
        const double y = std::pow(x, 1.5) * (1.0 + 0.05 * draw());
        ys.push_back(y);
        ci.push_back(0.05 * y * 1.96);
    }
    const PowerLawFit fit = fit_loglog(xs, ys, ci);
    CHECK(fit.slope == doctest::Approx(1.5).epsilon(0.07));
    CHECK(fit.r_squared > 0.99);
}

TEST_CASE("log-log fit refuses degenerate inputs") {
    CHECK_THROWS_AS(fit_loglog({1.0, 2.0}, {1.0, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(fit_loglog({1.0, 2.0, 3.0}, {1.0, -2.0, 3.0}),
                    std::invalid_argument);
    // An ordinate whose confidence interval reaches zero has no log image.
    CHECK_THROWS_AS(fit_loglog({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}, {0.5, 2.5, 0.5}),
                    std::invalid_argument);
    CHECK_THROWS_AS(fit_loglog({1.0, 1.0, 1.0}, {1.0, 2.0, 3.0}),
                    std::invalid_argument);
}

TEST_CASE("confidence weights dominate an uncertain outlier") {
    // Three tight points on slope 2 plus one wild point with a huge interval:
    // the weighted fit should stay near 2.
    const std::vector<double> xs{1.0, 2.0, 4.0, 8.0};
    const std::vector<double> ys{1.0, 4.0, 16.0, 640.0};
    const std::vector<double> ci{1e-6, 4e-6, 1.6e-5, 630.0};
    const PowerLawFit fit = fit_loglog(xs, ys, ci);
    CHECK(fit.slope == doctest::Approx(2.0).epsilon(0.05));
}
