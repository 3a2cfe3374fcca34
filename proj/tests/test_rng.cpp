#include <atomic>
#include <cmath>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <vector>

#include "doctest.h"

#include "homog1d/parallel.hpp"
#include "homog1d/rng.hpp"
#include "homog1d/stats.hpp"

using namespace homog;

TEST_CASE("seed derivation composes one counter at a time") {
    const std::uint64_t s = 0xdeadbeef12345678ull;
    CHECK(derive_seed(s, 3, 7) == derive_seed(derive_seed(s, 3), 7));
    CHECK(derive_seed(s, 3, 7, 11) == derive_seed(derive_seed(s, 3, 7), 11));
    CHECK(derive_seed(s, 3) != derive_seed(s, 4));
    // Counter order matters: (3,7) and (7,3) are different children.
    CHECK(derive_seed(s, 3, 7) != derive_seed(s, 7, 3));
}

TEST_CASE("derived seeds show no collisions over a counter grid") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t a = 0; a < 64; ++a)
        for (std::uint64_t b = 0; b < 64; ++b) seen.insert(derive_seed(17, a, b));
    CHECK(seen.size() == 64u * 64u);
}

TEST_CASE("uniform draws live in their half-open ranges") {
    Xoshiro256pp eng(123);
    for (int i = 0; i < 10000; ++i) {
        const double u = eng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
    Xoshiro256pp eng2(124);
    for (int i = 0; i < 10000; ++i) {
        const double u = eng2.uniform_pos();
        CHECK(u > 0.0);
        CHECK(u <= 1.0);
    }
}

TEST_CASE("normal sampler reproduces the standard moments") {
    NormalSampler draw(derive_seed(2024, seed_stream::scratch));
    const std::size_t n = 400000;
    double s1 = 0, s2 = 0, s3 = 0, s4 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double z = draw();
        s1 += z;
        s2 += z * z;
        s3 += z * z * z;
        s4 += z * z * z * z;
    }
    const double inv = 1.0 / static_cast<double>(n);
    // Monte Carlo noise at n = 4e5: sd(mean) ~ 0.0016, sd(kurtosis) ~ 0.008.
    CHECK(std::fabs(s1 * inv) < 0.01);
    CHECK(s2 * inv == doctest::Approx(1.0).epsilon(0.01));
    CHECK(std::fabs(s3 * inv) < 0.03);
    CHECK(s4 * inv == doctest::Approx(3.0).epsilon(0.03));
}

TEST_CASE("normal sampler passes a KS test against N(0,1)") {
    NormalSampler draw(derive_seed(7, seed_stream::scratch, 1));
    std::vector<double> sample(5000);
    for (double& z : sample) z = draw();
    const TestResult ks = ks_test_normal(sample, 0.0, 1.0);
    CHECK(ks.p_value > 1e-4);
}

TEST_CASE("counter gaussians are pure functions of (seed, counter)") {
    const double a = counter_gaussian(42, -3);
    const double b = counter_gaussian(42, 10);
    CHECK(counter_gaussian(42, -3) == a);
    CHECK(counter_gaussian(42, 10) == b);
    CHECK(a != b);
    CHECK(counter_gaussian(43, -3) != a);

    RunningMoments m;
    for (std::int64_t j = -20000; j < 20000; ++j) m.add(counter_gaussian(5, j));
    CHECK(std::fabs(m.mean()) < 0.02);
    CHECK(m.variance() == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("parallel_for results do not depend on the thread count") {
    const std::size_t n = 257;
    auto run = [n](unsigned threads) {
        std::vector<double> out(n);
        parallel_for(n, threads, [&](std::size_t i) {
            NormalSampler draw(derive_seed(99, i));
            double acc = 0.0;
            for (int k = 0; k < 100; ++k) acc += draw();
            out[i] = acc;
        });
        return out;
    };
    const auto base = run(1);
    CHECK(run(3) == base);
    CHECK(run(8) == base);
}

TEST_CASE("parallel_for rethrows a worker exception") {
    CHECK_THROWS_AS(parallel_for(16, 4,
                                 [](std::size_t i) {
                                     if (i == 11) {
                                         throw std::runtime_error("task 11");
                                     }
                                 }),
                    std::runtime_error);
    CHECK(default_thread_count() >= 1u);
}
