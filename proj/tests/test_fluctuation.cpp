#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"

#include "homog1d/corrector.hpp"
#include "homog1d/diffusion.hpp"
#include "homog1d/fluctuation.hpp"
#include "homog1d/random_env.hpp"
#include "homog1d/rng.hpp"

using namespace homog;

namespace {

EnvironmentSpec reference_spec() {
    EnvironmentSpec spec;
    spec.abar = 0.612702;
    spec.rhat0 = 0.113700;
    return spec;
}

EnvironmentSpec degenerate_spec() {
    EnvironmentSpec spec;
    spec.noise_amplitude = 0.0;
    spec.abar = spec.constant_value();
    spec.rhat0 = 0.0;
    return spec;
}

struct Rig {
    Environment env;
    CorrectorEvaluator table;
    PathSimulator sim;

    Rig(const EnvironmentSpec& spec, const SimulationParams& p,
        std::uint64_t env_seed)
        : env(spec, required_window(p).first - 1.0,
              required_window(p).second + 1.0, env_seed),
          table(env),
          sim(table, p) {}
};

SimulationParams fast_params() {
    SimulationParams p;
    p.epsilon = 0.2;
    p.t_checkpoints = {0.25, 0.5};
    p.n_paths = 400;
    return p;
}

}  // namespace

TEST_CASE("per-environment estimates satisfy their defining identity") {
    const Rig rig(reference_spec(), fast_params(), 601);
    const HomogenizedModel hom(0.612702, InitialDatum::gaussian(1.0));
    const EnvFluctuation e = estimate_env_fluctuation(rig.sim, hom, 77);
    REQUIRE(e.t.size() == 2);
    for (std::size_t k = 0; k < e.t.size(); ++k) {
        // residual = sqrt(eps) v_eps - v1 - v2 holds exactly: both sides are
        // the same pathwise sums.
        const double lhs = e.residual[k];
        const double rhs = std::sqrt(0.2) * e.v_eps[k] - e.v1[k] - e.v2[k];
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
        CHECK(e.v_se2[k] >= 0.0);
        CHECK(e.res_se2[k] >= 0.0);
        // Covariance matrix diagonal is the recorded inner variance.
        CHECK(e.v_cov[k][k] == doctest::Approx(e.v_se2[k]).epsilon(1e-12));
    }
    CHECK(e.v_cov[0][1] == e.v_cov[1][0]);
}

TEST_CASE("v1/v2 from the dedicated estimator match the combined one") {
    const Rig rig(reference_spec(), fast_params(), 602);
    const HomogenizedModel hom(0.612702, InitialDatum::gaussian(1.0));
    const EnvFluctuation both = estimate_env_fluctuation(rig.sim, hom, 55);
    const V1V2Estimate v12 =
        estimate_v1_v2(rig.sim, hom.datum(), 55);
    for (std::size_t k = 0; k < both.t.size(); ++k) {
        // Same path seeds, same formulas: the means agree to rounding.
        CHECK(v12.v1[k].mean == doctest::Approx(both.v1[k]).epsilon(1e-12));
        CHECK(v12.v2[k].mean == doctest::Approx(both.v2[k]).epsilon(1e-12));
        CHECK(v12.v1[k].half_width > 0.0);
    }
}

TEST_CASE("the homogenized model must carry the environment's abar") {
    const Rig rig(reference_spec(), fast_params(), 603);
    const HomogenizedModel wrong(0.5, InitialDatum::gaussian(1.0));
    CHECK_THROWS_AS(estimate_env_fluctuation(rig.sim, wrong, 1),
                    std::invalid_argument);
}

TEST_CASE("degenerate field: every fluctuation statistic vanishes to rounding") {
    SimulationParams p = fast_params();
    const Rig rig(degenerate_spec(), p, 604);
    const HomogenizedModel hom(0.65, InitialDatum::gaussian(1.0));
    const EnvFluctuation e = estimate_env_fluctuation(rig.sim, hom, 88);
    for (std::size_t k = 0; k < e.t.size(); ++k) {
        // R vanishes identically, so v1 is an exact zero.  v2 and the
        // derived quantities accumulate roundoff from qv - abar*t, which is
        // a difference of equal sums (observed ~1e-14).
        CHECK(e.v1[k] == 0.0);
        CHECK(std::fabs(e.v2[k]) < 1e-12);
        CHECK(std::fabs(e.v_eps[k]) < 1e-12);
        CHECK(std::fabs(e.residual[k]) < 1e-12);
        CHECK(e.v_se2[k] < 1e-24);
    }
}

TEST_CASE("residual check validates its epsilon grid") {
    const InitialDatum f = InitialDatum::gaussian(1.0);
    CHECK_THROWS_AS(residual_check(reference_spec(), {0.2, 0.1}, 0.5, 0.0, f, 4,
                                   50, 1e-3, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(residual_check(reference_spec(), {0.1, 0.2, 0.05}, 0.5, 0.0,
                                   f, 4, 50, 1e-3, 1),
                    std::invalid_argument);
}

TEST_CASE("clt test guards its preconditions") {
    FluctuationParams fp;
    fp.n_env = 4;  // too few for an outer variance
    const LimitField limit(HomogenizedModel(0.612702, InitialDatum::gaussian(1.0)),
                           0.113700);
    CHECK_THROWS_AS(clt_test(reference_spec(), fp, limit, 1),
                    std::invalid_argument);

    FluctuationParams ok;
    ok.n_env = 8;
    const LimitField mismatched(HomogenizedModel(0.5, InitialDatum::gaussian(1.0)),
                                0.113700);
    CHECK_THROWS_AS(clt_test(reference_spec(), ok, mismatched, 1),
                    std::invalid_argument);
}

TEST_CASE("clt smoke run produces a coherent report") {
    EnvironmentSpec spec = reference_spec();
    FluctuationParams fp;
    fp.epsilon = 0.2;
    fp.t_checkpoints = {0.25, 0.5};
    fp.n_env = 12;
    fp.n_inner = 150;
    fp.n_threads = 2;
    const LimitField limit(HomogenizedModel(spec.abar, InitialDatum::gaussian(1.0)),
                           spec.rhat0);
    const CltReport r = clt_test(spec, fp, limit, 909);
    CHECK(r.n_env == 12);
    REQUIRE(r.v_samples.size() == 12);
    REQUIRE(r.var_empirical.size() == 2);
    CHECK(r.var_limit[0] > 0.0);
    CHECK(r.var_limit[1] > r.var_limit[0]);
    CHECK(r.var_ratio > 0.0);
    CHECK(r.var_ratio_ci > 0.0);
    CHECK(r.cov_limit > 0.0);
    CHECK(r.normality.p_value >= 0.0);
    CHECK(r.normality.p_value <= 1.0);
}

TEST_CASE("clt outer sampling is invariant under the worker count") {
    EnvironmentSpec spec = reference_spec();
    FluctuationParams fp;
    fp.epsilon = 0.2;
    fp.t_checkpoints = {0.25};
    fp.n_env = 10;
    fp.n_inner = 100;
    const LimitField limit(HomogenizedModel(spec.abar, InitialDatum::gaussian(1.0)),
                           spec.rhat0);
    fp.n_threads = 1;
    const CltReport one = clt_test(spec, fp, limit, 910);
    fp.n_threads = 4;
    const CltReport four = clt_test(spec, fp, limit, 910);
    CHECK(one.v_samples == four.v_samples);
    CHECK(one.var_empirical[0] == four.var_empirical[0]);
}

TEST_CASE("weak average test guards node geometry and support") {
    EnvironmentSpec spec = reference_spec();
    FluctuationParams fp;
    fp.epsilon = 0.2;
    fp.t_checkpoints = {0.25};
    fp.n_env = 8;
    fp.n_inner = 60;
    const LimitField limit(HomogenizedModel(spec.abar, InitialDatum::gaussian(1.0)),
                           spec.rhat0);
    // A gaussian test function has no compact support.
    CHECK_THROWS_AS(weak_average_test(spec, fp, limit,
                                      InitialDatum::gaussian(1.0), 9, 0.01, 1),
                    std::invalid_argument);
    // Cell width must divide the node spacing.
    CHECK_THROWS_AS(weak_average_test(spec, fp, limit,
                                      InitialDatum::compact_bump(1.0, 1.0), 9,
                                      0.013, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(weak_average_test(spec, fp, limit,
                                      InitialDatum::compact_bump(1.0, 1.0), 5,
                                      0.01, 1),
                    std::invalid_argument);
}
