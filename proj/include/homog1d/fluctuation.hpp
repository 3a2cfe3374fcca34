#pragma once

// First-order error expansion of u_eps around u_hom and its distributional
// comparison against the limit field.
//
// Per environment omega, with one inner path ensemble (common random numbers
// across every quantity):
//
//     v1(t,x) = E_B{ f'(x + M_t) R_t }
//     v2(t,x) = E_B{ 1/2 f''(x + M_t) (<M>_t - abar t) }
//     v_eps(t,x) = (u_eps(t,x) - u_hom(t,x)) / sqrt(eps)
//     residual  = u_eps - u_hom - v1 - v2
//
// The u_eps - u_hom difference is estimated through a coupled control
// variate: each path carries eps*sqrt(dt)*sum(z) (CheckpointState::
// driving_sum), so f(x + sqrt(abar)*driving_sum) is a functional of the same
// increments with exactly known mean u_hom(t_eff, x).  Subtracting it
// pathwise removes the O(1) quenched-CLT variance of f(eps X) and leaves the
// O(sqrt(eps)) environment signal, which is what makes outer sampling of
// v_eps affordable.  The estimator stays unbiased: the control's quenched
// mean does not depend on the environment.
//
// Across environments the per-omega means form the outer sample; inner
// standard errors are recorded so second moments can be debiased (inner
// noise adds mean(se^2) to the raw outer variance).

#include <cstdint>
#include <vector>

#include "homog1d/diffusion.hpp"
#include "homog1d/homogenized.hpp"
#include "homog1d/initial_datum.hpp"
#include "homog1d/limit_field.hpp"
#include "homog1d/random_env.hpp"
#include "homog1d/stats.hpp"

namespace homog {

struct V1V2Estimate {
    std::vector<double> t;  // checkpoint times
    std::vector<MeanCI> v1;
    std::vector<MeanCI> v2;
};

// Inner-MC means of f'(x+M)R and 1/2 f''(x+M)(qv - abar t_eff) over
// sim.params().n_paths paths, batch-means CIs.
V1V2Estimate estimate_v1_v2(const PathSimulator& sim, const InitialDatum& f,
                            std::uint64_t path_master_seed);

// All per-environment inner means at once, indexed by checkpoint.
struct EnvFluctuation {
    std::vector<double> t;
    std::vector<double> u_eps;     // mean f(eps X)
    std::vector<double> v1;
    std::vector<double> v2;
    std::vector<double> v_eps;     // control-coupled (u_eps - u_hom)/sqrt(eps)
    std::vector<double> residual;  // control-coupled u_eps - u_hom - v1 - v2
    std::vector<double> v_se2;     // inner variance of the v_eps mean
    std::vector<double> res_se2;   // inner variance of the residual mean
    // Inner covariance matrix of the v_eps means across checkpoints
    // (diagonal equals v_se2); needed to debias cross-time covariances.
    std::vector<std::vector<double>> v_cov;
};

// One environment's estimates from n_paths coupled paths.  The homogenized
// model must carry the same abar as the simulator's environment and the same
// datum f that is being propagated.
EnvFluctuation estimate_env_fluctuation(const PathSimulator& sim,
                                        const HomogenizedModel& hom,
                                        std::uint64_t path_master_seed);

// ---------------------------------------------------------------------------
// Residual decay along epsilon.

struct ResidualReport {
    std::vector<double> eps_list;
    std::vector<MeanCI> normalized;  // E|residual| / sqrt(eps), CI over envs
    std::vector<MeanCI> decrease;    // paired per-env drop between successive
                                     // epsilons (environments are shared, so
                                     // the difference is the low-variance
                                     // statistic for the decay test)
    std::vector<double> inner_se;    // RMS inner standard error of residual
    std::vector<bool> inconclusive;  // inner noise drowns the residual
    std::vector<std::size_t> suggested_n_inner;  // paths for a conclusive run
    PowerLawFit slope;               // log E|residual| vs log eps

    // Every paired drop is positive with its whole CI.
    bool strictly_decreasing_within_ci() const;
    bool any_inconclusive() const;
};

// E|u_eps - u_hom - v1 - v2| per epsilon, normalized by sqrt(eps); n_env
// outer environments, n_inner coupled paths each.  eps_list must be
// decreasing with at least 3 values.
ResidualReport residual_check(const EnvironmentSpec& spec,
                              const std::vector<double>& eps_list, double t,
                              double x, const InitialDatum& f,
                              std::size_t n_env, std::size_t n_inner,
                              double dt_micro, std::uint64_t seed,
                              unsigned n_threads = 1);

// ---------------------------------------------------------------------------
// Finite-dimensional CLT comparison.

struct FluctuationParams {
    double epsilon = 0.05;
    std::vector<double> t_checkpoints{0.5};  // last entry is the main time
    double x = 0.0;
    double dt_micro = 1e-3;
    std::size_t n_env = 200;
    std::size_t n_inner = 2000;
    unsigned n_threads = 1;
};

struct CltReport {
    double eps = 0.0;
    double x = 0.0;
    std::size_t n_env = 0;
    std::vector<double> t;             // checkpoint times
    std::vector<double> var_empirical;  // debiased outer variance per time
    std::vector<double> var_limit;      // quadrature variance per time
    double inner_inflation = 0.0;  // mean(se^2)/var_emp at the main time

    // Main-time summary.
    double var_ratio = 0.0;
    double var_ratio_ci = 0.0;  // ~95% half width from outer sampling noise
    TestResult normality;       // Anderson-Darling on the outer sample

    // Cross-time covariance (first vs last checkpoint; zeros when only one).
    double cov_empirical = 0.0;
    double cov_limit = 0.0;
    double cov_ratio = 0.0;

    bool var_nondecreasing_in_t = true;  // empirical, within sampling noise

    std::vector<double> v_samples;  // outer sample of v_eps at the main time
};

// Outer sample of v_eps over fp.n_env environments vs the limit field's
// variance/covariance at (t, fp.x).  The limit field must be built on the
// same homogenized model (abar, datum) the simulation uses.
CltReport clt_test(const EnvironmentSpec& spec, const FluctuationParams& fp,
                   const LimitField& limit, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Smoothed (weak) CLT: scalar statistic integral of v_eps(t, x) g(x) dx.

struct WeakAverageReport {
    double t = 0.0;
    double eps = 0.0;
    std::size_t n_env = 0;
    std::vector<double> nodes;    // quadrature nodes covering supp g
    std::vector<double> weights;  // trapezoid weight times g(node)
    double var_empirical = 0.0;   // debiased variance of the scalar
    double var_limit = 0.0;       // double quadrature of Cov_v over g
    double ratio = 0.0;
    double ratio_ci = 0.0;
    TestResult normality;
    std::vector<double> samples;  // outer sample of the scalar
};

// Trapezoid quadrature of v_eps(t, .) g over n_nodes nodes spanning the
// support of g (which must be compact), one inner ensemble per node within a
// common environment; limit side by exact double quadrature of the kernel
// covariance.  h_w is the limit-side noise cell width and must divide the
// node spacing so every node lands on a cell edge.
WeakAverageReport weak_average_test(const EnvironmentSpec& spec,
                                    const FluctuationParams& fp,
                                    const LimitField& limit,
                                    const InitialDatum& g,
                                    std::size_t n_nodes, double h_w,
                                    std::uint64_t seed);

}  // namespace homog
