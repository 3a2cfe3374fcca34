#pragma once

// Diffusion in a frozen environment and its martingale decomposition.
//
// The microscopic process solves dX = (1/2) a'(X) dt + sqrt(a(X)) dB, started
// at x_start / epsilon.  Writing H(x) = x + phi(x) (strictly increasing since
// H' = abar / a > 0), the transformed process Y = H(X) is the driftless
// martingale dY = (abar / sqrt(a(X))) dB.  The simulator advances Y by
// Euler-Maruyama and recovers X = H^{-1}(Y) through the piecewise-linear
// corrector table.  Two consequences:
//
//   * the update is a few table lookups per step, with no transcendentals;
//   * the decomposition
//
//         eps X_{t/eps^2} = x_start + R_t + M_t,
//         M_t = abar eps int (1/sqrt(a(X_s))) dB_s = eps (Y_t - Y_0),
//         R_t = eps (phi(X_0) - phi(X_t)),
//
//     holds exactly as computed (not merely in expectation), because the
//     linear interpolations of phi and H^{-1} cancel algebraically.  The
//     recorded checkpoint states satisfy it to floating-point rounding.
//
// The quadratic variation of M is accumulated alongside as
// qv_t = abar^2 eps^2 sum (1/a(X_s)) dt, a left-endpoint Ito sum on the same
// grid as the position update.
//
// Paths must stay inside the realized window; a path reaching its edge
// raises WindowEscapeError naming the halfwidth that would have been needed,
// and is never clamped.

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "homog1d/corrector.hpp"
#include "homog1d/initial_datum.hpp"
#include "homog1d/stats.hpp"

namespace homog {

struct SimulationParams {
    double epsilon = 0.1;
    std::vector<double> t_checkpoints;  // strictly increasing, positive
    double dt_micro = 1e-3;             // microscopic step, at most 1e-2
    double x_start = 0.0;               // macroscopic start
    std::size_t n_paths = 2000;

    void validate() const;
    double t_final() const { return t_checkpoints.back(); }
};

// Window (in microscopic coordinates) a simulation needs: eight macroscopic
// standard deviations around the start point.
std::pair<double, double> required_window(const SimulationParams& p);

class WindowEscapeError : public std::runtime_error {
  public:
    WindowEscapeError(double needed_halfwidth, double have_lo, double have_hi);
    double needed_halfwidth() const { return needed_halfwidth_; }

  private:
    double needed_halfwidth_;
};

struct CheckpointState {
    double t = 0.0;      // nominal macroscopic checkpoint time
    double t_eff = 0.0;  // realized time (step count * dt * eps^2)
    double eps_x = 0.0;              // eps X_{t/eps^2}
    double martingale = 0.0;         // M_t
    double corrector_shift = 0.0;    // R_t
    double quadratic_variation = 0.0;  // qv_t
    double max_deviation = 0.0;  // running max of |eps X_s - x_start|, s <= t

    // eps*sqrt(dt)*sum of the raw standard normal increments so far; exactly
    // N(0, t_eff), independent of the environment.  sqrt(abar)*driving_sum is
    // a Brownian endpoint coupled to M_t, which estimators use as an
    // exact-mean control variate.
    double driving_sum = 0.0;
};

struct PathSample {
    double epsilon = 0.0;
    double x_start = 0.0;
    std::uint64_t seed = 0;
    std::vector<CheckpointState> states;
};

class PathSimulator {
  public:
    // The corrector table must cover required_window(params) and outlive the
    // simulator.
    PathSimulator(const CorrectorEvaluator& table, const SimulationParams& params);

    PathSample simulate(std::uint64_t path_seed) const;

    // Same walk driven by caller-supplied standard normal increments (size
    // total_steps()); the recorded seed is 0.  Used for coupling and symmetry
    // tests.
    PathSample simulate_with_increments(const std::vector<double>& z) const;

    std::int64_t total_steps() const { return checkpoint_steps_.back(); }

    const SimulationParams& params() const { return params_; }
    double abar() const { return abar_; }

  private:
    template <class Draw>
    PathSample run(Draw& draw, std::uint64_t recorded_seed) const;

    const CorrectorEvaluator& table_;
    SimulationParams params_;
    double abar_;
    double x_grid_lo_;
    double step_;
    std::vector<double> h_;        // H at nodes
    std::vector<double> inv_dh_;   // 1 / (H_{i+1} - H_i)
    std::vector<double> phi_;      // phi at nodes
    std::vector<double> inv_sig_;  // abar / sqrt(a) at nodes
    std::vector<double> inv_a_;    // 1 / a at nodes
    std::vector<std::int64_t> checkpoint_steps_;
};

// Convenience wrapper: one path on a freshly built table.
PathSample simulate_path(const Environment& env, const SimulationParams& params,
                         std::uint64_t path_seed, double quad_step = 0.01);

struct UEpsEstimate {
    std::vector<double> t;        // checkpoint times
    std::vector<MeanCI> u;        // E_B f(eps X) per checkpoint
};

// Monte Carlo u_eps(t, x_start) = E_B f(eps X_{t/eps^2}) over params.n_paths
// paths seeded from path_master_seed by counter.
UEpsEstimate estimate_u_eps(const PathSimulator& sim, const InitialDatum& f,
                            std::uint64_t path_master_seed);

// ---------------------------------------------------------------------------
// Ensemble statistics over fresh environments.

struct MomentScalingReport {
    std::vector<double> eps_list;
    std::vector<double> t_list;
    // Grids indexed [eps][t]:
    std::vector<std::vector<MeanCI>> r_sq;    // E E_B |R_t|^2
    std::vector<std::vector<MeanCI>> qv_err;  // E E_B |qv_t - abar t|^2

    // Log-log slope across eps at fixed t index, and across t at fixed eps
    // index, for either moment.
    PowerLawFit eps_slope_r(std::size_t t_index) const;
    PowerLawFit t_slope_r(std::size_t eps_index) const;
    PowerLawFit eps_slope_qv(std::size_t t_index) const;
    PowerLawFit t_slope_qv(std::size_t eps_index) const;
};

// Both moment grids from one nested ensemble: n_env fresh environments, each
// carrying n_paths paths per epsilon.  CIs by batch means over environments.
MomentScalingReport moment_scaling(const EnvironmentSpec& spec,
                                   const std::vector<double>& eps_list,
                                   const std::vector<double>& t_list,
                                   std::size_t n_env, std::size_t n_paths,
                                   double dt_micro, std::uint64_t seed,
                                   unsigned n_threads = 1);

// Named entry points for the two scaling lemmas; both reports come from the
// same nested ensemble, so these simply forward to moment_scaling.
MomentScalingReport moment_scaling_R(const EnvironmentSpec& spec,
                                     const std::vector<double>& eps_list,
                                     const std::vector<double>& t_list,
                                     std::size_t n_env, std::size_t n_paths,
                                     double dt_micro, std::uint64_t seed,
                                     unsigned n_threads = 1);
MomentScalingReport moment_scaling_QV(const EnvironmentSpec& spec,
                                      const std::vector<double>& eps_list,
                                      const std::vector<double>& t_list,
                                      std::size_t n_env, std::size_t n_paths,
                                      double dt_micro, std::uint64_t seed,
                                      unsigned n_threads = 1);

struct QuenchedKsReport {
    std::vector<double> eps_list;
    std::vector<TestResult> ks;        // KS vs N(x_start, abar t) per epsilon
    std::vector<double> critical_1pct;  // critical KS value at the 1% level
};

// Kolmogorov-Smirnov comparison of the quenched endpoint law against the
// Gaussian limit, in one fixed environment shared across all epsilons.
QuenchedKsReport quenched_invariance_ks(const Environment& env,
                                        const std::vector<double>& eps_list,
                                        double t, double dt_micro,
                                        std::size_t n_paths, double x_start,
                                        std::uint64_t seed);

struct ExitProbabilityReport {
    std::vector<double> thresholds;  // deviation levels M
    std::vector<double> probability;  // P(sup_{s<=t} |eps X - x_start| >= M)
    std::vector<double> ci;           // binomial 95% half-widths
    PowerLawFit tail_fit;  // ln p against M^2 / t; Gaussian decay gives a line
};

ExitProbabilityReport exit_probability_check(const Environment& env,
                                             const SimulationParams& params,
                                             const std::vector<double>& thresholds,
                                             std::uint64_t seed);

}  // namespace homog
