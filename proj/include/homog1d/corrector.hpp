#pragma once

// Correctors of the random coefficient field.
//
// With V = 1/a - 1/abar, the first and second correctors are the signed
// integrals
//
//     phi(x) = abar * int_0^x V(y) dy,
//     psi(x) = -(2 / abar) * int_0^x phi(y) / a(y) dy,
//
// solving -(1/2)(a phi')' = (1/2) a' and -(1/2)(a psi')' = V.  Both are
// realized as cumulative trapezoid tables on a uniform grid anchored at 0;
// the table nodes are exact integrals of the piecewise-linear interpolant of
// the integrand, so the defining relation phi' = abar * V holds identically
// at the nodes.  Evaluation between nodes is linear interpolation, matching
// what the path simulator uses.
//
// Typical realizations grow like sqrt(|x|) (phi) and |x|^{3/2} (psi); the
// second-moment growth laws E|phi(x)|^2 ~ abar^2 rhat0 |x| and
// E|psi(x)|^2 ~ |x|^3 are checked by moment_growth below.

#include <cstdint>
#include <vector>

#include "homog1d/random_env.hpp"
#include "homog1d/stats.hpp"

namespace homog {

class CorrectorEvaluator {
  public:
    // Builds tables over the environment window (which must contain 0) with
    // the given grid step.  The environment spec must carry a cached abar.
    explicit CorrectorEvaluator(const Environment& env, double quad_step = 0.01);

    double phi(double x) const;
    double psi(double x) const;

    // One-sided slope of phi on the cell right of node i; equals
    // abar * (V_i + V_{i+1}) / 2 by construction.
    double phi_cell_slope(std::size_t i) const;

    double quad_step() const { return step_; }
    std::size_t node_count() const { return a_.size(); }
    double x_of(std::size_t i) const;
    std::size_t index_of_zero() const { return static_cast<std::size_t>(-i_lo_); }

    double a_node(std::size_t i) const { return a_[i]; }
    double v_node(std::size_t i) const { return v_[i]; }
    double phi_node(std::size_t i) const { return phi_[i]; }
    double psi_node(std::size_t i) const { return psi_[i]; }

    const Environment& environment() const { return env_; }

    // Discrete residual of the psi equation at interior node i:
    //   -(1/2) D_h( a(x) D_h psi )(x_i) - V(x_i),
    // with the conductivity evaluated analytically at the half nodes.
    // O(quad_step^2) for smooth fields.
    double psi_ode_residual(std::size_t i) const;

  private:
    double interpolate(const std::vector<double>& table, double x) const;

    Environment env_;
    double step_;
    std::int64_t i_lo_, i_hi_;  // node index range, x_i = i * step
    std::vector<double> a_, v_, phi_, psi_;
};

enum class CorrectorKind { phi, psi };

struct GrowthReport {
    std::vector<double> xs;
    std::vector<MeanCI> second_moment;  // E|corrector(x)|^2 across realizations
    PowerLawFit fit;                    // log-log fit of the second moment
    bool degenerate = false;            // zero-noise spec: fit skipped
    // For phi: E|phi(x)|^2 / (abar^2 rhat0 x) at the largest x (the growth
    // law constant); 0 when not applicable.
    double normalized_level = 0.0;
};

// Monte Carlo second-moment growth of a corrector over fresh environment
// realizations.  xs must be positive and strictly increasing.  The spec's
// abar / rhat0 are estimated first if missing.
GrowthReport moment_growth(const EnvironmentSpec& spec,
                           const std::vector<double>& xs,
                           std::size_t n_realizations, CorrectorKind kind,
                           std::uint64_t seed, double quad_step = 0.01);

}  // namespace homog
