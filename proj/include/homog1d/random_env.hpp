#pragma once

// Stationary random coefficient fields on the line.
//
// A field realization is built from i.i.d. Gaussian weights Z_j on the
// lattice x_j = j * lattice_spacing, convolved with a compactly supported
// smooth bump and squashed into (lambda, 1):
//
//     a(x) = lambda + (1 - lambda) * S( sum_j Z_j k(x - x_j) ),
//
// with S(u) = (1 + tanh(shape * u)) / 2 and k a C^infinity bump of the given
// radius.  Dependence range is twice the kernel radius; ellipticity
// lambda <= a <= 1 holds by construction.  Weights are addressed by lattice
// index through a counter scheme, so realizations over overlapping windows
// agree pointwise for the same seed.

#include <cstdint>
#include <vector>

#include "homog1d/stats.hpp"

namespace homog {

struct EnvironmentSpec {
    double lambda = 0.3;           // ellipticity floor, in (0,1)
    double noise_amplitude = 1.0;  // std dev of the lattice weights, >= 0
    double lattice_spacing = 0.25;
    double kernel_radius = 0.5;
    double squash_shape = 1.0;     // slope parameter of the squashing map

    // Ensemble quantities cached on the spec once estimated (negative means
    // not yet available).  abar is the harmonic mean of a; rhat0 is the
    // integrated covariance of V = 1/a - 1/abar.
    double abar = -1.0;
    double abar_ci = 0.0;
    double rhat0 = -1.0;
    double rhat0_ci = 0.0;

    bool has_abar() const { return abar > 0.0; }
    bool has_rhat0() const { return rhat0 >= 0.0; }
    bool degenerate() const { return noise_amplitude == 0.0; }

    // Field value taken everywhere when noise_amplitude == 0.
    double constant_value() const { return lambda + (1.0 - lambda) * 0.5; }

    void validate() const;  // throws std::invalid_argument
};

class Environment {
  public:
    // Realizes the field over [window_lo, window_hi]; the lattice extends one
    // kernel radius beyond the window so every interior point has full
    // coverage.  Bit-identical for identical (spec, window, seed).
    Environment(const EnvironmentSpec& spec, double window_lo, double window_hi,
                std::uint64_t seed);

    double a(double x) const;
    double a_prime(double x) const;

    // Fluctuation V(x) = 1/a(x) - 1/abar; requires spec().has_abar().
    double V(double x) const;

    const EnvironmentSpec& spec() const { return spec_; }
    double window_lo() const { return lo_; }
    double window_hi() const { return hi_; }
    std::uint64_t seed() const { return seed_; }

    bool contains(double x) const { return x >= lo_ && x <= hi_; }

  private:
    void require_inside(double x) const;  // throws std::out_of_range

    EnvironmentSpec spec_;
    double lo_, hi_;
    std::uint64_t seed_;
    std::int64_t j_first_;        // lattice index of weights_[0]
    std::vector<double> weights_;  // amplitude-scaled lattice Gaussians
};

inline Environment sample_environment(const EnvironmentSpec& spec, double lo,
                                      double hi, std::uint64_t seed) {
    return Environment(spec, lo, hi, seed);
}

// Harmonic-mean estimate abar = 1 / E[1/a] by Monte Carlo over realizations
// combined with a spatial average per realization; 95% CI by batch means
// over realizations.  Exact (zero-width CI) for a degenerate spec.
MeanCI estimate_abar(const EnvironmentSpec& spec, std::size_t n_realizations,
                     std::uint64_t seed);

struct CovarianceEstimate {
    std::vector<double> lag;    // 0, step, ..., max_lag
    std::vector<double> value;  // R(lag) estimates
    std::vector<double> ci;     // 95% half-widths
    MeanCI rhat0;               // integral of R over the line (trapezoid)
};

// Covariance R(lag) = E[V(0) V(lag)] on a lag grid of the given step,
// truncated at max_lag (which should exceed the dependence range so the tail
// zeros are verifiable).  Uses the cached abar on the spec, or estimates it
// first with the same budget when missing.
CovarianceEstimate estimate_covariance(const EnvironmentSpec& spec,
                                       std::size_t n_realizations,
                                       std::uint64_t seed,
                                       double lag_step = 0.05,
                                       double max_lag = 1.5);

// Returns a copy of the spec with abar and rhat0 cached (estimating whichever
// is missing with the given budget).
EnvironmentSpec with_ensemble_stats(EnvironmentSpec spec,
                                    std::size_t n_realizations,
                                    std::uint64_t seed);

}  // namespace homog
