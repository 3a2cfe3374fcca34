#pragma once

// Constant-coefficient limit problem
//
//     d_t u = (abar / 2) d_xx u,    u(0, .) = f,
//
// solved exactly by convolution with the Gaussian kernel of variance
// abar * t.  Values and spatial derivatives are computed by a truncated
// Gaussian quadrature: nodes on a uniform grid over +-trunc_sd standard
// deviations weighted by the normal density (trapezoid weights).  For smooth
// compactly-supported or Gaussian data this converges far below the Monte
// Carlo noise floors of the estimators that consume it.

#include <cstddef>
#include <vector>

#include "homog1d/initial_datum.hpp"

namespace homog {

// Gaussian heat kernel q_t(x) with variance t, and its first two spatial
// derivatives.
double heat_kernel(double t, double x);
double heat_kernel_dx(double t, double x);
double heat_kernel_dxx(double t, double x);

class HomogenizedModel {
  public:
    HomogenizedModel(double abar, InitialDatum datum, std::size_t n_nodes = 201,
                     double trunc_sd = 8.0);

    // u(t, x) and its first two x-derivatives; t = 0 returns the datum and
    // its derivatives exactly, negative t throws std::invalid_argument.
    double u(double t, double x) const;
    double u_dx(double t, double x) const;
    double u_dxx(double t, double x) const;

    double abar() const { return abar_; }
    const InitialDatum& datum() const { return datum_; }

  private:
    double convolve(double t, double x, int derivative_order) const;

    double abar_;
    InitialDatum datum_;
    std::vector<double> node_;    // quadrature nodes in standard deviations
    std::vector<double> weight_;  // normal-density trapezoid weights
};

}  // namespace homog
