#pragma once

// The limiting Gaussian fluctuation field and its identities.
//
// The field is the Wiener integral v(t,x) = int G(t,x;y) dW(y) with
//
//     G(t,x;y) = -(1/2) sqrt(rhat0) abar^2
//                 int_0^t  dq_{abar(t-s)}(x-y)  d_y u_hom(s,y) ds,
//
// where q_s is the Gaussian density of variance s and dq its x-derivative.
// The time integral is singular at s = t; substituting u = sqrt(t-s) and
// integrating over dyadic panels in u (8-point Gauss-Legendre each) makes
// the integrand analytic on every panel, so the tables converge to near
// machine precision even for field points a fraction of a cell away from x.
//
// For sampling, G is reduced to cell averages over a white-noise grid:
// v = sum_j Gbar_j dW_j.  The variance of that discrete functional,
// sum Gbar^2 h, is what variance_v reports, so sampled and quadrature
// variances agree by construction up to the cell-average quadrature itself.
//
// The same machinery builds the three coupled component fields
//
//     v1 = int q_{abar t}(x-y) f'(y) W(y) dy       (heat flow of f' W),
//     v2 = d_x u_hom(t,x) W(x),
//     v3 = sum_j K3bar_j dW_j,   K3(y) = int_0^t q_{abar(t-s)}(x-y)
//                                          d_y^2 u_hom(s,y) ds,
//
// evaluated against one shared noise draw, with v1 integrated exactly
// against the piecewise-linear W cell by cell.  The combination
// -cbar v1 + cbar v2 + (1/2) cbar abar v3 reproduces sample_v pathwise up
// to quadrature; evaluation points must sit on cell edges so the kernel
// jump at y = x never falls inside a cell.
//
// Cross-checks living here: a Feynman-Kac construction of Var v3 from
// Brownian occupation times, a binned local-time estimator with its moment
// oracles, and the pathwise Ito/local-time identity
//
//     cbar int_0^{sigbar B_t} W dy - cbar sigbar int_0^t W(sigbar B_s) dB_s
//         = (1/2) cbar abar int L_t(y) dW(y).

#include <cstdint>
#include <vector>

#include "homog1d/homogenized.hpp"
#include "homog1d/white_noise.hpp"

namespace homog {

// Frozen per-(t,x) tables; immutable once built, safe to share across
// threads.
struct KernelTable {
    double t = 0.0, x = 0.0;
    double cbar = 0.0, abar = 0.0;
    WhiteNoiseGrid grid;
    std::vector<double> g_avg;        // cell averages of G
    std::vector<double> k3_avg;       // cell averages of K3
    std::vector<double> v1_a, v1_b;   // exact per-cell weights for v1:
                                      // cell integrals of q f' (1-u), q f' u
    double u_dx_at_x = 0.0;
    std::size_t x_edge = 0;           // edge index of x
    double variance = 0.0;            // sum g_avg^2 h
};

struct ComponentSample {
    double v1 = 0.0, v2 = 0.0, v3 = 0.0;
};

class LimitField {
  public:
    LimitField(HomogenizedModel model, double rhat0);

    double rhat0() const { return rhat0_; }
    double abar() const { return model_.abar(); }
    double cbar() const { return cbar_; }
    const HomogenizedModel& model() const { return model_; }

    // Pointwise kernels (quadrature; relative error far below 1e-4).
    double green_kernel(double t, double x, double y) const;
    double k3_kernel(double t, double x, double y) const;

    // Grid covering the kernel mass at (t, x) to ~1e-14: eight standard
    // deviations of the combined kernel/datum scale, straddling 0.
    WhiteNoiseGrid default_grid(double t, double x, double h_w = 0.01) const;

    // Builds the frozen tables; x must lie on a cell edge of the grid.
    KernelTable kernel_table(double t, double x, const WhiteNoiseGrid& grid) const;

    // Convenience: kernel_table on the default grid, reduced to its variance.
    double variance_v(double t, double x) const;

  private:
    // Both time integrals (dq * u_dx and q * u_dxx) in one panel sweep.
    void time_integrals(double t, double x, double y, double* first,
                        double* second) const;

    HomogenizedModel model_;
    double rhat0_;
    double cbar_;
};

double variance_v(const KernelTable& table);

// Covariance of the fields at two points; both tables must share the cell
// width (they overlap cell by cell thanks to the common anchoring at 0).
double covariance_v(const KernelTable& a, const KernelTable& b);

// One sample of v, and of the coupled components, from a noise draw on the
// table's grid.
double sample_v(const KernelTable& table, const NoisePath& noise);
ComponentSample sample_components(const KernelTable& table, const NoisePath& noise);

// -cbar v1 + cbar v2 + (1/2) cbar abar v3.
double combine_components(const KernelTable& table, const ComponentSample& c);

// ---------------------------------------------------------------------------
// Brownian-path machinery for the cross-checks.

struct DiscretePath {
    double sigma = 1.0;
    double dt = 1e-3;
    // Positions at step boundaries; positions.size() = step count + 1.
    std::vector<double> positions;

    double t_final() const { return dt * static_cast<double>(positions.size() - 1); }
};

DiscretePath sample_brownian_path(double sigma, double t, double dt,
                                  double start, std::uint64_t seed);

struct OccupationTable {
    double y_lo = 0.0;       // left edge of the first bin
    double bin_width = 0.0;  // bins anchored at multiples of bin_width
    std::vector<double> density;

    double total_time() const;
};

// Binned occupation density over the path's left step endpoints.  Rejects
// bins finer than 4 sigma sqrt(dt): below that scale the histogram measures
// step noise, not local time.
OccupationTable local_time(const DiscretePath& path, double bin_width);

struct FkV3Report {
    double var_quadrature = 0.0;  // sum K3bar^2 h from the table
    double var_fk = 0.0;          // outer variance of inner path-MC means,
                                  // inner-noise contribution subtracted
    double var_fk_stderr = 0.0;
    double ratio = 0.0;           // var_fk / var_quadrature
    std::size_t n_noise = 0, n_w_paths = 0;
    double dt = 0.0, bin_width = 0.0;
};

// Independent Monte Carlo construction of Var v3: per noise draw, inner
// average over Brownian paths of f''(path end) * sum L(bin) dW(bin).
FkV3Report feynman_kac_v3(const LimitField& field, const KernelTable& table,
                          std::size_t n_noise, std::size_t n_w_paths, double dt,
                          std::uint64_t seed);

struct ItoIdentityReport {
    double t = 0.0, dt = 0.0, h_w = 0.0;
    double bin_width = 0.0;  // realized local-time bin (multiple of h_w)
    std::size_t n_draws = 0;
    double rms_diff = 0.0;   // RMS(LHS - RHS) over draws
    double rms_rhs = 0.0;
    double relative_rms = 0.0;
};

// Pathwise Ito/local-time identity on coupled (Brownian path, noise) draws.
ItoIdentityReport ito_identity_check(const LimitField& field, double t,
                                     double dt, double h_w,
                                     std::size_t n_draws, std::uint64_t seed);

}  // namespace homog
