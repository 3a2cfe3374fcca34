#include "homog1d/random_env.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "homog1d/rng.hpp"

namespace homog {
namespace {

// C^infinity bump on (-radius, radius), k(0) = exp(-1).
inline double bump(double d, double radius) {
    const double u = d / radius;
    const double s = 1.0 - u * u;
    if (s <= 0.0) return 0.0;
    return std::exp(-1.0 / s);
}

inline double bump_prime(double d, double radius) {
    const double u = d / radius;
    const double s = 1.0 - u * u;
    if (s <= 0.0) return 0.0;
    return std::exp(-1.0 / s) * (-2.0 * d / (radius * radius)) / (s * s);
}

}  // namespace

void EnvironmentSpec::validate() const {
    if (!(lambda > 0.0 && lambda < 1.0)) {
        throw std::invalid_argument("EnvironmentSpec: lambda must lie in (0,1)");
    }
    if (!(noise_amplitude >= 0.0)) {
        throw std::invalid_argument("EnvironmentSpec: noise_amplitude must be >= 0");
    }
    if (!(lattice_spacing > 0.0)) {
        throw std::invalid_argument("EnvironmentSpec: lattice_spacing must be > 0");
    }
    if (!(kernel_radius > 0.0)) {
        throw std::invalid_argument("EnvironmentSpec: kernel_radius must be > 0");
    }
    if (!(squash_shape > 0.0)) {
        throw std::invalid_argument("EnvironmentSpec: squash_shape must be > 0");
    }
}

Environment::Environment(const EnvironmentSpec& spec, double window_lo,
                         double window_hi, std::uint64_t seed)
    : spec_(spec), lo_(window_lo), hi_(window_hi), seed_(seed) {
    spec_.validate();
    if (!(window_lo < window_hi)) {
        throw std::invalid_argument("Environment: window must satisfy lo < hi");
    }
    const double h = spec_.lattice_spacing;
    const double r = spec_.kernel_radius;
    j_first_ = static_cast<std::int64_t>(std::floor((lo_ - r) / h)) - 1;
    const auto j_last = static_cast<std::int64_t>(std::ceil((hi_ + r) / h)) + 1;
    weights_.resize(static_cast<std::size_t>(j_last - j_first_ + 1));
    const std::uint64_t lattice_seed = derive_seed(seed, seed_stream::environment);
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        const std::int64_t j = j_first_ + static_cast<std::int64_t>(i);
        weights_[i] = spec_.noise_amplitude * counter_gaussian(lattice_seed, j);
    }
}

void Environment::require_inside(double x) const {
    if (!contains(x)) {
        std::ostringstream msg;
        msg << "Environment: x = " << x << " outside realized window ["
            << lo_ << ", " << hi_ << "]";
        throw std::out_of_range(msg.str());
    }
}

double Environment::a(double x) const {
    require_inside(x);
    const double h = spec_.lattice_spacing;
    const double r = spec_.kernel_radius;
    const auto jmin = static_cast<std::int64_t>(std::ceil((x - r) / h));
    const auto jmax = static_cast<std::int64_t>(std::floor((x + r) / h));
    double field = 0.0;
    for (std::int64_t j = jmin; j <= jmax; ++j) {
        field += weights_[static_cast<std::size_t>(j - j_first_)] *
                 bump(x - static_cast<double>(j) * h, r);
    }
    const double squash = 0.5 * (1.0 + std::tanh(spec_.squash_shape * field));
    return spec_.lambda + (1.0 - spec_.lambda) * squash;
}

double Environment::a_prime(double x) const {
    require_inside(x);
    const double h = spec_.lattice_spacing;
    const double r = spec_.kernel_radius;
    const auto jmin = static_cast<std::int64_t>(std::ceil((x - r) / h));
    const auto jmax = static_cast<std::int64_t>(std::floor((x + r) / h));
    double field = 0.0;
    double field_prime = 0.0;
    for (std::int64_t j = jmin; j <= jmax; ++j) {
        const double w = weights_[static_cast<std::size_t>(j - j_first_)];
        const double d = x - static_cast<double>(j) * h;
        field += w * bump(d, r);
        field_prime += w * bump_prime(d, r);
    }
    const double c = std::cosh(spec_.squash_shape * field);
    const double squash_prime = 0.5 * spec_.squash_shape / (c * c);
    return (1.0 - spec_.lambda) * squash_prime * field_prime;
}

double Environment::V(double x) const {
    if (!spec_.has_abar()) {
        throw std::logic_error("Environment::V requires abar cached on the spec");
    }
    return 1.0 / a(x) - 1.0 / spec_.abar;
}

MeanCI estimate_abar(const EnvironmentSpec& spec, std::size_t n_realizations,
                     std::uint64_t seed) {
    spec.validate();
    if (spec.degenerate()) {
        MeanCI out;
        out.mean = spec.constant_value();
        out.half_width = 0.0;
        out.n = 1;
        return out;
    }
    if (n_realizations < 40) {
        throw std::invalid_argument("estimate_abar: need at least 40 realizations");
    }
    // Spatial average of 1/a over a window per realization, then Monte Carlo
    // over realizations.  Window length trades per-realization variance
    // against realization count; accuracy is governed by the total volume.
    const double window_len = 20.0;
    const double sample_step = 0.05;
    const auto n_x = static_cast<std::size_t>(window_len / sample_step);
    std::vector<double> inv_means(n_realizations);
    for (std::size_t rid = 0; rid < n_realizations; ++rid) {
        Environment env(spec, 0.0, window_len,
                        derive_seed(seed, seed_stream::estimator, rid));
        KahanAccumulator acc;
        for (std::size_t i = 0; i < n_x; ++i) {
            acc.add(1.0 / env.a(static_cast<double>(i) * sample_step));
        }
        inv_means[rid] = acc.sum() / static_cast<double>(n_x);
    }
    const MeanCI inv = batch_means_ci(inv_means, 20);
    MeanCI out;
    out.mean = 1.0 / inv.mean;
    // Delta method: d(1/m) = dm / m^2.
    out.half_width = inv.half_width / (inv.mean * inv.mean);
    out.n = inv.n;
    return out;
}

CovarianceEstimate estimate_covariance(const EnvironmentSpec& spec_in,
                                       std::size_t n_realizations,
                                       std::uint64_t seed, double lag_step,
                                       double max_lag) {
    EnvironmentSpec spec = spec_in;
    spec.validate();
    if (!(lag_step > 0.0) || !(max_lag > 0.0) || max_lag < lag_step) {
        throw std::invalid_argument("estimate_covariance: bad lag grid");
    }
    if (!spec.has_abar()) {
        const MeanCI ab = estimate_abar(spec, std::max<std::size_t>(n_realizations, 400),
                                        derive_seed(seed, seed_stream::scratch));
        spec.abar = ab.mean;
        spec.abar_ci = ab.half_width;
    }

    const auto n_lags = static_cast<std::size_t>(std::llround(max_lag / lag_step)) + 1;
    CovarianceEstimate out;
    out.lag.resize(n_lags);
    out.value.resize(n_lags);
    out.ci.resize(n_lags);
    for (std::size_t l = 0; l < n_lags; ++l) {
        out.lag[l] = static_cast<double>(l) * lag_step;
    }

    if (spec.degenerate()) {
        // V vanishes identically; the covariance and its integral are zero.
        for (std::size_t l = 0; l < n_lags; ++l) {
            out.value[l] = 0.0;
            out.ci[l] = 0.0;
        }
        out.rhat0 = MeanCI{0.0, 0.0, 1};
        return out;
    }
    if (n_realizations < 40) {
        throw std::invalid_argument("estimate_covariance: need at least 40 realizations");
    }

    // Per realization: tabulate V on a grid of lag_step over a window, then
    // space-average the lag products.  The window extends one max_lag past
    // the averaging range so every product stays inside it.
    const double window_len = 20.0;
    const auto n_y = static_cast<std::size_t>(window_len / lag_step);
    const auto n_total = n_y + n_lags;
    std::vector<std::vector<double>> products(
        n_lags, std::vector<double>(n_realizations));
    std::vector<double> v_grid(n_total);
    for (std::size_t rid = 0; rid < n_realizations; ++rid) {
        Environment env(spec, 0.0, static_cast<double>(n_total) * lag_step,
                        derive_seed(seed, seed_stream::estimator, rid));
        for (std::size_t i = 0; i < n_total; ++i) {
            v_grid[i] = env.V(static_cast<double>(i) * lag_step);
        }
        for (std::size_t l = 0; l < n_lags; ++l) {
            KahanAccumulator acc;
            for (std::size_t i = 0; i < n_y; ++i) acc.add(v_grid[i] * v_grid[i + l]);
            products[l][rid] = acc.sum() / static_cast<double>(n_y);
        }
    }

    // Batch-means CI per lag, plus the trapezoid integral of the symmetric
    // extension for rhat0 (propagating per-realization integrals so the CI
    // accounts for cross-lag correlation).
    std::vector<double> integrals(n_realizations);
    for (std::size_t rid = 0; rid < n_realizations; ++rid) {
        KahanAccumulator tr;
        for (std::size_t l = 0; l < n_lags; ++l) {
            const double w = (l == 0 || l + 1 == n_lags) ? 0.5 : 1.0;
            tr.add(w * products[l][rid]);
        }
        // Symmetric extension: integral over the line is twice the one-sided
        // trapezoid minus the double-counted lag-0 node.
        integrals[rid] = lag_step * (2.0 * tr.sum() - products[0][rid]);
    }
    for (std::size_t l = 0; l < n_lags; ++l) {
        const MeanCI ci = batch_means_ci(products[l], 20);
        out.value[l] = ci.mean;
        out.ci[l] = ci.half_width;
    }
    out.rhat0 = batch_means_ci(integrals, 20);
    return out;
}

EnvironmentSpec with_ensemble_stats(EnvironmentSpec spec,
                                    std::size_t n_realizations,
                                    std::uint64_t seed) {
    spec.validate();
    if (!spec.has_abar()) {
        const MeanCI ab = estimate_abar(spec, n_realizations, seed);
        spec.abar = ab.mean;
        spec.abar_ci = ab.half_width;
    }
    if (!spec.has_rhat0()) {
        const CovarianceEstimate cov = estimate_covariance(
            spec, n_realizations, derive_seed(seed, seed_stream::estimator, 0xc0u));
        spec.rhat0 = cov.rhat0.mean;
        spec.rhat0_ci = cov.rhat0.half_width;
    }
    return spec;
}

}  // namespace homog
