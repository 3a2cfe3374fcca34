#include "homog1d/corrector.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "homog1d/rng.hpp"

namespace homog {

CorrectorEvaluator::CorrectorEvaluator(const Environment& env, double quad_step)
    : env_(env), step_(quad_step) {
    if (!(quad_step > 0.0)) {
        throw std::invalid_argument("CorrectorEvaluator: quad_step must be > 0");
    }
    if (!env.spec().has_abar()) {
        throw std::invalid_argument(
            "CorrectorEvaluator: environment spec must carry abar");
    }
    if (!(env.window_lo() <= 0.0 && env.window_hi() >= 0.0)) {
        throw std::invalid_argument(
            "CorrectorEvaluator: window must contain the anchor point 0");
    }
    i_lo_ = static_cast<std::int64_t>(std::ceil(env.window_lo() / step_ - 1e-9));
    i_hi_ = static_cast<std::int64_t>(std::floor(env.window_hi() / step_ + 1e-9));
    const auto n = static_cast<std::size_t>(i_hi_ - i_lo_ + 1);
    a_.resize(n);
    v_.resize(n);
    phi_.resize(n);
    psi_.resize(n);

    const double abar = env.spec().abar;
    const double inv_abar = 1.0 / abar;
    for (std::size_t i = 0; i < n; ++i) {
        // The 1e-9 index snap above can put an end node a sub-ulp outside
        // the environment's strict window; clamp the field query, the
        // geometry keeps the unclamped node.
        const double x = std::min(std::max(x_of(i), env.window_lo()),
                                  env.window_hi());
        a_[i] = env_.a(x);
        v_[i] = 1.0 / a_[i] - inv_abar;
    }

    // Signed cumulative trapezoids from the anchor node outwards.  Kahan
    // compensation keeps the long one-directional sums tight; the psi pass
    // integrates the freshly built phi nodes.
    const std::size_t zi = index_of_zero();
    phi_[zi] = 0.0;
    psi_[zi] = 0.0;
    {
        KahanAccumulator acc;
        for (std::size_t i = zi + 1; i < n; ++i) {
            acc.add(0.5 * step_ * abar * (v_[i - 1] + v_[i]));
            phi_[i] = acc.sum();
        }
    }
    {
        KahanAccumulator acc;
        for (std::size_t i = zi; i-- > 0;) {
            acc.add(-0.5 * step_ * abar * (v_[i] + v_[i + 1]));
            phi_[i] = acc.sum();
        }
    }
    {
        KahanAccumulator acc;
        for (std::size_t i = zi + 1; i < n; ++i) {
            acc.add(-inv_abar * step_ *
                    (phi_[i - 1] / a_[i - 1] + phi_[i] / a_[i]));
            psi_[i] = acc.sum();
        }
    }
    {
        KahanAccumulator acc;
        for (std::size_t i = zi; i-- > 0;) {
            acc.add(inv_abar * step_ * (phi_[i] / a_[i] + phi_[i + 1] / a_[i + 1]));
            psi_[i] = acc.sum();
        }
    }
}

double CorrectorEvaluator::x_of(std::size_t i) const {
    return static_cast<double>(i_lo_ + static_cast<std::int64_t>(i)) * step_;
}

double CorrectorEvaluator::interpolate(const std::vector<double>& table,
                                       double x) const {
    const double pos = x / step_ - static_cast<double>(i_lo_);
    if (pos < 0.0 || pos > static_cast<double>(table.size() - 1)) {
        throw std::out_of_range("CorrectorEvaluator: x outside table range");
    }
    auto cell = static_cast<std::size_t>(pos);
    if (cell >= table.size() - 1) cell = table.size() - 2;
    const double frac = pos - static_cast<double>(cell);
    return table[cell] + frac * (table[cell + 1] - table[cell]);
}

double CorrectorEvaluator::phi(double x) const { return interpolate(phi_, x); }
double CorrectorEvaluator::psi(double x) const { return interpolate(psi_, x); }

double CorrectorEvaluator::phi_cell_slope(std::size_t i) const {
    if (i + 1 >= phi_.size()) {
        throw std::out_of_range("phi_cell_slope: no cell right of last node");
    }
    return (phi_[i + 1] - phi_[i]) / step_;
}

double CorrectorEvaluator::psi_ode_residual(std::size_t i) const {
    if (i == 0 || i + 1 >= psi_.size()) {
        throw std::out_of_range("psi_ode_residual: interior nodes only");
    }
    const double x = x_of(i);
    const double a_right = env_.a(x + 0.5 * step_);
    const double a_left = env_.a(x - 0.5 * step_);
    const double flux_right = a_right * (psi_[i + 1] - psi_[i]) / step_;
    const double flux_left = a_left * (psi_[i] - psi_[i - 1]) / step_;
    return -0.5 * (flux_right - flux_left) / step_ - v_[i];
}

GrowthReport moment_growth(const EnvironmentSpec& spec_in,
                           const std::vector<double>& xs,
                           std::size_t n_realizations, CorrectorKind kind,
                           std::uint64_t seed, double quad_step) {
    if (xs.size() < 3) {
        throw std::invalid_argument("moment_growth: need at least 3 abscissae");
    }
    for (std::size_t j = 0; j < xs.size(); ++j) {
        if (!(xs[j] > 0.0) || (j > 0 && xs[j] <= xs[j - 1])) {
            throw std::invalid_argument(
                "moment_growth: xs must be positive and strictly increasing");
        }
    }
    if (n_realizations < 40) {
        throw std::invalid_argument("moment_growth: need at least 40 realizations");
    }
    const EnvironmentSpec spec =
        with_ensemble_stats(spec_in, 2000, derive_seed(seed, seed_stream::scratch));

    GrowthReport report;
    report.xs = xs;
    report.second_moment.resize(xs.size());

    if (spec.degenerate()) {
        // Correctors vanish identically; a growth fit would be meaningless.
        for (auto& m : report.second_moment) m = MeanCI{0.0, 0.0, n_realizations};
        report.degenerate = true;
        return report;
    }

    const double x_max = xs.back();
    std::vector<std::vector<double>> sq(xs.size(),
                                        std::vector<double>(n_realizations));
    for (std::size_t rid = 0; rid < n_realizations; ++rid) {
        Environment env(spec, -2.0 * quad_step, x_max + 2.0 * quad_step,
                        derive_seed(seed, seed_stream::estimator, rid));
        CorrectorEvaluator tab(env, quad_step);
        for (std::size_t j = 0; j < xs.size(); ++j) {
            const double v =
                kind == CorrectorKind::phi ? tab.phi(xs[j]) : tab.psi(xs[j]);
            sq[j][rid] = v * v;
        }
    }

    std::vector<double> moments(xs.size()), cis(xs.size());
    for (std::size_t j = 0; j < xs.size(); ++j) {
        report.second_moment[j] = batch_means_ci(sq[j], 20);
        moments[j] = report.second_moment[j].mean;
        cis[j] = report.second_moment[j].half_width;
    }
    report.fit = fit_loglog(xs, moments, cis);
    if (kind == CorrectorKind::phi) {
        report.normalized_level =
            moments.back() / (spec.abar * spec.abar * spec.rhat0 * xs.back());
    }
    return report;
}

}  // namespace homog
