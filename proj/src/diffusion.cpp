#include "homog1d/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "homog1d/parallel.hpp"
#include "homog1d/rng.hpp"

namespace homog {

namespace {

// Weighted least squares of y against x (plain coordinates), sigma the
// per-point standard errors.  Reuses PowerLawFit as a generic line-fit
// carrier.
PowerLawFit linear_fit_weighted(const std::vector<double>& xs,
                                const std::vector<double>& ys,
                                const std::vector<double>& sigma) {
    if (xs.size() != ys.size() || xs.size() < 3)
        throw std::invalid_argument("linear fit needs at least 3 points");
    double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double s = sigma.empty() ? 1.0 : sigma[i];
        if (!(s > 0)) throw std::invalid_argument("linear fit: nonpositive sigma");
        const double w = 1.0 / (s * s);
        sw += w;
        swx += w * xs[i];
        swy += w * ys[i];
        swxx += w * xs[i] * xs[i];
        swxy += w * xs[i] * ys[i];
    }
    const double det = sw * swxx - swx * swx;
    if (det <= 0) throw std::invalid_argument("linear fit: degenerate abscissae");
    PowerLawFit fit;
    fit.slope = (sw * swxy - swx * swy) / det;
    fit.intercept = (swxx * swy - swx * swxy) / det;
    fit.slope_stderr = std::sqrt(sw / det);
    double ss_res = 0, ss_tot = 0;
    const double ybar = swy / sw;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double fiti = fit.intercept + fit.slope * xs[i];
        ss_res += (ys[i] - fiti) * (ys[i] - fiti);
        ss_tot += (ys[i] - ybar) * (ys[i] - ybar);
    }
    fit.r_squared = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
    return fit;
}

}  // namespace

void SimulationParams::validate() const {
    if (!(epsilon > 0.0) || epsilon > 1.0)
        throw std::invalid_argument("epsilon must lie in (0, 1]");
    if (!(dt_micro > 0.0) || dt_micro > 1e-2)
        throw std::invalid_argument("dt_micro must lie in (0, 1e-2]");
    if (t_checkpoints.empty())
        throw std::invalid_argument("at least one checkpoint time is required");
    double prev = -1.0;
    for (double t : t_checkpoints) {
        if (!(t >= 0.0) || t <= prev)
            throw std::invalid_argument(
                "checkpoint times must be nonnegative and strictly increasing");
        prev = t;
    }
    if (!std::isfinite(x_start))
        throw std::invalid_argument("x_start must be finite");
    if (n_paths == 0) throw std::invalid_argument("n_paths must be positive");
}

std::pair<double, double> required_window(const SimulationParams& p) {
    const double spread = 8.0 * std::sqrt(p.t_final());
    return {(p.x_start - spread) / p.epsilon, (p.x_start + spread) / p.epsilon};
}

WindowEscapeError::WindowEscapeError(double needed_halfwidth, double have_lo,
                                     double have_hi)
    : std::runtime_error([&] {
          char buf[160];
          std::snprintf(buf, sizeof buf,
                        "path left the realized window [%g, %g]; rebuild the "
                        "environment with halfwidth >= %g around the start point",
                        have_lo, have_hi, needed_halfwidth);
          return std::string(buf);
      }()),
      needed_halfwidth_(needed_halfwidth) {}

PathSimulator::PathSimulator(const CorrectorEvaluator& table,
                             const SimulationParams& params)
    : table_(table), params_(params) {
    params_.validate();
    const Environment& env = table.environment();
    if (!env.spec().has_abar())
        throw std::logic_error("corrector table lacks a resolved abar");
    abar_ = env.spec().abar;
    step_ = table.quad_step();
    x_grid_lo_ = table.x_of(0);

    const std::size_t n = table.node_count();
    const auto window = required_window(params_);
    if (x_grid_lo_ > window.first || table.x_of(n - 1) < window.second) {
        const double x0 = params_.x_start / params_.epsilon;
        const double need =
            std::max(x0 - window.first, window.second - x0);
        throw WindowEscapeError(need, x_grid_lo_, table.x_of(n - 1));
    }

    h_.resize(n);
    inv_dh_.resize(n - 1);
    phi_.resize(n);
    inv_sig_.resize(n);
    inv_a_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        phi_[i] = table.phi_node(i);
        h_[i] = table.x_of(i) + phi_[i];
        inv_sig_[i] = abar_ / std::sqrt(table.a_node(i));
        inv_a_[i] = 1.0 / table.a_node(i);
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double dh = h_[i + 1] - h_[i];
        // dh = step * abar * avg(1/a) > 0 for any elliptic field.
        if (!(dh > 0.0))
            throw std::runtime_error("harmonic coordinate table not increasing");
        inv_dh_[i] = 1.0 / dh;
    }

    const double micro_per_unit = 1.0 / (params_.epsilon * params_.epsilon * params_.dt_micro);
    checkpoint_steps_.reserve(params_.t_checkpoints.size());
    std::int64_t prev = -1;
    for (double t : params_.t_checkpoints) {
        const std::int64_t steps = std::llround(t * micro_per_unit);
        if (steps <= prev || (steps == 0 && t > 0.0))
            throw std::invalid_argument(
                "checkpoint spacing below one microscopic step; reduce dt_micro");
        checkpoint_steps_.push_back(steps);
        prev = steps;
    }
}

template <class Draw>
PathSample PathSimulator::run(Draw& draw, std::uint64_t recorded_seed) const {
    const double eps = params_.epsilon;
    const double sqrt_dt = std::sqrt(params_.dt_micro);
    const std::size_t last_cell = h_.size() - 2;

    const double x0 = params_.x_start / eps;
    std::size_t c = static_cast<std::size_t>(std::clamp<double>(
        std::floor((x0 - x_grid_lo_) / step_), 0.0, static_cast<double>(last_cell)));
    double frac = (x0 - (x_grid_lo_ + static_cast<double>(c) * step_)) / step_;
    const double phi_x0 = phi_[c] + frac * (phi_[c + 1] - phi_[c]);
    const double y0 = x0 + phi_x0;

    double y = y0;
    double sum_inv_a = 0.0;
    double sum_z = 0.0;
    double max_dev = 0.0;
    frac = (y - h_[c]) * inv_dh_[c];

    PathSample out;
    out.epsilon = eps;
    out.x_start = params_.x_start;
    out.seed = recorded_seed;
    out.states.reserve(checkpoint_steps_.size());

    std::int64_t step_idx = 0;
    for (std::size_t k = 0; k < checkpoint_steps_.size(); ++k) {
        const std::int64_t target = checkpoint_steps_[k];
        for (; step_idx < target; ++step_idx) {
            const double z = draw();
            const double is =
                inv_sig_[c] + frac * (inv_sig_[c + 1] - inv_sig_[c]);
            sum_inv_a += inv_a_[c] + frac * (inv_a_[c + 1] - inv_a_[c]);
            sum_z += z;
            y += is * sqrt_dt * z;
            while (y >= h_[c + 1]) {
                if (c == last_cell) {
                    const double edge = x_grid_lo_ + static_cast<double>(c + 1) * step_;
                    throw WindowEscapeError(1.25 * std::fabs(edge - x0) + 1.0,
                                            x_grid_lo_, edge);
                }
                ++c;
            }
            while (y < h_[c]) {
                if (c == 0)
                    throw WindowEscapeError(1.25 * std::fabs(x_grid_lo_ - x0) + 1.0,
                                            x_grid_lo_,
                                            x_grid_lo_ + static_cast<double>(h_.size() - 1) * step_);
                --c;
            }
            frac = (y - h_[c]) * inv_dh_[c];
            const double x = x_grid_lo_ + (static_cast<double>(c) + frac) * step_;
            const double dev = std::fabs(x - x0);
            if (dev > max_dev) max_dev = dev;
        }

        CheckpointState st;
        st.t = params_.t_checkpoints[k];
        st.t_eff = static_cast<double>(target) * eps * eps * params_.dt_micro;
        const double x = x_grid_lo_ + (static_cast<double>(c) + frac) * step_;
        const double phi_x = phi_[c] + frac * (phi_[c + 1] - phi_[c]);
        st.eps_x = eps * x;
        st.martingale = eps * (y - y0);
        st.corrector_shift = eps * (phi_x0 - phi_x);
        st.quadratic_variation =
            abar_ * abar_ * eps * eps * params_.dt_micro * sum_inv_a;
        st.max_deviation = eps * max_dev;
        st.driving_sum = eps * sqrt_dt * sum_z;
        out.states.push_back(st);
    }
    return out;
}

PathSample PathSimulator::simulate(std::uint64_t path_seed) const {
    NormalSampler draw(path_seed);
    return run(draw, path_seed);
}

PathSample PathSimulator::simulate_with_increments(
    const std::vector<double>& z) const {
    if (z.size() != static_cast<std::size_t>(total_steps()))
        throw std::invalid_argument(
            "increment count must equal total_steps()");
    struct SeqDraw {
        const double* p;
        double operator()() { return *p++; }
    } draw{z.data()};
    return run(draw, 0);
}

PathSample simulate_path(const Environment& env, const SimulationParams& params,
                         std::uint64_t path_seed, double quad_step) {
    CorrectorEvaluator table(env, quad_step);
    PathSimulator sim(table, params);
    return sim.simulate(path_seed);
}

UEpsEstimate estimate_u_eps(const PathSimulator& sim, const InitialDatum& f,
                            std::uint64_t path_master_seed) {
    const auto& p = sim.params();
    const std::size_t n_ck = p.t_checkpoints.size();
    std::vector<std::vector<double>> vals(n_ck);
    for (auto& v : vals) v.reserve(p.n_paths);
    for (std::size_t i = 0; i < p.n_paths; ++i) {
        const PathSample path = sim.simulate(derive_seed(path_master_seed, i));
        for (std::size_t k = 0; k < n_ck; ++k)
            vals[k].push_back(f.value(path.states[k].eps_x));
    }
    UEpsEstimate out;
    out.t = p.t_checkpoints;
    out.u.reserve(n_ck);
    for (std::size_t k = 0; k < n_ck; ++k)
        out.u.push_back(batch_means_ci(vals[k], default_batch_count(p.n_paths)));
    return out;
}

PowerLawFit MomentScalingReport::eps_slope_r(std::size_t t_index) const {
    std::vector<double> ys, ci;
    for (std::size_t k = 0; k < eps_list.size(); ++k) {
        ys.push_back(r_sq[k][t_index].mean);
        ci.push_back(r_sq[k][t_index].half_width);
    }
    return fit_loglog(eps_list, ys, ci);
}

PowerLawFit MomentScalingReport::t_slope_r(std::size_t eps_index) const {
    std::vector<double> ys, ci;
    for (std::size_t j = 0; j < t_list.size(); ++j) {
        ys.push_back(r_sq[eps_index][j].mean);
        ci.push_back(r_sq[eps_index][j].half_width);
    }
    return fit_loglog(t_list, ys, ci);
}

PowerLawFit MomentScalingReport::eps_slope_qv(std::size_t t_index) const {
    std::vector<double> ys, ci;
    for (std::size_t k = 0; k < eps_list.size(); ++k) {
        ys.push_back(qv_err[k][t_index].mean);
        ci.push_back(qv_err[k][t_index].half_width);
    }
    return fit_loglog(eps_list, ys, ci);
}

PowerLawFit MomentScalingReport::t_slope_qv(std::size_t eps_index) const {
    std::vector<double> ys, ci;
    for (std::size_t j = 0; j < t_list.size(); ++j) {
        ys.push_back(qv_err[eps_index][j].mean);
        ci.push_back(qv_err[eps_index][j].half_width);
    }
    return fit_loglog(t_list, ys, ci);
}

MomentScalingReport moment_scaling(const EnvironmentSpec& spec,
                                   const std::vector<double>& eps_list,
                                   const std::vector<double>& t_list,
                                   std::size_t n_env, std::size_t n_paths,
                                   double dt_micro, std::uint64_t seed,
                                   unsigned n_threads) {
    if (eps_list.empty() || t_list.empty())
        throw std::invalid_argument("moment_scaling: empty grid");
    if (n_env < 4) throw std::invalid_argument("moment_scaling: n_env too small");

    EnvironmentSpec resolved = spec;
    resolved.validate();
    if (!resolved.has_abar()) {
        const MeanCI est = estimate_abar(
            resolved, 2000, derive_seed(seed, seed_stream::scratch));
        resolved.abar = est.mean;
        resolved.abar_ci = est.half_width;
    }

    const std::size_t n_eps = eps_list.size();
    const std::size_t n_t = t_list.size();
    // env_means[k][j][e]: per-environment path averages, index order fixed so
    // the reduction is identical for any thread count.
    std::vector<std::vector<std::vector<double>>> r_means(
        n_eps, std::vector<std::vector<double>>(n_t, std::vector<double>(n_env)));
    auto qv_means = r_means;

    parallel_for(n_env, n_threads, [&](std::size_t e) {
        const std::uint64_t env_seed =
            derive_seed(seed, seed_stream::environment, e);
        for (std::size_t k = 0; k < n_eps; ++k) {
            SimulationParams params;
            params.epsilon = eps_list[k];
            params.t_checkpoints = t_list;
            params.dt_micro = dt_micro;
            params.x_start = 0.0;
            params.n_paths = n_paths;
            const auto window = required_window(params);
            const Environment env(resolved, window.first - 1.0,
                                  window.second + 1.0, env_seed);
            const CorrectorEvaluator table(env);
            const PathSimulator sim(table, params);
            std::vector<KahanAccumulator> r_acc(n_t), qv_acc(n_t);
            for (std::size_t p = 0; p < n_paths; ++p) {
                const PathSample path =
                    sim.simulate(derive_seed(seed, seed_stream::path, e, k, p));
                for (std::size_t j = 0; j < n_t; ++j) {
                    const CheckpointState& st = path.states[j];
                    r_acc[j].add(st.corrector_shift * st.corrector_shift);
                    const double d =
                        st.quadratic_variation - resolved.abar * st.t_eff;
                    qv_acc[j].add(d * d);
                }
            }
            for (std::size_t j = 0; j < n_t; ++j) {
                r_means[k][j][e] = r_acc[j].sum() / static_cast<double>(n_paths);
                qv_means[k][j][e] = qv_acc[j].sum() / static_cast<double>(n_paths);
            }
        }
    });

    MomentScalingReport report;
    report.eps_list = eps_list;
    report.t_list = t_list;
    report.r_sq.resize(n_eps);
    report.qv_err.resize(n_eps);
    const std::size_t n_batches = default_batch_count(n_env);
    for (std::size_t k = 0; k < n_eps; ++k) {
        for (std::size_t j = 0; j < n_t; ++j) {
            report.r_sq[k].push_back(batch_means_ci(r_means[k][j], n_batches));
            report.qv_err[k].push_back(batch_means_ci(qv_means[k][j], n_batches));
        }
    }
    return report;
}

MomentScalingReport moment_scaling_R(const EnvironmentSpec& spec,
                                     const std::vector<double>& eps_list,
                                     const std::vector<double>& t_list,
                                     std::size_t n_env, std::size_t n_paths,
                                     double dt_micro, std::uint64_t seed,
                                     unsigned n_threads) {
    return moment_scaling(spec, eps_list, t_list, n_env, n_paths, dt_micro,
                          seed, n_threads);
}

MomentScalingReport moment_scaling_QV(const EnvironmentSpec& spec,
                                      const std::vector<double>& eps_list,
                                      const std::vector<double>& t_list,
                                      std::size_t n_env, std::size_t n_paths,
                                      double dt_micro, std::uint64_t seed,
                                      unsigned n_threads) {
    return moment_scaling(spec, eps_list, t_list, n_env, n_paths, dt_micro,
                          seed, n_threads);
}

QuenchedKsReport quenched_invariance_ks(const Environment& env,
                                        const std::vector<double>& eps_list,
                                        double t, double dt_micro,
                                        std::size_t n_paths, double x_start,
                                        std::uint64_t seed) {
    if (eps_list.empty())
        throw std::invalid_argument("quenched_invariance_ks: no epsilons");
    const CorrectorEvaluator table(env);
    const double abar = env.spec().abar;

    QuenchedKsReport report;
    report.eps_list = eps_list;
    for (std::size_t k = 0; k < eps_list.size(); ++k) {
        SimulationParams params;
        params.epsilon = eps_list[k];
        params.t_checkpoints = {t};
        params.dt_micro = dt_micro;
        params.x_start = x_start;
        params.n_paths = n_paths;
        const PathSimulator sim(table, params);
        std::vector<double> endpoint;
        endpoint.reserve(n_paths);
        for (std::size_t p = 0; p < n_paths; ++p) {
            const PathSample path =
                sim.simulate(derive_seed(seed, seed_stream::path, k, p));
            endpoint.push_back(path.states[0].eps_x);
        }
        report.ks.push_back(ks_test_normal(endpoint, x_start, abar * t));
        report.critical_1pct.push_back(ks_critical_value(n_paths, 0.01));
    }
    return report;
}

ExitProbabilityReport exit_probability_check(const Environment& env,
                                             const SimulationParams& params,
                                             const std::vector<double>& thresholds,
                                             std::uint64_t seed) {
    if (thresholds.size() < 3)
        throw std::invalid_argument("exit_probability_check: need >= 3 thresholds");
    const CorrectorEvaluator table(env);
    const PathSimulator sim(table, params);
    const double t = params.t_final();

    std::vector<std::size_t> hits(thresholds.size(), 0);
    for (std::size_t p = 0; p < params.n_paths; ++p) {
        const PathSample path =
            sim.simulate(derive_seed(seed, seed_stream::path, p));
        const double dev = path.states.back().max_deviation;
        for (std::size_t m = 0; m < thresholds.size(); ++m)
            if (dev >= thresholds[m]) ++hits[m];
    }

    ExitProbabilityReport report;
    report.thresholds = thresholds;
    const double n = static_cast<double>(params.n_paths);
    std::vector<double> xs, ys, sig;
    for (std::size_t m = 0; m < thresholds.size(); ++m) {
        const double p = static_cast<double>(hits[m]) / n;
        report.probability.push_back(p);
        report.ci.push_back(1.96 * std::sqrt(std::max(p * (1.0 - p), 0.0) / n));
        if (hits[m] > 0) {
            xs.push_back(thresholds[m] * thresholds[m] / t);
            ys.push_back(std::log(p));
            // Delta method on ln p with the binomial standard error.
            sig.push_back(std::sqrt((1.0 - p) / (p * n)));
        }
    }
    if (xs.size() < 3)
        throw std::runtime_error(
            "exit_probability_check: too few populated thresholds for a tail fit; "
            "raise n_paths or lower the thresholds");
    report.tail_fit = linear_fit_weighted(xs, ys, sig);
    return report;
}

}  // namespace homog
