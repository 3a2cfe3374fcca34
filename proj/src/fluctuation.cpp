#include "homog1d/fluctuation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "homog1d/corrector.hpp"
#include "homog1d/parallel.hpp"
#include "homog1d/rng.hpp"

namespace homog {

namespace {

void require_same_abar(double sim_abar, double model_abar) {
    if (std::fabs(sim_abar - model_abar) >
        1e-9 * std::max(1.0, std::fabs(model_abar)))
        throw std::invalid_argument(
            "homogenized model and environment disagree on abar; resolve the "
            "spec once and build both from it");
}

// Sample variance of a stored outer sample, plus its mean.
struct OuterVar {
    double mean;
    double var;
};
OuterVar outer_variance(const std::vector<double>& xs) {
    RunningMoments m;
    for (double x : xs) m.add(x);
    return {m.mean(), m.variance()};
}

double outer_covariance(const std::vector<double>& xs,
                        const std::vector<double>& ys) {
    const double mx = pairwise_sum(xs) / static_cast<double>(xs.size());
    const double my = pairwise_sum(ys) / static_cast<double>(ys.size());
    KahanAccumulator acc;
    for (std::size_t i = 0; i < xs.size(); ++i)
        acc.add((xs[i] - mx) * (ys[i] - my));
    return acc.sum() / static_cast<double>(xs.size() - 1);
}

}  // namespace

V1V2Estimate estimate_v1_v2(const PathSimulator& sim, const InitialDatum& f,
                            std::uint64_t path_master_seed) {
    const auto& p = sim.params();
    const double abar = sim.abar();
    const double x = p.x_start;
    const std::size_t n_ck = p.t_checkpoints.size();
    std::vector<std::vector<double>> v1(n_ck), v2(n_ck);
    for (auto& v : v1) v.reserve(p.n_paths);
    for (auto& v : v2) v.reserve(p.n_paths);
    for (std::size_t i = 0; i < p.n_paths; ++i) {
        const PathSample path = sim.simulate(derive_seed(path_master_seed, i));
        for (std::size_t k = 0; k < n_ck; ++k) {
            const CheckpointState& st = path.states[k];
            const double m_arg = x + st.martingale;
            v1[k].push_back(f.d1(m_arg) * st.corrector_shift);
            v2[k].push_back(0.5 * f.d2(m_arg) *
                            (st.quadratic_variation - abar * st.t_eff));
        }
    }
    V1V2Estimate out;
    out.t = p.t_checkpoints;
    const std::size_t nb = default_batch_count(p.n_paths);
    for (std::size_t k = 0; k < n_ck; ++k) {
        out.v1.push_back(batch_means_ci(v1[k], nb));
        out.v2.push_back(batch_means_ci(v2[k], nb));
    }
    return out;
}

EnvFluctuation estimate_env_fluctuation(const PathSimulator& sim,
                                        const HomogenizedModel& hom,
                                        std::uint64_t path_master_seed) {
    require_same_abar(sim.abar(), hom.abar());
    const auto& p = sim.params();
    const InitialDatum& f = hom.datum();
    const double abar = sim.abar();
    const double sigbar = std::sqrt(abar);
    const double x = p.x_start;
    const double sqrt_eps = std::sqrt(p.epsilon);
    const std::size_t n_ck = p.t_checkpoints.size();
    const std::size_t n = p.n_paths;

    std::vector<KahanAccumulator> su(n_ck), sv1(n_ck), sv2(n_ck), sd(n_ck),
        sr(n_ck), sr2(n_ck);
    // Cross moments of the control-coupled difference d across checkpoints
    // (upper triangle including the diagonal).
    std::vector<std::vector<KahanAccumulator>> sdd(n_ck);
    for (auto& row : sdd) row.resize(n_ck);
    std::vector<double> t_eff(n_ck, 0.0);
    std::vector<double> d_path(n_ck);

    for (std::size_t i = 0; i < n; ++i) {
        const PathSample path = sim.simulate(derive_seed(path_master_seed, i));
        for (std::size_t k = 0; k < n_ck; ++k) {
            const CheckpointState& st = path.states[k];
            if (i == 0) t_eff[k] = st.t_eff;
            const double m_arg = x + st.martingale;
            const double fv = f.value(st.eps_x);
            const double cv = f.value(x + sigbar * st.driving_sum);
            const double f1 = f.d1(m_arg) * st.corrector_shift;
            const double f2 = 0.5 * f.d2(m_arg) *
                              (st.quadratic_variation - abar * st.t_eff);
            const double d = fv - cv;
            const double r = d - f1 - f2;
            su[k].add(fv);
            sv1[k].add(f1);
            sv2[k].add(f2);
            sd[k].add(d);
            sr[k].add(r);
            sr2[k].add(r * r);
            d_path[k] = d;
            for (std::size_t j = 0; j <= k; ++j)
                sdd[j][k].add(d_path[j] * d);
        }
    }

    EnvFluctuation out;
    out.t = p.t_checkpoints;
    out.u_eps.resize(n_ck);
    out.v1.resize(n_ck);
    out.v2.resize(n_ck);
    out.v_eps.resize(n_ck);
    out.residual.resize(n_ck);
    out.v_se2.resize(n_ck);
    out.res_se2.resize(n_ck);
    out.v_cov.assign(n_ck, std::vector<double>(n_ck, 0.0));

    const double dn = static_cast<double>(n);
    std::vector<double> d_mean(n_ck);
    for (std::size_t k = 0; k < n_ck; ++k) {
        d_mean[k] = sd[k].sum() / dn;
        // Known-mean shift of the control: E f(x + sigbar*driving) is the
        // homogenized solution at the realized horizon.
        const double shift = hom.u(t_eff[k], x) - hom.u(p.t_checkpoints[k], x);
        out.u_eps[k] = su[k].sum() / dn;
        out.v1[k] = sv1[k].sum() / dn;
        out.v2[k] = sv2[k].sum() / dn;
        out.v_eps[k] = (d_mean[k] + shift) / sqrt_eps;
        const double r_mean = sr[k].sum() / dn;
        out.residual[k] = r_mean + shift;
        const double r_var =
            std::max(0.0, (sr2[k].sum() - dn * r_mean * r_mean) / (dn - 1.0));
        out.res_se2[k] = r_var / dn;
    }
    for (std::size_t j = 0; j < n_ck; ++j) {
        for (std::size_t k = j; k < n_ck; ++k) {
            const double cov =
                (sdd[j][k].sum() - dn * d_mean[j] * d_mean[k]) / (dn - 1.0);
            const double c = cov / dn / p.epsilon;
            out.v_cov[j][k] = c;
            out.v_cov[k][j] = c;
        }
        out.v_se2[j] = std::max(0.0, out.v_cov[j][j]);
    }
    return out;
}

// ---------------------------------------------------------------------------

bool ResidualReport::strictly_decreasing_within_ci() const {
    if (decrease.size() + 1 != normalized.size()) return false;
    for (const MeanCI& d : decrease)
        if (!(d.lower() > 0.0)) return false;
    return true;
}

bool ResidualReport::any_inconclusive() const {
    return std::any_of(inconclusive.begin(), inconclusive.end(),
                       [](bool b) { return b; });
}

ResidualReport residual_check(const EnvironmentSpec& spec,
                              const std::vector<double>& eps_list, double t,
                              double x, const InitialDatum& f,
                              std::size_t n_env, std::size_t n_inner,
                              double dt_micro, std::uint64_t seed,
                              unsigned n_threads) {
    if (eps_list.size() < 3)
        throw std::invalid_argument("residual_check needs >= 3 epsilons");
    for (std::size_t i = 0; i + 1 < eps_list.size(); ++i)
        if (!(eps_list[i + 1] < eps_list[i]))
            throw std::invalid_argument("eps_list must be strictly decreasing");
    if (n_env < 4) throw std::invalid_argument("residual_check needs n_env >= 4");

    EnvironmentSpec resolved = spec;
    resolved.validate();
    if (!resolved.has_abar()) {
        const MeanCI est = estimate_abar(
            resolved, 2000, derive_seed(seed, seed_stream::scratch));
        resolved.abar = est.mean;
        resolved.abar_ci = est.half_width;
    }
    const HomogenizedModel hom(resolved.abar, f);

    const std::size_t n_eps = eps_list.size();
    std::vector<SimulationParams> sp(n_eps);
    for (std::size_t k = 0; k < n_eps; ++k) {
        sp[k].epsilon = eps_list[k];
        sp[k].t_checkpoints = {t};
        sp[k].dt_micro = dt_micro;
        sp[k].x_start = x;
        sp[k].n_paths = n_inner;
        sp[k].validate();
    }
    // One realization per outer index, shared by every epsilon (the window of
    // the smallest epsilon covers the rest), so residuals are positively
    // coupled along the eps axis and their decrease is testable env by env.
    double lo = 0.0, hi = 0.0;
    for (const auto& s : sp) {
        const auto w = required_window(s);
        lo = std::min(lo, w.first);
        hi = std::max(hi, w.second);
    }

    std::vector<std::vector<double>> abs_res(n_eps,
                                             std::vector<double>(n_env, 0.0));
    std::vector<std::vector<double>> se2(n_eps,
                                         std::vector<double>(n_env, 0.0));
    parallel_for(n_env, n_threads, [&](std::size_t e) {
        const Environment env(resolved, lo - 1.0, hi + 1.0,
                              derive_seed(seed, seed_stream::environment, e));
        const CorrectorEvaluator table(env);
        for (std::size_t k = 0; k < n_eps; ++k) {
            const PathSimulator sim(table, sp[k]);
            const EnvFluctuation ef = estimate_env_fluctuation(
                sim, hom, derive_seed(seed, seed_stream::path, e, k));
            abs_res[k][e] = std::fabs(ef.residual[0]);
            se2[k][e] = ef.res_se2[0];
        }
    });

    ResidualReport report;
    report.eps_list = eps_list;
    std::vector<double> raw_mean(n_eps), raw_ci(n_eps);
    std::vector<std::vector<double>> scaled_all(
        n_eps, std::vector<double>(n_env, 0.0));
    const std::size_t nb = default_batch_count(n_env);
    for (std::size_t k = 0; k < n_eps; ++k) {
        const double rt_eps = std::sqrt(eps_list[k]);
        std::vector<double>& scaled = scaled_all[k];
        for (std::size_t e = 0; e < n_env; ++e)
            scaled[e] = abs_res[k][e] / rt_eps;
        MeanCI ci = batch_means_ci(scaled, nb);
        report.normalized.push_back(ci);
        raw_mean[k] = ci.mean * rt_eps;
        raw_ci[k] = ci.half_width * rt_eps;
        const double mean_se2 =
            pairwise_sum(se2[k]) / static_cast<double>(n_env);
        const double inner = std::sqrt(mean_se2) / rt_eps;
        report.inner_se.push_back(inner);
        const bool weak = !(inner < 0.5 * ci.mean);
        report.inconclusive.push_back(weak);
        // Paths needed to push the inner error to a quarter of the signal.
        const double target = 0.25 * std::max(ci.mean, 1e-300);
        const double factor = (inner / target) * (inner / target);
        report.suggested_n_inner.push_back(
            weak ? static_cast<std::size_t>(
                       std::ceil(static_cast<double>(n_inner) * factor))
                 : n_inner);
    }
    // Shared environments couple the residuals along eps, so the decrease is
    // tested on per-env paired differences rather than independent CIs.
    for (std::size_t k = 0; k + 1 < n_eps; ++k) {
        std::vector<double> diff(n_env);
        for (std::size_t e = 0; e < n_env; ++e)
            diff[e] = scaled_all[k][e] - scaled_all[k + 1][e];
        report.decrease.push_back(batch_means_ci(diff, nb));
    }
    report.slope = fit_loglog(eps_list, raw_mean, raw_ci);
    return report;
}

// ---------------------------------------------------------------------------

CltReport clt_test(const EnvironmentSpec& spec, const FluctuationParams& fp,
                   const LimitField& limit, std::uint64_t seed) {
    if (!spec.has_abar())
        throw std::invalid_argument(
            "resolve abar on the spec before running clt_test");
    require_same_abar(spec.abar, limit.abar());
    if (fp.n_env < 8)
        throw std::invalid_argument("clt_test needs at least 8 environments");
    if (fp.t_checkpoints.empty() || !(fp.t_checkpoints.front() > 0.0))
        throw std::invalid_argument("clt_test checkpoints must be positive");

    SimulationParams sp;
    sp.epsilon = fp.epsilon;
    sp.t_checkpoints = fp.t_checkpoints;
    sp.dt_micro = fp.dt_micro;
    sp.x_start = fp.x;
    sp.n_paths = fp.n_inner;
    sp.validate();
    const auto window = required_window(sp);

    const std::size_t n_ck = fp.t_checkpoints.size();
    const std::size_t n_env = fp.n_env;
    std::vector<std::vector<double>> v(n_ck, std::vector<double>(n_env, 0.0));
    std::vector<std::vector<double>> se2(n_ck,
                                         std::vector<double>(n_env, 0.0));
    std::vector<double> cross(n_env, 0.0);  // inner cov first vs last

    parallel_for(n_env, fp.n_threads, [&](std::size_t e) {
        const Environment env(spec, window.first - 1.0, window.second + 1.0,
                              derive_seed(seed, seed_stream::environment, e));
        const CorrectorEvaluator table(env);
        const PathSimulator sim(table, sp);
        const EnvFluctuation ef = estimate_env_fluctuation(
            sim, limit.model(), derive_seed(seed, seed_stream::path, e));
        for (std::size_t k = 0; k < n_ck; ++k) {
            v[k][e] = ef.v_eps[k];
            se2[k][e] = ef.v_se2[k];
        }
        cross[e] = ef.v_cov.front().back();
    });

    CltReport report;
    report.eps = fp.epsilon;
    report.x = fp.x;
    report.n_env = n_env;
    report.t = fp.t_checkpoints;

    std::vector<KernelTable> tabs;
    tabs.reserve(n_ck);
    for (double t : fp.t_checkpoints)
        tabs.push_back(limit.kernel_table(t, fp.x, limit.default_grid(t, fp.x)));

    std::vector<double> raw_var(n_ck), mean_se2(n_ck);
    for (std::size_t k = 0; k < n_ck; ++k) {
        raw_var[k] = outer_variance(v[k]).var;
        mean_se2[k] = pairwise_sum(se2[k]) / static_cast<double>(n_env);
        report.var_empirical.push_back(raw_var[k] - mean_se2[k]);
        report.var_limit.push_back(tabs[k].variance);
    }

    const std::size_t main_k = n_ck - 1;
    report.inner_inflation =
        report.var_empirical[main_k] > 0.0
            ? mean_se2[main_k] / report.var_empirical[main_k]
            : 0.0;
    report.var_ratio = report.var_limit[main_k] > 0.0
                           ? report.var_empirical[main_k] /
                                 report.var_limit[main_k]
                           : 0.0;
    const double outer_sd =
        std::sqrt(2.0 / static_cast<double>(n_env - 1)) * raw_var[main_k];
    report.var_ratio_ci = report.var_limit[main_k] > 0.0
                              ? 1.96 * outer_sd / report.var_limit[main_k]
                              : 0.0;
    report.normality = anderson_darling_normality(v[main_k]);
    report.v_samples = v[main_k];

    if (n_ck >= 2) {
        const double raw_cov = outer_covariance(v.front(), v.back());
        const double mean_cross =
            pairwise_sum(cross) / static_cast<double>(n_env);
        report.cov_empirical = raw_cov - mean_cross;
        report.cov_limit = covariance_v(tabs.front(), tabs.back());
        report.cov_ratio = report.cov_limit > 0.0
                               ? report.cov_empirical / report.cov_limit
                               : 0.0;
    }

    report.var_nondecreasing_in_t = true;
    for (std::size_t k = 0; k + 1 < n_ck; ++k) {
        const double slack =
            2.0 * std::sqrt(2.0 / static_cast<double>(n_env - 1)) *
            (raw_var[k] + raw_var[k + 1]);
        if (report.var_empirical[k + 1] < report.var_empirical[k] - slack)
            report.var_nondecreasing_in_t = false;
    }
    return report;
}

// ---------------------------------------------------------------------------

WeakAverageReport weak_average_test(const EnvironmentSpec& spec,
                                    const FluctuationParams& fp,
                                    const LimitField& limit,
                                    const InitialDatum& g,
                                    std::size_t n_nodes, double h_w,
                                    std::uint64_t seed) {
    if (!spec.has_abar())
        throw std::invalid_argument(
            "resolve abar on the spec before running weak_average_test");
    require_same_abar(spec.abar, limit.abar());
    if (fp.t_checkpoints.size() != 1 || !(fp.t_checkpoints[0] > 0.0))
        throw std::invalid_argument(
            "weak_average_test uses exactly one positive checkpoint time");
    if (n_nodes < 9)
        throw std::invalid_argument("weak_average_test needs >= 9 nodes");
    if (fp.n_env < 8)
        throw std::invalid_argument(
            "weak_average_test needs at least 8 environments");
    const double r = g.support_radius();
    if (!std::isfinite(r) || !(r > 0.0))
        throw std::invalid_argument(
            "weak_average_test needs a compactly supported test function");
    const double spacing = 2.0 * r / static_cast<double>(n_nodes - 1);
    const double cells_per_gap = spacing / h_w;
    if (std::fabs(cells_per_gap - std::round(cells_per_gap)) > 1e-9)
        throw std::invalid_argument(
            "h_w must divide the node spacing so nodes line up with noise "
            "cell edges");

    const double t = fp.t_checkpoints[0];

    WeakAverageReport report;
    report.t = t;
    report.eps = fp.epsilon;
    report.n_env = fp.n_env;
    for (std::size_t j = 0; j < n_nodes; ++j) {
        const double node = -r + spacing * static_cast<double>(j);
        const double trap = (j == 0 || j + 1 == n_nodes) ? 0.5 : 1.0;
        report.nodes.push_back(node);
        report.weights.push_back(trap * spacing * g.value(node));
    }

    // Limit side: one shared noise grid covering every node, combined kernel
    // g_bar(cell) = sum_j w_j g_avg_j(cell); the double quadrature collapses
    // to sum g_bar^2 h.
    const double pad =
        8.0 * std::sqrt(limit.abar() * t +
                        limit.model().datum().spread() *
                            limit.model().datum().spread()) +
        2.0 * h_w;
    const WhiteNoiseGrid grid(h_w, -r - pad, r + pad);
    std::vector<double> gbar(grid.n_cells, 0.0);
    for (std::size_t j = 0; j < n_nodes; ++j) {
        if (report.weights[j] == 0.0) continue;
        const KernelTable tb = limit.kernel_table(t, report.nodes[j], grid);
        for (std::size_t c = 0; c < grid.n_cells; ++c)
            gbar[c] += report.weights[j] * tb.g_avg[c];
    }
    KahanAccumulator lim;
    for (double v : gbar) lim.add(v * v * h_w);
    report.var_limit = lim.sum();

    // Empirical side: one environment window covering every node's path
    // range; independent inner ensembles per node.
    std::vector<SimulationParams> sp(n_nodes);
    double lo = 0.0, hi = 0.0;
    for (std::size_t j = 0; j < n_nodes; ++j) {
        sp[j].epsilon = fp.epsilon;
        sp[j].t_checkpoints = {t};
        sp[j].dt_micro = fp.dt_micro;
        sp[j].x_start = report.nodes[j];
        sp[j].n_paths = fp.n_inner;
        sp[j].validate();
        const auto w = required_window(sp[j]);
        lo = std::min(lo, w.first);
        hi = std::max(hi, w.second);
    }

    const std::size_t n_env = fp.n_env;
    std::vector<double> scalar(n_env, 0.0), se2(n_env, 0.0);
    parallel_for(n_env, fp.n_threads, [&](std::size_t e) {
        const Environment env(spec, lo - 1.0, hi + 1.0,
                              derive_seed(seed, seed_stream::environment, e));
        const CorrectorEvaluator table(env);
        KahanAccumulator acc, noise;
        for (std::size_t j = 0; j < n_nodes; ++j) {
            if (report.weights[j] == 0.0) continue;
            const PathSimulator sim(table, sp[j]);
            const EnvFluctuation ef = estimate_env_fluctuation(
                sim, limit.model(),
                derive_seed(seed, seed_stream::path, e, j));
            acc.add(report.weights[j] * ef.v_eps[0]);
            noise.add(report.weights[j] * report.weights[j] * ef.v_se2[0]);
        }
        scalar[e] = acc.sum();
        se2[e] = noise.sum();
    });

    const OuterVar ov = outer_variance(scalar);
    const double mean_se2 = pairwise_sum(se2) / static_cast<double>(n_env);
    report.var_empirical = ov.var - mean_se2;
    report.ratio = report.var_limit > 0.0
                       ? report.var_empirical / report.var_limit
                       : 0.0;
    report.ratio_ci =
        report.var_limit > 0.0
            ? 1.96 * std::sqrt(2.0 / static_cast<double>(n_env - 1)) * ov.var /
                  report.var_limit
            : 0.0;
    report.normality = anderson_darling_normality(scalar);
    report.samples = scalar;
    return report;
}

}  // namespace homog
