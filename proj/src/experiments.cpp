#include "homog1d/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "homog1d/corrector.hpp"
#include "homog1d/diffusion.hpp"
#include "homog1d/fluctuation.hpp"
#include "homog1d/homogenized.hpp"
#include "homog1d/limit_field.hpp"
#include "homog1d/rng.hpp"
#include "homog1d/stats.hpp"
#include "homog1d/white_noise.hpp"

namespace homog {

namespace {

using nlohmann::json;

const std::set<std::string> kExperiments = {
    "env-stats",   "corrector-growth", "invariance",
    "moment-scaling", "fluctuation-clt", "limit-identity"};

[[noreturn]] void bad_field(const std::string& field, const std::string& why) {
    throw std::invalid_argument("config field '" + field + "': " + why);
}

void check_keys(const json& obj, const std::string& block,
                const std::set<std::string>& allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key()))
            bad_field(block.empty() ? it.key() : block + "." + it.key(),
                      "unknown key");
    }
}

double take_number(const json& obj, const std::string& block,
                   const std::string& key, double fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number()) bad_field(block + "." + key, "expected a number");
    return v.get<double>();
}

std::size_t take_count(const json& obj, const std::string& block,
                       const std::string& key, std::size_t fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number_unsigned() || v.get<std::uint64_t>() == 0)
        bad_field(block + "." + key, "expected a positive integer");
    return v.get<std::size_t>();
}

std::vector<double> take_list(const json& obj, const std::string& block,
                              const std::string& key,
                              std::vector<double> fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_array()) bad_field(block + "." + key, "expected an array");
    std::vector<double> out;
    for (const json& e : v) {
        if (!e.is_number()) bad_field(block + "." + key, "expected numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

InitialDatum parse_datum(const json& obj) {
    check_keys(obj, "datum",
               {"kind", "width", "halfwidth", "height", "core_halfwidth",
                "ramp_width"});
    if (!obj.contains("kind") || !obj.at("kind").is_string())
        bad_field("datum.kind", "expected a string");
    const std::string kind = obj.at("kind").get<std::string>();
    try {
        if (kind == "gaussian")
            return InitialDatum::gaussian(
                take_number(obj, "datum", "width", 1.0));
        if (kind == "compact_bump")
            return InitialDatum::compact_bump(
                take_number(obj, "datum", "halfwidth", 1.0),
                take_number(obj, "datum", "height", 1.0));
        if (kind == "plateau")
            return InitialDatum::plateau(
                take_number(obj, "datum", "core_halfwidth", 1.0),
                take_number(obj, "datum", "ramp_width", 0.5));
    } catch (const std::invalid_argument& e) {
        bad_field("datum", e.what());
    }
    bad_field("datum.kind", "must be gaussian, compact_bump, or plateau");
}

std::string datum_kind_name(const InitialDatum& d) {
    switch (d.kind()) {
        case InitialDatum::Kind::gaussian_bump: return "gaussian";
        case InitialDatum::Kind::smooth_compact_bump: return "compact_bump";
        default: return "plateau";
    }
}

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

// Shortest round-trip decimal representation; keeps CSV both exact and
// stable across runs.
std::string num(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// Deterministic cost model (reference machine, 8 workers).  The constants
// are calibrated once and frozen so every host projects the same runtime and
// the budget refusal cannot flap between machines.

constexpr double kMicroStepSec = 30e-9;   // one path micro-step
constexpr double kTableNodeSec = 1.2e-6;  // one corrector table node
constexpr double kRealizationSec = 1.3e-4;  // one env-stats realization
constexpr double kKernelCellSec = 2.8e-4;   // one limit kernel table cell
constexpr double kNoiseCellSec = 12e-9;     // one noise cell per draw
constexpr double kWorkers = 8.0;

double corrector_nodes(double halfwidth, double quad_step = 0.01) {
    return 2.0 * halfwidth / quad_step;
}

double seconds_env_stats(const ExperimentConfig& c) {
    return static_cast<double>(c.n_realizations) * kRealizationSec;
}

double seconds_corrector_growth(const ExperimentConfig& c) {
    const double x_max =
        c.x_list.empty() ? 80.0 : *std::max_element(c.x_list.begin(),
                                                    c.x_list.end());
    // phi and psi reports each rebuild tables per realization.
    return 2.0 * static_cast<double>(c.n_realizations) *
           corrector_nodes(x_max + 1.0) * kTableNodeSec;
}

double sum_inverse_eps_sq(const std::vector<double>& eps) {
    double s = 0.0;
    for (double e : eps) s += 1.0 / (e * e);
    return s;
}

double seconds_invariance(const ExperimentConfig& c) {
    const double t = c.t_list.back();
    const double steps =
        static_cast<double>(c.n_paths) * t / c.dt_micro * sum_inverse_eps_sq(c.eps_list);
    const double eps_min = *std::min_element(c.eps_list.begin(), c.eps_list.end());
    const double window = 2.0 * (std::fabs(c.x_start) + 8.0 * std::sqrt(t)) / eps_min;
    return steps * kMicroStepSec + corrector_nodes(window / 2.0 + 1.0) * kTableNodeSec;
}

double seconds_moment_scaling(const ExperimentConfig& c) {
    const double t_max = c.t_list.back();
    const double steps = static_cast<double>(c.n_env) *
                         static_cast<double>(c.n_paths) * t_max / c.dt_micro *
                         sum_inverse_eps_sq(c.eps_list);
    const double eps_min = *std::min_element(c.eps_list.begin(), c.eps_list.end());
    const double halfwidth = (std::fabs(c.x_start) + 8.0 * std::sqrt(t_max)) / eps_min + 1.0;
    return steps * kMicroStepSec +
           static_cast<double>(c.n_env) * corrector_nodes(halfwidth) * kTableNodeSec;
}

double seconds_fluctuation_clt(const ExperimentConfig& c) {
    const double t_max = c.t_list.back();
    const double eps = *std::min_element(c.eps_list.begin(), c.eps_list.end());
    const double steps = static_cast<double>(c.n_env) *
                         static_cast<double>(c.n_inner) * t_max /
                         (eps * eps * c.dt_micro);
    const double halfwidth = (std::fabs(c.x_start) + 8.0 * std::sqrt(t_max)) / eps + 1.0;
    return steps * kMicroStepSec +
           static_cast<double>(c.n_env) * corrector_nodes(halfwidth) * kTableNodeSec;
}

double seconds_limit_identity(const ExperimentConfig& c) {
    const double t = c.t_list.back();
    // Kernel table over the default grid, one sweep per checkpoint quantity.
    const double extent =
        2.0 * (std::fabs(c.x_start) + 8.0 * std::sqrt(0.7 * t + 1.0) + 0.02);
    const double cells = extent / 0.01;
    const double draws = static_cast<double>(c.n_draws);
    const double ito_paths = 200.0 * (t / 1e-4 + t / 2.5e-5) * 60e-9;
    const double fk = draws * (cells * kNoiseCellSec + 500.0 * (t / 1e-3) * kMicroStepSec);
    return cells * kKernelCellSec + draws * cells * kNoiseCellSec + ito_paths + fk;
}

double seconds_total(const ExperimentConfig& c) {
    if (c.experiment == "env-stats") return seconds_env_stats(c);
    if (c.experiment == "corrector-growth") return seconds_corrector_growth(c);
    if (c.experiment == "invariance") return seconds_invariance(c);
    if (c.experiment == "moment-scaling") return seconds_moment_scaling(c);
    if (c.experiment == "fluctuation-clt") return seconds_fluctuation_clt(c);
    return seconds_limit_identity(c);
}

// ---------------------------------------------------------------------------
// Per-experiment drivers.  Each returns the JSON results block plus CSV
// header and rows.

struct Artifacts {
    json results;
    std::string csv_header;
    std::vector<std::string> csv_rows;
};

json mean_ci_json(const MeanCI& m) {
    return json{{"mean", m.mean}, {"ci", m.half_width}, {"n", m.n}};
}

json fit_json(const PowerLawFit& f) {
    return json{{"slope", f.slope},
                {"intercept", f.intercept},
                {"slope_stderr", f.slope_stderr},
                {"r_squared", f.r_squared}};
}

EnvironmentSpec resolved_spec(const ExperimentConfig& cfg, bool need_rhat0) {
    EnvironmentSpec spec = cfg.environment;
    if (spec.has_abar() && (!need_rhat0 || spec.has_rhat0())) return spec;
    return with_ensemble_stats(
        spec, 2000, derive_seed(cfg.master_seed, seed_stream::scratch));
}

Artifacts run_env_stats(const ExperimentConfig& cfg) {
    const MeanCI abar = estimate_abar(
        cfg.environment, cfg.n_realizations,
        derive_seed(cfg.master_seed, seed_stream::estimator, 0));
    EnvironmentSpec spec = cfg.environment;
    spec.abar = abar.mean;
    spec.abar_ci = abar.half_width;
    const CovarianceEstimate cov = estimate_covariance(
        spec, cfg.n_realizations,
        derive_seed(cfg.master_seed, seed_stream::estimator, 1));
    Artifacts art;
    art.results = {{"abar", mean_ci_json(abar)},
                   {"rhat0", mean_ci_json(cov.rhat0)},
                   {"degenerate", cfg.environment.degenerate()},
                   {"constant_value", cfg.environment.constant_value()}};
    art.csv_header = "lag,covariance,ci";
    for (std::size_t i = 0; i < cov.lag.size(); ++i)
        art.csv_rows.push_back(num(cov.lag[i]) + "," + num(cov.value[i]) +
                               "," + num(cov.ci[i]));
    return art;
}

Artifacts run_corrector_growth(const ExperimentConfig& cfg) {
    std::vector<double> xs = cfg.x_list;
    if (xs.size() < 3) xs = {5.0, 10.0, 20.0, 40.0, 80.0};
    const EnvironmentSpec spec = resolved_spec(cfg, true);
    const GrowthReport phi = moment_growth(
        spec, xs, cfg.n_realizations, CorrectorKind::phi,
        derive_seed(cfg.master_seed, seed_stream::estimator, 2));
    const GrowthReport psi = moment_growth(
        spec, xs, cfg.n_realizations, CorrectorKind::psi,
        derive_seed(cfg.master_seed, seed_stream::estimator, 3));
    Artifacts art;
    art.results = {{"abar", spec.abar},
                   {"rhat0", spec.rhat0},
                   {"degenerate", phi.degenerate},
                   {"phi_fit", fit_json(phi.fit)},
                   {"psi_fit", fit_json(psi.fit)},
                   {"phi_normalized_level", phi.normalized_level}};
    art.csv_header = "x,phi_sq,phi_ci,psi_sq,psi_ci";
    for (std::size_t i = 0; i < xs.size(); ++i)
        art.csv_rows.push_back(
            num(xs[i]) + "," + num(phi.second_moment[i].mean) + "," +
            num(phi.second_moment[i].half_width) + "," +
            num(psi.second_moment[i].mean) + "," +
            num(psi.second_moment[i].half_width));
    return art;
}

Artifacts run_invariance(const ExperimentConfig& cfg) {
    const EnvironmentSpec spec = resolved_spec(cfg, false);
    const double t = cfg.t_list.back();
    const double eps_min =
        *std::min_element(cfg.eps_list.begin(), cfg.eps_list.end());
    SimulationParams widest;
    widest.epsilon = eps_min;
    widest.t_checkpoints = {t};
    widest.dt_micro = cfg.dt_micro;
    widest.x_start = cfg.x_start;
    widest.n_paths = cfg.n_paths;
    const auto w = required_window(widest);
    const Environment env(
        spec, w.first - 1.0, w.second + 1.0,
        derive_seed(cfg.master_seed, seed_stream::environment, 0));
    const QuenchedKsReport r = quenched_invariance_ks(
        env, cfg.eps_list, t, cfg.dt_micro, cfg.n_paths, cfg.x_start,
        derive_seed(cfg.master_seed, seed_stream::estimator, 4));
    Artifacts art;
    json per_eps = json::array();
    for (std::size_t k = 0; k < r.eps_list.size(); ++k)
        per_eps.push_back({{"epsilon", r.eps_list[k]},
                           {"ks", r.ks[k].statistic},
                           {"p_value", r.ks[k].p_value},
                           {"critical_1pct", r.critical_1pct[k]}});
    art.results = {{"abar", spec.abar}, {"t", t}, {"per_epsilon", per_eps}};
    art.csv_header = "epsilon,ks_statistic,p_value,critical_1pct";
    for (std::size_t k = 0; k < r.eps_list.size(); ++k)
        art.csv_rows.push_back(num(r.eps_list[k]) + "," +
                               num(r.ks[k].statistic) + "," +
                               num(r.ks[k].p_value) + "," +
                               num(r.critical_1pct[k]));
    return art;
}

Artifacts run_moment_scaling(const ExperimentConfig& cfg) {
    const MomentScalingReport r = moment_scaling(
        cfg.environment, cfg.eps_list, cfg.t_list, cfg.n_env, cfg.n_paths,
        cfg.dt_micro, cfg.master_seed, cfg.threads);
    Artifacts art;
    json eps_slopes_r = json::array(), t_slopes_r = json::array();
    json eps_slopes_qv = json::array(), t_slopes_qv = json::array();
    const bool degenerate = cfg.environment.degenerate();
    // Slopes only exist along directions with enough grid points for a fit.
    if (!degenerate && cfg.eps_list.size() >= 3) {
        for (std::size_t j = 0; j < cfg.t_list.size(); ++j) {
            eps_slopes_r.push_back(
                {{"t", cfg.t_list[j]}, {"fit", fit_json(r.eps_slope_r(j))}});
            eps_slopes_qv.push_back(
                {{"t", cfg.t_list[j]}, {"fit", fit_json(r.eps_slope_qv(j))}});
        }
    }
    if (!degenerate && cfg.t_list.size() >= 3) {
        for (std::size_t k = 0; k < cfg.eps_list.size(); ++k) {
            t_slopes_r.push_back({{"epsilon", cfg.eps_list[k]},
                                  {"fit", fit_json(r.t_slope_r(k))}});
            t_slopes_qv.push_back({{"epsilon", cfg.eps_list[k]},
                                   {"fit", fit_json(r.t_slope_qv(k))}});
        }
    }
    art.results = {{"degenerate", degenerate},
                   {"eps_slopes_r", eps_slopes_r},
                   {"t_slopes_r", t_slopes_r},
                   {"eps_slopes_qv", eps_slopes_qv},
                   {"t_slopes_qv", t_slopes_qv}};
    art.csv_header = "epsilon,t,r_sq,r_ci,qv_err,qv_ci";
    for (std::size_t k = 0; k < cfg.eps_list.size(); ++k)
        for (std::size_t j = 0; j < cfg.t_list.size(); ++j)
            art.csv_rows.push_back(
                num(cfg.eps_list[k]) + "," + num(cfg.t_list[j]) + "," +
                num(r.r_sq[k][j].mean) + "," + num(r.r_sq[k][j].half_width) +
                "," + num(r.qv_err[k][j].mean) + "," +
                num(r.qv_err[k][j].half_width));
    return art;
}

Artifacts run_fluctuation_clt(const ExperimentConfig& cfg) {
    const EnvironmentSpec spec = resolved_spec(cfg, true);
    const HomogenizedModel hom(spec.abar, cfg.datum);
    const LimitField field(hom, spec.rhat0);
    FluctuationParams fp;
    fp.epsilon = *std::min_element(cfg.eps_list.begin(), cfg.eps_list.end());
    fp.t_checkpoints = cfg.t_list;
    fp.x = cfg.x_start;
    fp.dt_micro = cfg.dt_micro;
    fp.n_env = cfg.n_env;
    fp.n_inner = cfg.n_inner;
    fp.n_threads = cfg.threads;
    const CltReport r = clt_test(
        spec, fp, field,
        derive_seed(cfg.master_seed, seed_stream::estimator, 5));
    Artifacts art;
    art.results = {{"epsilon", r.eps},
                   {"x", r.x},
                   {"t", r.t},
                   {"n_env", r.n_env},
                   {"var_empirical", r.var_empirical},
                   {"var_limit", r.var_limit},
                   {"variance_ratio", r.var_ratio},
                   {"variance_ratio_ci", r.var_ratio_ci},
                   {"inner_inflation", r.inner_inflation},
                   {"normality_statistic", r.normality.statistic},
                   {"normality_p_value", r.normality.p_value},
                   {"cov_empirical", r.cov_empirical},
                   {"cov_limit", r.cov_limit},
                   {"cov_ratio", r.cov_ratio},
                   {"var_nondecreasing_in_t", r.var_nondecreasing_in_t}};
    art.csv_header = "index,v_eps";
    for (std::size_t i = 0; i < r.v_samples.size(); ++i)
        art.csv_rows.push_back(std::to_string(i) + "," + num(r.v_samples[i]));
    return art;
}

Artifacts run_limit_identity(const ExperimentConfig& cfg) {
    const EnvironmentSpec spec = resolved_spec(cfg, true);
    const HomogenizedModel hom(spec.abar, cfg.datum);
    const LimitField field(hom, spec.rhat0);
    const double t = cfg.t_list.back();
    const double x = cfg.x_start;
    const WhiteNoiseGrid grid = field.default_grid(t, x);
    const KernelTable table = field.kernel_table(t, x, grid);

    const std::uint64_t seed =
        derive_seed(cfg.master_seed, seed_stream::estimator, 6);
    double max_defect = 0.0;
    KahanAccumulator sq;
    Artifacts art;
    art.csv_header = "draw,v_sample,identity_defect";
    for (std::size_t i = 0; i < cfg.n_draws; ++i) {
        const NoisePath noise(grid, derive_seed(seed, seed_stream::noise, i));
        const double v = sample_v(table, noise);
        const ComponentSample c = sample_components(table, noise);
        const double defect = std::fabs(combine_components(table, c) - v);
        max_defect = std::max(max_defect, defect);
        sq.add(v * v);
        art.csv_rows.push_back(std::to_string(i) + "," + num(v) + "," +
                               num(defect));
    }
    const double rms =
        std::sqrt(sq.sum() / static_cast<double>(cfg.n_draws));

    json ito = json::array();
    for (double dt : {1e-4, 2.5e-5}) {
        const ItoIdentityReport ir = ito_identity_check(
            field, t, dt, 0.01, 200,
            derive_seed(cfg.master_seed, seed_stream::estimator, 7));
        ito.push_back({{"dt", ir.dt},
                       {"h_w", ir.h_w},
                       {"bin_width", ir.bin_width},
                       {"relative_rms", ir.relative_rms}});
    }
    const FkV3Report fk = feynman_kac_v3(
        field, table, cfg.n_draws, 500, 1e-3,
        derive_seed(cfg.master_seed, seed_stream::estimator, 8));

    art.results = {{"t", t},
                   {"x", x},
                   {"abar", spec.abar},
                   {"rhat0", spec.rhat0},
                   {"variance_v", table.variance},
                   {"identity_max_defect", max_defect},
                   {"identity_rms_v", rms},
                   {"identity_defect_over_rms", rms > 0.0 ? max_defect / rms : 0.0},
                   {"ito", ito},
                   {"fk_var_quadrature", fk.var_quadrature},
                   {"fk_var_path_mc", fk.var_fk},
                   {"fk_var_stderr", fk.var_fk_stderr},
                   {"fk_ratio", fk.ratio}};
    return art;
}

}  // namespace

void ExperimentConfig::validate() const {
    if (!kExperiments.count(experiment))
        bad_field("experiment", "unknown experiment '" + experiment + "'");
    if (!seed_set)
        bad_field("master_seed", "required (no wall-clock seeding)");
    if (threads == 0) bad_field("threads", "must be positive");
    try {
        environment.validate();
    } catch (const std::invalid_argument& e) {
        bad_field("environment", e.what());
    }
    if (!(dt_micro > 0.0) || dt_micro > 1e-2)
        bad_field("simulation.dt_micro", "must lie in (0, 1e-2]");
    if (!std::isfinite(x_start)) bad_field("simulation.x_start", "must be finite");
    if (eps_list.empty()) bad_field("grids.eps_list", "must be nonempty");
    for (double e : eps_list)
        if (!(e > 0.0) || e > 1.0)
            bad_field("grids.eps_list", "entries must lie in (0, 1]");
    if (t_list.empty()) bad_field("grids.t_list", "must be nonempty");
    double prev = 0.0;
    for (double t : t_list) {
        if (!(t > prev))
            bad_field("grids.t_list",
                      "entries must be positive and strictly increasing");
        prev = t;
    }
    for (double x : x_list)
        if (!std::isfinite(x)) bad_field("grids.x_list", "entries must be finite");
}

std::string ExperimentConfig::canonical_json() const {
    json j;
    j["experiment"] = experiment;
    j["master_seed"] = master_seed;
    j["environment"] = {{"lambda", environment.lambda},
                        {"noise_amplitude", environment.noise_amplitude},
                        {"lattice_spacing", environment.lattice_spacing},
                        {"kernel_radius", environment.kernel_radius},
                        {"squash_shape", environment.squash_shape}};
    j["simulation"] = {{"dt_micro", dt_micro}, {"x_start", x_start}};
    j["datum"] = {{"kind", datum_kind_name(datum)},
                  {"param1", datum.param1()},
                  {"param2", datum.param2()}};
    j["grids"] = {{"eps_list", eps_list}, {"t_list", t_list}, {"x_list", x_list}};
    j["budget"] = {{"n_env", n_env},
                   {"n_paths", n_paths},
                   {"n_inner", n_inner},
                   {"n_realizations", n_realizations},
                   {"n_draws", n_draws}};
    return j.dump();
}

std::string ExperimentConfig::hash16() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(canonical_json())));
    return std::string(buf);
}

ExperimentConfig parse_config_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config is not valid JSON: ") +
                                    e.what());
    }
    if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
    check_keys(j, "",
               {"experiment", "master_seed", "out_dir", "threads",
                "environment", "simulation", "datum", "grids", "budget"});

    ExperimentConfig cfg;
    if (j.contains("experiment")) {
        if (!j.at("experiment").is_string())
            bad_field("experiment", "expected a string");
        cfg.experiment = j.at("experiment").get<std::string>();
    }
    if (j.contains("master_seed")) {
        if (!j.at("master_seed").is_number_unsigned())
            bad_field("master_seed", "expected a nonnegative integer");
        cfg.master_seed = j.at("master_seed").get<std::uint64_t>();
        cfg.seed_set = true;
    }
    if (j.contains("out_dir")) {
        if (!j.at("out_dir").is_string())
            bad_field("out_dir", "expected a string");
        cfg.out_dir = j.at("out_dir").get<std::string>();
    }
    if (j.contains("threads")) {
        if (!j.at("threads").is_number_unsigned())
            bad_field("threads", "expected a positive integer");
        cfg.threads = j.at("threads").get<unsigned>();
    }
    if (j.contains("environment")) {
        const json& env = j.at("environment");
        check_keys(env, "environment",
                   {"lambda", "noise_amplitude", "lattice_spacing",
                    "kernel_radius", "squash_shape"});
        cfg.environment.lambda =
            take_number(env, "environment", "lambda", cfg.environment.lambda);
        cfg.environment.noise_amplitude = take_number(
            env, "environment", "noise_amplitude", cfg.environment.noise_amplitude);
        cfg.environment.lattice_spacing = take_number(
            env, "environment", "lattice_spacing", cfg.environment.lattice_spacing);
        cfg.environment.kernel_radius = take_number(
            env, "environment", "kernel_radius", cfg.environment.kernel_radius);
        cfg.environment.squash_shape = take_number(
            env, "environment", "squash_shape", cfg.environment.squash_shape);
    }
    if (j.contains("simulation")) {
        const json& sim = j.at("simulation");
        check_keys(sim, "simulation", {"dt_micro", "x_start"});
        cfg.dt_micro = take_number(sim, "simulation", "dt_micro", cfg.dt_micro);
        cfg.x_start = take_number(sim, "simulation", "x_start", cfg.x_start);
    }
    if (j.contains("datum")) cfg.datum = parse_datum(j.at("datum"));
    if (j.contains("grids")) {
        const json& g = j.at("grids");
        check_keys(g, "grids", {"eps_list", "t_list", "x_list"});
        cfg.eps_list = take_list(g, "grids", "eps_list", cfg.eps_list);
        cfg.t_list = take_list(g, "grids", "t_list", cfg.t_list);
        cfg.x_list = take_list(g, "grids", "x_list", cfg.x_list);
    }
    if (j.contains("budget")) {
        const json& b = j.at("budget");
        check_keys(b, "budget",
                   {"n_env", "n_paths", "n_inner", "n_realizations", "n_draws"});
        cfg.n_env = take_count(b, "budget", "n_env", cfg.n_env);
        cfg.n_paths = take_count(b, "budget", "n_paths", cfg.n_paths);
        cfg.n_inner = take_count(b, "budget", "n_inner", cfg.n_inner);
        cfg.n_realizations =
            take_count(b, "budget", "n_realizations", cfg.n_realizations);
        cfg.n_draws = take_count(b, "budget", "n_draws", cfg.n_draws);
    }
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_json(buf.str());
}

double projected_minutes(const ExperimentConfig& cfg) {
    return seconds_total(cfg) / kWorkers / 60.0;
}

BudgetError::BudgetError(double minutes)
    : std::runtime_error([minutes] {
          char buf[128];
          std::snprintf(buf, sizeof buf,
                        "projected runtime %.1f min exceeds the 60 min "
                        "guardrail; rerun with --force-budget to proceed",
                        minutes);
          return std::string(buf);
      }()),
      minutes_(minutes) {}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const double projected = projected_minutes(cfg);
    if (projected > 60.0 && !cfg.force_budget) throw BudgetError(projected);

    Artifacts art;
    try {
        if (cfg.experiment == "env-stats") art = run_env_stats(cfg);
        else if (cfg.experiment == "corrector-growth") art = run_corrector_growth(cfg);
        else if (cfg.experiment == "invariance") art = run_invariance(cfg);
        else if (cfg.experiment == "moment-scaling") art = run_moment_scaling(cfg);
        else if (cfg.experiment == "fluctuation-clt") art = run_fluctuation_clt(cfg);
        else art = run_limit_identity(cfg);
    } catch (const std::invalid_argument& e) {
        // The config has already been validated, so precondition failures at
        // this point (fit refusals, grid misalignment) are numerical, not
        // usage errors; rethrow accordingly.
        throw std::runtime_error(std::string("numerical failure: ") + e.what());
    }

    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    const std::string stem = cfg.experiment + "-" + cfg.hash16();
    ExperimentResult res;
    res.projected_min = projected;
    res.csv_path = (fs::path(cfg.out_dir) / (stem + ".csv")).string();
    res.json_path = (fs::path(cfg.out_dir) / (stem + ".json")).string();

    {
        std::ofstream csv(res.csv_path, std::ios::binary);
        if (!csv) throw std::runtime_error("cannot write " + res.csv_path);
        csv << "# config " << cfg.hash16() << "\n" << art.csv_header << "\n";
        for (const std::string& row : art.csv_rows) csv << row << "\n";
    }
    {
        json out;
        out["experiment"] = cfg.experiment;
        out["config_hash"] = cfg.hash16();
        out["config"] = json::parse(cfg.canonical_json());
        out["projected_minutes"] = projected;
        out["results"] = art.results;
        std::ofstream js(res.json_path, std::ios::binary);
        if (!js) throw std::runtime_error("cannot write " + res.json_path);
        js << out.dump(2) << "\n";
    }
    return res;
}

}  // namespace homog
