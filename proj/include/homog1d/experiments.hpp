#pragma once

// Experiment orchestration: config parsing and validation, deterministic
// runtime projection, the six standard experiments, and CSV/JSON export.
//
// A config is one JSON file with named blocks (environment, simulation,
// datum, grids, budget).  Every output carries the 16-hex-digit FNV-1a hash
// of the canonical (sorted-key) config dump, and identical configs reproduce
// identical bytes at any thread count.
//
// Grid semantics per experiment:
//   env-stats         lag grid fixed; budget.n_realizations realizations
//   corrector-growth  x_list is the |x| grid (defaults to 5..80 dyadic)
//   invariance        eps_list, t = last t_list entry, budget.n_paths
//   moment-scaling    eps_list x t_list, budget.n_env x budget.n_paths
//   fluctuation-clt   eps = smallest eps_list entry, checkpoints = t_list,
//                     budget.n_env x budget.n_inner
//   limit-identity    t = last t_list entry, budget.n_draws noise draws

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "homog1d/initial_datum.hpp"
#include "homog1d/random_env.hpp"

namespace homog {

struct ExperimentConfig {
    std::string experiment;
    std::uint64_t master_seed = 0;
    bool seed_set = false;  // mandatory before running; no wall-clock seeding
    std::string out_dir = ".";
    unsigned threads = 1;
    bool force_budget = false;

    EnvironmentSpec environment;
    double dt_micro = 1e-3;
    double x_start = 0.0;
    InitialDatum datum = InitialDatum::gaussian(1.0);

    std::vector<double> eps_list{0.2, 0.1, 0.05};
    std::vector<double> t_list{0.25, 0.5, 1.0};
    std::vector<double> x_list{};

    std::size_t n_env = 200;
    std::size_t n_paths = 2000;
    std::size_t n_inner = 2000;
    std::size_t n_realizations = 4000;
    std::size_t n_draws = 1000;

    // Throws std::invalid_argument naming the offending field.
    void validate() const;

    // Sorted-key JSON of everything that affects results (seed included,
    // threads and out_dir excluded); its FNV-1a 64 hash names the outputs.
    std::string canonical_json() const;
    std::string hash16() const;
};

ExperimentConfig parse_config_json(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

// Projected wall-clock minutes on the reference budget machine (8 workers),
// from a fixed per-step cost model; deliberately machine independent so the
// budget refusal is deterministic.
double projected_minutes(const ExperimentConfig& cfg);

// Raised instead of starting a run projected beyond the 60 minute guardrail
// (unless force_budget is set).
class BudgetError : public std::runtime_error {
  public:
    explicit BudgetError(double minutes);
    double minutes() const { return minutes_; }

  private:
    double minutes_;
};

struct ExperimentResult {
    std::string csv_path;
    std::string json_path;
    double projected_min = 0.0;
};

// Runs the configured experiment and writes <experiment>-<hash>.csv/.json
// into out_dir (created if missing).  Rerunning an identical config rewrites
// identical bytes.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

}  // namespace homog
