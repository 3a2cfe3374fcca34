// Command-line front end: one subcommand per standard experiment, each
// driven by a JSON config with optional overrides for seed, output
// directory, thread count, and the runtime guardrail.
//
// Exit codes: 0 success, 1 invalid arguments or config, 2 budget refusal,
// 3 runtime failure (window escape, I/O, ...).

#include <cstdint>
#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"

#include "homog1d/experiments.hpp"

namespace {

struct Overrides {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out_dir;
    unsigned threads = 0;
    bool force_budget = false;
};

int run(const std::string& experiment, const Overrides& o) {
    homog::ExperimentConfig cfg = homog::parse_config_file(o.config_path);
    cfg.experiment = experiment;  // the subcommand is authoritative
    if (o.seed_set) {
        cfg.master_seed = o.seed;
        cfg.seed_set = true;
    }
    if (!o.out_dir.empty()) cfg.out_dir = o.out_dir;
    if (o.threads > 0) cfg.threads = o.threads;
    if (o.force_budget) cfg.force_budget = true;
    cfg.validate();
    std::fprintf(stderr,
                 "[homog1d] %s (config %s): projected %.1f min on the "
                 "reference 8-worker budget\n",
                 experiment.c_str(), cfg.hash16().c_str(),
                 homog::projected_minutes(cfg));
    const homog::ExperimentResult res = homog::run_experiment(cfg);
    std::fprintf(stderr, "[homog1d] wrote %s\n[homog1d] wrote %s\n",
                 res.csv_path.c_str(), res.json_path.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"1-D stochastic homogenization: simulation and verification"};
    app.require_subcommand(1);

    Overrides o;
    const std::pair<const char*, const char*> commands[] = {
        {"env-stats",
         "harmonic mean and integrated covariance of the coefficient field"},
        {"corrector-growth", "sublinear second-moment growth of the correctors"},
        {"invariance",
         "quenched endpoint law against the Gaussian limit (KS), one frozen field"},
        {"moment-scaling",
         "corrector-shift and quadratic-variation error moments across eps and t"},
        {"fluctuation-clt",
         "pointwise fluctuation CLT against the independently built limit field"},
        {"limit-identity",
         "limit-field component identity plus Feynman-Kac and Ito cross-checks"},
    };
    for (const auto& [name, desc] : commands) {
        CLI::App* sub = app.add_subcommand(name, desc);
        sub->add_option("--config", o.config_path, "JSON config file")
            ->required();
        sub->add_option("--seed", o.seed, "master seed (overrides config)");
        sub->add_option("--out", o.out_dir, "output directory (overrides config)");
        sub->add_option("--threads", o.threads,
                        "worker threads (overrides config)");
        sub->add_flag("--force-budget", o.force_budget,
                      "run even past the 60 min projection guardrail");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    CLI::App* sub = app.get_subcommands().front();
    o.seed_set = sub->count("--seed") > 0;
    try {
        return run(sub->get_name(), o);
    } catch (const homog::BudgetError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}
