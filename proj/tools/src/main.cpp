#include <atomic>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ctmdp/cli/config.hpp"
#include "ctmdp/cli/experiment.hpp"
#include "ctmdp/error.hpp"
#include "ctmdp/oracle.hpp"
#include "ctmdp/smc.hpp"

namespace {

using namespace ctmdp;
using namespace ctmdp::cli;

constexpr int exit_ok = 0;
constexpr int exit_validation = 1;
constexpr int exit_runtime = 2;

std::atomic<bool> interrupted{false};

extern "C" void on_sigint(int) { interrupted.store(true); }

// One string option per config field; set values become overrides.
struct FieldFlags {
    std::map<std::string, std::string> values;

    void attach(CLI::App& app) {
        for (const auto field : config_fields()) {
            std::string flag = "--" + std::string(field);
            for (auto& c : flag)
                if (c == '_') c = '-';
            app.add_option(flag, values[std::string(field)], "override config field " + std::string(field));
        }
    }

    Overrides overrides(const CLI::App& app) const {
        Overrides out;
        for (const auto& [field, value] : values) {
            std::string flag = "--" + field;
            for (auto& c : flag)
                if (c == '_') c = '-';
            if (app.count(flag) > 0) out[field] = value;
        }
        return out;
    }
};

ExperimentConfig config_from(const std::string& file, const FieldFlags& flags, const CLI::App& app) {
    std::optional<std::filesystem::path> path;
    if (!file.empty()) path = file;
    return load_config(path, flags.overrides(app));
}

KernelScheduler scheduler_for(const ExperimentSetup& setup, const ExperimentConfig& config,
                              const std::string& scheduler_file) {
    if (!scheduler_file.empty()) return load_scheduler(scheduler_file);
    return initial_scheduler(*setup.model, setup.basis, config.learn);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Learn time-dependent schedulers for population CTMDPs"};
    app.require_subcommand(1);

    FieldFlags learn_flags, estimate_flags, exact_flags, validate_flags, suite_flags;

    std::string learn_config;
    auto* learn = app.add_subcommand("learn", "run gradient ascent and write result artifacts");
    learn->add_option("config", learn_config, "experiment config file")->check(CLI::ExistingFile);
    learn_flags.attach(*learn);

    std::string estimate_config, estimate_scheduler, trajectory_csv;
    std::size_t trajectory_count = 0;
    auto* estimate = app.add_subcommand("estimate", "estimate Q of a scheduler by simulation");
    estimate->add_option("config", estimate_config, "experiment config file")->check(CLI::ExistingFile);
    estimate->add_option("--scheduler", estimate_scheduler, "scheduler file (default: the config's initial preset)");
    estimate->add_option("--trajectories", trajectory_count, "number of trajectories to dump");
    estimate->add_option("--trajectory-csv", trajectory_csv, "file receiving dumped trajectories");
    estimate_flags.attach(*estimate);

    std::string exact_config, exact_scheduler, exact_policy = "greedy";
    double time_step = 0.01;
    std::size_t state_cap = default_state_cap;
    auto* exact = app.add_subcommand("exact", "exact Q of a scheduler on an enumerable model");
    exact->add_option("config", exact_config, "experiment config file")->check(CLI::ExistingFile);
    exact->add_option("--scheduler", exact_scheduler, "scheduler file (default: the config's initial preset)");
    exact->add_option("--policy", exact_policy, "greedy (deterministic rounding) or softmax")
        ->check(CLI::IsMember({"greedy", "softmax"}));
    exact->add_option("--time-step", time_step, "segment width")->check(CLI::PositiveNumber);
    exact->add_option("--state-cap", state_cap, "maximum number of states");
    exact_flags.attach(*exact);

    std::string heatmap_scheduler, heatmap_model, heatmap_output;
    std::vector<double> heatmap_times(std::begin(default_heatmap_times), std::end(default_heatmap_times));
    std::vector<std::size_t> resolution;
    auto* heatmap = app.add_subcommand("heatmap", "export action probabilities over a state grid");
    heatmap->add_option("--scheduler", heatmap_scheduler, "scheduler file")->required()->check(CLI::ExistingFile);
    heatmap->add_option("--model", heatmap_model, "model file")->required()->check(CLI::ExistingFile);
    heatmap->add_option("--times", heatmap_times, "panel times")->delimiter(',');
    heatmap->add_option("--resolution", resolution, "grid points per variable (default 21 each)")->delimiter(',');
    heatmap->add_option("-o,--output", heatmap_output, "CSV file (default: stdout)");

    std::string suite_dir, suite_output;
    auto* suite = app.add_subcommand("suite", "run every *.cfg in a directory");
    suite->add_option("directory", suite_dir, "directory of configs")->required();
    suite->add_option("--table", suite_output, "CSV file receiving the summary table");
    suite_flags.attach(*suite);

    std::string validate_config_file, validate_model;
    auto* validate = app.add_subcommand("validate", "check a config (and its model) or a model file");
    validate->add_option("config", validate_config_file, "experiment config file")->check(CLI::ExistingFile);
    validate->add_option("--model-file", validate_model, "model file to lint")->check(CLI::ExistingFile);
    validate_flags.attach(*validate);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_validation;
    }

    std::signal(SIGINT, on_sigint);
    try {
        if (*learn) {
            const auto config = config_from(learn_config, learn_flags, *learn);
            const auto result = run_experiment(config, {&interrupted, &std::cerr});
            const auto& last = result.learned.trace.records.back();
            std::printf("final Q %.6f  CI [%.6f, %.6f]  iterations %zu%s  output %s\n", last.q.value, last.q.ci_low,
                        last.q.ci_high, last.iteration, result.learned.trace.complete ? "" : " (interrupted)",
                        config.output_dir.string().c_str());
            return exit_ok;
        }
        if (*estimate) {
            const auto config = config_from(estimate_config, estimate_flags, *estimate);
            const auto setup = prepare(config);
            const auto scheduler = scheduler_for(setup, config, estimate_scheduler);
            const SMCOptions options{config.learn.runs_per_q, config.learn.confidence, config.learn.workers};
            const auto r = estimate_q(*setup.model, scheduler, setup.property, options,
                                      StreamKey{config.learn.seed, StreamDomain::simulation, 0, 0});
            std::printf("Q %.6f  CI [%.6f, %.6f]  successes %llu/%llu  confidence %g\n", r.estimate, r.ci_low,
                        r.ci_high, static_cast<unsigned long long>(r.successes),
                        static_cast<unsigned long long>(r.runs), r.confidence);
            if (trajectory_count > 0) {
                std::ofstream file;
                if (!trajectory_csv.empty()) {
                    file.open(trajectory_csv, std::ios::binary);
                    if (!file) throw Error("cannot write " + trajectory_csv);
                }
                std::ostream& out = trajectory_csv.empty() ? std::cout : file;
                for (std::size_t i = 0; i < trajectory_count; ++i) {
                    RandomStream rng(StreamKey{config.learn.seed, StreamDomain::simulation, 0, i});
                    write_trajectory_csv(out, *setup.model,
                                         simulate(*setup.model, scheduler, setup.property.t2, rng), i, i == 0);
                }
            }
            return exit_ok;
        }
        if (*exact) {
            const auto config = config_from(exact_config, exact_flags, *exact);
            const auto setup = prepare(config);
            const auto scheduler = scheduler_for(setup, config, exact_scheduler);
            const Policy policy = exact_policy == "softmax" ? softmax_policy(scheduler, setup.model.get())
                                                            : greedy_policy(scheduler, setup.model.get());
            ExactOptions options;
            options.time_step = time_step;
            options.state_cap = state_cap;
            std::printf("%.6f\n", exact_value(*setup.model, policy, setup.property, options));
            return exit_ok;
        }
        if (*heatmap) {
            const auto model = load_model(heatmap_model);
            const auto scheduler = load_scheduler(heatmap_scheduler);
            if (resolution.empty()) resolution.assign(model.dimension(), 21);
            if (heatmap_output.empty()) {
                export_heatmap(std::cout, scheduler, model, heatmap_times, resolution);
            } else {
                std::ofstream out(heatmap_output, std::ios::binary);
                if (!out) throw Error("cannot write " + heatmap_output);
                export_heatmap(out, scheduler, model, heatmap_times, resolution);
            }
            return exit_ok;
        }
        if (*suite) {
            const auto rows = run_suite(suite_dir, suite_flags.overrides(*suite), {&interrupted, &std::cerr});
            write_suite_csv(std::cout, rows);
            if (!suite_output.empty()) {
                std::ofstream out(suite_output, std::ios::binary);
                if (!out) throw Error("cannot write " + suite_output);
                write_suite_csv(out, rows);
            }
            for (const auto& row : rows)
                if (!row.error.empty()) return exit_runtime;
            return exit_ok;
        }
        if (*validate) {
            if (!validate_model.empty()) {
                const auto model = load_model(validate_model);
                std::printf("model %s: %zu variables, %zu actions, %zu transitions\n", model.name().c_str(),
                            model.dimension(), model.actions().size(), model.transitions().size());
            }
            if (!validate_config_file.empty() || validate_model.empty()) {
                const auto config = config_from(validate_config_file, validate_flags, *validate);
                const auto setup = prepare(config);
                std::printf("config %s: ok (%zu kernels, budget %llu runs)\n", config.name.c_str(),
                            setup.basis->size(),
                            static_cast<unsigned long long>(simulation_budget(config.learn)));
            }
            return exit_ok;
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "validation error: %s\n", e.what());
        return exit_validation;
    } catch (const ParseError& e) {
        std::fprintf(stderr, "validation error: %s\n", e.what());
        return exit_validation;
    } catch (const ModelError& e) {
        std::fprintf(stderr, "validation error: %s\n", e.what());
        return exit_validation;
    } catch (const ContractError& e) {
        std::fprintf(stderr, "validation error: %s\n", e.what());
        return exit_validation;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_runtime;
    }
    return exit_ok;
}
