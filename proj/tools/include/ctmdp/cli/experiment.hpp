#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ctmdp/cli/config.hpp"
#include "ctmdp/learn.hpp"
#include "ctmdp/model.hpp"
#include "ctmdp/scheduler.hpp"
#include "ctmdp/simulate.hpp"

namespace ctmdp::cli {

/// Model, property and kernel basis resolved from a configuration.
struct ExperimentSetup {
    std::shared_ptr<const PopulationModel> model;
    ReachabilityProperty property;
    std::shared_ptr<const KernelBasis> basis;
};

/// Validates the configuration and loads everything it references. Model and
/// goal problems surface as ConfigError on the corresponding field.
ExperimentSetup prepare(const ExperimentConfig& config);

struct RunOptions {
    /// Polled after every update; when set the run stops with a partial trace.
    const std::atomic<bool>* stop = nullptr;
    /// Progress lines (one per iteration) when non-null.
    std::ostream* log = nullptr;
};

struct ExperimentResult {
    LearnResult learned;
    std::uint64_t budget = 0;
    double wall_time_s = 0.0;
    /// First iteration whose Q estimate reached 0.5.
    std::optional<std::size_t> first_half;
};

/// Runs gradient ascent for `config` and writes qtrace.csv,
/// scheduler_final.json, summary.json, timing.csv and optional checkpoints
/// into config.output_dir. Nothing is written when validation fails.
ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

/// Writes the Q trace as CSV: iteration,q,ci_low,ci_high,gamma,runs.
void write_qtrace_csv(std::ostream& out, const QTrace& trace);

/// Default heatmap panel times.
inline constexpr double default_heatmap_times[] = {11.25, 22.5, 33.75, 45.0, 52.5, 60.0};

/// Writes rows (t, x1..xn, p_<action>...) for every time and every point of
/// the evaluation grid. Grid points per variable are evenly spaced over the
/// variable's bounds including both ends (the midpoint for resolution 1).
/// Probabilities use the continuous relaxation of the scheduler. Throws
/// ContractError for times outside [0, horizon] or a resolution of the
/// wrong length.
void export_heatmap(std::ostream& out, const KernelScheduler& scheduler, const PopulationModel& m,
                    std::span<const double> times, std::span<const std::size_t> resolution);

struct SuiteRow {
    std::string name;
    std::string initial;
    double initial_q = 0.0;
    double final_q = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::optional<std::size_t> first_half;
    /// Empty on success.
    std::string error;
};

/// Runs every *.cfg file in `directory` (sorted by name). Failures are
/// recorded in the row and the suite continues.
std::vector<SuiteRow> run_suite(const std::filesystem::path& directory, const Overrides& overrides = {},
                                const RunOptions& options = {});

void write_suite_csv(std::ostream& out, std::span<const SuiteRow> rows);

/// Shortest round-trip decimal form of x.
std::string format_double(double x);

}  // namespace ctmdp::cli
