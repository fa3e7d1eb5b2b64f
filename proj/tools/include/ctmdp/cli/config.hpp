#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ctmdp/error.hpp"
#include "ctmdp/learn.hpp"
#include "ctmdp/simulate.hpp"

namespace ctmdp::cli {

/// Invalid experiment configuration; `field` names the offending entry.
class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& message)
        : Error(field.empty() ? message : "config field '" + field + "': " + message), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

struct ExperimentConfig {
    std::string name;
    std::filesystem::path model_path;
    TemporalMode mode = TemporalMode::eventually;
    double t1 = 0.0;
    double t2 = 0.0;
    std::string goal;
    /// Time extent of the kernel grid; defaults to t2.
    double horizon = 0.0;
    LearnConfig learn;
    /// Kernel counts per state variable followed by the time axis. Empty means
    /// 10 per variable and 16 over time.
    std::vector<std::size_t> grid;
    std::filesystem::path output_dir;
    /// Write scheduler_iter_<n>.json every this many iterations (0: never).
    std::size_t checkpoint_every = 0;
};

/// Names of all configuration fields; each one is also a CLI flag
/// (underscores become dashes) and an environment variable CTMDP_SCHED_<FIELD>.
std::span<const std::string_view> config_fields();

using Overrides = std::map<std::string, std::string>;
using EnvLookup = std::function<std::optional<std::string>(const std::string& name)>;

/// Reads variables from the process environment.
std::optional<std::string> process_env(const std::string& name);

/// Builds a configuration from an optional JSON file, then environment
/// overrides, then `overrides` (highest precedence). Relative paths in the file
/// resolve against its directory; overridden paths resolve against the working
/// directory. Throws ConfigError naming the field on any invalid entry.
ExperimentConfig load_config(const std::optional<std::filesystem::path>& file, const Overrides& overrides = {},
                             const EnvLookup& env = process_env);

/// Field checks that do not need the model (files exist, property interval,
/// learning hyperparameters). Throws ConfigError.
void validate_config(const ExperimentConfig& config);

/// Echo of the configuration as written to summary.json.
std::string config_to_json(const ExperimentConfig& config, int indent = 2);

}  // namespace ctmdp::cli
