#include "ctmdp/cli/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <fstream>
#include <ostream>

#include <json.hpp>

#include "ctmdp/error.hpp"

namespace ctmdp::cli {
namespace {

using nlohmann::json;
using clock_type = std::chrono::steady_clock;

constexpr std::size_t default_state_kernels = 10;
constexpr std::size_t default_time_kernels = 16;

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << content;
    if (!out) throw Error("failed writing " + path.string());
}

std::optional<std::size_t> first_reaching(const QTrace& trace, double level) {
    for (const auto& r : trace.records)
        if (r.q.value >= level) return r.iteration;
    return std::nullopt;
}

json evaluation_json(const Evaluation& e) {
    return {{"value", e.value}, {"ci_low", e.ci_low}, {"ci_high", e.ci_high}, {"runs", e.runs}};
}

}  // namespace

std::string format_double(double x) {
    char buffer[64];
    const auto result = std::to_chars(buffer, buffer + sizeof buffer, x);
    return std::string(buffer, result.ptr);
}

ExperimentSetup prepare(const ExperimentConfig& config) {
    validate_config(config);
    ExperimentSetup setup;
    try {
        setup.model = std::make_shared<const PopulationModel>(load_model(config.model_path));
    } catch (const ParseError& e) {
        throw ConfigError("model", e.what());
    } catch (const ModelError& e) {
        throw ConfigError("model", e.what());
    }
    const auto& m = *setup.model;
    try {
        setup.property = ReachabilityProperty::make(config.mode, config.t1, config.t2, config.goal, m);
    } catch (const ParseError& e) {
        throw ConfigError("goal", e.what());
    } catch (const ContractError& e) {
        throw ConfigError("t2", e.what());
    }
    std::vector<std::size_t> counts = config.grid;
    if (counts.empty()) {
        counts.assign(m.dimension(), default_state_kernels);
        counts.push_back(default_time_kernels);
    }
    if (counts.size() != m.dimension() + 1)
        throw ConfigError("grid", "expected " + std::to_string(m.dimension() + 1) +
                                      " kernel counts (one per variable plus time), got " +
                                      std::to_string(counts.size()));
    setup.basis = std::make_shared<const KernelBasis>(make_grid_basis(m, config.horizon, counts));
    if (config.learn.initial != "uniform" && config.learn.initial != "random") {
        const auto& initial = config.learn.initial;
        const std::string suffix = "-only";
        const bool preset = initial.size() > suffix.size() &&
                            initial.compare(initial.size() - suffix.size(), suffix.size(), suffix) == 0 &&
                            std::find(m.actions().begin(), m.actions().end(),
                                      initial.substr(0, initial.size() - suffix.size())) != m.actions().end();
        if (!preset)
            throw ConfigError("initial", "expected uniform, random or <action>-only for a declared action, got '" +
                                             initial + "'");
    }
    return setup;
}

void write_qtrace_csv(std::ostream& out, const QTrace& trace) {
    out << "iteration,q,ci_low,ci_high,gamma,runs\n";
    for (const auto& r : trace.records)
        out << r.iteration << ',' << format_double(r.q.value) << ',' << format_double(r.q.ci_low) << ','
            << format_double(r.q.ci_high) << ',' << format_double(r.gamma) << ',' << r.cumulative_runs << '\n';
}

ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options) {
    const ExperimentSetup setup = prepare(config);
    const auto& m = *setup.model;
    std::filesystem::create_directories(config.output_dir);

    const auto start = clock_type::now();
    const UpdateCallback on_update = [&](std::size_t n, std::span<const double> params) {
        if (config.checkpoint_every > 0 && n % config.checkpoint_every == 0) {
            const KernelScheduler snapshot(m.actions(), setup.basis, std::vector<double>(params.begin(), params.end()));
            save_scheduler(snapshot, config.output_dir / ("scheduler_iter_" + std::to_string(n) + ".json"));
        }
        if (options.log) *options.log << "iteration " << n << '/' << config.learn.n_max << '\n';
        return !(options.stop && options.stop->load());
    };

    ExperimentResult result{gradient_ascent(m, setup.property, setup.basis, config.learn, on_update),
                            simulation_budget(config.learn), 0.0, std::nullopt};
    result.wall_time_s = std::chrono::duration<double>(clock_type::now() - start).count();
    result.first_half = first_reaching(result.learned.trace, 0.5);
    const auto& trace = result.learned.trace;

    {
        std::ofstream out(config.output_dir / "qtrace.csv", std::ios::binary);
        write_qtrace_csv(out, trace);
    }
    {
        std::ofstream out(config.output_dir / "timing.csv", std::ios::binary);
        out << "iteration,elapsed_ms\n";
        for (const auto& r : trace.records) out << r.iteration << ',' << format_double(r.elapsed_ms) << '\n';
    }
    save_scheduler(result.learned.scheduler, config.output_dir / "scheduler_final.json");

    json summary = {
        {"name", config.name},
        {"seed", config.learn.seed},
        {"initial", config.learn.initial},
        {"initial_q", evaluation_json(trace.records.front().q)},
        {"final_q", evaluation_json(trace.records.back().q)},
        {"iterations", trace.records.back().iteration},
        {"complete", trace.complete},
        {"budget", result.budget},
        {"runs_used", result.learned.runs_used},
        {"wall_time_s", result.wall_time_s},
        {"first_iteration_q_at_least_half", result.first_half ? json(*result.first_half) : json(nullptr)},
        {"config", json::parse(config_to_json(config))},
    };
    write_file(config.output_dir / "summary.json", summary.dump(2) + "\n");
    return result;
}

void export_heatmap(std::ostream& out, const KernelScheduler& scheduler, const PopulationModel& m,
                    std::span<const double> times, std::span<const std::size_t> resolution) {
    const std::size_t n = m.dimension();
    if (scheduler.basis().dimension != n + 1)
        throw ContractError("scheduler basis does not match the model dimension");
    if (resolution.size() != n)
        throw ContractError("heatmap resolution needs one entry per variable (" + std::to_string(n) + ")");
    for (auto r : resolution)
        if (r == 0) throw ContractError("heatmap resolution entries must be at least 1");
    const double horizon = scheduler.basis().horizon;
    for (double t : times)
        if (!(t >= 0.0 && t <= horizon))
            throw ContractError("heatmap time " + format_double(t) + " outside [0, " + format_double(horizon) + "]");

    std::vector<std::vector<double>> axes(n);
    for (std::size_t d = 0; d < n; ++d) {
        const double lo = static_cast<double>(m.variables()[d].lower);
        const double hi = static_cast<double>(m.variables()[d].upper);
        if (resolution[d] == 1) {
            axes[d].push_back(0.5 * (lo + hi));
            continue;
        }
        for (std::size_t i = 0; i < resolution[d]; ++i)
            axes[d].push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(resolution[d] - 1));
    }

    out << 't';
    for (const auto& v : m.variables()) out << ',' << v.name;
    for (const auto& a : scheduler.actions()) out << ",p_" << a;
    out << '\n';

    PolicyEvaluator evaluator(scheduler);
    std::vector<double> point(n), probs(scheduler.action_count());
    std::vector<std::size_t> idx(n, 0);
    for (double t : times) {
        std::fill(idx.begin(), idx.end(), 0);
        for (;;) {
            for (std::size_t d = 0; d < n; ++d) point[d] = axes[d][idx[d]];
            evaluator.probabilities(std::span<const double>(point), t, probs);
            out << format_double(t);
            for (double x : point) out << ',' << format_double(x);
            for (double p : probs) out << ',' << format_double(p);
            out << '\n';
            std::size_t d = n;
            while (d-- > 0) {
                if (++idx[d] < axes[d].size()) break;
                idx[d] = 0;
            }
            if (d == static_cast<std::size_t>(-1)) break;
        }
    }
}

std::vector<SuiteRow> run_suite(const std::filesystem::path& directory, const Overrides& overrides,
                                const RunOptions& options) {
    if (!std::filesystem::is_directory(directory))
        throw ConfigError("", "suite directory not found: " + directory.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(directory))
        if (entry.is_regular_file() && entry.path().extension() == ".cfg") files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    std::vector<SuiteRow> rows;
    for (const auto& file : files) {
        SuiteRow row;
        row.name = file.stem().string();
        try {
            const auto config = load_config(file, overrides);
            row.name = config.name;
            row.initial = config.learn.initial;
            if (options.log) *options.log << "suite: running " << config.name << '\n';
            const auto result = run_experiment(config, options);
            const auto& records = result.learned.trace.records;
            row.initial_q = records.front().q.value;
            row.final_q = records.back().q.value;
            row.ci_low = records.back().q.ci_low;
            row.ci_high = records.back().q.ci_high;
            row.first_half = result.first_half;
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        rows.push_back(std::move(row));
        if (options.stop && options.stop->load()) break;
    }
    return rows;
}

void write_suite_csv(std::ostream& out, std::span<const SuiteRow> rows) {
    out << "name,initial,initial_q,final_q,ci_low,ci_high,first_iteration_q_at_least_half,error\n";
    for (const auto& r : rows) {
        std::string error = r.error;
        std::replace(error.begin(), error.end(), '"', '\'');
        out << r.name << ',' << r.initial << ',';
        if (r.error.empty())
            out << format_double(r.initial_q) << ',' << format_double(r.final_q) << ',' << format_double(r.ci_low)
                << ',' << format_double(r.ci_high) << ',' << (r.first_half ? std::to_string(*r.first_half) : "");
        else
            out << ",,,,";
        out << ",\"" << error << "\"\n";
    }
}

}  // namespace ctmdp::cli
