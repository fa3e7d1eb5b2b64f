// Acceptance checks for the learning pipeline. Prints one PASS/FAIL line per
// criterion and exits nonzero when any selected criterion fails.
//
//   ctmdp_acceptance [--work-dir DIR] [--criteria 1,2,...]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ctmdp/cli/config.hpp"
#include "ctmdp/cli/experiment.hpp"
#include "ctmdp/learn.hpp"
#include "ctmdp/oracle.hpp"
#include "ctmdp/simulate.hpp"
#include "ctmdp/smc.hpp"
#include "test_support.hpp"

namespace {

using namespace ctmdp;
namespace fs = std::filesystem;

constexpr std::uint64_t seeds[] = {1, 2, 3};

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double x, int digits = 3) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
}

unsigned worker_count() { return std::max(1u, std::thread::hardware_concurrency()); }

// Learning runs shared by criteria 1-3, produced through the experiment runner
// from the bundled configs.
class SisRuns {
public:
    explicit SisRuns(fs::path work) : work_(std::move(work)) {}

    const cli::ExperimentResult& get(const std::string& config, std::uint64_t seed, const cli::Overrides& extra = {}) {
        std::string key = config + "/" + std::to_string(seed);
        for (const auto& [k, v] : extra) key += "/" + k + "=" + v;
        if (auto it = cache_.find(key); it != cache_.end()) return it->second;
        cli::Overrides o = extra;
        o["seed"] = std::to_string(seed);
        o["workers"] = std::to_string(worker_count());
        std::string dir = config + "_seed" + std::to_string(seed);
        for (const auto& [k, v] : extra) dir += "_" + k + v;
        o["output"] = (work_ / dir).string();
        o["checkpoint_every"] = "0";
        const auto cfg = cli::load_config(ctmdp::testing::data_path("configs/" + config + ".cfg"), o,
                                          [](const std::string&) { return std::optional<std::string>{}; });
        const auto start = std::chrono::steady_clock::now();
        auto result = cli::run_experiment(cfg);
        const auto& tr = result.learned.trace.records;
        std::printf("  run %-34s Q0 %.3f  final %.3f  first>=0.5 %s  (%.0fs)\n", dir.c_str(), tr.front().q.value,
                    tr.back().q.value, result.first_half ? std::to_string(*result.first_half).c_str() : "never",
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
        std::fflush(stdout);
        return cache_.emplace(key, std::move(result)).first->second;
    }

private:
    fs::path work_;
    std::map<std::string, cli::ExperimentResult> cache_;
};

double final_q(const cli::ExperimentResult& r) { return r.learned.trace.records.back().q.value; }
double initial_q(const cli::ExperimentResult& r) { return r.learned.trace.records.front().q.value; }

Outcome criterion_reproduction(SisRuns& runs) {
    int good = 0;
    std::string detail = "final Q per seed:";
    for (auto seed : seeds) {
        const double q = final_q(runs.get("sis_uniform", seed));
        good += q >= 0.55 ? 1 : 0;
        detail += " " + fmt(q);
    }
    const double reduced = final_q(runs.get("sis_uniform", 1, {{"runs_per_q", "500"}, {"n_max", "60"}}));
    detail += "; reduced profile " + fmt(reduced);
    return {good >= 2 && reduced >= 0.45, detail + " (need >=0.55 in 2 of 3, reduced >=0.45)"};
}

Outcome criterion_initialisation(SisRuns& runs) {
    int good = 0;
    std::string detail;
    for (auto seed : seeds) {
        const auto& nt = runs.get("sis_no_treatment", seed);
        const auto& un = runs.get("sis_uniform", seed);
        const bool ok = initial_q(nt) <= 0.05 && final_q(nt) >= 0.55 && initial_q(un) >= 0.25 &&
                        initial_q(un) <= 0.55 && un.first_half &&
                        (!nt.first_half || *un.first_half < *nt.first_half);
        good += ok ? 1 : 0;
        detail += " seed " + std::to_string(seed) + ": no-treatment Q0 " + fmt(initial_q(nt)) + " final " +
                  fmt(final_q(nt)) + ", uniform Q0 " + fmt(initial_q(un)) + ", first>=0.5 uniform " +
                  (un.first_half ? std::to_string(*un.first_half) : "never") + " vs " +
                  (nt.first_half ? std::to_string(*nt.first_half) : "never") + (ok ? " ok;" : " no;");
    }
    return {good >= 2, std::to_string(good) + "/3 seeds;" + detail};
}

Outcome criterion_structure(SisRuns& runs) {
    const cli::ExperimentResult* best = nullptr;
    std::uint64_t best_seed = 0;
    for (auto seed : seeds) {
        const auto& r = runs.get("sis_uniform", seed);
        if (!best || final_q(r) > final_q(*best)) {
            best = &r;
            best_seed = seed;
        }
    }
    const auto m = ctmdp::testing::sis_model();
    PolicyEvaluator evaluator(best->learned.scheduler, &m);
    const std::size_t treat = best->learned.scheduler.action_index("treatment");
    std::vector<double> p(2);
    double box_sum = 0.0, rest_sum = 0.0;
    std::size_t box_n = 0, rest_n = 0;
    for (const auto& s : enumerate_states(m)) {
        for (int k = 0; k <= 40; ++k) {
            const double t = 0.75 * k;
            if (t < 30.0) {
                evaluator.probabilities(std::span<const Count>(s), t, p);
                rest_sum += p[treat];
                ++rest_n;
            }
            const double tb = 33.75 + 0.75 * k;
            if (tb <= 52.5 && s[0] > 80 && s[1] < 20) {
                evaluator.probabilities(std::span<const Count>(s), tb, p);
                box_sum += p[treat];
                ++box_n;
            }
        }
    }
    const double box = box_sum / double(box_n), rest = rest_sum / double(rest_n);
    return {box - rest >= 0.2, "seed " + std::to_string(best_seed) + ": mean p(treatment) window " + fmt(box) +
                                   " vs t<30 " + fmt(rest) + ", difference " + fmt(box - rest) + " (need >=0.2)"};
}

Outcome criterion_oracle() {
    struct Chain {
        std::string model;
        ReachabilityProperty property;
        Policy policy;
        double closed_form;
    };
    const auto two = ctmdp::testing::bundled_model("two_state");
    const auto speed = ctmdp::testing::bundled_model("two_speed");
    const auto survival = ctmdp::testing::bundled_model("survival");
    const Policy switching = [](std::span<const Count>, double t, std::span<double> p) {
        p[0] = t < 0.5 ? 1.0 : 0.0;
        p[1] = 1.0 - p[0];
    };
    std::vector<std::pair<const PopulationModel*, Chain>> chains = {
        {&two, {"two_state", ReachabilityProperty::make(TemporalMode::eventually, 0, 1, "x == 1", two),
                constant_policy(0, 1), 1 - std::exp(-1.0)}},
        {&speed, {"two_speed", ReachabilityProperty::make(TemporalMode::eventually, 0, 1, "x == 2", speed),
                  switching, 1 - 2.5 * std::exp(-1.0) + std::exp(-1.5)}},
        {&survival, {"survival", ReachabilityProperty::make(TemporalMode::globally, 0, 2, "x == 1", survival),
                     constant_policy(0, 1), std::exp(-1.4)}},
    };
    bool pass = true;
    std::string detail;
    for (auto& [m, c] : chains) {
        const double v = exact_value(*m, c.policy, c.property, 0.01);
        const double err = std::abs(v - c.closed_form);
        // The switching scheduler as a kernel scheduler: two time kernels
        // with opposite weights give a deterministic switch at t = 0.5.
        KernelScheduler sch = ctmdp::testing::flat_scheduler(*m, c.property.t2);
        if (c.model == "two_speed") {
            auto basis = std::make_shared<const KernelBasis>(make_grid_basis(*m, 1.0, std::vector<std::size_t>{1, 2}));
            sch = KernelScheduler(m->actions(), basis);
            sch.weights(0)[0] = 200.0;
            sch.weights(1)[1] = 200.0;
        }
        const double reference = exact_value(*m, sch, c.property, 0.01);
        int inside = 0;
        for (std::uint64_t trial = 0; trial < 100; ++trial) {
            const auto r = estimate_q(*m, sch, c.property, {10000, 0.99, worker_count()},
                                      StreamKey{2024, StreamDomain::simulation, trial});
            inside += (r.ci_low <= reference && reference <= r.ci_high) ? 1 : 0;
        }
        const bool ok = err <= 1e-5 && inside >= 95;
        pass = pass && ok;
        detail += " " + c.model + ": |exact-closed| " + fmt(err, 8) + ", SMC covers " + std::to_string(inside) +
                  "/100 around " + fmt(reference, 5) + ";";
    }
    return {pass, detail};
}

double dot(std::span<const double> a, std::span<const double> b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

Outcome criterion_gradient() {
    const std::size_t d = 10;
    RandomStream rng(StreamKey{5, StreamDomain::test});
    std::vector<double> target(d);
    for (double& x : target) x = 5.0 * rng.normal();
    const std::vector<double> w(d, 0.0);
    const Objective q = [&](std::span<const double> v, std::uint64_t, std::size_t) {
        double s = 0.0;
        for (std::size_t i = 0; i < d; ++i) s += (v[i] - target[i]) * (v[i] - target[i]);
        return Evaluation::exact(-s);
    };
    std::vector<double> grad(d);
    for (std::size_t i = 0; i < d; ++i) grad[i] = 2.0 * (target[i] - w[i]);
    const auto mean_cosine = [&](double eps) {
        double total = 0.0;
        for (std::uint64_t r = 1; r <= 20; ++r) {
            const auto est = estimate_gradient(q, w, eps, 200, r, normal_directions(77));
            total += dot(est.direction, grad) / std::sqrt(dot(est.direction, est.direction) * dot(grad, grad));
        }
        return total / 20.0;
    };
    const double coarse = mean_cosine(1e-2), fine = mean_cosine(1e-3);
    return {coarse >= 0.8 && fine >= coarse,
            "mean cosine eps=1e-2 " + fmt(coarse, 4) + ", eps=1e-3 " + fmt(fine, 4) + " (need >=0.8, non-decreasing)"};
}

Outcome criterion_brute_force() {
    const auto m = ctmdp::testing::bundled_model("walk_run");
    const auto p = ReachabilityProperty::make(TemporalMode::eventually, 0, 1, "x == 2", m);
    const auto constants = brute_force_constant(m, p, 0.01, AssignmentScope::per_state);
    auto basis = std::make_shared<const KernelBasis>(make_grid_basis(m, 1.0, std::vector<std::size_t>{3, 5}));
    LearnConfig cfg;
    cfg.workers = worker_count();
    const auto learned = gradient_ascent(m, p, basis, cfg);
    const double value = exact_value(m, greedy_policy(learned.scheduler, &m), p, 0.01);
    const double best = constants.front().value;
    return {value >= best - 0.05, "learned (rounded) " + fmt(value, 4) + " vs best constant " + fmt(best, 4) +
                                      " (walk/run per state " + std::to_string(constants.front().actions[0]) +
                                      std::to_string(constants.front().actions[1]) +
                                      std::to_string(constants.front().actions[2]) + ")"};
}

Outcome criterion_invariants(const fs::path& work) {
    std::vector<std::string> failures;
    const auto m = ctmdp::testing::sis_model();
    RandomStream seed_rng(StreamKey{31, StreamDomain::test});
    auto basis = std::make_shared<const KernelBasis>(make_grid_basis(m, 60, std::vector<std::size_t>{10, 10, 16}));
    auto sch = make_preset("random", m.actions(), basis, seed_rng);
    for (double& w : sch.parameters()) w *= 10.0;

    // Softmax normalisation.
    double worst = 0.0;
    for (int i = 0; i < 20000; ++i) {
        const std::vector<double> x{100 * seed_rng.uniform_open(), 100 * seed_rng.uniform_open()};
        const auto pr = action_probabilities(sch, x, 60 * seed_rng.uniform_open());
        worst = std::max(worst, std::abs(pr[0] + pr[1] - 1.0));
    }
    if (worst > 1e-12) failures.push_back("softmax sum off by " + std::to_string(worst));

    // Trajectories: time-monotone and inside E.
    std::size_t bad = 0;
    for (std::uint64_t i = 0; i < 10000; ++i) {
        RandomStream rng(StreamKey{32, StreamDomain::simulation, 0, i});
        const auto tr = simulate(m, sch, 60, rng);
        for (std::size_t k = 0; k < tr.steps.size(); ++k) {
            if (!m.contains(tr.steps[k].state)) ++bad;
            if (k > 0 && !(tr.steps[k].entry_time > tr.steps[k - 1].entry_time)) ++bad;
        }
    }
    if (bad > 0) failures.push_back(std::to_string(bad) + " trajectory violations");

    // Byte-identical artifacts for different worker counts.
    std::string artifacts[2][2];
    for (int v = 0; v < 2; ++v) {
        const auto cfg = cli::load_config(
            ctmdp::testing::data_path("configs/sis_uniform.cfg"),
            {{"runs_per_q", "100"}, {"n_max", "4"}, {"grid", "4,4,6"}, {"workers", v == 0 ? "1" : "4"},
             {"output", (work / ("determinism_" + std::to_string(v))).string()}, {"checkpoint_every", "0"}},
            [](const std::string&) { return std::optional<std::string>{}; });
        cli::run_experiment(cfg);
        for (int f = 0; f < 2; ++f) {
            std::ifstream in(cfg.output_dir / (f == 0 ? "qtrace.csv" : "scheduler_final.json"), std::ios::binary);
            std::stringstream ss;
            ss << in.rdbuf();
            artifacts[v][f] = ss.str();
        }
    }
    if (artifacts[0][0] != artifacts[1][0] || artifacts[0][1] != artifacts[1][1] || artifacts[0][0].empty())
        failures.push_back("artifacts differ across worker counts");

    // Wilson boundary cases.
    if (wilson_interval(0, 50, 0.95).first != 0.0 || wilson_interval(50, 50, 0.95).second != 1.0 ||
        std::abs(wilson_interval(500, 1000, 0.95).first - 0.4690) > 5e-4 ||
        std::abs(wilson_interval(500, 1000, 0.95).second - 0.5310) > 5e-4)
        failures.push_back("Wilson interval boundary cases");

    // Kolmogorov-Smirnov: first sojourn under a committed action.
    const auto treat = ctmdp::testing::constant_scheduler(m, 1e6, 1);
    const double rate = exit_rate(m, m.initial_state(), 1);
    std::vector<double> samples;
    for (std::uint64_t i = 0; i < 10000; ++i) {
        RandomStream rng(StreamKey{33, StreamDomain::simulation, 0, i});
        samples.push_back(*simulate(m, treat, 1e6, rng).steps[0].sojourn);
    }
    std::sort(samples.begin(), samples.end());
    double dmax = 0.0;
    const double n = double(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double cdf = 1.0 - std::exp(-rate * samples[i]);
        dmax = std::max({dmax, double(i + 1) / n - cdf, cdf - double(i) / n});
    }
    const double p_value = ctmdp::testing::kolmogorov_tail(std::sqrt(n) * dmax);
    if (p_value <= 0.01) failures.push_back("KS p-value " + std::to_string(p_value));

    std::string detail = "softmax max error " + std::to_string(worst) + ", KS p " + fmt(p_value);
    for (const auto& f : failures) detail += "; " + f;
    return {failures.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
    fs::path work = fs::temp_directory_path() / "ctmdp_acceptance";
    std::set<int> selected = {1, 2, 3, 4, 5, 6, 7};
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--work-dir" && i + 1 < argc) {
            work = argv[++i];
        } else if (arg == "--criteria" && i + 1 < argc) {
            selected.clear();
            std::stringstream ss(argv[++i]);
            std::string item;
            while (std::getline(ss, item, ',')) selected.insert(std::stoi(item));
        } else {
            std::fprintf(stderr, "usage: %s [--work-dir DIR] [--criteria 1,2,...]\n", argv[0]);
            return 2;
        }
    }
    fs::create_directories(work);
    SisRuns runs(work);

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"SIS reproduction from uniform init", [&] { return criterion_reproduction(runs); }},
        {"initialisation ordering", [&] { return criterion_initialisation(runs); }},
        {"learned scheduler structure", [&] { return criterion_structure(runs); }},
        {"oracle agreement", [] { return criterion_oracle(); }},
        {"gradient estimator fidelity", [] { return criterion_gradient(); }},
        {"brute-force dominance", [] { return criterion_brute_force(); }},
        {"invariant suites", [&] { return criterion_invariants(work); }},
    };

    int failed = 0;
    std::vector<std::string> lines;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = int(i) + 1;
        if (!selected.count(id)) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        char line[4096];
        std::snprintf(line, sizeof line, "%s criterion %d (%s): %s [%.1fs]", o.pass ? "PASS" : "FAIL", id,
                      criteria[i].first.c_str(), o.detail.c_str(), secs);
        std::printf("%s\n", line);
        std::fflush(stdout);
        lines.emplace_back(line);
        failed += o.pass ? 0 : 1;
    }
    std::printf("\nsummary\n");
    for (const auto& l : lines) std::printf("%s\n", l.substr(0, l.find(':')).c_str());
    std::printf("%d of %zu criteria failed\n", failed, lines.size());
    return failed == 0 ? 0 : 1;
}
