#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ctmdp/model.hpp"
#include "ctmdp/random.hpp"

namespace ctmdp {

/// Gaussian kernels on the joint (state, time) space, amplitude 1:
///   phi_j(z) = exp(-0.5 * sum_d ((z_d - mu_jd) / l_d)^2),  z = (x_1..x_n, t).
struct KernelBasis {
    std::size_t dimension = 0;          ///< n + 1 (state variables plus time)
    std::vector<double> centers;        ///< row-major, size() x dimension
    std::vector<double> lengthscales;   ///< one per dimension, all > 0
    double horizon = 0.0;               ///< T; time coordinate lies in [0, T]
    /// Axis coordinates when the centers are the Cartesian product of these
    /// axes (last dimension varying fastest); empty otherwise.
    std::vector<std::vector<double>> grid_axes;

    std::size_t size() const noexcept { return dimension == 0 ? 0 : centers.size() / dimension; }
    std::span<const double> center(std::size_t j) const { return {centers.data() + j * dimension, dimension}; }
    bool is_grid() const noexcept { return !grid_axes.empty(); }

    /// Throws ContractError when an invariant does not hold.
    void validate() const;
};

/// Evenly spaced grid over [lower, upper] per variable and [0, T] in time.
/// With c > 1 kernels over an extent L the centers include both end points
/// and the lengthscale is the spacing L / (c - 1); a single kernel sits at the
/// midpoint with lengthscale L. `counts` has one entry per variable plus one
/// for time.
KernelBasis make_grid_basis(const PopulationModel& m, double horizon, std::span<const std::size_t> counts);

/// Same-shaped weight-space vector: for every action, one value per kernel
/// followed by one bias value.
struct Direction {
    std::vector<double> values;
};

/// Randomised time-dependent scheduler: one logit function per action,
///   f_a(x, t) = bias_a + sum_j w_aj phi_j(x, t),
/// turned into action probabilities by a softmax. Parameters are stored flat,
/// action-major, as [w_a0 .. w_a(N-1), bias_a].
class KernelScheduler {
public:
    KernelScheduler(std::vector<std::string> actions, std::shared_ptr<const KernelBasis> basis);
    KernelScheduler(std::vector<std::string> actions, std::shared_ptr<const KernelBasis> basis,
                    std::vector<double> parameters);

    const std::vector<std::string>& actions() const noexcept { return actions_; }
    std::size_t action_count() const noexcept { return actions_.size(); }
    const KernelBasis& basis() const noexcept { return *basis_; }
    const std::shared_ptr<const KernelBasis>& shared_basis() const noexcept { return basis_; }
    std::size_t kernel_count() const noexcept { return basis_->size(); }
    std::size_t stride() const noexcept { return basis_->size() + 1; }

    std::span<const double> parameters() const noexcept { return parameters_; }
    std::span<double> parameters() noexcept { return parameters_; }

    std::span<const double> weights(std::size_t action) const;
    std::span<double> weights(std::size_t action);
    double bias(std::size_t action) const;
    void set_bias(std::size_t action, double value);

    /// Index of the named action; throws ContractError when unknown.
    std::size_t action_index(std::string_view name) const;

    friend bool operator==(const KernelScheduler& a, const KernelScheduler& b);

private:
    std::vector<std::string> actions_;
    std::shared_ptr<const KernelBasis> basis_;
    std::vector<double> parameters_;
};

/// Reusable scratch space for evaluating a scheduler many times. Grid bases
/// are evaluated as a separable tensor contraction; when a model is supplied
/// the per-variable kernel factors at every integer value are tabulated.
/// The scheduler must outlive the evaluator. Not thread-safe; use one per
/// worker.
class PolicyEvaluator {
public:
    explicit PolicyEvaluator(const KernelScheduler& scheduler, const PopulationModel* model = nullptr);

    void logits(std::span<const double> x, double t, std::span<double> out);
    void logits(std::span<const Count> s, double t, std::span<double> out);

    /// Softmax of the logits with max-subtraction.
    void probabilities(std::span<const Count> s, double t, std::span<double> out);
    void probabilities(std::span<const double> x, double t, std::span<double> out);

private:
    void contract(std::span<double> out);
    void general(std::span<const double> x, double t, std::span<double> out);
    void axis_factors(std::size_t d, double coordinate, std::span<double> out) const;

    const KernelScheduler* scheduler_;
    std::vector<std::vector<double>> factors_;        // per grid axis
    std::vector<std::vector<double>> tables_;         // per state variable: (value - lower) x axis size
    std::vector<Count> table_lower_;
    std::vector<double> buffer_a_, buffer_b_, point_;
};

/// Logit of `action` at the real point x (continuous relaxation) and time t.
double eval_logit(const KernelScheduler& scheduler, std::size_t action, std::span<const double> x, double t);

std::vector<double> action_probabilities(const KernelScheduler& scheduler, std::span<const Count> s, double t);
std::vector<double> action_probabilities(const KernelScheduler& scheduler, std::span<const double> x, double t);

/// Inverse-CDF selection over the fixed action order: the first index whose
/// cumulative probability exceeds u.
std::size_t select_action(std::span<const double> probabilities, double u);

std::size_t sample_action(const KernelScheduler& scheduler, std::span<const Count> s, double t, RandomStream& rng);

/// Standard-normal entries for every weight and bias.
Direction sample_direction(const KernelScheduler& scheduler, RandomStream& rng);

/// Returns (scheduler + eps * g, g) with g drawn by sample_direction.
std::pair<KernelScheduler, Direction> perturb(const KernelScheduler& scheduler, double eps, RandomStream& rng);

/// Returns scheduler + coeff * d. Throws ContractError on shape mismatch.
KernelScheduler axpy_update(const KernelScheduler& scheduler, double coeff, const Direction& d);

/// Bias used by the "<action>-only" presets.
inline constexpr double constant_preset_bias = 10.0;

/// Initial schedulers: "uniform" (all zero), "random" (i.i.d. N(0, 1) weights
/// and biases, drawn from `rng`), or "<action>-only" (bias +10 on that action).
KernelScheduler make_preset(std::string_view preset, std::vector<std::string> actions,
                            std::shared_ptr<const KernelBasis> basis, RandomStream& rng);

std::string serialize_scheduler(const KernelScheduler& scheduler);
KernelScheduler parse_scheduler(std::string_view text);
KernelScheduler load_scheduler(const std::filesystem::path& path);
void save_scheduler(const KernelScheduler& scheduler, const std::filesystem::path& path);

}  // namespace ctmdp
