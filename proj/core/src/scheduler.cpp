#include "ctmdp/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "ctmdp/error.hpp"
#include "text_io.hpp"

namespace ctmdp {
namespace {

using json = nlohmann::json;

constexpr std::size_t max_table_entries = std::size_t{1} << 22;

std::vector<double> axis_points(double lower, double upper, std::size_t count, double& lengthscale) {
    const double extent = upper - lower;
    std::vector<double> axis(count);
    if (count == 1) {
        axis[0] = lower + 0.5 * extent;
        lengthscale = extent;
    } else {
        const double spacing = extent / static_cast<double>(count - 1);
        for (std::size_t i = 0; i < count; ++i) axis[i] = lower + spacing * static_cast<double>(i);
        lengthscale = spacing;
    }
    // A degenerate (single-valued) variable still needs a positive scale.
    if (!(lengthscale > 0.0)) lengthscale = 1.0;
    return axis;
}

void softmax_in_place(std::span<double> v) {
    double top = -std::numeric_limits<double>::infinity();
    for (double x : v) top = std::max(top, x);
    double sum = 0.0;
    for (double& x : v) {
        x = std::exp(x - top);
        sum += x;
    }
    for (double& x : v) x /= sum;
}

}  // namespace

void KernelBasis::validate() const {
    if (dimension < 2) throw ContractError("kernel basis needs at least one state dimension and time");
    if (centers.empty() || centers.size() % dimension != 0)
        throw ContractError("kernel basis centers do not match the dimension");
    if (lengthscales.size() != dimension) throw ContractError("kernel basis needs one lengthscale per dimension");
    for (double l : lengthscales)
        if (!(l > 0.0) || !std::isfinite(l)) throw ContractError("kernel lengthscales must be positive and finite");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ContractError("kernel basis horizon must be positive");
    for (std::size_t j = 0; j < size(); ++j) {
        const double t = centers[j * dimension + dimension - 1];
        if (t < 0.0 || t > horizon) throw ContractError("kernel center time outside [0, horizon]");
    }
    if (is_grid()) {
        if (grid_axes.size() != dimension) throw ContractError("grid axes do not match the dimension");
        std::size_t product = 1;
        for (const auto& axis : grid_axes) {
            if (axis.empty()) throw ContractError("empty grid axis");
            product *= axis.size();
        }
        if (product != size()) throw ContractError("grid axes do not match the number of centers");
    }
}

KernelBasis make_grid_basis(const PopulationModel& m, double horizon, std::span<const std::size_t> counts) {
    const std::size_t n = m.dimension();
    if (counts.size() != n + 1)
        throw ContractError("expected " + std::to_string(n + 1) + " kernel counts (one per variable plus time)");
    if (std::any_of(counts.begin(), counts.end(), [](std::size_t c) { return c == 0; }))
        throw ContractError("kernel counts must be at least 1");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ContractError("horizon must be positive");

    KernelBasis basis;
    basis.dimension = n + 1;
    basis.horizon = horizon;
    basis.lengthscales.resize(n + 1);
    for (std::size_t d = 0; d <= n; ++d) {
        const double lower = d < n ? static_cast<double>(m.variables()[d].lower) : 0.0;
        const double upper = d < n ? static_cast<double>(m.variables()[d].upper) : horizon;
        basis.grid_axes.push_back(axis_points(lower, upper, counts[d], basis.lengthscales[d]));
    }

    std::size_t total = 1;
    for (std::size_t c : counts) total *= c;
    basis.centers.resize(total * (n + 1));
    std::vector<std::size_t> idx(n + 1, 0);
    for (std::size_t j = 0; j < total; ++j) {
        for (std::size_t d = 0; d <= n; ++d) basis.centers[j * (n + 1) + d] = basis.grid_axes[d][idx[d]];
        for (std::size_t d = n + 1; d-- > 0;) {
            if (++idx[d] < counts[d]) break;
            idx[d] = 0;
        }
    }
    basis.validate();
    return basis;
}

KernelScheduler::KernelScheduler(std::vector<std::string> actions, std::shared_ptr<const KernelBasis> basis)
    : KernelScheduler(actions, basis, std::vector<double>(actions.size() * (basis ? basis->size() + 1 : 0), 0.0)) {}

KernelScheduler::KernelScheduler(std::vector<std::string> actions, std::shared_ptr<const KernelBasis> basis,
                                 std::vector<double> parameters)
    : actions_(std::move(actions)), basis_(std::move(basis)), parameters_(std::move(parameters)) {
    if (!basis_) throw ContractError("scheduler needs a kernel basis");
    basis_->validate();
    if (actions_.empty()) throw ContractError("scheduler needs at least one action");
    if (parameters_.size() != actions_.size() * stride())
        throw ContractError("scheduler parameter vector has the wrong length");
    for (double w : parameters_)
        if (!std::isfinite(w)) throw ContractError("scheduler weights must be finite");
}

std::span<const double> KernelScheduler::weights(std::size_t action) const {
    if (action >= actions_.size()) throw ContractError("unknown action index");
    return {parameters_.data() + action * stride(), kernel_count()};
}

std::span<double> KernelScheduler::weights(std::size_t action) {
    if (action >= actions_.size()) throw ContractError("unknown action index");
    return {parameters_.data() + action * stride(), kernel_count()};
}

double KernelScheduler::bias(std::size_t action) const {
    if (action >= actions_.size()) throw ContractError("unknown action index");
    return parameters_[action * stride() + kernel_count()];
}

void KernelScheduler::set_bias(std::size_t action, double value) {
    if (action >= actions_.size()) throw ContractError("unknown action index");
    parameters_[action * stride() + kernel_count()] = value;
}

std::size_t KernelScheduler::action_index(std::string_view name) const {
    for (std::size_t i = 0; i < actions_.size(); ++i)
        if (actions_[i] == name) return i;
    throw ContractError("unknown action '" + std::string(name) + "'");
}

bool operator==(const KernelScheduler& a, const KernelScheduler& b) {
    const auto& ba = a.basis();
    const auto& bb = b.basis();
    return a.actions_ == b.actions_ && a.parameters_ == b.parameters_ && ba.dimension == bb.dimension &&
           ba.centers == bb.centers && ba.lengthscales == bb.lengthscales && ba.horizon == bb.horizon &&
           ba.grid_axes == bb.grid_axes;
}

PolicyEvaluator::PolicyEvaluator(const KernelScheduler& scheduler, const PopulationModel* model)
    : scheduler_(&scheduler) {
    const auto& basis = scheduler.basis();
    point_.resize(basis.dimension);
    if (!basis.is_grid()) return;

    factors_.resize(basis.dimension);
    for (std::size_t d = 0; d < basis.dimension; ++d) factors_[d].resize(basis.grid_axes[d].size());
    std::size_t largest = 1;
    if (basis.dimension > 0) largest = basis.size() / basis.grid_axes.back().size();
    buffer_a_.resize(largest);
    buffer_b_.resize(largest);

    if (model && model->dimension() + 1 == basis.dimension) {
        tables_.resize(model->dimension());
        table_lower_.resize(model->dimension());
        for (std::size_t d = 0; d < model->dimension(); ++d) {
            const auto& v = model->variables()[d];
            const auto values = static_cast<std::size_t>(v.upper - v.lower + 1);
            const std::size_t m = basis.grid_axes[d].size();
            if (values * m > max_table_entries) continue;
            table_lower_[d] = v.lower;
            tables_[d].resize(values * m);
            for (std::size_t k = 0; k < values; ++k)
                axis_factors(d, static_cast<double>(v.lower + static_cast<Count>(k)),
                             std::span<double>(tables_[d].data() + k * m, m));
        }
    }
}

void PolicyEvaluator::axis_factors(std::size_t d, double coordinate, std::span<double> out) const {
    const auto& basis = scheduler_->basis();
    const auto& axis = basis.grid_axes[d];
    const double inv = 1.0 / basis.lengthscales[d];
    for (std::size_t i = 0; i < axis.size(); ++i) {
        const double z = (coordinate - axis[i]) * inv;
        out[i] = std::exp(-0.5 * z * z);
    }
}

void PolicyEvaluator::contract(std::span<double> out) {
    const auto& sch = *scheduler_;
    const auto& axes = sch.basis().grid_axes;
    const std::size_t dims = axes.size();
    for (std::size_t a = 0; a < sch.action_count(); ++a) {
        const double* src = sch.weights(a).data();
        std::size_t len = sch.kernel_count();
        double* dst = buffer_a_.data();
        for (std::size_t d = dims; d-- > 0;) {
            const std::size_t m = axes[d].size();
            const std::size_t rows = len / m;
            const double* f = factors_[d].data();
            for (std::size_t r = 0; r < rows; ++r) {
                const double* row = src + r * m;
                double acc = 0.0;
                for (std::size_t i = 0; i < m; ++i) acc += row[i] * f[i];
                dst[r] = acc;
            }
            src = dst;
            dst = (dst == buffer_a_.data()) ? buffer_b_.data() : buffer_a_.data();
            len = rows;
        }
        out[a] = sch.bias(a) + src[0];
    }
}

void PolicyEvaluator::general(std::span<const double> x, double t, std::span<double> out) {
    const auto& sch = *scheduler_;
    const auto& basis = sch.basis();
    const std::size_t dims = basis.dimension;
    for (std::size_t a = 0; a < sch.action_count(); ++a) out[a] = sch.bias(a);
    for (std::size_t j = 0; j < basis.size(); ++j) {
        const auto c = basis.center(j);
        double q = 0.0;
        for (std::size_t d = 0; d < dims; ++d) {
            const double z = ((d + 1 < dims ? x[d] : t) - c[d]) / basis.lengthscales[d];
            q += z * z;
        }
        const double phi = std::exp(-0.5 * q);
        for (std::size_t a = 0; a < sch.action_count(); ++a) out[a] += sch.weights(a)[j] * phi;
    }
}

void PolicyEvaluator::logits(std::span<const double> x, double t, std::span<double> out) {
    const auto& basis = scheduler_->basis();
    if (x.size() + 1 != basis.dimension) throw ContractError("point dimension does not match the kernel basis");
    if (out.size() < scheduler_->action_count()) throw ContractError("logit buffer too small");
    if (!basis.is_grid()) return general(x, t, out);
    for (std::size_t d = 0; d < x.size(); ++d) axis_factors(d, x[d], factors_[d]);
    axis_factors(x.size(), t, factors_[x.size()]);
    contract(out);
}

void PolicyEvaluator::logits(std::span<const Count> s, double t, std::span<double> out) {
    const auto& basis = scheduler_->basis();
    if (s.size() + 1 != basis.dimension) throw ContractError("state dimension does not match the kernel basis");
    if (out.size() < scheduler_->action_count()) throw ContractError("logit buffer too small");
    if (!basis.is_grid()) {
        for (std::size_t d = 0; d < s.size(); ++d) point_[d] = static_cast<double>(s[d]);
        return general(std::span<const double>(point_.data(), s.size()), t, out);
    }
    for (std::size_t d = 0; d < s.size(); ++d) {
        const std::size_t m = factors_[d].size();
        if (d < tables_.size() && !tables_[d].empty()) {
            const auto k = static_cast<std::size_t>(s[d] - table_lower_[d]);
            if (s[d] >= table_lower_[d] && (k + 1) * m <= tables_[d].size()) {
                std::copy_n(tables_[d].data() + k * m, m, factors_[d].data());
                continue;
            }
        }
        axis_factors(d, static_cast<double>(s[d]), factors_[d]);
    }
    axis_factors(s.size(), t, factors_[s.size()]);
    contract(out);
}

void PolicyEvaluator::probabilities(std::span<const Count> s, double t, std::span<double> out) {
    logits(s, t, out);
    softmax_in_place(out.first(scheduler_->action_count()));
}

void PolicyEvaluator::probabilities(std::span<const double> x, double t, std::span<double> out) {
    logits(x, t, out);
    softmax_in_place(out.first(scheduler_->action_count()));
}

double eval_logit(const KernelScheduler& scheduler, std::size_t action, std::span<const double> x, double t) {
    if (action >= scheduler.action_count()) throw ContractError("unknown action index");
    PolicyEvaluator eval(scheduler);
    std::vector<double> out(scheduler.action_count());
    eval.logits(x, t, out);
    return out[action];
}

std::vector<double> action_probabilities(const KernelScheduler& scheduler, std::span<const Count> s, double t) {
    PolicyEvaluator eval(scheduler);
    std::vector<double> out(scheduler.action_count());
    eval.probabilities(s, t, out);
    return out;
}

std::vector<double> action_probabilities(const KernelScheduler& scheduler, std::span<const double> x, double t) {
    PolicyEvaluator eval(scheduler);
    std::vector<double> out(scheduler.action_count());
    eval.probabilities(x, t, out);
    return out;
}

std::size_t select_action(std::span<const double> probabilities, double u) {
    double cumulative = 0.0;
    for (std::size_t a = 0; a + 1 < probabilities.size(); ++a) {
        cumulative += probabilities[a];
        if (u < cumulative) return a;
    }
    return probabilities.size() - 1;
}

std::size_t sample_action(const KernelScheduler& scheduler, std::span<const Count> s, double t, RandomStream& rng) {
    const auto p = action_probabilities(scheduler, s, t);
    return select_action(p, rng.uniform_open());
}

Direction sample_direction(const KernelScheduler& scheduler, RandomStream& rng) {
    Direction g;
    g.values.resize(scheduler.parameters().size());
    for (double& x : g.values) x = rng.normal();
    return g;
}

std::pair<KernelScheduler, Direction> perturb(const KernelScheduler& scheduler, double eps, RandomStream& rng) {
    if (!(eps > 0.0)) throw ContractError("perturbation scale must be positive");
    Direction g = sample_direction(scheduler, rng);
    KernelScheduler moved = axpy_update(scheduler, eps, g);
    return {std::move(moved), std::move(g)};
}

KernelScheduler axpy_update(const KernelScheduler& scheduler, double coeff, const Direction& d) {
    const auto params = scheduler.parameters();
    if (d.values.size() != params.size()) throw ContractError("direction shape does not match the scheduler");
    std::vector<double> next(params.begin(), params.end());
    for (std::size_t i = 0; i < next.size(); ++i) next[i] += coeff * d.values[i];
    return KernelScheduler(scheduler.actions(), scheduler.shared_basis(), std::move(next));
}

KernelScheduler make_preset(std::string_view preset, std::vector<std::string> actions,
                            std::shared_ptr<const KernelBasis> basis, RandomStream& rng) {
    KernelScheduler sch(std::move(actions), std::move(basis));
    if (preset == "uniform") return sch;
    if (preset == "random") {
        for (double& w : sch.parameters()) w = rng.normal();
        return sch;
    }
    constexpr std::string_view suffix = "-only";
    if (preset.size() > suffix.size() && preset.substr(preset.size() - suffix.size()) == suffix) {
        const auto name = preset.substr(0, preset.size() - suffix.size());
        sch.set_bias(sch.action_index(name), constant_preset_bias);
        return sch;
    }
    throw ContractError("unknown scheduler preset '" + std::string(preset) +
                        "' (expected uniform, random or <action>-only)");
}

std::string serialize_scheduler(const KernelScheduler& scheduler) {
    const auto& basis = scheduler.basis();
    json doc;
    doc["format"] = "ctmdp-kernel-scheduler/1";
    doc["actions"] = scheduler.actions();
    json b;
    b["horizon"] = basis.horizon;
    b["lengthscales"] = basis.lengthscales;
    if (basis.is_grid()) b["grid_axes"] = basis.grid_axes;
    json centers = json::array();
    for (std::size_t j = 0; j < basis.size(); ++j) {
        const auto c = basis.center(j);
        centers.push_back(std::vector<double>(c.begin(), c.end()));
    }
    b["centers"] = std::move(centers);
    doc["basis"] = std::move(b);
    json weights = json::array();
    for (std::size_t a = 0; a < scheduler.action_count(); ++a) {
        const auto w = scheduler.weights(a);
        weights.push_back({{"action", scheduler.actions()[a]},
                           {"bias", scheduler.bias(a)},
                           {"values", std::vector<double>(w.begin(), w.end())}});
    }
    doc["weights"] = std::move(weights);
    return doc.dump(1) + "\n";
}

KernelScheduler parse_scheduler(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("scheduler document: ") + e.what(), e.byte == 0 ? 0 : e.byte - 1);
    }
    try {
        auto actions = doc.at("actions").get<std::vector<std::string>>();
        const auto& b = doc.at("basis");
        auto basis = std::make_shared<KernelBasis>();
        basis->horizon = b.at("horizon").get<double>();
        basis->lengthscales = b.at("lengthscales").get<std::vector<double>>();
        basis->dimension = basis->lengthscales.size();
        for (const auto& c : b.at("centers")) {
            const auto row = c.get<std::vector<double>>();
            if (row.size() != basis->dimension) throw ParseError("kernel center has the wrong dimension");
            basis->centers.insert(basis->centers.end(), row.begin(), row.end());
        }
        if (b.contains("grid_axes")) basis->grid_axes = b.at("grid_axes").get<std::vector<std::vector<double>>>();
        basis->validate();
        if (basis->is_grid()) {
            // Stored centers must be exactly the Cartesian product of the axes.
            std::vector<std::size_t> idx(basis->dimension, 0);
            for (std::size_t j = 0; j < basis->size(); ++j) {
                for (std::size_t d = 0; d < basis->dimension; ++d)
                    if (basis->center(j)[d] != basis->grid_axes[d][idx[d]])
                        throw ParseError("kernel centers do not match grid_axes");
                for (std::size_t d = basis->dimension; d-- > 0;) {
                    if (++idx[d] < basis->grid_axes[d].size()) break;
                    idx[d] = 0;
                }
            }
        }

        const std::size_t stride = basis->size() + 1;
        std::vector<double> params(actions.size() * stride, 0.0);
        const auto& weights = doc.at("weights");
        if (weights.size() != actions.size()) throw ParseError("expected one weight block per action");
        for (std::size_t a = 0; a < actions.size(); ++a) {
            const auto& block = weights[a];
            if (block.at("action").get<std::string>() != actions[a])
                throw ParseError("weight blocks must follow the action order");
            const auto values = block.at("values").get<std::vector<double>>();
            if (values.size() != basis->size()) throw ParseError("weight vector has the wrong length");
            std::copy(values.begin(), values.end(), params.begin() + static_cast<std::ptrdiff_t>(a * stride));
            params[a * stride + basis->size()] = block.value("bias", 0.0);
        }
        return KernelScheduler(std::move(actions), std::move(basis), std::move(params));
    } catch (const json::exception& e) {
        throw ParseError(std::string("scheduler document: ") + e.what());
    }
}

KernelScheduler load_scheduler(const std::filesystem::path& path) {
    return parse_scheduler(detail::read_text_file(path));
}

void save_scheduler(const KernelScheduler& scheduler, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << serialize_scheduler(scheduler);
}

}  // namespace ctmdp
