#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "ctmdp/model.hpp"
#include "ctmdp/scheduler.hpp"

namespace ctmdp::testing {

inline std::filesystem::path data_path(const std::string& relative) {
    return std::filesystem::path(CTMDP_DATA_DIR) / relative;
}

inline PopulationModel sis_model() { return load_model(data_path("models/sis.json")); }

inline PopulationModel bundled_model(const std::string& name) {
    return load_model(data_path("models/" + name + ".json"));
}

/// Scheduler with a single kernel (all weights zero) over [0, horizon].
inline KernelScheduler flat_scheduler(const PopulationModel& m, double horizon) {
    std::vector<std::size_t> counts(m.dimension() + 1, 1);
    auto basis = std::make_shared<const KernelBasis>(make_grid_basis(m, horizon, counts));
    return KernelScheduler(m.actions(), basis);
}

/// Scheduler that picks `action` with probability ~1 everywhere.
inline KernelScheduler constant_scheduler(const PopulationModel& m, double horizon, std::size_t action) {
    auto sch = flat_scheduler(m, horizon);
    sch.set_bias(action, 50.0);
    return sch;
}

/// Asymptotic Kolmogorov distribution: P(sqrt(n) D_n > x).
inline double kolmogorov_tail(double x) {
    if (x <= 0.0) return 1.0;
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * x * x);
        sum += (k % 2 == 1 ? 1.0 : -1.0) * term;
        if (term < 1e-16) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

}  // namespace ctmdp::testing
