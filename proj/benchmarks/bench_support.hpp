#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ctmdp/model.hpp"
#include "ctmdp/scheduler.hpp"

namespace bench {

inline ctmdp::PopulationModel load(const std::string& name) {
    return ctmdp::load_model(std::string(CTMDP_DATA_DIR) + "/models/" + name + ".json");
}

// Random scheduler over a grid basis, weights scaled so both actions occur.
inline ctmdp::KernelScheduler random_scheduler(const ctmdp::PopulationModel& m, double horizon,
                                               std::vector<std::size_t> counts, std::uint64_t seed = 7) {
    auto basis = std::make_shared<const ctmdp::KernelBasis>(ctmdp::make_grid_basis(m, horizon, counts));
    ctmdp::RandomStream rng(seed);
    return ctmdp::make_preset("random", m.actions(), basis, rng);
}

}  // namespace bench
