#pragma once

#include <cstdint>

#include "irrkit/assessment.hpp"

namespace irrkit::synthgen {

// Synthetic campaign: per (session, topic) a hidden binary truth vector is
// drawn with `prevalence`; each assessor copies the truth and flips each
// label independently with probability `error_rate`; cells go missing with
// probability `missing_rate`. The seed fully determines the output.
struct SimulationConfig {
    int assessors = 5;
    int documents = 50;
    double prevalence = 0.5;
    double error_rate = 0.0;
    double missing_rate = 0.0;
    std::uint64_t seed = 0;
    int sessions = 1;
    int topics = 1;
};

// Throws std::invalid_argument when counts are < 1 or probabilities leave
// [0, 1]. One generator stream per (seed, session, topic, assessor): adding
// assessors never perturbs the labels of existing ones.
Dataset generate(const SimulationConfig& config);

}  // namespace irrkit::synthgen
