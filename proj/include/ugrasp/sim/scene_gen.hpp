#pragma once

#include <cstdint>

#include "ugrasp/sim/scene.hpp"

namespace ugrasp::sim {

struct SceneGenParams {
    int rows = 64;
    int cols = 64;
    int mask_border = 2;
    double min_footprint = 3.5;  // cells, length/width range
    double max_footprint = 7.0;
    double min_height = 2.0;
    double max_height = 6.0;
    double dome_min_footprint = 5.0;  // domes stay shallow enough to grasp at the apex
    double dome_min_height = 1.5;
    double dome_max_height = 3.0;
    double mixed_easy_fraction = 0.30;
    int max_retries_per_object = 400;

    // base graspability ranges per material
    double grasp_opaque_lo = 0.88, grasp_opaque_hi = 0.98;
    double grasp_transparent_lo = 0.85, grasp_transparent_hi = 0.95;
    double grasp_semi_lo = 0.20, grasp_semi_hi = 0.45;
    double grasp_glossy_lo = 0.75, grasp_glossy_hi = 0.90;
};

// Deterministic: identical (seed, n_objects, difficulty, params) always yields
// an identical Scene. Object footprints are pairwise disjoint and inside the
// bin mask. Throws std::runtime_error("scene overflow") when placement fails
// after bounded retries.
Scene generate_scene(uint64_t seed, int n_objects, Difficulty difficulty,
                     const SceneGenParams& params = SceneGenParams{});

}  // namespace ugrasp::sim
