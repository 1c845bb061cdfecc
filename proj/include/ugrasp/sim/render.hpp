#pragma once

#include "ugrasp/grid.hpp"
#include "ugrasp/sim/params.hpp"
#include "ugrasp/sim/scene.hpp"

namespace ugrasp::sim {

// What the learner sees. Immutable value, safe to share across threads.
struct Observation {
    Grid height;      // >= 0 everywhere, 0 on the bin floor
    Grid3 normals;    // H x W x 3 unit vectors, (0,0,1) on the floor
    Grid intensity;   // [0, 1]
};

// Exact geometry, no sensing corruption. The success model sees this.
Observation render_true(const Scene& scene, const SimParams& params = SimParams{});

// Sensed observation. Transparent materials read the bin floor with
// per-pixel hole probability and carry Gaussian depth noise over the
// footprint; opaque objects render noise-free. Deterministic given
// scene.rng_seed (counter-based per-pixel draws).
Observation render(const Scene& scene, const SimParams& params = SimParams{});

}  // namespace ugrasp::sim
