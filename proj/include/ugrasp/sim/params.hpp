#pragma once

namespace ugrasp::sim {

// Hidden success-model and sensing-corruption constants. Defaults produce
// near-deterministic outcomes on opaque objects and visible false
// positives/negatives on the hard materials; everything is overridable
// through the run config.
struct SimParams {
    // success model
    double flatness_gain = 40.0;     // c_f in flatness = exp(-c_f * s^2)
    double alignment_power = 4.0;    // c_a in alignment = max(0, cos t)^c_a
    int normal_window = 2;           // half-width w; window is (2w+1)^2

    // sensing corruption
    double holes_transparent = 0.4;
    double holes_semi_transparent = 0.2;
    double depth_noise_factor = 0.15;  // sigma = factor * object height (transparent only)

    // intensity model (albedo per material, shaded by normal z)
    double albedo_floor = 0.15;
    double albedo_opaque = 0.80;
    double albedo_transparent = 0.22;
    double albedo_semi_transparent = 0.50;
    double albedo_curved_glossy = 0.95;
};

}  // namespace ugrasp::sim
