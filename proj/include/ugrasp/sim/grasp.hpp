#pragma once

#include <cstdint>
#include <optional>

#include "ugrasp/sim/params.hpp"
#include "ugrasp/sim/scene.hpp"

namespace ugrasp::sim {

// Suction grasp at a pixel with an approach tilt. The grasp depth is read
// from the observed height map at execution time, not stored here.
struct GraspAction {
    int row = 0;
    int col = 0;
    double alpha = 0.0;  // tilt about x (radians), |alpha| <= pi/4
    double beta = 0.0;   // tilt about y (radians), |beta| <= pi/4
};

struct GraspOutcome {
    int reward = 0;  // 1 on success
    std::optional<int> removed_object_id;
    double true_success_prob = 0.0;  // diagnostic only, never shown to the learner
};

// Approach direction of the gripper for tilt angles (alpha, beta); points
// downward, (0, 0, -1) for a straight-down grasp.
Vec3 approach_direction(double alpha, double beta);

// Inverse of approach_direction: tilt angles whose approach axis matches the
// given downward direction. Used to turn -normal into an action target.
void tilt_from_direction(const Vec3& dir, double& alpha, double& beta);

// max(0, cos angle(approach, inward normal))^alignment_power
double alignment_factor(const Vec3& approach, const Vec3& outward_normal, double power);

// Standard deviation of the true normals in the (2w+1)^2 window centered on
// the pixel: sqrt of mean squared deviation from the window-mean vector.
double true_normal_window_std(const Scene& scene, int r, int c, int half_width);

// Hidden environment model: base graspability of the object under the pixel,
// discounted by surface flatness and approach/normal alignment. 0 on empty
// pixels. Invariant to sensing corruption.
double true_success_prob(const Scene& scene, const GraspAction& action,
                         const SimParams& params = SimParams{});

// Draws the Bernoulli outcome from the counter-based stream keyed by
// (scene.rng_seed, attempt_index). Success removes the topmost object at the
// pixel; failure leaves the scene unchanged.
std::pair<GraspOutcome, Scene> execute_grasp(const Scene& scene, const GraspAction& action,
                                             uint64_t attempt_index,
                                             const SimParams& params = SimParams{});

// (initial - remaining) / initial. Throws std::invalid_argument("empty bin")
// when initial == 0.
double clearing_rate(int initial_count, int remaining_count);

}  // namespace ugrasp::sim
