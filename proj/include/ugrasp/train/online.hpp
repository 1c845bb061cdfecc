#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ugrasp/actor/explore.hpp"
#include "ugrasp/train/param_buffer.hpp"
#include "ugrasp/train/replay.hpp"
#include "ugrasp/train/run_config.hpp"

namespace ugrasp::train {

struct OnlineStepOutcome {
    Transition transition;
    sim::Scene next_scene;
    actor::PixelSelection selection;
    sim::GraspOutcome grasp;
    double delta_used = 0.0;
    critic::CriticMaps maps;
    Grid ucb;
};

// render -> per-member prediction -> ensemble stats -> UCB map -> pixel
// selection -> grasp execution, packaged as a Transition. Deterministic given
// (scene, members, t, attempt_index). The optional observation/patch caches
// skip re-rendering an unchanged scene; masked_pixels implements the
// no-repeat guard.
OnlineStepOutcome online_step(const sim::Scene& scene,
                              const std::vector<const MemberParams*>& members,
                              const ModelConfig& model, const actor::UcbConfig& ucb_config,
                              int64_t t, uint64_t attempt_index,
                              const sim::SimParams& sim_params = sim::SimParams{},
                              const std::vector<std::pair<int, int>>* masked_pixels = nullptr,
                              std::shared_ptr<const sim::Observation> obs_cache = nullptr,
                              const Eigen::MatrixXd* patches_cache = nullptr);

struct LearnerState {
    MemberParams params;
    MemberParams anchor;  // pretrained snapshot the online updates pull toward
    net::AdamState critic_adam;
    net::AdamState actor_adam;
    int64_t update_steps = 0;
    rng::Stream sample_stream;
    rng::Stream noise_stream;
};

LearnerState make_learner_state(MemberParams params, uint64_t run_seed, int member_index);

struct LearnerHyper {
    double critic_lr = 1e-3;
    double actor_lr = 1e-4;
    double entropy_coeff = 0.01;
    // L2 pull toward the pretrained parameters; keeps behavior on unvisited
    // pixels intact while repeated samples at visited pixels still dominate
    double critic_anchor = 0.0;
    double actor_anchor = 0.0;
};

// One update step: a critic Adam step and an actor Adam step on a batch
// sampled uniformly from replay, losses evaluated only at each transition's
// stored pixel with its stored action and reward. No-op on an empty buffer.
bool learner_update(LearnerState& state, const ReplayBuffer& replay, int batch,
                    const LearnerHyper& hyper, const ModelConfig& model);

struct RunArtifacts {
    std::string out_dir;
    int64_t grasps = 0;
    int64_t successes = 0;
    int64_t updates = 0;
    int episodes = 0;
    double mean_episode_clearing = 0.0;
    double grasp_success_rate = 0.0;
    double measured_ratio = 0.0;
    int64_t max_staleness = 0;
    std::vector<std::pair<int64_t, std::string>> checkpoints;  // (step, directory)
    bool failed = false;
    std::string failure;
};

// The full offline-to-online pipeline on a run directory: metrics.jsonl (one
// record per grasp), checkpoints every checkpoint_every steps, map exports,
// and a summary. config.sync_mode selects the deterministic single-threaded
// twin of the asynchronous actor/learner architecture.
RunArtifacts run_pipeline(const RunConfig& config);

struct EpisodeResult {
    uint64_t scene_seed = 0;
    int initial_objects = 0;
    int attempts = 0;
    int successes = 0;
    int remaining = 0;
    double clearing_rate = 0.0;
    double grasp_success_rate = 0.0;
};

// Pure-exploitation episode (delta = 0) on a fixed seeded scene; terminates
// early when the bin is cleared.
EpisodeResult run_eval_episode(const std::vector<MemberParams>& members, const ModelConfig& model,
                               uint64_t scene_seed, int n_objects, int max_attempts,
                               const RunConfig& config);

}  // namespace ugrasp::train
