#pragma once

#include <cstdint>
#include <string>

#include "ugrasp/actor/explore.hpp"
#include "ugrasp/sim/scene_gen.hpp"
#include "ugrasp/train/offline.hpp"
#include "ugrasp/train/snapshot.hpp"

namespace ugrasp::train {

// Full experiment configuration. Defaults follow the reference setup:
// N = 3 members, batch 12, lr 1e-4, delta = 1, 4000 offline / 3000 online
// steps, 25-attempt episodes on bins of 10-17 mixed objects.
struct RunConfig {
    uint64_t seed = 1;
    int n_members = 3;
    ModelConfig model;
    actor::UcbConfig ucb;

    int training_steps = 3000;        // online ensemble-wide update budget
    int64_t grasp_budget = -1;        // -1: derived as training_steps / ratio
    int ratio_updates_per_grasp = 6;  // train-to-grasp ratio
    int pacing_slack = 6;             // token-bucket slack, async mode
    int publish_period = 10;          // member updates between parameter publishes
    int batch = 12;
    double lr = 1e-3;              // offline pretraining
    double online_critic_lr = 1e-3;
    double online_actor_lr = 3e-5;
    double online_critic_anchor = 3e-3;  // L2 pull toward the pretrained checkpoint
    double online_actor_anchor = 1e-1;
    double entropy_coeff = 0.01;
    int replay_capacity = 5000;

    int objects_min = 10;
    int objects_max = 17;
    sim::Difficulty difficulty = sim::Difficulty::mixed;
    int max_attempts_per_scene = 25;
    bool repeat_guard = true;  // mask the pixels of the last 3 failed grasps

    bool sync_mode = false;
    int checkpoint_every = 500;  // ensemble update steps
    bool export_maps = true;

    int pretrain_steps = 4000;
    int offline_scenes = 300;
    int offline_objects_min = 5;
    int offline_objects_max = 10;
    sim::Difficulty offline_difficulty = sim::Difficulty::easy;
    OfflineParams offline;
    sim::SimParams sim;
    sim::SceneGenParams scene_gen;

    std::string pretrained_dir;  // checkpoint to start from; empty = fresh init
    std::string out_dir = "run";

    int64_t effective_grasp_budget() const;
};

// key=value text config (one pair per line, '#' comments). Returns the keys
// it understood; unknown keys raise.
RunConfig load_run_config(const std::string& path, RunConfig base = RunConfig{});
void apply_config_pair(RunConfig& config, const std::string& key, const std::string& value);
void save_run_config(const RunConfig& config, const std::string& path);

}  // namespace ugrasp::train
