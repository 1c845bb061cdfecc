#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "ugrasp/train/online.hpp"

namespace ugrasp::harness {

// Raised when a required input (checkpoint, dataset, config) is absent;
// the CLI maps it to its documented exit code.
struct MissingInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EvalProtocol {
    std::vector<uint64_t> scene_seeds = {9001, 9002};
    int n_objects = 17;
    int max_attempts = 25;
    int repetitions = 1;  // greedy evaluation is deterministic; kept for protocol completeness
};

struct RunMetrics {
    double grasp_success_rate = 0.0;
    double clearing_rate = 0.0;  // pooled: removed / initial over all episodes
    std::vector<train::EpisodeResult> episodes;
    int64_t checkpoint_step = -1;
};

RunMetrics evaluate_members(const std::vector<train::MemberParams>& members,
                            const train::ModelConfig& model, const EvalProtocol& protocol,
                            const train::RunConfig& base);
RunMetrics evaluate_checkpoint(const std::string& checkpoint_dir, const EvalProtocol& protocol,
                               const train::RunConfig& base);

// gen-offline: dataset files plus manifest; deterministic per seed.
void cmd_gen_offline(const train::RunConfig& config, int n_scenes, int objects_min,
                     int objects_max, sim::Difficulty difficulty, const std::string& out_dir);

// pretrain: offline supervised training of a fresh ensemble, saved as a
// checkpoint directory.
void cmd_pretrain(const train::RunConfig& config, const std::string& dataset_dir,
                  const std::string& out_dir);

// online: the full pipeline (async unless config.sync_mode).
train::RunArtifacts cmd_online(const train::RunConfig& config);

// eval: fixed-scene protocol at delta = 0 on a checkpoint.
RunMetrics cmd_eval(const std::string& checkpoint_dir, const EvalProtocol& protocol,
                    const train::RunConfig& base, const std::string& out_json);

struct AblationCell {
    std::string name;     // e.g. "mv-epi-adaptive" or "qr20-epi"
    std::string critic;   // mv | qr
    int heads = 0;        // quantile count, 0 for mv
    std::string uncertainty;
    std::string schedule;
    uint64_t seed = 0;
    bool ok = false;
    std::string error;
    double grasp_success_rate = 0.0;
    double clearing_rate = 0.0;
};

struct AblationTable {
    std::vector<AblationCell> rows;
    std::string csv_path;
};

// Cross product {critic} x {uncertainty mode} x seeds (x heads for qr), each
// cell pretrained (cached per critic/heads/seed), run online, and evaluated.
// Cell failures are recorded and the sweep continues.
AblationTable cmd_ablate(const train::RunConfig& base, const std::vector<std::string>& critics,
                         const std::vector<std::string>& uncertainty_modes,
                         const std::vector<int>& head_counts,
                         const std::vector<uint64_t>& seeds, const EvalProtocol& protocol,
                         const std::string& out_dir, int jobs);

// export-maps: q_mean, v_ale, v_epi, v_all and Q_UCB for a seeded scene as
// CSV + 16-bit PGM with min/max sidecars.
void cmd_export_maps(const std::string& checkpoint_dir, uint64_t scene_seed,
                     const train::RunConfig& base, const std::string& out_dir);

}  // namespace ugrasp::harness
