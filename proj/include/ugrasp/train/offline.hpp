#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ugrasp/sim/scene_gen.hpp"
#include "ugrasp/train/snapshot.hpp"

namespace ugrasp::train {

struct OfflineParams {
    double floor_threshold = 0.5;  // eps_h, background subtraction on observed height
    double label_gain = 20.0;      // c_q in q = 1 / (1 + c_q * s_normals)
    int normal_window = 2;         // same half-width as the success model
    int max_translation = 8;       // augmentation shift range (cells)
    // fraction of each pretraining batch drawn from background pixels, whose
    // reward label is the map's zero; the critic must know empty pixels fail
    double background_fraction = 0.25;
};

// Approximated ground truth for one scene, computed from the *observed*
// grids: valid mask by background subtraction, reward labels from the
// inverse windowed normal spread, action labels from the negative normal.
struct OfflineSample {
    std::shared_ptr<const sim::Observation> obs;
    Grid target_q;         // [0, 1] on valid pixels, 0 elsewhere
    Grid3 target_action;   // H x W x 2 tilt angles
    MaskGrid valid_mask;
    uint64_t scene_seed = 0;
    std::vector<std::pair<int, int>> valid_pixels;
    std::vector<std::pair<int, int>> background_pixels;  // valid_mask == 0
};

// Windowed standard deviation of normal vectors (mean squared deviation from
// the window-mean vector), clamped at grid edges.
double normal_window_std(const Grid3& normals, int r, int c, int half_width);

OfflineSample label_observation(std::shared_ptr<const sim::Observation> obs,
                                const MaskGrid& bin_mask, uint64_t scene_seed,
                                const OfflineParams& params = OfflineParams{});

std::vector<OfflineSample> build_offline_dataset(uint64_t seed, int n_scenes, int objects_min,
                                                 int objects_max, sim::Difficulty difficulty,
                                                 const OfflineParams& params = OfflineParams{},
                                                 const sim::SceneGenParams& gen = sim::SceneGenParams{},
                                                 const sim::SimParams& sim = sim::SimParams{});

// One augmented training item: 90-degree-multiple rotation plus an integer
// translation, with the normal components and action targets remapped to the
// rotated frame. Labels stay exact because the scalar reward label is
// rotation-invariant and the action is recomputed from the rotated normal.
struct TrainingItem {
    Eigen::VectorXd patch;
    double target_q = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
};

TrainingItem augmented_item(const OfflineSample& sample, int r, int c, int quarter_turns, int dr,
                            int dc, int patch_window, const sim::SimParams& sim = sim::SimParams{});

// Supervised pretraining: per member, seeded batch streams; critics regress
// target_q through their own losses, actors regress target_action on the
// mean heads. Throws on divergence (non-finite loss).
std::vector<MemberParams> pretrain(const std::vector<OfflineSample>& dataset,
                                   std::vector<MemberParams> members, const ModelConfig& model,
                                   int steps, int batch, double lr, uint64_t seed,
                                   const OfflineParams& params = OfflineParams{},
                                   const sim::SimParams& sim = sim::SimParams{});

// Binary sample files plus a text manifest; re-running with the same inputs
// reproduces identical bytes.
void save_offline_dataset(const std::vector<OfflineSample>& dataset, const std::string& dir);
std::vector<OfflineSample> load_offline_dataset(const std::string& dir);

}  // namespace ugrasp::train
