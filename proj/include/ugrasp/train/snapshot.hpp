#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ugrasp/critic/ensemble.hpp"
#include "ugrasp/net/mlp.hpp"
#include "ugrasp/net/patch.hpp"

namespace ugrasp::train {

// Architecture-level settings shared by every ensemble member.
struct ModelConfig {
    int patch_window = 5;
    std::vector<int> hidden = {64, 64};
    double height_reference = 6.0;  // input scaling for the height channels
    critic::CriticConfig critic;

    net::MlpArchitecture actor_arch() const;
    net::MlpArchitecture critic_arch() const;
};

// One independently initialized and trained actor-critic pair.
struct MemberParams {
    net::MlpParams actor;
    net::MlpParams critic;
};

// Member j (1-based) derives its nets from seed + j, so members differ.
MemberParams init_member(uint64_t seed, int member_index, const ModelConfig& config);
std::vector<MemberParams> init_ensemble(uint64_t seed, int n_members, const ModelConfig& config);

uint64_t member_checksum(const MemberParams& params);

// Checkpoint directory: member_<j>_actor.bin / member_<j>_critic.bin in the
// net-core binary format plus an ensemble manifest.
void save_ensemble(const std::vector<MemberParams>& members, const ModelConfig& config,
                   const std::string& dir);
std::pair<std::vector<MemberParams>, ModelConfig> load_ensemble(const std::string& dir);

}  // namespace ugrasp::train
