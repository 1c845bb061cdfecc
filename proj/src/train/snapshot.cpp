#include "ugrasp/train/snapshot.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ugrasp/rng.hpp"

namespace ugrasp::train {

net::MlpArchitecture ModelConfig::actor_arch() const {
    net::MlpArchitecture a;
    a.input_dim = net::patch_feature_count(patch_window);
    a.hidden = hidden;
    a.head_count = 4;
    a.input_scale = net::default_patch_scale(patch_window, height_reference);
    return a;
}

net::MlpArchitecture ModelConfig::critic_arch() const {
    net::MlpArchitecture a;
    a.input_dim = net::patch_feature_count(patch_window) + 2;
    a.hidden = hidden;
    a.head_count = critic.head_count();
    Eigen::VectorXd scale(a.input_dim);
    scale.head(net::patch_feature_count(patch_window)) =
        net::default_patch_scale(patch_window, height_reference);
    scale.tail(2).setOnes();  // action columns pass through unscaled
    a.input_scale = scale;
    return a;
}

MemberParams init_member(uint64_t seed, int member_index, const ModelConfig& config) {
    const uint64_t member_seed = seed + static_cast<uint64_t>(member_index);
    MemberParams m;
    m.actor = net::init_params(rng::key_for(member_seed, "actor-init"), config.actor_arch());
    m.critic = net::init_params(rng::key_for(member_seed, "critic-init"), config.critic_arch());
    return m;
}

std::vector<MemberParams> init_ensemble(uint64_t seed, int n_members, const ModelConfig& config) {
    std::vector<MemberParams> members;
    members.reserve(n_members);
    for (int j = 1; j <= n_members; ++j) members.push_back(init_member(seed, j, config));
    return members;
}

namespace {

void hash_doubles(uint64_t& h, const double* d, size_t n) {
    for (size_t i = 0; i < n; ++i) {
        uint64_t bits;
        std::memcpy(&bits, &d[i], 8);
        h ^= bits;
        h *= 0x100000001b3ULL;
    }
}

void hash_params(uint64_t& h, const net::MlpParams& p) {
    for (const auto& w : p.weights) hash_doubles(h, w.data(), static_cast<size_t>(w.size()));
    for (const auto& b : p.biases) hash_doubles(h, b.data(), static_cast<size_t>(b.size()));
}

}  // namespace

uint64_t member_checksum(const MemberParams& params) {
    uint64_t h = 0xcbf29ce484222325ULL;
    hash_params(h, params.actor);
    hash_params(h, params.critic);
    return h;
}

void save_ensemble(const std::vector<MemberParams>& members, const ModelConfig& config,
                   const std::string& dir) {
    std::filesystem::create_directories(dir);
    for (size_t j = 0; j < members.size(); ++j) {
        const std::string stem = dir + "/member_" + std::to_string(j + 1);
        net::save_params(members[j].actor, stem + "_actor.bin");
        net::save_params(members[j].critic, stem + "_critic.bin");
    }
    std::ofstream manifest(dir + "/ensemble.manifest");
    if (!manifest) throw std::runtime_error("cannot write ensemble manifest");
    manifest << "members " << members.size() << "\n";
    manifest << "patch_window " << config.patch_window << "\n";
    manifest << "hidden";
    for (int h : config.hidden) manifest << " " << h;
    manifest << "\nheight_reference " << config.height_reference << "\n";
    manifest << "critic " << critic::to_string(config.critic.kind) << "\n";
    manifest << "quantiles " << config.critic.quantile_count << "\n";
    manifest << "kappa " << config.critic.kappa << "\n";
    for (size_t j = 0; j < members.size(); ++j)
        manifest << "checksum " << j + 1 << " " << member_checksum(members[j]) << "\n";
}

std::pair<std::vector<MemberParams>, ModelConfig> load_ensemble(const std::string& dir) {
    std::ifstream manifest(dir + "/ensemble.manifest");
    if (!manifest) throw std::runtime_error("missing ensemble manifest in " + dir);

    ModelConfig config;
    size_t n_members = 0;
    std::string line;
    std::vector<std::pair<size_t, uint64_t>> checksums;
    while (std::getline(manifest, line)) {
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "members") ls >> n_members;
        else if (key == "patch_window") ls >> config.patch_window;
        else if (key == "hidden") {
            config.hidden.clear();
            int h;
            while (ls >> h) config.hidden.push_back(h);
        } else if (key == "height_reference") ls >> config.height_reference;
        else if (key == "critic") {
            std::string kind;
            ls >> kind;
            config.critic.kind = critic::critic_kind_from_string(kind);
        } else if (key == "quantiles") ls >> config.critic.quantile_count;
        else if (key == "kappa") ls >> config.critic.kappa;
        else if (key == "checksum") {
            size_t j;
            uint64_t sum;
            ls >> j >> sum;
            checksums.emplace_back(j, sum);
        }
    }
    if (n_members == 0) throw std::runtime_error("bad ensemble manifest in " + dir);

    std::vector<MemberParams> members;
    members.reserve(n_members);
    for (size_t j = 1; j <= n_members; ++j) {
        const std::string stem = dir + "/member_" + std::to_string(j);
        MemberParams m;
        m.actor = net::load_params(stem + "_actor.bin");
        m.critic = net::load_params(stem + "_critic.bin");
        members.push_back(std::move(m));
    }
    for (const auto& [j, sum] : checksums) {
        if (member_checksum(members[j - 1]) != sum)
            throw std::runtime_error("ensemble checksum mismatch in " + dir);
    }
    return {std::move(members), config};
}

}  // namespace ugrasp::train
