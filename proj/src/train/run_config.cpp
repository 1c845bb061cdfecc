#include "ugrasp/train/run_config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ugrasp::train {

int64_t RunConfig::effective_grasp_budget() const {
    if (grasp_budget >= 0) return grasp_budget;
    return (training_steps + ratio_updates_per_grasp - 1) / ratio_updates_per_grasp;
}

void apply_config_pair(RunConfig& c, const std::string& key, const std::string& value) {
    auto as_i64 = [&] { return std::stoll(value); };
    auto as_int = [&] { return std::stoi(value); };
    auto as_double = [&] { return std::stod(value); };
    auto as_bool = [&] {
        if (value == "true" || value == "1" || value == "on") return true;
        if (value == "false" || value == "0" || value == "off") return false;
        throw std::invalid_argument("bad boolean: " + value);
    };

    if (key == "seed") c.seed = static_cast<uint64_t>(as_i64());
    else if (key == "members" || key == "n") c.n_members = as_int();
    else if (key == "critic") c.model.critic.kind = critic::critic_kind_from_string(value);
    else if (key == "quantiles" || key == "k") c.model.critic.quantile_count = as_int();
    else if (key == "kappa") c.model.critic.kappa = as_double();
    else if (key == "uncertainty") c.ucb.kind = actor::uncertainty_kind_from_string(value);
    else if (key == "delta") c.ucb.delta = as_double();
    else if (key == "schedule") c.ucb.schedule = actor::schedule_kind_from_string(value);
    else if (key == "ucb_on_std") c.ucb.on_std = as_bool();
    else if (key == "steps") c.training_steps = as_int();
    else if (key == "budget") c.grasp_budget = as_i64();
    else if (key == "ratio") c.ratio_updates_per_grasp = as_int();
    else if (key == "publish_period") c.publish_period = as_int();
    else if (key == "batch") c.batch = as_int();
    else if (key == "lr") c.lr = as_double();
    else if (key == "online_critic_lr") c.online_critic_lr = as_double();
    else if (key == "online_actor_lr") c.online_actor_lr = as_double();
    else if (key == "online_critic_anchor") c.online_critic_anchor = as_double();
    else if (key == "online_actor_anchor") c.online_actor_anchor = as_double();
    else if (key == "entropy_coeff") c.entropy_coeff = as_double();
    else if (key == "replay_capacity") c.replay_capacity = as_int();
    else if (key == "objects_min") c.objects_min = as_int();
    else if (key == "objects_max") c.objects_max = as_int();
    else if (key == "difficulty") c.difficulty = sim::difficulty_from_string(value);
    else if (key == "max_attempts") c.max_attempts_per_scene = as_int();
    else if (key == "repeat_guard") c.repeat_guard = as_bool();
    else if (key == "sync") c.sync_mode = as_bool();
    else if (key == "checkpoint_every") c.checkpoint_every = as_int();
    else if (key == "export_maps") c.export_maps = as_bool();
    else if (key == "pretrain_steps") c.pretrain_steps = as_int();
    else if (key == "offline_scenes") c.offline_scenes = as_int();
    else if (key == "offline_objects_min") c.offline_objects_min = as_int();
    else if (key == "offline_objects_max") c.offline_objects_max = as_int();
    else if (key == "offline_difficulty") c.offline_difficulty = sim::difficulty_from_string(value);
    else if (key == "pretrained") c.pretrained_dir = value;
    else if (key == "out") c.out_dir = value;
    else if (key == "patch_window") c.model.patch_window = as_int();
    else if (key == "height_reference") c.model.height_reference = as_double();
    else if (key == "floor_threshold") c.offline.floor_threshold = as_double();
    else if (key == "label_gain") c.offline.label_gain = as_double();
    else if (key == "flatness_gain") c.sim.flatness_gain = as_double();
    else if (key == "alignment_power") c.sim.alignment_power = as_double();
    else if (key == "holes_transparent") c.sim.holes_transparent = as_double();
    else if (key == "holes_semi") c.sim.holes_semi_transparent = as_double();
    else if (key == "depth_noise") c.sim.depth_noise_factor = as_double();
    else if (key == "grid") { c.scene_gen.rows = as_int(); c.scene_gen.cols = c.scene_gen.rows; }
    else if (key == "mixed_easy_fraction") c.scene_gen.mixed_easy_fraction = as_double();
    else throw std::invalid_argument("unknown config key: " + key);
}

RunConfig load_run_config(const std::string& path, RunConfig base) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read config " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::string trimmed;
        for (char ch : line)
            if (!isspace(static_cast<unsigned char>(ch)) || !trimmed.empty()) trimmed += ch;
        while (!trimmed.empty() && isspace(static_cast<unsigned char>(trimmed.back())))
            trimmed.pop_back();
        if (trimmed.empty()) continue;
        const auto eq = trimmed.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected key=value");
        std::string key = trimmed.substr(0, eq);
        std::string value = trimmed.substr(eq + 1);
        while (!key.empty() && isspace(static_cast<unsigned char>(key.back()))) key.pop_back();
        while (!value.empty() && isspace(static_cast<unsigned char>(value.front())))
            value.erase(value.begin());
        apply_config_pair(base, key, value);
    }
    return base;
}

void save_run_config(const RunConfig& c, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write config " + path);
    f << "seed=" << c.seed << "\n";
    f << "members=" << c.n_members << "\n";
    f << "critic=" << critic::to_string(c.model.critic.kind) << "\n";
    f << "quantiles=" << c.model.critic.quantile_count << "\n";
    f << "kappa=" << c.model.critic.kappa << "\n";
    f << "uncertainty=" << actor::to_string(c.ucb.kind) << "\n";
    f << "delta=" << c.ucb.delta << "\n";
    f << "schedule=" << actor::to_string(c.ucb.schedule) << "\n";
    f << "steps=" << c.training_steps << "\n";
    f << "budget=" << c.effective_grasp_budget() << "\n";
    f << "ratio=" << c.ratio_updates_per_grasp << "\n";
    f << "publish_period=" << c.publish_period << "\n";
    f << "batch=" << c.batch << "\n";
    f << "lr=" << c.lr << "\n";
    f << "online_critic_lr=" << c.online_critic_lr << "\n";
    f << "online_actor_lr=" << c.online_actor_lr << "\n";
    f << "online_critic_anchor=" << c.online_critic_anchor << "\n";
    f << "online_actor_anchor=" << c.online_actor_anchor << "\n";
    f << "entropy_coeff=" << c.entropy_coeff << "\n";
    f << "replay_capacity=" << c.replay_capacity << "\n";
    f << "objects_min=" << c.objects_min << "\n";
    f << "objects_max=" << c.objects_max << "\n";
    f << "difficulty=" << sim::to_string(c.difficulty) << "\n";
    f << "max_attempts=" << c.max_attempts_per_scene << "\n";
    f << "repeat_guard=" << (c.repeat_guard ? "true" : "false") << "\n";
    f << "sync=" << (c.sync_mode ? "true" : "false") << "\n";
    f << "checkpoint_every=" << c.checkpoint_every << "\n";
    f << "export_maps=" << (c.export_maps ? "true" : "false") << "\n";
    f << "pretrain_steps=" << c.pretrain_steps << "\n";
    f << "offline_scenes=" << c.offline_scenes << "\n";
    f << "offline_objects_min=" << c.offline_objects_min << "\n";
    f << "offline_objects_max=" << c.offline_objects_max << "\n";
    f << "offline_difficulty=" << sim::to_string(c.offline_difficulty) << "\n";
    if (!c.pretrained_dir.empty()) f << "pretrained=" << c.pretrained_dir << "\n";
    f << "out=" << c.out_dir << "\n";
}

}  // namespace ugrasp::train
