// ugrasp experiment harness: dataset generation, pretraining, online runs,
// fixed-scene evaluation, ablation sweeps and map export.
//
// Exit codes: 0 success, 1 usage error, 2 bad configuration value,
// 3 missing input, 4 runtime failure.

#include <CLI11.hpp>
#include <iostream>
#include <thread>

#include "ugrasp/harness/commands.hpp"

namespace {

struct GlobalOpts {
    uint64_t seed = 1;
    std::string out;
    std::string config_path;
    std::vector<std::string> overrides;
};

ugrasp::train::RunConfig resolve_config(const GlobalOpts& g) {
    ugrasp::train::RunConfig config;
    if (!g.config_path.empty()) config = ugrasp::train::load_run_config(g.config_path, config);
    for (const std::string& kv : g.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("override must be key=value: " + kv);
        ugrasp::train::apply_config_pair(config, kv.substr(0, eq), kv.substr(eq + 1));
    }
    return config;
}

std::vector<uint64_t> parse_seed_list(const std::string& spec) {
    // "1..10" or "1,2,3"
    std::vector<uint64_t> seeds;
    const auto dots = spec.find("..");
    if (dots != std::string::npos) {
        const uint64_t lo = std::stoull(spec.substr(0, dots));
        const uint64_t hi = std::stoull(spec.substr(dots + 2));
        for (uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
        return seeds;
    }
    size_t pos = 0;
    while (pos < spec.size()) {
        const auto comma = spec.find(',', pos);
        const std::string tok = spec.substr(pos, comma == std::string::npos ? spec.npos
                                                                            : comma - pos);
        if (!tok.empty()) seeds.push_back(std::stoull(tok));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return seeds;
}

std::pair<int, int> parse_range(const std::string& spec) {
    const auto dots = spec.find("..");
    if (dots == std::string::npos) {
        const int v = std::stoi(spec);
        return {v, v};
    }
    return {std::stoi(spec.substr(0, dots)), std::stoi(spec.substr(dots + 2))};
}

}  // namespace

int main(int argc, char** argv) {
    using namespace ugrasp;

    CLI::App app{"uncertainty-driven online grasp learning harness"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--seed", g.seed, "base random seed");
    app.add_option("--out", g.out, "output directory");
    app.add_option("--config", g.config_path, "key=value config file");
    app.add_option("--set", g.overrides, "config override key=value (repeatable)");

    // gen-offline
    auto* gen = app.add_subcommand("gen-offline", "generate the offline dataset");
    int gen_scenes = 300;
    std::string gen_objects = "5..10";
    std::string gen_difficulty = "easy";
    gen->add_option("--scenes", gen_scenes, "number of scenes");
    gen->add_option("--objects", gen_objects, "objects per scene, e.g. 5..10");
    gen->add_option("--difficulty", gen_difficulty, "easy | hard | mixed");

    // pretrain
    auto* pre = app.add_subcommand("pretrain", "offline supervised pretraining");
    std::string pre_dataset;
    pre->add_option("--dataset", pre_dataset, "offline dataset directory")->required();
    int pre_steps = -1;
    pre->add_option("--steps", pre_steps, "pretraining steps (default 4000)");
    std::string pre_critic;
    pre->add_option("--critic", pre_critic, "mv | qr");
    int pre_heads = -1;
    pre->add_option("--heads", pre_heads, "quantile heads (qr)");

    // online
    auto* onl = app.add_subcommand("online", "online learning run");
    std::string onl_pretrained;
    onl->add_option("--pretrained", onl_pretrained, "pretrained checkpoint directory");
    int onl_steps = -1;
    onl->add_option("--steps", onl_steps, "online training steps (default 3000)");
    std::string onl_critic, onl_uncertainty, onl_schedule;
    onl->add_option("--critic", onl_critic, "mv | qr");
    onl->add_option("--uncertainty", onl_uncertainty, "none | ale | epi | all");
    onl->add_option("--schedule", onl_schedule, "fixed | cosine");
    int onl_heads = -1;
    onl->add_option("--heads", onl_heads, "quantile heads (qr)");
    double onl_delta = -1.0;
    onl->add_option("--delta", onl_delta, "UCB ratio");
    bool onl_sync = false;
    onl->add_flag("--sync", onl_sync, "deterministic single-threaded mode");
    bool onl_no_guard = false;
    onl->add_flag("--no-repeat-guard", onl_no_guard, "disable the failed-pixel guard");

    // eval
    auto* ev = app.add_subcommand("eval", "fixed-scene evaluation of a checkpoint");
    std::string ev_checkpoint;
    ev->add_option("--checkpoint", ev_checkpoint, "checkpoint directory")->required();
    std::string ev_seeds = "9001,9002";
    ev->add_option("--scene-seeds", ev_seeds, "evaluation scene seeds");
    int ev_objects = 17, ev_attempts = 25;
    ev->add_option("--objects", ev_objects, "objects per evaluation scene");
    ev->add_option("--attempts", ev_attempts, "attempt budget per episode");

    // ablate
    auto* ab = app.add_subcommand("ablate", "exploration/critic ablation sweep");
    std::string ab_critics = "mv,qr";
    std::string ab_modes = "none,ale,epi,all,epi-adaptive";
    std::string ab_heads = "10,20,100";
    std::string ab_seeds = "1..10";
    int ab_jobs = static_cast<int>(std::thread::hardware_concurrency());
    ab->add_option("--critics", ab_critics, "comma list: mv,qr");
    ab->add_option("--uncertainties", ab_modes, "comma list of exploration modes");
    ab->add_option("--heads", ab_heads, "comma list of quantile head counts (qr)");
    ab->add_option("--seeds", ab_seeds, "seed list or range, e.g. 1..10");
    ab->add_option("--jobs", ab_jobs, "parallel cells");

    // export-maps
    auto* ex = app.add_subcommand("export-maps", "export prediction/uncertainty maps");
    std::string ex_checkpoint;
    ex->add_option("--checkpoint", ex_checkpoint, "checkpoint directory")->required();
    uint64_t ex_scene_seed = 9001;
    ex->add_option("--scene-seed", ex_scene_seed, "scene seed to render");

    CLI11_PARSE(app, argc, argv);

    try {
        train::RunConfig config = resolve_config(g);
        config.seed = g.seed;
        if (!g.out.empty()) config.out_dir = g.out;

        if (gen->parsed()) {
            const auto [lo, hi] = parse_range(gen_objects);
            harness::cmd_gen_offline(config, gen_scenes, lo, hi,
                                     sim::difficulty_from_string(gen_difficulty),
                                     config.out_dir);
            std::cout << "wrote " << gen_scenes << " offline samples to " << config.out_dir
                      << "\n";
        } else if (pre->parsed()) {
            if (pre_steps >= 0) config.pretrain_steps = pre_steps;
            if (!pre_critic.empty())
                config.model.critic.kind = critic::critic_kind_from_string(pre_critic);
            if (pre_heads > 0) config.model.critic.quantile_count = pre_heads;
            harness::cmd_pretrain(config, pre_dataset, config.out_dir);
            std::cout << "pretrained ensemble saved to " << config.out_dir << "\n";
        } else if (onl->parsed()) {
            if (onl_steps >= 0) config.training_steps = onl_steps;
            if (!onl_critic.empty())
                config.model.critic.kind = critic::critic_kind_from_string(onl_critic);
            if (onl_heads > 0) config.model.critic.quantile_count = onl_heads;
            if (!onl_uncertainty.empty())
                config.ucb.kind = actor::uncertainty_kind_from_string(onl_uncertainty);
            if (!onl_schedule.empty())
                config.ucb.schedule = actor::schedule_kind_from_string(onl_schedule);
            if (onl_delta >= 0.0) config.ucb.delta = onl_delta;
            if (onl_sync) config.sync_mode = true;
            if (onl_no_guard) config.repeat_guard = false;
            if (!onl_pretrained.empty()) config.pretrained_dir = onl_pretrained;
            config.ucb.horizon = config.training_steps;
            const train::RunArtifacts art = harness::cmd_online(config);
            if (art.failed) {
                std::cerr << "run failed: " << art.failure << "\n";
                return 4;
            }
            std::cout << "run complete: " << art.grasps << " grasps, " << art.updates
                      << " updates (ratio " << art.measured_ratio << "), success rate "
                      << art.grasp_success_rate << ", mean clearing "
                      << art.mean_episode_clearing << "\n";
        } else if (ev->parsed()) {
            harness::EvalProtocol protocol;
            protocol.scene_seeds = parse_seed_list(ev_seeds);
            protocol.n_objects = ev_objects;
            protocol.max_attempts = ev_attempts;
            const std::string out_json =
                config.out_dir.empty() ? "eval.json" : config.out_dir + "/eval.json";
            const harness::RunMetrics metrics =
                harness::cmd_eval(ev_checkpoint, protocol, config, out_json);
            std::cout << "grasp_success_rate " << metrics.grasp_success_rate
                      << "\nclearing_rate " << metrics.clearing_rate << "\n";
        } else if (ab->parsed()) {
            auto split = [](const std::string& s) {
                std::vector<std::string> out;
                size_t pos = 0;
                while (pos <= s.size()) {
                    const auto comma = s.find(',', pos);
                    out.push_back(s.substr(pos, comma == std::string::npos ? s.npos
                                                                           : comma - pos));
                    if (comma == std::string::npos) break;
                    pos = comma + 1;
                }
                return out;
            };
            std::vector<int> heads;
            for (const std::string& h : split(ab_heads)) heads.push_back(std::stoi(h));
            harness::EvalProtocol protocol;
            config.sync_mode = true;  // deterministic sweep cells
            const harness::AblationTable table =
                cmd_ablate(config, split(ab_critics), split(ab_modes), heads,
                           parse_seed_list(ab_seeds), protocol, config.out_dir, ab_jobs);
            std::cout << "ablation table: " << table.csv_path << " (" << table.rows.size()
                      << " cells)\n";
        } else if (ex->parsed()) {
            harness::cmd_export_maps(ex_checkpoint, ex_scene_seed, config, config.out_dir);
            std::cout << "maps exported to " << config.out_dir << "\n";
        }
        return 0;
    } catch (const harness::MissingInput& e) {
        std::cerr << "missing input: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "bad configuration: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}
