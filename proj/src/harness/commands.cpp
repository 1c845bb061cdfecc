#include "ugrasp/harness/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <map>
#include <mutex>
#include <thread>

#include <cstdio>

#include "ugrasp/actor/actor.hpp"
#include "ugrasp/sim/gridio.hpp"
#include "ugrasp/train/offline.hpp"

namespace ugrasp::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {
std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}
}  // namespace

RunMetrics evaluate_members(const std::vector<train::MemberParams>& members,
                            const train::ModelConfig& model, const EvalProtocol& protocol,
                            const train::RunConfig& base) {
    RunMetrics metrics;
    int64_t attempts = 0, successes = 0, initial = 0, removed = 0;
    for (int rep = 0; rep < protocol.repetitions; ++rep) {
        for (uint64_t seed : protocol.scene_seeds) {
            const train::EpisodeResult ep = train::run_eval_episode(
                members, model, seed, protocol.n_objects, protocol.max_attempts, base);
            attempts += ep.attempts;
            successes += ep.successes;
            initial += ep.initial_objects;
            removed += ep.initial_objects - ep.remaining;
            metrics.episodes.push_back(ep);
        }
    }
    metrics.grasp_success_rate = attempts ? static_cast<double>(successes) / attempts : 0.0;
    metrics.clearing_rate = initial ? static_cast<double>(removed) / initial : 0.0;
    return metrics;
}

RunMetrics evaluate_checkpoint(const std::string& checkpoint_dir, const EvalProtocol& protocol,
                               const train::RunConfig& base) {
    if (!fs::exists(checkpoint_dir + "/ensemble.manifest"))
        throw MissingInput("checkpoint not found: " + checkpoint_dir);
    auto [members, model] = train::load_ensemble(checkpoint_dir);
    RunMetrics metrics = evaluate_members(members, model, protocol, base);

    // the checkpoint step is encoded in the directory name when present
    const std::string name = fs::path(checkpoint_dir).filename().string();
    if (name.rfind("step_", 0) == 0) metrics.checkpoint_step = std::stoll(name.substr(5));
    return metrics;
}

void cmd_gen_offline(const train::RunConfig& config, int n_scenes, int objects_min,
                     int objects_max, sim::Difficulty difficulty, const std::string& out_dir) {
    fs::create_directories(out_dir);
    const std::string marker = out_dir + "/.partial";
    std::ofstream(marker) << "writing\n";
    const auto dataset = train::build_offline_dataset(config.seed, n_scenes, objects_min,
                                                      objects_max, difficulty, config.offline,
                                                      config.scene_gen, config.sim);
    train::save_offline_dataset(dataset, out_dir);
    fs::remove(marker);
}

void cmd_pretrain(const train::RunConfig& config, const std::string& dataset_dir,
                  const std::string& out_dir) {
    if (!fs::exists(dataset_dir + "/dataset.manifest"))
        throw MissingInput("offline dataset not found: " + dataset_dir);
    const auto dataset = train::load_offline_dataset(dataset_dir);

    fs::create_directories(out_dir);
    const std::string marker = out_dir + "/.partial";
    std::ofstream(marker) << "writing\n";

    auto members = train::init_ensemble(config.seed, config.n_members, config.model);
    members = train::pretrain(dataset, std::move(members), config.model, config.pretrain_steps,
                              config.batch, config.lr, config.seed, config.offline, config.sim);
    train::save_ensemble(members, config.model, out_dir);
    fs::remove(marker);
}

train::RunArtifacts cmd_online(const train::RunConfig& config) {
    if (!config.pretrained_dir.empty() &&
        !fs::exists(config.pretrained_dir + "/ensemble.manifest"))
        throw MissingInput("pretrained checkpoint not found: " + config.pretrained_dir);
    return train::run_pipeline(config);
}

RunMetrics cmd_eval(const std::string& checkpoint_dir, const EvalProtocol& protocol,
                    const train::RunConfig& base, const std::string& out_json) {
    const RunMetrics metrics = evaluate_checkpoint(checkpoint_dir, protocol, base);
    if (!out_json.empty()) {
        json j;
        j["checkpoint"] = checkpoint_dir;
        j["grasp_success_rate"] = metrics.grasp_success_rate;
        j["clearing_rate"] = metrics.clearing_rate;
        json eps = json::array();
        for (const auto& ep : metrics.episodes)
            eps.push_back({{"scene_seed", ep.scene_seed},
                           {"initial_objects", ep.initial_objects},
                           {"attempts", ep.attempts},
                           {"successes", ep.successes},
                           {"remaining", ep.remaining},
                           {"clearing_rate", ep.clearing_rate},
                           {"grasp_success_rate", ep.grasp_success_rate}});
        j["episodes"] = eps;
        fs::create_directories(fs::path(out_json).parent_path().empty()
                                   ? "."
                                   : fs::path(out_json).parent_path().string());
        const std::string tmp_path = out_json + ".partial";
        {
            std::ofstream f(tmp_path);
            if (!f) throw std::runtime_error("cannot write " + tmp_path);
            f << j.dump(2) << "\n";
        }
        fs::rename(tmp_path, out_json);
    }
    return metrics;
}

namespace {

struct CellSpec {
    std::string critic;
    int heads = 0;
    std::string uncertainty;  // none | ale | epi | all | epi-adaptive
    uint64_t seed = 0;

    std::string family_name() const {
        std::string n = critic;
        if (critic == "qr") n += std::to_string(heads);
        return n + "-" + uncertainty;
    }
};

void apply_uncertainty_mode(train::RunConfig& config, const std::string& mode) {
    if (mode == "epi-adaptive") {
        config.ucb.kind = actor::UncertaintyKind::epistemic;
        config.ucb.schedule = actor::ScheduleKind::cosine_adaptive;
    } else {
        config.ucb.kind = actor::uncertainty_kind_from_string(mode);
        config.ucb.schedule = actor::ScheduleKind::fixed;
    }
}

// simple work queue
void run_jobs(std::vector<std::function<void()>> jobs, int workers) {
    std::mutex mu;
    size_t next = 0;
    auto worker = [&] {
        for (;;) {
            size_t idx;
            {
                std::lock_guard<std::mutex> lock(mu);
                if (next >= jobs.size()) return;
                idx = next++;
            }
            jobs[idx]();
        }
    };
    std::vector<std::thread> threads;
    const int n = std::max(1, workers);
    for (int i = 0; i < n - 1; ++i) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();
}

}  // namespace

AblationTable cmd_ablate(const train::RunConfig& base, const std::vector<std::string>& critics,
                         const std::vector<std::string>& uncertainty_modes,
                         const std::vector<int>& head_counts,
                         const std::vector<uint64_t>& seeds, const EvalProtocol& protocol,
                         const std::string& out_dir, int jobs) {
    fs::create_directories(out_dir);
    const std::string marker = out_dir + "/.partial";
    std::ofstream(marker) << "sweep in progress\n";

    std::vector<CellSpec> cells;
    for (const std::string& critic : critics) {
        const std::vector<int> heads = critic == "qr" ? head_counts : std::vector<int>{0};
        for (int h : heads)
            for (const std::string& mode : uncertainty_modes)
                for (uint64_t seed : seeds) cells.push_back({critic, h, mode, seed});
    }

    // Phase 1: pretrained ensembles, cached per (critic, heads, seed). The
    // exploration mode does not affect pretraining.
    std::map<std::string, std::string> pretrained;  // cache key -> dir
    std::mutex pre_mu;
    std::vector<std::function<void()>> pre_jobs;
    for (const CellSpec& cell : cells) {
        const std::string key = cell.critic + std::to_string(cell.heads) + "-s" +
                                std::to_string(cell.seed);
        {
            std::lock_guard<std::mutex> lock(pre_mu);
            if (pretrained.count(key)) continue;
            pretrained[key] = out_dir + "/pretrained/" + key;
        }
        pre_jobs.push_back([&, cell, key] {
            train::RunConfig config = base;
            config.seed = cell.seed;
            config.model.critic.kind = critic::critic_kind_from_string(cell.critic);
            if (cell.heads > 0) config.model.critic.quantile_count = cell.heads;
            const std::string dataset_dir = out_dir + "/offline-" + std::to_string(cell.seed);
            {
                std::lock_guard<std::mutex> lock(pre_mu);
                if (!fs::exists(dataset_dir + "/dataset.manifest")) {
                    cmd_gen_offline(config, config.offline_scenes, config.offline_objects_min,
                                    config.offline_objects_max, config.offline_difficulty,
                                    dataset_dir);
                }
            }
            cmd_pretrain(config, dataset_dir, out_dir + "/pretrained/" + key);
        });
    }
    run_jobs(std::move(pre_jobs), jobs);

    AblationTable table;
    table.rows.resize(cells.size());
    std::vector<std::function<void()>> cell_jobs;
    for (size_t i = 0; i < cells.size(); ++i) {
        cell_jobs.push_back([&, i] {
            const CellSpec& cell = cells[i];
            AblationCell row;
            row.name = cell.family_name();
            row.critic = cell.critic;
            row.heads = cell.heads;
            row.uncertainty = cell.uncertainty;
            row.seed = cell.seed;
            try {
                train::RunConfig config = base;
                config.seed = cell.seed;
                config.model.critic.kind = critic::critic_kind_from_string(cell.critic);
                if (cell.heads > 0) config.model.critic.quantile_count = cell.heads;
                apply_uncertainty_mode(config, cell.uncertainty);
                config.ucb.horizon = config.training_steps;
                const std::string key = cell.critic + std::to_string(cell.heads) + "-s" +
                                        std::to_string(cell.seed);
                config.pretrained_dir = out_dir + "/pretrained/" + key;
                config.out_dir = out_dir + "/runs/" + row.name + "-s" + std::to_string(cell.seed);
                const train::RunArtifacts art = cmd_online(config);
                if (art.failed) throw std::runtime_error(art.failure);

                const std::string final_cp = art.checkpoints.empty()
                                                 ? config.pretrained_dir
                                                 : art.checkpoints.back().second;
                const RunMetrics metrics = evaluate_checkpoint(final_cp, protocol, config);
                row.ok = true;
                row.grasp_success_rate = metrics.grasp_success_rate;
                row.clearing_rate = metrics.clearing_rate;
                row.schedule = actor::to_string(config.ucb.schedule);
            } catch (const std::exception& e) {
                row.ok = false;
                row.error = e.what();
            }
            table.rows[i] = row;
        });
    }
    run_jobs(std::move(cell_jobs), jobs);

    // CSV: per-seed rows first, then mean/std aggregates per configuration.
    table.csv_path = out_dir + "/ablation.csv";
    std::ofstream csv(table.csv_path);
    csv << "config,critic,heads,uncertainty,seed,status,grasp_success_rate,clearing_rate\n";
    for (const AblationCell& row : table.rows) {
        csv << row.name << ',' << row.critic << ',' << row.heads << ',' << row.uncertainty << ','
            << row.seed << ',' << (row.ok ? "ok" : "failed") << ',';
        if (row.ok)
            csv << fmt_double(row.grasp_success_rate) << ',' << fmt_double(row.clearing_rate)
                << "\n";
        else
            csv << ",\n";
    }
    std::map<std::string, std::vector<const AblationCell*>> by_config;
    for (const AblationCell& row : table.rows) by_config[row.name].push_back(&row);
    csv << "config,,,,aggregate,count,success_mean,success_std,clearing_mean,clearing_std\n";
    for (const auto& [name, rows] : by_config) {
        std::vector<double> suc, clr;
        for (const AblationCell* r : rows)
            if (r->ok) {
                suc.push_back(r->grasp_success_rate);
                clr.push_back(r->clearing_rate);
            }
        auto mean = [](const std::vector<double>& v) {
            if (v.empty()) return 0.0;
            double s = 0.0;
            for (double x : v) s += x;
            return s / static_cast<double>(v.size());
        };
        auto stdev = [&](const std::vector<double>& v) {
            if (v.size() < 2) return 0.0;
            const double m = mean(v);
            double s = 0.0;
            for (double x : v) s += (x - m) * (x - m);
            return std::sqrt(s / static_cast<double>(v.size()));
        };
        csv << name << ",,,,aggregate," << suc.size() << ',' << fmt_double(mean(suc)) << ','
            << fmt_double(stdev(suc)) << ',' << fmt_double(mean(clr)) << ','
            << fmt_double(stdev(clr)) << "\n";
    }
    csv.close();
    fs::remove(marker);
    return table;
}

void cmd_export_maps(const std::string& checkpoint_dir, uint64_t scene_seed,
                     const train::RunConfig& base, const std::string& out_dir) {
    if (!fs::exists(checkpoint_dir + "/ensemble.manifest"))
        throw MissingInput("checkpoint not found: " + checkpoint_dir);
    auto [members, model] = train::load_ensemble(checkpoint_dir);

    const sim::Scene scene = sim::generate_scene(scene_seed, base.objects_max, base.difficulty,
                                                 base.scene_gen);
    const sim::Observation obs = sim::render(scene, base.sim);
    const Eigen::MatrixXd patches = net::extract_patch_matrix(obs, model.patch_window);

    std::vector<actor::ActionMaps> action_maps;
    for (const auto& m : members)
        action_maps.push_back(actor::actor_predict_from_patches(m.actor, patches,
                                                                obs.height.rows(),
                                                                obs.height.cols()));
    const Grid3 action_mean = actor::ensemble_action_mean(action_maps);
    const Eigen::MatrixXd inputs = critic::append_action_columns(patches, action_mean);

    std::vector<const net::MlpParams*> critics;
    for (const auto& m : members) critics.push_back(&m.critic);
    const critic::CriticMaps maps = critic::ensemble_critic_maps(critics, model.critic, inputs,
                                                                 obs.height.rows(),
                                                                 obs.height.cols());
    const Grid ucb = actor::ucb_map(maps.q_mean, maps, base.ucb, 0);

    fs::create_directories(out_dir);
    const std::string marker = out_dir + "/.partial";
    std::ofstream(marker) << "writing\n";
    const std::pair<const Grid*, const char*> entries[] = {{&maps.q_mean, "q_mean"},
                                                           {&maps.v_ale, "v_ale"},
                                                           {&maps.v_epi, "v_epi"},
                                                           {&maps.v_all, "v_all"},
                                                           {&ucb, "q_ucb"}};
    for (const auto& [grid, name] : entries) {
        sim::write_grid_csv(*grid, out_dir + "/" + std::string(name) + ".csv");
        sim::write_grid_pgm16(*grid, out_dir + "/" + std::string(name) + ".pgm");
    }
    sim::export_observation_csv(obs, out_dir + "/observation");
    sim::export_observation_pgm(obs, out_dir + "/observation");
    fs::remove(marker);
}

}  // namespace ugrasp::harness
