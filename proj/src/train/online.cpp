#include "ugrasp/train/online.hpp"

#include <atomic>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <mutex>
#include <thread>

#include "ugrasp/actor/actor.hpp"
#include "ugrasp/net/patch.hpp"
#include "ugrasp/sim/gridio.hpp"
#include "ugrasp/sim/grasp.hpp"

namespace ugrasp::train {

namespace {

std::vector<const net::MlpParams*> critic_views(const std::vector<const MemberParams*>& members) {
    std::vector<const net::MlpParams*> out;
    out.reserve(members.size());
    for (const MemberParams* m : members) out.push_back(&m->critic);
    return out;
}

}  // namespace

OnlineStepOutcome online_step(const sim::Scene& scene,
                              const std::vector<const MemberParams*>& members,
                              const ModelConfig& model, const actor::UcbConfig& ucb_config,
                              int64_t t, uint64_t attempt_index, const sim::SimParams& sim_params,
                              const std::vector<std::pair<int, int>>* masked_pixels,
                              std::shared_ptr<const sim::Observation> obs_cache,
                              const Eigen::MatrixXd* patches_cache) {
    if (members.empty()) throw std::invalid_argument("empty ensemble");

    std::shared_ptr<const sim::Observation> obs = std::move(obs_cache);
    if (!obs) obs = std::make_shared<sim::Observation>(sim::render(scene, sim_params));

    Eigen::MatrixXd patches_local;
    const Eigen::MatrixXd* patches = patches_cache;
    if (!patches) {
        patches_local = net::extract_patch_matrix(*obs, model.patch_window);
        patches = &patches_local;
    }

    const int rows = obs->height.rows();
    const int cols = obs->height.cols();

    std::vector<actor::ActionMaps> action_maps;
    action_maps.reserve(members.size());
    for (const MemberParams* m : members)
        action_maps.push_back(actor::actor_predict_from_patches(m->actor, *patches, rows, cols));
    const Grid3 action_mean = actor::ensemble_action_mean(action_maps);

    const Eigen::MatrixXd critic_inputs = critic::append_action_columns(*patches, action_mean);

    OnlineStepOutcome out;
    out.maps = critic::ensemble_critic_maps(critic_views(members), model.critic, critic_inputs,
                                            rows, cols);
    out.delta_used = actor::delta_schedule(ucb_config, t);
    out.ucb = actor::ucb_map(out.maps.q_mean, out.maps, ucb_config, t);

    MaskGrid mask = scene.bin_mask;
    if (masked_pixels) {
        for (const auto& [r, c] : *masked_pixels)
            if (mask.inside(r, c)) mask(r, c) = 0;
    }
    out.selection = actor::select_pixel(out.ucb, mask, action_mean, *obs);

    auto [grasp, next_scene] = sim::execute_grasp(scene, out.selection.action, attempt_index,
                                                  sim_params);
    out.grasp = grasp;
    out.next_scene = std::move(next_scene);

    out.transition.obs = obs;
    out.transition.row = out.selection.row;
    out.transition.col = out.selection.col;
    out.transition.alpha = out.selection.action.alpha;
    out.transition.beta = out.selection.action.beta;
    out.transition.reward = grasp.reward;
    out.transition.step_index = t;
    out.transition.scene_id = scene.rng_seed;
    return out;
}

LearnerState make_learner_state(MemberParams params, uint64_t run_seed, int member_index) {
    MemberParams anchor = params;
    return LearnerState{std::move(params),
                        std::move(anchor),
                        net::AdamState{},
                        net::AdamState{},
                        0,
                        rng::Stream(run_seed, "learner-sample", static_cast<uint64_t>(member_index)),
                        rng::Stream(run_seed, "learner-noise", static_cast<uint64_t>(member_index))};
}

namespace {

void add_anchor_pull(net::GradientBundle& g, const net::MlpParams& params,
                     const net::MlpParams& anchor, double weight) {
    if (weight <= 0.0) return;
    for (size_t l = 0; l < g.d_weights.size(); ++l) {
        g.d_weights[l] += weight * (params.weights[l] - anchor.weights[l]);
        g.d_biases[l] += weight * (params.biases[l] - anchor.biases[l]);
    }
}

}  // namespace

bool learner_update(LearnerState& state, const ReplayBuffer& replay, int batch,
                    const LearnerHyper& hyper, const ModelConfig& model) {
    const std::vector<Transition> samples = replay.sample(static_cast<size_t>(batch),
                                                          state.sample_stream);
    if (samples.empty()) return false;  // nothing collected yet

    if (state.critic_adam.m_w.empty()) {
        state.critic_adam = net::make_adam_state(state.params.critic);
        state.actor_adam = net::make_adam_state(state.params.actor);
    }

    const int feature_count = net::patch_feature_count(model.patch_window);
    Eigen::MatrixXd critic_inputs(static_cast<Eigen::Index>(samples.size()), feature_count + 2);
    Eigen::MatrixXd patches(static_cast<Eigen::Index>(samples.size()), feature_count);
    Eigen::VectorXd targets(static_cast<Eigen::Index>(samples.size()));
    for (size_t i = 0; i < samples.size(); ++i) {
        const Transition& tr = samples[i];
        const Eigen::VectorXd patch =
            net::extract_patch(*tr.obs, tr.row, tr.col, model.patch_window);
        patches.row(static_cast<Eigen::Index>(i)) = patch.transpose();
        critic_inputs.row(static_cast<Eigen::Index>(i)).head(feature_count) = patch.transpose();
        critic_inputs(static_cast<Eigen::Index>(i), feature_count) = tr.alpha;
        critic_inputs(static_cast<Eigen::Index>(i), feature_count + 1) = tr.beta;
        targets[static_cast<Eigen::Index>(i)] = tr.reward;
    }

    net::GradientBundle cg =
        critic::critic_batch_gradient(state.params.critic, model.critic, critic_inputs, targets);
    add_anchor_pull(cg, state.params.critic, state.anchor.critic, hyper.critic_anchor);
    net::adam_step_inplace(state.params.critic, state.critic_adam, cg, hyper.critic_lr);

    net::GradientBundle ag = actor::actor_sac_batch_gradient(
        state.params.actor, state.params.critic, model.critic, patches, hyper.entropy_coeff,
        state.noise_stream);
    add_anchor_pull(ag, state.params.actor, state.anchor.actor, hyper.actor_anchor);
    net::adam_step_inplace(state.params.actor, state.actor_adam, ag, hyper.actor_lr);

    state.update_steps += 1;
    return true;
}

namespace {

using nlohmann::json;

struct ActingState {
    sim::Scene scene;
    std::shared_ptr<const sim::Observation> obs;
    std::shared_ptr<Eigen::MatrixXd> patches;
    uint64_t scene_index = 0;
    int attempts = 0;
    int initial_objects = 0;
    std::deque<std::pair<int, int>> recent_failures;
    bool episode_open = false;
};

void refresh_observation(ActingState& st, const RunConfig& config) {
    st.obs = std::make_shared<sim::Observation>(sim::render(st.scene, config.sim));
    st.patches = std::make_shared<Eigen::MatrixXd>(
        net::extract_patch_matrix(*st.obs, config.model.patch_window));
}

void start_scene(ActingState& st, const RunConfig& config, rng::Stream& size_stream) {
    const uint64_t scene_seed = rng::key_for(config.seed, "online-scene", st.scene_index);
    const int n_objects = size_stream.uniform_int(config.objects_min, config.objects_max);
    st.scene = sim::generate_scene(scene_seed, n_objects, config.difficulty, config.scene_gen);
    st.initial_objects = n_objects;
    st.attempts = 0;
    st.recent_failures.clear();
    st.episode_open = true;
    refresh_observation(st, config);
}

void export_maps(const critic::CriticMaps& maps, const Grid& ucb, const std::string& dir) {
    std::filesystem::create_directories(dir);
    const std::pair<const Grid*, const char*> entries[] = {{&maps.q_mean, "q_mean"},
                                                           {&maps.v_ale, "v_ale"},
                                                           {&maps.v_epi, "v_epi"},
                                                           {&maps.v_all, "v_all"},
                                                           {&ucb, "q_ucb"}};
    for (const auto& [grid, name] : entries) {
        sim::write_grid_csv(*grid, dir + "/" + name + ".csv");
        sim::write_grid_pgm16(*grid, dir + "/" + name + ".pgm");
    }
}

struct EpisodeStats {
    int completed = 0;
    double clearing_sum = 0.0;

    void close(const ActingState& st) {
        completed += 1;
        clearing_sum += sim::clearing_rate(st.initial_objects,
                                           static_cast<int>(st.scene.objects.size()));
    }
    double mean_clearing() const { return completed ? clearing_sum / completed : 0.0; }
};

class MetricsWriter {
public:
    explicit MetricsWriter(const std::string& path) : out_(path) {
        if (!out_) throw std::runtime_error("cannot write " + path);
    }

    void row(const json& j) {
        std::lock_guard<std::mutex> lock(mu_);
        out_ << j.dump() << "\n";
    }

    void flush() {
        std::lock_guard<std::mutex> lock(mu_);
        out_.flush();
    }

private:
    std::mutex mu_;
    std::ofstream out_;
};

// Token-bucket pacing around the 6:1 update-to-grasp target.
class Pacing {
public:
    Pacing(int ratio, int slack) : ratio_(ratio), slack_(slack) {}

    void on_grasp(int64_t grasps) {
        std::unique_lock<std::mutex> lock(mu_);
        grasps_ = grasps;
        cv_.notify_all();
        cv_.wait(lock, [&] {
            return stop_ || learners_done_ || updates_ >= ratio_ * grasps_ - slack_;
        });
    }

    // Returns false when the learner should exit instead of updating.
    bool acquire_update() {
        std::unique_lock<std::mutex> lock(mu_);
        cv_.wait(lock, [&] {
            return stop_ || actor_done_ || updates_ + 1 <= ratio_ * grasps_ + slack_;
        });
        if (stop_) return false;
        return true;
    }

    void on_update(int64_t updates) {
        std::lock_guard<std::mutex> lock(mu_);
        updates_ = updates;
        cv_.notify_all();
    }

    void set_actor_done() {
        std::lock_guard<std::mutex> lock(mu_);
        actor_done_ = true;
        cv_.notify_all();
    }

    void set_learners_done() {
        std::lock_guard<std::mutex> lock(mu_);
        learners_done_ = true;
        cv_.notify_all();
    }

    void stop() {
        std::lock_guard<std::mutex> lock(mu_);
        stop_ = true;
        cv_.notify_all();
    }

private:
    std::mutex mu_;
    std::condition_variable cv_;
    int64_t grasps_ = 0;
    int64_t updates_ = 0;
    int ratio_;
    int slack_;
    bool actor_done_ = false;
    bool learners_done_ = false;
    bool stop_ = false;
};

struct RunDirs {
    std::string root;
    std::string checkpoints;
    std::string maps;
    std::string partial_marker;
};

RunDirs prepare_run_dir(const RunConfig& config) {
    RunDirs dirs;
    dirs.root = config.out_dir;
    dirs.checkpoints = config.out_dir + "/checkpoints";
    dirs.maps = config.out_dir + "/maps";
    dirs.partial_marker = config.out_dir + "/.partial";
    std::filesystem::create_directories(dirs.checkpoints);
    std::filesystem::create_directories(dirs.maps);
    std::ofstream(dirs.partial_marker) << "run in progress\n";
    save_run_config(config, config.out_dir + "/config.txt");
    return dirs;
}

std::vector<MemberParams> initial_members(const RunConfig& config) {
    if (!config.pretrained_dir.empty()) {
        auto [members, model] = load_ensemble(config.pretrained_dir);
        if (static_cast<int>(members.size()) != config.n_members)
            throw std::runtime_error("pretrained ensemble size mismatch");
        if (!(model.critic_arch() == config.model.critic_arch()))
            throw std::runtime_error("pretrained critic architecture mismatch");
        return std::move(members);
    }
    return init_ensemble(config.seed, config.n_members, config.model);
}

void write_summary(const RunConfig& config, const RunArtifacts& art) {
    json j;
    j["grasps"] = art.grasps;
    j["successes"] = art.successes;
    j["updates"] = art.updates;
    j["episodes"] = art.episodes;
    j["mean_episode_clearing"] = art.mean_episode_clearing;
    j["grasp_success_rate"] = art.grasp_success_rate;
    j["measured_ratio"] = art.measured_ratio;
    j["max_staleness"] = art.max_staleness;
    j["failed"] = art.failed;
    if (art.failed) j["failure"] = art.failure;
    json cps = json::array();
    for (const auto& [step, dir] : art.checkpoints) cps.push_back({{"step", step}, {"dir", dir}});
    j["checkpoints"] = cps;
    std::ofstream f(config.out_dir + "/summary.json");
    f << j.dump(2) << "\n";
}

RunArtifacts run_sync(const RunConfig& config) {
    const RunDirs dirs = prepare_run_dir(config);
    RunArtifacts art;
    art.out_dir = config.out_dir;

    std::vector<MemberParams> members = initial_members(config);
    std::vector<LearnerState> states;
    for (int j = 0; j < config.n_members; ++j)
        states.push_back(make_learner_state(members[static_cast<size_t>(j)], config.seed, j + 1));

    ParameterBuffer pb(config.n_members);
    for (int j = 0; j < config.n_members; ++j)
        pb.publish(j, states[static_cast<size_t>(j)].params, 0);

    ReplayBuffer replay(static_cast<size_t>(config.replay_capacity));
    MetricsWriter metrics(config.out_dir + "/metrics.jsonl");
    const LearnerHyper hyper{config.online_critic_lr, config.online_actor_lr,
                             config.entropy_coeff, config.online_critic_anchor,
                             config.online_actor_anchor};

    const int64_t budget = config.effective_grasp_budget();
    const int64_t steps_target = config.grasp_budget >= 0
                                     ? config.grasp_budget * config.ratio_updates_per_grasp
                                     : config.training_steps;

    auto save_checkpoint = [&](int64_t step) {
        std::vector<MemberParams> snapshot;
        for (const auto& st : states) snapshot.push_back(st.params);
        const std::string dir = dirs.checkpoints + "/step_" + std::to_string(step);
        save_ensemble(snapshot, config.model, dir);
        art.checkpoints.emplace_back(step, dir);
    };
    save_checkpoint(0);

    ActingState acting;
    rng::Stream size_stream(config.seed, "online-scene-sizes");
    EpisodeStats episodes;
    int64_t total_updates = 0;
    int64_t exported_bucket = 0;

    try {
        for (int64_t g = 0; g < budget; ++g) {
            if (!acting.episode_open) start_scene(acting, config, size_stream);

            std::vector<const MemberParams*> view;
            const auto snaps = pb.read_all();
            for (const auto& s : snaps) view.push_back(&s->params);

            json staleness = json::array();
            for (int j = 0; j < config.n_members; ++j) {
                const int64_t lag = states[static_cast<size_t>(j)].update_steps -
                                    snaps[static_cast<size_t>(j)]->member_step;
                art.max_staleness = std::max(art.max_staleness, lag);
                staleness.push_back(lag);
            }

            std::vector<std::pair<int, int>> guard(acting.recent_failures.begin(),
                                                   acting.recent_failures.end());
            OnlineStepOutcome step = online_step(
                acting.scene, view, config.model, config.ucb, total_updates,
                static_cast<uint64_t>(acting.attempts), config.sim,
                config.repeat_guard ? &guard : nullptr, acting.obs, acting.patches.get());

            replay.append(step.transition);
            acting.attempts += 1;
            art.grasps += 1;
            art.successes += step.grasp.reward;

            const bool cleared = step.next_scene.objects.empty();
            metrics.row(json{{"grasp", g},
                             {"step", total_updates},
                             {"scene_id", acting.scene.rng_seed},
                             {"scene_index", acting.scene_index},
                             {"attempt", acting.attempts - 1},
                             {"pixel", {step.selection.row, step.selection.col}},
                             {"alpha", step.selection.action.alpha},
                             {"beta", step.selection.action.beta},
                             {"reward", step.grasp.reward},
                             {"delta", step.delta_used},
                             {"ratio", art.grasps ? static_cast<double>(total_updates) / art.grasps
                                                  : 0.0},
                             {"remaining", step.next_scene.objects.size()},
                             {"cleared", cleared},
                             {"p_true", step.grasp.true_success_prob},
                             {"staleness", staleness}});

            if (step.grasp.reward) {
                acting.scene = step.next_scene;
                acting.recent_failures.clear();
                refresh_observation(acting, config);
            } else {
                acting.recent_failures.emplace_back(step.selection.row, step.selection.col);
                while (acting.recent_failures.size() > 3) acting.recent_failures.pop_front();
            }

            if (cleared || acting.attempts >= config.max_attempts_per_scene) {
                episodes.close(acting);
                acting.episode_open = false;
                acting.scene_index += 1;
            }

            // fixed interleaving: one grasp, then the ensemble-wide update share
            const int64_t update_goal = std::min<int64_t>(steps_target,
                                                          (g + 1) * config.ratio_updates_per_grasp);
            while (total_updates < update_goal) {
                const int j = static_cast<int>(total_updates % config.n_members);
                LearnerState& ls = states[static_cast<size_t>(j)];
                if (!learner_update(ls, replay, config.batch, hyper, config.model)) break;
                total_updates += 1;
                if (ls.update_steps % config.publish_period == 0)
                    pb.publish(j, ls.params, ls.update_steps);
                if (config.checkpoint_every > 0 && total_updates % config.checkpoint_every == 0)
                    save_checkpoint(total_updates);
            }

            if (config.export_maps && config.checkpoint_every > 0) {
                const int64_t bucket = total_updates / config.checkpoint_every;
                if (bucket > exported_bucket) {
                    exported_bucket = bucket;
                    export_maps(step.maps, step.ucb,
                                dirs.maps + "/step_" + std::to_string(bucket * config.checkpoint_every));
                }
            }
        }
        if (acting.episode_open) {
            episodes.close(acting);
            acting.episode_open = false;
        }
    } catch (const std::exception& e) {
        art.failed = true;
        art.failure = e.what();
    }

    art.updates = total_updates;
    art.episodes = episodes.completed;
    art.mean_episode_clearing = episodes.mean_clearing();
    art.grasp_success_rate = art.grasps ? static_cast<double>(art.successes) / art.grasps : 0.0;
    art.measured_ratio = art.grasps ? static_cast<double>(total_updates) / art.grasps : 0.0;

    metrics.flush();
    write_summary(config, art);
    if (!art.failed) std::filesystem::remove(dirs.partial_marker);
    return art;
}

RunArtifacts run_async(const RunConfig& config) {
    const RunDirs dirs = prepare_run_dir(config);
    RunArtifacts art;
    art.out_dir = config.out_dir;

    std::vector<MemberParams> members = initial_members(config);
    std::vector<LearnerState> states;
    for (int j = 0; j < config.n_members; ++j)
        states.push_back(make_learner_state(members[static_cast<size_t>(j)], config.seed, j + 1));

    ParameterBuffer pb(config.n_members);
    for (int j = 0; j < config.n_members; ++j)
        pb.publish(j, states[static_cast<size_t>(j)].params, 0);

    ReplayBuffer replay(static_cast<size_t>(config.replay_capacity));
    MetricsWriter metrics(config.out_dir + "/metrics.jsonl");
    const LearnerHyper hyper{config.online_critic_lr, config.online_actor_lr,
                             config.entropy_coeff, config.online_critic_anchor,
                             config.online_actor_anchor};

    const int64_t budget = config.effective_grasp_budget();
    const int64_t steps_target = config.grasp_budget >= 0
                                     ? config.grasp_budget * config.ratio_updates_per_grasp
                                     : config.training_steps;

    Pacing pacing(config.ratio_updates_per_grasp, config.pacing_slack);
    std::atomic<int64_t> total_updates{0};
    std::vector<std::unique_ptr<std::atomic<int64_t>>> member_steps;
    for (int j = 0; j < config.n_members; ++j)
        member_steps.push_back(std::make_unique<std::atomic<int64_t>>(0));
    std::atomic<bool> stop{false};
    std::atomic<int> learners_active{config.n_members};
    std::mutex failure_mu;
    std::mutex checkpoint_mu;

    auto record_failure = [&](const std::string& what) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!art.failed) {
            art.failed = true;
            art.failure = what;
        }
        stop.store(true);
        pacing.stop();
    };

    auto save_checkpoint_from_pb = [&](int64_t step) {
        std::lock_guard<std::mutex> lock(checkpoint_mu);
        std::vector<MemberParams> snapshot;
        const auto snaps = pb.read_all();
        for (const auto& s : snaps) snapshot.push_back(s->params);
        const std::string dir = dirs.checkpoints + "/step_" + std::to_string(step);
        save_ensemble(snapshot, config.model, dir);
        art.checkpoints.emplace_back(step, dir);
    };
    save_checkpoint_from_pb(0);

    // learner workers, one per member
    std::vector<std::thread> learners;
    for (int j = 0; j < config.n_members; ++j) {
        const int64_t quota = steps_target / config.n_members +
                              (j < steps_target % config.n_members ? 1 : 0);
        learners.emplace_back([&, j, quota] {
            LearnerState& ls = states[static_cast<size_t>(j)];
            try {
                while (!stop.load() && ls.update_steps < quota) {
                    if (!pacing.acquire_update()) break;
                    if (!learner_update(ls, replay, config.batch, hyper, config.model)) {
                        std::this_thread::sleep_for(std::chrono::milliseconds(1));
                        continue;
                    }
                    member_steps[static_cast<size_t>(j)]->store(ls.update_steps);
                    const int64_t t_now = total_updates.fetch_add(1) + 1;
                    pacing.on_update(t_now);
                    if (ls.update_steps % config.publish_period == 0)
                        pb.publish(j, ls.params, ls.update_steps);
                    if (config.checkpoint_every > 0 && t_now % config.checkpoint_every == 0) {
                        pb.publish(j, ls.params, ls.update_steps);
                        save_checkpoint_from_pb(t_now);
                    }
                }
            } catch (const std::exception& e) {
                record_failure(std::string("learner ") + std::to_string(j + 1) + ": " + e.what());
            }
            if (learners_active.fetch_sub(1) == 1) pacing.set_learners_done();
        });
    }

    // acting process
    ActingState acting;
    rng::Stream size_stream(config.seed, "online-scene-sizes");
    EpisodeStats episodes;
    try {
        for (int64_t g = 0; g < budget && !stop.load(); ++g) {
            if (!acting.episode_open) start_scene(acting, config, size_stream);

            std::vector<const MemberParams*> view;
            const auto snaps = pb.read_all();
            for (const auto& s : snaps) view.push_back(&s->params);

            json staleness = json::array();
            for (int j = 0; j < config.n_members; ++j) {
                const int64_t lag = member_steps[static_cast<size_t>(j)]->load() -
                                    snaps[static_cast<size_t>(j)]->member_step;
                art.max_staleness = std::max(art.max_staleness, lag);
                staleness.push_back(lag);
            }

            std::vector<std::pair<int, int>> guard(acting.recent_failures.begin(),
                                                   acting.recent_failures.end());
            const int64_t t_sel = total_updates.load();
            OnlineStepOutcome step = online_step(acting.scene, view, config.model, config.ucb,
                                                 t_sel, static_cast<uint64_t>(acting.attempts),
                                                 config.sim,
                                                 config.repeat_guard ? &guard : nullptr,
                                                 acting.obs, acting.patches.get());

            replay.append(step.transition);
            acting.attempts += 1;
            art.grasps += 1;
            art.successes += step.grasp.reward;

            const bool cleared = step.next_scene.objects.empty();
            metrics.row(json{{"grasp", g},
                             {"step", t_sel},
                             {"scene_id", acting.scene.rng_seed},
                             {"scene_index", acting.scene_index},
                             {"attempt", acting.attempts - 1},
                             {"pixel", {step.selection.row, step.selection.col}},
                             {"alpha", step.selection.action.alpha},
                             {"beta", step.selection.action.beta},
                             {"reward", step.grasp.reward},
                             {"delta", step.delta_used},
                             {"ratio", static_cast<double>(t_sel) / art.grasps},
                             {"remaining", step.next_scene.objects.size()},
                             {"cleared", cleared},
                             {"p_true", step.grasp.true_success_prob},
                             {"staleness", staleness}});

            if (step.grasp.reward) {
                acting.scene = step.next_scene;
                acting.recent_failures.clear();
                refresh_observation(acting, config);
            } else {
                acting.recent_failures.emplace_back(step.selection.row, step.selection.col);
                while (acting.recent_failures.size() > 3) acting.recent_failures.pop_front();
            }

            if (cleared || acting.attempts >= config.max_attempts_per_scene) {
                episodes.close(acting);
                acting.episode_open = false;
                acting.scene_index += 1;
            }

            pacing.on_grasp(art.grasps);
        }
        if (acting.episode_open) episodes.close(acting);
    } catch (const std::exception& e) {
        record_failure(std::string("actor: ") + e.what());
    }
    pacing.set_actor_done();

    for (auto& th : learners) th.join();

    art.updates = total_updates.load();
    art.episodes = episodes.completed;
    art.mean_episode_clearing = episodes.mean_clearing();
    art.grasp_success_rate = art.grasps ? static_cast<double>(art.successes) / art.grasps : 0.0;
    art.measured_ratio = art.grasps ? static_cast<double>(art.updates) / art.grasps : 0.0;

    metrics.flush();
    write_summary(config, art);
    if (!art.failed) std::filesystem::remove(dirs.partial_marker);
    return art;
}

}  // namespace

RunArtifacts run_pipeline(const RunConfig& config) {
    return config.sync_mode ? run_sync(config) : run_async(config);
}

EpisodeResult run_eval_episode(const std::vector<MemberParams>& members, const ModelConfig& model,
                               uint64_t scene_seed, int n_objects, int max_attempts,
                               const RunConfig& config) {
    EpisodeResult out;
    out.scene_seed = scene_seed;
    out.initial_objects = n_objects;

    sim::Scene scene = sim::generate_scene(scene_seed, n_objects, config.difficulty,
                                           config.scene_gen);
    std::vector<const MemberParams*> view;
    for (const auto& m : members) view.push_back(&m);

    actor::UcbConfig greedy;
    greedy.delta = 0.0;
    greedy.kind = actor::UncertaintyKind::none;

    std::deque<std::pair<int, int>> recent_failures;
    auto obs = std::make_shared<sim::Observation>(sim::render(scene, config.sim));
    Eigen::MatrixXd patches = net::extract_patch_matrix(*obs, model.patch_window);

    while (out.attempts < max_attempts && !scene.objects.empty()) {
        std::vector<std::pair<int, int>> guard(recent_failures.begin(), recent_failures.end());
        OnlineStepOutcome step =
            online_step(scene, view, model, greedy, 0, static_cast<uint64_t>(out.attempts),
                        config.sim, config.repeat_guard ? &guard : nullptr, obs, &patches);
        out.attempts += 1;
        out.successes += step.grasp.reward;
        if (step.grasp.reward) {
            scene = step.next_scene;
            recent_failures.clear();
            obs = std::make_shared<sim::Observation>(sim::render(scene, config.sim));
            patches = net::extract_patch_matrix(*obs, model.patch_window);
        } else {
            recent_failures.emplace_back(step.selection.row, step.selection.col);
            while (recent_failures.size() > 3) recent_failures.pop_front();
        }
    }

    out.remaining = static_cast<int>(scene.objects.size());
    out.clearing_rate = sim::clearing_rate(out.initial_objects, out.remaining);
    out.grasp_success_rate =
        out.attempts ? static_cast<double>(out.successes) / out.attempts : 0.0;
    return out;
}

}  // namespace ugrasp::train
