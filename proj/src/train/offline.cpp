#include "ugrasp/train/offline.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "ugrasp/actor/actor.hpp"
#include "ugrasp/rng.hpp"
#include "ugrasp/sim/grasp.hpp"
#include "ugrasp/sim/render.hpp"

namespace ugrasp::train {

double normal_window_std(const Grid3& normals, int r, int c, int half_width) {
    const int rows = normals.rows();
    const int cols = normals.cols();
    double mx = 0.0, my = 0.0, mz = 0.0;
    const int w = half_width;
    const int count = (2 * w + 1) * (2 * w + 1);
    for (int dr = -w; dr <= w; ++dr) {
        for (int dc = -w; dc <= w; ++dc) {
            const int rr = std::clamp(r + dr, 0, rows - 1);
            const int cc = std::clamp(c + dc, 0, cols - 1);
            mx += normals(rr, cc, 0);
            my += normals(rr, cc, 1);
            mz += normals(rr, cc, 2);
        }
    }
    mx /= count;
    my /= count;
    mz /= count;
    double ss = 0.0;
    for (int dr = -w; dr <= w; ++dr) {
        for (int dc = -w; dc <= w; ++dc) {
            const int rr = std::clamp(r + dr, 0, rows - 1);
            const int cc = std::clamp(c + dc, 0, cols - 1);
            const double dx = normals(rr, cc, 0) - mx;
            const double dy = normals(rr, cc, 1) - my;
            const double dz = normals(rr, cc, 2) - mz;
            ss += dx * dx + dy * dy + dz * dz;
        }
    }
    return std::sqrt(ss / count);
}

OfflineSample label_observation(std::shared_ptr<const sim::Observation> obs,
                                const MaskGrid& bin_mask, uint64_t scene_seed,
                                const OfflineParams& params) {
    const int rows = obs->height.rows();
    const int cols = obs->height.cols();
    OfflineSample s;
    s.obs = std::move(obs);
    s.scene_seed = scene_seed;
    s.target_q = Grid(rows, cols, 0.0);
    s.target_action = Grid3(rows, cols, 2, 0.0);
    s.valid_mask = MaskGrid(rows, cols, 0);

    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const bool valid = bin_mask(r, c) && s.obs->height(r, c) > params.floor_threshold;
            if (!valid) {
                s.background_pixels.emplace_back(r, c);
                continue;
            }
            s.valid_mask(r, c) = 1;
            s.valid_pixels.emplace_back(r, c);

            const double spread = normal_window_std(s.obs->normals, r, c, params.normal_window);
            s.target_q(r, c) = 1.0 / (1.0 + params.label_gain * spread);

            const sim::Vec3 n{s.obs->normals(r, c, 0), s.obs->normals(r, c, 1),
                              s.obs->normals(r, c, 2)};
            double alpha, beta;
            sim::tilt_from_direction(-n, alpha, beta);
            s.target_action(r, c, 0) = std::clamp(alpha, -actor::kActionBound, actor::kActionBound);
            s.target_action(r, c, 1) = std::clamp(beta, -actor::kActionBound, actor::kActionBound);
        }
    }
    return s;
}

std::vector<OfflineSample> build_offline_dataset(uint64_t seed, int n_scenes, int objects_min,
                                                 int objects_max, sim::Difficulty difficulty,
                                                 const OfflineParams& params,
                                                 const sim::SceneGenParams& gen,
                                                 const sim::SimParams& sim_params) {
    if (n_scenes < 0) throw std::invalid_argument("n_scenes must be nonnegative");
    std::vector<OfflineSample> out;
    out.reserve(n_scenes);
    rng::Stream counts(seed, "offline-counts");
    for (int i = 0; i < n_scenes; ++i) {
        const uint64_t scene_seed = rng::key_for(seed, "offline-scene", static_cast<uint64_t>(i));
        const int n = counts.uniform_int(objects_min, objects_max);
        const sim::Scene scene = sim::generate_scene(scene_seed, n, difficulty, gen);
        auto obs = std::make_shared<sim::Observation>(sim::render(scene, sim_params));
        out.push_back(label_observation(std::move(obs), scene.bin_mask, scene_seed, params));
    }
    return out;
}

namespace {

// Index map for k quarter turns on a square grid.
inline void rotate_index(int k, int rows, int cols, int r, int c, int& ro, int& co) {
    switch (k & 3) {
        case 0: ro = r; co = c; break;
        case 1: ro = cols - 1 - c; co = r; break;
        case 2: ro = rows - 1 - r; co = cols - 1 - c; break;
        default: ro = c; co = rows - 1 - r; break;
    }
}

// Matching rotation of an (x=col, y=row) vector.
inline void rotate_vector(int k, double nx, double ny, double& ox, double& oy) {
    switch (k & 3) {
        case 0: ox = nx; oy = ny; break;
        case 1: ox = ny; oy = -nx; break;
        case 2: ox = -nx; oy = -ny; break;
        default: ox = -ny; oy = nx; break;
    }
}

inline void inverse_rotate_index(int k, int rows, int cols, int r, int c, int& ro, int& co) {
    rotate_index((4 - (k & 3)) & 3, rows, cols, r, c, ro, co);
}

}  // namespace

TrainingItem augmented_item(const OfflineSample& sample, int r, int c, int quarter_turns, int dr,
                            int dc, int patch_window, const sim::SimParams& sim_params) {
    const int rows = sample.obs->height.rows();
    const int cols = sample.obs->height.cols();
    if (rows != cols && (quarter_turns & 1))
        throw std::invalid_argument("odd quarter turns need a square grid");

    // post-transform center, translation clamped so the center stays in-grid
    int rr0, cc0;
    rotate_index(quarter_turns, rows, cols, r, c, rr0, cc0);
    const int pr = std::clamp(rr0 + dr, 0, rows - 1);
    const int pc = std::clamp(cc0 + dc, 0, cols - 1);
    const int shift_r = pr - rr0;
    const int shift_c = pc - cc0;

    const int half = patch_window / 2;
    TrainingItem item;
    item.patch.resize(net::patch_feature_count(patch_window));

    int k = 0;
    for (int wr = -half; wr <= half; ++wr) {
        for (int wc = -half; wc <= half; ++wc) {
            // cell in the transformed image, edge-replicated at its bounds
            const int tr = std::clamp(pr + wr, 0, rows - 1);
            const int tc = std::clamp(pc + wc, 0, cols - 1);
            int sr, sc;
            inverse_rotate_index(quarter_turns, rows, cols, tr - shift_r, tc - shift_c, sr, sc);
            if (sr < 0 || sr >= rows || sc < 0 || sc >= cols) {
                // shifted-in region shows the empty bin floor
                item.patch[k++] = 0.0;
                item.patch[k++] = 0.0;
                item.patch[k++] = 0.0;
                item.patch[k++] = 1.0;
                item.patch[k++] = sim_params.albedo_floor;
                continue;
            }
            double nx, ny;
            rotate_vector(quarter_turns, sample.obs->normals(sr, sc, 0),
                          sample.obs->normals(sr, sc, 1), nx, ny);
            item.patch[k++] = sample.obs->height(sr, sc);
            item.patch[k++] = nx;
            item.patch[k++] = ny;
            item.patch[k++] = sample.obs->normals(sr, sc, 2);
            item.patch[k++] = sample.obs->intensity(sr, sc);
        }
    }

    item.target_q = sample.target_q(r, c);  // scalar label is rotation-invariant
    double nx, ny;
    rotate_vector(quarter_turns, sample.obs->normals(r, c, 0), sample.obs->normals(r, c, 1), nx, ny);
    const sim::Vec3 n{nx, ny, sample.obs->normals(r, c, 2)};
    double alpha, beta;
    sim::tilt_from_direction(-n, alpha, beta);
    item.alpha = std::clamp(alpha, -actor::kActionBound, actor::kActionBound);
    item.beta = std::clamp(beta, -actor::kActionBound, actor::kActionBound);
    return item;
}

std::vector<MemberParams> pretrain(const std::vector<OfflineSample>& dataset,
                                   std::vector<MemberParams> members, const ModelConfig& model,
                                   int steps, int batch, double lr, uint64_t seed,
                                   const OfflineParams& params, const sim::SimParams& sim_params) {
    if (dataset.empty()) throw std::invalid_argument("empty offline dataset");
    if (steps < 0 || batch < 1) throw std::invalid_argument("bad pretrain settings");

    std::vector<size_t> usable;
    for (size_t i = 0; i < dataset.size(); ++i)
        if (!dataset[i].valid_pixels.empty()) usable.push_back(i);
    if (usable.empty() && steps > 0)
        throw std::invalid_argument("offline dataset has no valid pixels");

    const int feature_count = net::patch_feature_count(model.patch_window);

    for (size_t j = 0; j < members.size(); ++j) {
        rng::Stream rs(seed, "pretrain", j + 1);
        net::AdamState critic_adam = net::make_adam_state(members[j].critic);
        net::AdamState actor_adam = net::make_adam_state(members[j].actor);

        Eigen::MatrixXd critic_inputs(batch, feature_count + 2);
        Eigen::MatrixXd actor_inputs(batch, feature_count);
        Eigen::VectorXd targets(batch);
        Eigen::MatrixXd target_mu(batch, 2);

        for (int step = 0; step < steps; ++step) {
            for (int b = 0; b < batch; ++b) {
                const OfflineSample& s = dataset[usable[static_cast<size_t>(
                    rs.uniform_int(0, static_cast<int>(usable.size()) - 1))]];
                const bool background = !s.background_pixels.empty() &&
                                        rs.u01() < params.background_fraction;
                const auto& pool = background ? s.background_pixels : s.valid_pixels;
                const auto [r, c] = pool[static_cast<size_t>(
                    rs.uniform_int(0, static_cast<int>(pool.size()) - 1))];
                const int rot = rs.uniform_int(0, 3);
                const int dr = rs.uniform_int(-params.max_translation, params.max_translation);
                const int dc = rs.uniform_int(-params.max_translation, params.max_translation);
                const TrainingItem item =
                    augmented_item(s, r, c, rot, dr, dc, model.patch_window, sim_params);
                actor_inputs.row(b) = item.patch.transpose();
                critic_inputs.row(b).head(feature_count) = item.patch.transpose();
                critic_inputs(b, feature_count) = item.alpha;
                critic_inputs(b, feature_count + 1) = item.beta;
                targets[b] = item.target_q;
                target_mu(b, 0) = item.alpha;
                target_mu(b, 1) = item.beta;
            }

            const net::GradientBundle cg =
                critic::critic_batch_gradient(members[j].critic, model.critic, critic_inputs, targets);
            if (!std::isfinite(cg.loss))
                throw std::runtime_error("pretrain diverged: member " + std::to_string(j + 1) +
                                         " critic loss at step " + std::to_string(step));
            net::adam_step_inplace(members[j].critic, critic_adam, cg, lr);

            const net::GradientBundle ag =
                actor::actor_regression_batch_gradient(members[j].actor, actor_inputs, target_mu);
            if (!std::isfinite(ag.loss))
                throw std::runtime_error("pretrain diverged: member " + std::to_string(j + 1) +
                                         " actor loss at step " + std::to_string(step));
            net::adam_step_inplace(members[j].actor, actor_adam, ag, lr);
        }
    }
    return members;
}

namespace {

constexpr char kSampleMagic[8] = {'U', 'G', 'O', 'F', 'F', 'S', 'M', '1'};

void write_grid(std::ostream& f, const Grid& g) {
    f.write(reinterpret_cast<const char*>(g.data()),
            static_cast<std::streamsize>(g.size() * sizeof(double)));
}

void read_grid(std::istream& f, Grid& g) {
    f.read(reinterpret_cast<char*>(g.data()),
           static_cast<std::streamsize>(g.size() * sizeof(double)));
}

}  // namespace

void save_offline_dataset(const std::vector<OfflineSample>& dataset, const std::string& dir) {
    std::filesystem::create_directories(dir);
    for (size_t i = 0; i < dataset.size(); ++i) {
        const OfflineSample& s = dataset[i];
        char name[32];
        std::snprintf(name, sizeof(name), "sample_%05zu.bin", i);
        std::ofstream f(dir + "/" + name, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write offline sample");
        f.write(kSampleMagic, 8);
        const uint32_t rows = static_cast<uint32_t>(s.obs->height.rows());
        const uint32_t cols = static_cast<uint32_t>(s.obs->height.cols());
        f.write(reinterpret_cast<const char*>(&rows), 4);
        f.write(reinterpret_cast<const char*>(&cols), 4);
        f.write(reinterpret_cast<const char*>(&s.scene_seed), 8);
        write_grid(f, s.obs->height);
        f.write(reinterpret_cast<const char*>(s.obs->normals.data()),
                static_cast<std::streamsize>(s.obs->normals.size() * sizeof(double)));
        write_grid(f, s.obs->intensity);
        write_grid(f, s.target_q);
        f.write(reinterpret_cast<const char*>(s.target_action.data()),
                static_cast<std::streamsize>(s.target_action.size() * sizeof(double)));
        for (int r = 0; r < static_cast<int>(rows); ++r)
            for (int c = 0; c < static_cast<int>(cols); ++c) {
                const char v = s.valid_mask(r, c) ? 1 : 0;
                f.write(&v, 1);
            }
    }
    std::ofstream manifest(dir + "/dataset.manifest");
    if (!manifest) throw std::runtime_error("cannot write dataset manifest");
    manifest << "format ugoffline v1\n";
    manifest << "samples " << dataset.size() << "\n";
}

std::vector<OfflineSample> load_offline_dataset(const std::string& dir) {
    std::ifstream manifest(dir + "/dataset.manifest");
    if (!manifest) throw std::runtime_error("missing dataset manifest in " + dir);
    std::string key;
    size_t count = 0;
    while (manifest >> key) {
        if (key == "samples") manifest >> count;
    }

    std::vector<OfflineSample> out;
    out.reserve(count);
    for (size_t i = 0; i < count; ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "sample_%05zu.bin", i);
        std::ifstream f(dir + "/" + name, std::ios::binary);
        if (!f) throw std::runtime_error("missing offline sample file");
        char magic[8];
        f.read(magic, 8);
        if (std::memcmp(magic, kSampleMagic, 8) != 0)
            throw std::runtime_error("bad offline sample magic");
        uint32_t rows = 0, cols = 0;
        f.read(reinterpret_cast<char*>(&rows), 4);
        f.read(reinterpret_cast<char*>(&cols), 4);

        OfflineSample s;
        f.read(reinterpret_cast<char*>(&s.scene_seed), 8);
        auto obs = std::make_shared<sim::Observation>();
        obs->height = Grid(rows, cols);
        obs->normals = Grid3(rows, cols, 3);
        obs->intensity = Grid(rows, cols);
        read_grid(f, obs->height);
        f.read(reinterpret_cast<char*>(obs->normals.data()),
               static_cast<std::streamsize>(obs->normals.size() * sizeof(double)));
        read_grid(f, obs->intensity);
        s.target_q = Grid(rows, cols);
        read_grid(f, s.target_q);
        s.target_action = Grid3(rows, cols, 2);
        f.read(reinterpret_cast<char*>(s.target_action.data()),
               static_cast<std::streamsize>(s.target_action.size() * sizeof(double)));
        s.valid_mask = MaskGrid(rows, cols, 0);
        for (int r = 0; r < static_cast<int>(rows); ++r)
            for (int c = 0; c < static_cast<int>(cols); ++c) {
                char v;
                f.read(&v, 1);
                s.valid_mask(r, c) = v ? 1 : 0;
                if (v) s.valid_pixels.emplace_back(r, c);
                else s.background_pixels.emplace_back(r, c);
            }
        if (!f) throw std::runtime_error("truncated offline sample file");
        s.obs = std::move(obs);
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace ugrasp::train
