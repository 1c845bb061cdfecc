#include "ugrasp/sim/grasp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ugrasp/rng.hpp"

namespace ugrasp::sim {

Vec3 approach_direction(double alpha, double beta) {
    // Ry(beta) * Rx(alpha) applied to (0, 0, -1)
    const double ca = std::cos(alpha), sa = std::sin(alpha);
    const double cb = std::cos(beta), sb = std::sin(beta);
    return {-sb * ca, sa, -cb * ca};
}

void tilt_from_direction(const Vec3& dir, double& alpha, double& beta) {
    const Vec3 d = dir.normalized();
    alpha = std::asin(std::clamp(d.y, -1.0, 1.0));
    const double ca = std::cos(alpha);
    if (ca < 1e-9) {
        beta = 0.0;
        return;
    }
    beta = std::asin(std::clamp(-d.x / ca, -1.0, 1.0));
}

double alignment_factor(const Vec3& approach, const Vec3& outward_normal, double power) {
    const double cos_t = approach.normalized().dot(-outward_normal.normalized());
    return std::pow(std::max(0.0, cos_t), power);
}

double true_normal_window_std(const Scene& scene, int r, int c, int half_width) {
    Vec3 mean{0.0, 0.0, 0.0};
    const int w = half_width;
    std::vector<Vec3> normals;
    normals.reserve(static_cast<size_t>(2 * w + 1) * (2 * w + 1));
    for (int dr = -w; dr <= w; ++dr) {
        for (int dc = -w; dc <= w; ++dc) {
            const int rr = std::clamp(r + dr, 0, scene.rows - 1);
            const int cc = std::clamp(c + dc, 0, scene.cols - 1);
            const Vec3 n = true_normal_at(scene, rr, cc);
            normals.push_back(n);
            mean = mean + n;
        }
    }
    const double m = static_cast<double>(normals.size());
    mean = {mean.x / m, mean.y / m, mean.z / m};
    double ss = 0.0;
    for (const Vec3& n : normals) {
        const Vec3 d = n - mean;
        ss += d.dot(d);
    }
    return std::sqrt(ss / m);
}

double true_success_prob(const Scene& scene, const GraspAction& action, const SimParams& params) {
    if (!scene.bin_mask.inside(action.row, action.col)) return 0.0;
    const int idx = topmost_object_index(scene, action.row, action.col);
    if (idx < 0) return 0.0;

    const double s = true_normal_window_std(scene, action.row, action.col, params.normal_window);
    const double flatness = std::exp(-params.flatness_gain * s * s);
    const Vec3 normal = object_normal_at(scene.objects[idx], action.row, action.col);
    const Vec3 approach = approach_direction(action.alpha, action.beta);
    const double align = alignment_factor(approach, normal, params.alignment_power);
    return scene.objects[idx].base_graspability * flatness * align;
}

std::pair<GraspOutcome, Scene> execute_grasp(const Scene& scene, const GraspAction& action,
                                             uint64_t attempt_index, const SimParams& params) {
    GraspOutcome out;
    out.true_success_prob = true_success_prob(scene, action, params);
    const double u = rng::uniform_at(scene.rng_seed, "grasp", attempt_index);
    if (u < out.true_success_prob) {
        out.reward = 1;
        Scene next = scene;
        const int idx = topmost_object_index(next, action.row, action.col);
        out.removed_object_id = next.objects[idx].id;
        next.objects.erase(next.objects.begin() + idx);
        return {out, next};
    }
    return {out, scene};
}

double clearing_rate(int initial_count, int remaining_count) {
    if (initial_count == 0) throw std::invalid_argument("empty bin");
    if (initial_count < 0 || remaining_count < 0 || remaining_count > initial_count)
        throw std::invalid_argument("bad object counts");
    return static_cast<double>(initial_count - remaining_count) / initial_count;
}

}  // namespace ugrasp::sim
