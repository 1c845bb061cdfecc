#include "ugrasp/sim/scene_gen.hpp"

#include <numbers>
#include <stdexcept>

#include "ugrasp/rng.hpp"

namespace ugrasp::sim {

namespace {

Material pick_material(rng::Stream& rs, Difficulty difficulty, double easy_fraction) {
    bool easy = false;
    switch (difficulty) {
        case Difficulty::easy: easy = true; break;
        case Difficulty::hard: easy = false; break;
        case Difficulty::mixed: easy = rs.u01() < easy_fraction; break;
    }
    if (easy) return Material::opaque;
    const double u = rs.u01();
    if (u < 0.40) return Material::transparent;
    if (u < 0.85) return Material::semi_transparent;
    return Material::curved_glossy;  // domes: visibly curved, rarely graspable
}

ObjectSpec draw_object(rng::Stream& rs, int id, Difficulty difficulty, const SceneGenParams& p) {
    ObjectSpec o;
    o.id = id;
    o.material = pick_material(rs, difficulty, p.mixed_easy_fraction);
    if (o.material == Material::curved_glossy) {
        o.shape = Shape::dome;
    } else {
        o.shape = rs.u01() < 0.5 ? Shape::box : Shape::cylinder;
    }
    if (o.shape == Shape::dome) {
        o.extent.length = rs.uniform(p.dome_min_footprint, p.max_footprint);
        o.extent.width = rs.uniform(p.dome_min_footprint, p.max_footprint);
        o.extent.height = rs.uniform(p.dome_min_height, p.dome_max_height);
    } else {
        o.extent.length = rs.uniform(p.min_footprint, p.max_footprint);
        o.extent.width = rs.uniform(p.min_footprint, p.max_footprint);
        o.extent.height = rs.uniform(p.min_height, p.max_height);
    }
    o.pose.yaw = rs.uniform(0.0, std::numbers::pi);
    switch (o.material) {
        case Material::opaque:
            o.base_graspability = rs.uniform(p.grasp_opaque_lo, p.grasp_opaque_hi);
            break;
        case Material::transparent:
            o.base_graspability = rs.uniform(p.grasp_transparent_lo, p.grasp_transparent_hi);
            break;
        case Material::semi_transparent:
            o.base_graspability = rs.uniform(p.grasp_semi_lo, p.grasp_semi_hi);
            break;
        case Material::curved_glossy:
            o.base_graspability = rs.uniform(p.grasp_glossy_lo, p.grasp_glossy_hi);
            break;
    }
    return o;
}

}  // namespace

Scene generate_scene(uint64_t seed, int n_objects, Difficulty difficulty,
                     const SceneGenParams& params) {
    if (n_objects < 0 || n_objects > 30)
        throw std::invalid_argument("n_objects must be in [0, 30]");
    if (params.rows < 16 || params.cols < 16)
        throw std::invalid_argument("grid must be at least 16x16");

    Scene scene;
    scene.rows = params.rows;
    scene.cols = params.cols;
    scene.rng_seed = seed;
    scene.bin_mask = make_border_mask(params.rows, params.cols, params.mask_border);

    GridT<uint8_t> occupied(params.rows, params.cols, 0);
    rng::Stream rs(seed, "scene-gen");

    for (int i = 0; i < n_objects; ++i) {
        bool placed = false;
        for (int attempt = 0; attempt < params.max_retries_per_object && !placed; ++attempt) {
            ObjectSpec o = draw_object(rs, i + 1, difficulty, params);
            const double margin = params.mask_border + 1.0;
            o.pose.row = rs.uniform(margin, params.rows - 1 - margin);
            o.pose.col = rs.uniform(margin, params.cols - 1 - margin);

            const auto pixels = footprint_pixels(o, params.rows, params.cols);
            if (pixels.empty()) continue;
            bool ok = true;
            for (const auto& [r, c] : pixels) {
                if (!scene.bin_mask(r, c) || occupied(r, c)) {
                    ok = false;
                    break;
                }
            }
            if (!ok) continue;
            for (const auto& [r, c] : pixels) occupied(r, c) = 1;
            scene.objects.push_back(o);
            placed = true;
        }
        if (!placed) throw std::runtime_error("scene overflow");
    }
    return scene;
}

}  // namespace ugrasp::sim
