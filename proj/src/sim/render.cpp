#include "ugrasp/sim/render.hpp"

#include <algorithm>

#include "ugrasp/rng.hpp"

namespace ugrasp::sim {

namespace {

double material_albedo(Material m, const SimParams& p) {
    switch (m) {
        case Material::opaque: return p.albedo_opaque;
        case Material::transparent: return p.albedo_transparent;
        case Material::semi_transparent: return p.albedo_semi_transparent;
        case Material::curved_glossy: return p.albedo_curved_glossy;
    }
    return p.albedo_opaque;
}

double hole_probability(Material m, const SimParams& p) {
    switch (m) {
        case Material::transparent: return p.holes_transparent;
        case Material::semi_transparent: return p.holes_semi_transparent;
        default: return 0.0;
    }
}

double shade(double albedo, double nz) { return albedo * std::max(0.2, nz); }

}  // namespace

Observation render_true(const Scene& scene, const SimParams& params) {
    Observation obs;
    obs.height = Grid(scene.rows, scene.cols, 0.0);
    obs.normals = Grid3(scene.rows, scene.cols, 3, 0.0);
    obs.intensity = Grid(scene.rows, scene.cols, params.albedo_floor);

    for (int r = 0; r < scene.rows; ++r) {
        for (int c = 0; c < scene.cols; ++c) {
            const int idx = topmost_object_index(scene, r, c);
            Vec3 n{0.0, 0.0, 1.0};
            if (idx >= 0) {
                const ObjectSpec& o = scene.objects[idx];
                obs.height(r, c) = object_height_at(o, r, c);
                n = object_normal_at(o, r, c);
                obs.intensity(r, c) = shade(material_albedo(o.material, params), n.z);
            }
            obs.normals(r, c, 0) = n.x;
            obs.normals(r, c, 1) = n.y;
            obs.normals(r, c, 2) = n.z;
        }
    }
    return obs;
}

Observation render(const Scene& scene, const SimParams& params) {
    Observation obs = render_true(scene, params);

    for (int r = 0; r < scene.rows; ++r) {
        for (int c = 0; c < scene.cols; ++c) {
            const int idx = topmost_object_index(scene, r, c);
            if (idx < 0) continue;
            const ObjectSpec& o = scene.objects[idx];
            const uint64_t pixel = static_cast<uint64_t>(r) * scene.cols + c;

            const double p_hole = hole_probability(o.material, params);
            if (p_hole > 0.0 && rng::uniform_at(scene.rng_seed, "render.holes", pixel) < p_hole) {
                // sensor reads the bin floor through the material
                obs.height(r, c) = 0.0;
                obs.normals(r, c, 0) = 0.0;
                obs.normals(r, c, 1) = 0.0;
                obs.normals(r, c, 2) = 1.0;
                obs.intensity(r, c) = params.albedo_floor;
                continue;
            }
            if (o.material == Material::transparent) {
                const double sigma = params.depth_noise_factor * o.extent.height;
                const double noisy =
                    obs.height(r, c) + sigma * rng::normal_at(scene.rng_seed, "render.noise", pixel);
                obs.height(r, c) = std::max(0.0, noisy);
            }
        }
    }
    return obs;
}

}  // namespace ugrasp::sim
