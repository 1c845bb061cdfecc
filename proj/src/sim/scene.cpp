#include "ugrasp/sim/scene.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace ugrasp::sim {

std::string to_string(Shape s) {
    switch (s) {
        case Shape::box: return "box";
        case Shape::cylinder: return "cylinder";
        case Shape::dome: return "dome";
    }
    return "box";
}

std::string to_string(Material m) {
    switch (m) {
        case Material::opaque: return "opaque";
        case Material::transparent: return "transparent";
        case Material::semi_transparent: return "semi_transparent";
        case Material::curved_glossy: return "curved_glossy";
    }
    return "opaque";
}

std::string to_string(Difficulty d) {
    switch (d) {
        case Difficulty::easy: return "easy";
        case Difficulty::hard: return "hard";
        case Difficulty::mixed: return "mixed";
    }
    return "mixed";
}

Shape shape_from_string(const std::string& s) {
    if (s == "box") return Shape::box;
    if (s == "cylinder") return Shape::cylinder;
    if (s == "dome") return Shape::dome;
    throw std::invalid_argument("unknown shape: " + s);
}

Material material_from_string(const std::string& s) {
    if (s == "opaque") return Material::opaque;
    if (s == "transparent") return Material::transparent;
    if (s == "semi_transparent") return Material::semi_transparent;
    if (s == "curved_glossy") return Material::curved_glossy;
    throw std::invalid_argument("unknown material: " + s);
}

Difficulty difficulty_from_string(const std::string& s) {
    if (s == "easy") return Difficulty::easy;
    if (s == "hard") return Difficulty::hard;
    if (s == "mixed") return Difficulty::mixed;
    throw std::invalid_argument("unknown difficulty: " + s);
}

namespace {

bool inside_cross_section(const ObjectSpec& obj, double u, double v) {
    const double a = obj.extent.length / 2.0;
    const double b = obj.extent.width / 2.0;
    if (obj.shape == Shape::box) return std::abs(u) <= a && std::abs(v) <= b;
    // cylinder and dome have elliptical footprints
    const double fu = u / a;
    const double fv = v / b;
    return fu * fu + fv * fv <= 1.0;
}

}  // namespace

bool object_covers(const ObjectSpec& obj, int r, int c) {
    double u, v;
    to_object_frame(obj, r, c, u, v);
    return inside_cross_section(obj, u, v);
}

double object_height_at(const ObjectSpec& obj, int r, int c) {
    double u, v;
    to_object_frame(obj, r, c, u, v);
    if (!inside_cross_section(obj, u, v)) return 0.0;
    if (obj.shape == Shape::dome) {
        const double a = obj.extent.length / 2.0;
        const double b = obj.extent.width / 2.0;
        const double g = 1.0 - (u / a) * (u / a) - (v / b) * (v / b);
        return obj.extent.height * std::sqrt(std::max(0.0, g));
    }
    return obj.extent.height;
}

Vec3 object_normal_at(const ObjectSpec& obj, int r, int c) {
    double u, v;
    to_object_frame(obj, r, c, u, v);
    if (!inside_cross_section(obj, u, v)) return {0.0, 0.0, 1.0};
    if (obj.shape != Shape::dome) return {0.0, 0.0, 1.0};

    const double a = obj.extent.length / 2.0;
    const double b = obj.extent.width / 2.0;
    const double h = obj.extent.height;
    const double g = 1.0 - (u / a) * (u / a) - (v / b) * (v / b);
    const double s = std::sqrt(std::max(g, 1e-9));  // rim pixels get a near-horizontal normal
    // z = h * sqrt(g); dz/du = -h*u/(a^2*s), dz/dv = -h*v/(b^2*s)
    const double zu = -h * u / (a * a * s);
    const double zv = -h * v / (b * b * s);
    const double cy = std::cos(obj.pose.yaw);
    const double sy = std::sin(obj.pose.yaw);
    // u = dc*cy + dr*sy, v = -dc*sy + dr*cy; x = col, y = row
    const double zx = zu * cy - zv * sy;
    const double zy = zu * sy + zv * cy;
    return Vec3{-zx, -zy, 1.0}.normalized();
}

int topmost_object_index(const Scene& scene, int r, int c) {
    int best = -1;
    double best_h = 0.0;
    for (size_t i = 0; i < scene.objects.size(); ++i) {
        if (!object_covers(scene.objects[i], r, c)) continue;
        const double h = object_height_at(scene.objects[i], r, c);
        if (best < 0 || h > best_h) {
            best = static_cast<int>(i);
            best_h = h;
        }
    }
    return best;
}

Vec3 true_normal_at(const Scene& scene, int r, int c) {
    const int idx = topmost_object_index(scene, r, c);
    if (idx < 0) return {0.0, 0.0, 1.0};
    return object_normal_at(scene.objects[idx], r, c);
}

std::vector<std::pair<int, int>> footprint_pixels(const ObjectSpec& obj, int rows, int cols) {
    std::vector<std::pair<int, int>> out;
    const double reach = std::max(obj.extent.length, obj.extent.width) / 2.0 + 1.0;
    const int r0 = std::max(0, static_cast<int>(std::floor(obj.pose.row - reach)));
    const int r1 = std::min(rows - 1, static_cast<int>(std::ceil(obj.pose.row + reach)));
    const int c0 = std::max(0, static_cast<int>(std::floor(obj.pose.col - reach)));
    const int c1 = std::min(cols - 1, static_cast<int>(std::ceil(obj.pose.col + reach)));
    for (int r = r0; r <= r1; ++r)
        for (int c = c0; c <= c1; ++c)
            if (object_covers(obj, r, c)) out.emplace_back(r, c);
    return out;
}

MaskGrid make_border_mask(int rows, int cols, int border) {
    MaskGrid m(rows, cols, 0);
    for (int r = border; r < rows - border; ++r)
        for (int c = border; c < cols - border; ++c) m(r, c) = 1;
    return m;
}

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void save_scene(const Scene& scene, std::ostream& out) {
    out << "ugrasp-scene v1\n";
    out << "grid " << scene.rows << " " << scene.cols << "\n";
    out << "seed " << scene.rng_seed << "\n";
    for (int r = 0; r < scene.rows; ++r) {
        out << "mask ";
        for (int c = 0; c < scene.cols; ++c) out << (scene.bin_mask(r, c) ? '1' : '0');
        out << "\n";
    }
    for (const ObjectSpec& o : scene.objects) {
        out << "object " << o.id << " " << to_string(o.shape) << " " << fmt_double(o.pose.row)
            << " " << fmt_double(o.pose.col) << " " << fmt_double(o.pose.yaw) << " "
            << fmt_double(o.extent.length) << " " << fmt_double(o.extent.width) << " "
            << fmt_double(o.extent.height) << " " << to_string(o.material) << " "
            << fmt_double(o.base_graspability) << "\n";
    }
    out << "end\n";
}

Scene load_scene(std::istream& in) {
    Scene scene;
    std::string line;
    if (!std::getline(in, line) || line != "ugrasp-scene v1")
        throw std::runtime_error("bad scene header");
    int mask_row = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "grid") {
            ls >> scene.rows >> scene.cols;
            scene.bin_mask = MaskGrid(scene.rows, scene.cols, 0);
        } else if (key == "seed") {
            ls >> scene.rng_seed;
        } else if (key == "mask") {
            std::string bits;
            ls >> bits;
            if (mask_row >= scene.rows || static_cast<int>(bits.size()) != scene.cols)
                throw std::runtime_error("bad mask row");
            for (int c = 0; c < scene.cols; ++c) scene.bin_mask(mask_row, c) = bits[c] == '1';
            ++mask_row;
        } else if (key == "object") {
            ObjectSpec o;
            std::string shape, material;
            ls >> o.id >> shape >> o.pose.row >> o.pose.col >> o.pose.yaw >> o.extent.length >>
                o.extent.width >> o.extent.height >> material >> o.base_graspability;
            if (!ls) throw std::runtime_error("bad object record");
            o.shape = shape_from_string(shape);
            o.material = material_from_string(material);
            scene.objects.push_back(o);
        } else if (key == "end") {
            return scene;
        } else {
            throw std::runtime_error("unknown scene record: " + key);
        }
    }
    throw std::runtime_error("scene file truncated");
}

void save_scene_file(const Scene& scene, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    save_scene(scene, f);
}

Scene load_scene_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read " + path);
    return load_scene(f);
}

}  // namespace ugrasp::sim
