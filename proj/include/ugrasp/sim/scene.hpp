#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ugrasp/grid.hpp"

namespace ugrasp::sim {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm() const { return std::sqrt(dot(*this)); }
    Vec3 normalized() const {
        const double n = norm();
        if (n == 0.0) return {0.0, 0.0, 1.0};
        return {x / n, y / n, z / n};
    }
    Vec3 operator-() const { return {-x, -y, -z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
};

enum class Shape { box, cylinder, dome };
enum class Material { opaque, transparent, semi_transparent, curved_glossy };
enum class Difficulty { easy, hard, mixed };

std::string to_string(Shape s);
std::string to_string(Material m);
std::string to_string(Difficulty d);
Shape shape_from_string(const std::string& s);
Material material_from_string(const std::string& s);
Difficulty difficulty_from_string(const std::string& s);

struct Pose {
    double row = 0.0;
    double col = 0.0;
    double yaw = 0.0;  // radians about the vertical axis
};

struct Extent {
    double length = 1.0;  // cells, along the object's local u axis
    double width = 1.0;   // cells, along the local v axis
    double height = 1.0;  // cells above the bin floor
};

struct ObjectSpec {
    int id = 0;
    Shape shape = Shape::box;
    Pose pose;
    Extent extent;
    Material material = Material::opaque;
    double base_graspability = 1.0;
};

// Immutable value type; grasp execution returns an updated copy.
struct Scene {
    int rows = 0;
    int cols = 0;
    std::vector<ObjectSpec> objects;
    MaskGrid bin_mask;  // 1 = valid workspace
    uint64_t rng_seed = 0;
};

// World frame: x = +col, y = +row, z = up. Pixel (r, c) sits at (c, r).

// Local (u, v) coordinates of pixel (r, c) in the object's rotated frame.
inline void to_object_frame(const ObjectSpec& obj, double r, double c, double& u, double& v) {
    const double dr = r - obj.pose.row;
    const double dc = c - obj.pose.col;
    const double cy = std::cos(obj.pose.yaw);
    const double sy = std::sin(obj.pose.yaw);
    u = dc * cy + dr * sy;
    v = -dc * sy + dr * cy;
}

bool object_covers(const ObjectSpec& obj, int r, int c);

// Height of the object's top surface at pixel (r, c); 0 outside the footprint.
double object_height_at(const ObjectSpec& obj, int r, int c);

// Outward unit surface normal of the top surface at (r, c). Only meaningful
// inside the footprint; flat tops give exactly (0, 0, 1).
Vec3 object_normal_at(const ObjectSpec& obj, int r, int c);

// Index into scene.objects of the object whose top surface is highest at the
// pixel, or -1 when the pixel shows the bin floor.
int topmost_object_index(const Scene& scene, int r, int c);

// True (uncorrupted) outward normal the sensor would see at the pixel.
Vec3 true_normal_at(const Scene& scene, int r, int c);

std::vector<std::pair<int, int>> footprint_pixels(const ObjectSpec& obj, int rows, int cols);

MaskGrid make_border_mask(int rows, int cols, int border);

// Versioned text serialization: header (grid size, seed), one mask row per
// line, one object record per line. Doubles printed with 17 significant
// digits so a round trip is value-exact.
void save_scene(const Scene& scene, std::ostream& out);
Scene load_scene(std::istream& in);
void save_scene_file(const Scene& scene, const std::string& path);
Scene load_scene_file(const std::string& path);

}  // namespace ugrasp::sim
