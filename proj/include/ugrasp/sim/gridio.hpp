#pragma once

#include <string>

#include "ugrasp/grid.hpp"
#include "ugrasp/sim/render.hpp"

namespace ugrasp::sim {

// CSV cells use 17 significant digits; a re-read grid compares value-exact.
void write_grid_csv(const Grid& g, const std::string& path);
Grid read_grid_csv(const std::string& path);

// 16-bit binary PGM (P5, maxval 65535, big-endian samples), normalized so a
// non-constant map spans [0, 65535]. The original range is recorded in a
// "<path>.meta" sidecar as "min <v>" / "max <v>" lines.
void write_grid_pgm16(const Grid& g, const std::string& path);
Grid read_grid_pgm16(const std::string& path);  // rescales through the sidecar

// height.csv, normals.csv (rows of x,y,z triplets), intensity.csv
void export_observation_csv(const Observation& obs, const std::string& dir);
// height.pgm, normal_z.pgm, intensity.pgm with sidecars
void export_observation_pgm(const Observation& obs, const std::string& dir);

}  // namespace ugrasp::sim
