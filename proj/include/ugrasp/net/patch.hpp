#pragma once

#include <Eigen/Core>

#include "ugrasp/sim/render.hpp"

namespace ugrasp::net {

// Channels per cell: height, nx, ny, nz, intensity.
constexpr int kPatchChannels = 5;

inline int patch_feature_count(int window) { return window * window * kPatchChannels; }

// P x P window centered on the pixel, flattened row-major with channels last.
// Out-of-grid cells replicate the nearest edge pixel. P must be odd.
Eigen::VectorXd extract_patch(const sim::Observation& obs, int row, int col, int window);

// One patch row per pixel in row-major pixel order: (H*W) x (P*P*5).
Eigen::MatrixXd extract_patch_matrix(const sim::Observation& obs, int window);

// Per-feature scaling used by all models: heights are divided by a fixed
// reference so every channel lands in tanh's useful range.
Eigen::VectorXd default_patch_scale(int window, double height_reference = 6.0);

}  // namespace ugrasp::net
