#include "ugrasp/net/patch.hpp"

#include <algorithm>
#include <stdexcept>

namespace ugrasp::net {

Eigen::VectorXd extract_patch(const sim::Observation& obs, int row, int col, int window) {
    if (window % 2 == 0) throw std::invalid_argument("window must be odd");
    if (!obs.height.inside(row, col)) throw std::out_of_range("pixel outside grid");

    const int half = window / 2;
    Eigen::VectorXd out(patch_feature_count(window));
    int k = 0;
    for (int dr = -half; dr <= half; ++dr) {
        for (int dc = -half; dc <= half; ++dc) {
            const int r = std::clamp(row + dr, 0, obs.height.rows() - 1);
            const int c = std::clamp(col + dc, 0, obs.height.cols() - 1);
            out[k++] = obs.height(r, c);
            out[k++] = obs.normals(r, c, 0);
            out[k++] = obs.normals(r, c, 1);
            out[k++] = obs.normals(r, c, 2);
            out[k++] = obs.intensity(r, c);
        }
    }
    return out;
}

Eigen::MatrixXd extract_patch_matrix(const sim::Observation& obs, int window) {
    if (window % 2 == 0) throw std::invalid_argument("window must be odd");
    const int rows = obs.height.rows();
    const int cols = obs.height.cols();
    const int half = window / 2;
    Eigen::MatrixXd X(static_cast<Eigen::Index>(rows) * cols, patch_feature_count(window));
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const Eigen::Index i = static_cast<Eigen::Index>(r) * cols + c;
            int k = 0;
            for (int dr = -half; dr <= half; ++dr) {
                for (int dc = -half; dc <= half; ++dc) {
                    const int rr = std::clamp(r + dr, 0, rows - 1);
                    const int cc = std::clamp(c + dc, 0, cols - 1);
                    X(i, k++) = obs.height(rr, cc);
                    X(i, k++) = obs.normals(rr, cc, 0);
                    X(i, k++) = obs.normals(rr, cc, 1);
                    X(i, k++) = obs.normals(rr, cc, 2);
                    X(i, k++) = obs.intensity(rr, cc);
                }
            }
        }
    }
    return X;
}

Eigen::VectorXd default_patch_scale(int window, double height_reference) {
    Eigen::VectorXd scale = Eigen::VectorXd::Ones(patch_feature_count(window));
    for (int cell = 0; cell < window * window; ++cell)
        scale[cell * kPatchChannels] = 1.0 / height_reference;
    return scale;
}

}  // namespace ugrasp::net
