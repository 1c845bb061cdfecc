#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

namespace ugrasp::net {

// Per-pixel multilayer perceptron: tanh hidden layers, linear output heads.
// Losses apply their own link functions on top of the heads. A full map
// prediction is this net evaluated at every pixel with shared weights.
struct MlpArchitecture {
    int input_dim = 0;
    std::vector<int> hidden;
    int head_count = 1;
    // Fixed per-feature input scaling (empty = identity). Keeps raw patch
    // features (heights in cells) inside tanh's useful range.
    Eigen::VectorXd input_scale;

    bool operator==(const MlpArchitecture& o) const {
        if (input_dim != o.input_dim || hidden != o.hidden || head_count != o.head_count)
            return false;
        if (input_scale.size() != o.input_scale.size()) return false;
        return input_scale.size() == 0 || (input_scale.array() == o.input_scale.array()).all();
    }
};

struct MlpParams {
    MlpArchitecture arch;
    std::vector<Eigen::MatrixXd> weights;  // layer l maps arch dims l -> l+1, shape (out x in)
    std::vector<Eigen::VectorXd> biases;

    size_t parameter_count() const;
    bool all_finite() const;
};

struct ForwardTrace {
    // activations[0] is the scaled input batch; then one post-tanh batch per
    // hidden layer. Row i corresponds to input row i.
    std::vector<Eigen::MatrixXd> activations;
};

// Rows of X are raw input vectors; returns one row of head outputs per input.
Eigen::MatrixXd forward(const MlpParams& p, const Eigen::MatrixXd& X, ForwardTrace* trace = nullptr);
Eigen::VectorXd forward_one(const MlpParams& p, const Eigen::VectorXd& x);

struct GradientBundle {
    std::vector<Eigen::MatrixXd> d_weights;
    std::vector<Eigen::VectorXd> d_biases;
    Eigen::MatrixXd d_input;  // gradient wrt the raw (pre-scale) inputs
    double loss = 0.0;

    bool all_finite() const;
    void accumulate(const GradientBundle& o, double factor = 1.0);
    void scale(double factor);
};

GradientBundle zero_gradients(const MlpParams& p);

// Exact reverse-mode gradients of forward contracted with dY (same shape as
// the forward output). Requires the trace captured by forward.
GradientBundle backward(const MlpParams& p, const ForwardTrace& trace, const Eigen::MatrixXd& dY);
GradientBundle backward_one(const MlpParams& p, const Eigen::VectorXd& x, const Eigen::VectorXd& dy);

// Fan-in scaled uniform init: weights ~ U(-sqrt(6/fan_in), +sqrt(6/fan_in)),
// biases zero. Deterministic per (seed, arch).
MlpParams init_params(uint64_t seed, const MlpArchitecture& arch);

struct AdamState {
    std::vector<Eigen::MatrixXd> m_w, v_w;
    std::vector<Eigen::VectorXd> m_b, v_b;
    int64_t step = 0;
};

AdamState make_adam_state(const MlpParams& p);

// beta1 = 0.9, beta2 = 0.999, eps = 1e-8, bias-corrected. Throws
// std::runtime_error("diverged") on non-finite gradients.
void adam_step_inplace(MlpParams& p, AdamState& s, const GradientBundle& g, double lr);

// Pure-function variant of the same update.
std::pair<MlpParams, AdamState> adam_step(const MlpParams& p, const AdamState& s,
                                          const GradientBundle& g, double lr);

// Versioned binary checkpoint (magic, architecture header, little-endian
// 64-bit floats) plus a "<path>.manifest" text file.
void save_params(const MlpParams& p, const std::string& path);
MlpParams load_params(const std::string& path);

}  // namespace ugrasp::net
