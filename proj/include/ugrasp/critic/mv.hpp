#pragma once

#include <vector>

#include "ugrasp/grid.hpp"
#include "ugrasp/net/mlp.hpp"
#include "ugrasp/sim/render.hpp"

namespace ugrasp::critic {

// log-variance clamp for the heteroscedastic head
constexpr double kLogVarMin = -10.0;
constexpr double kLogVarMax = 4.0;

// One agent's grasp-reward map and point-wise variance map (as log variance).
struct MvPrediction {
    Grid q;        // sigmoid-linked, in (0, 1)
    Grid log_var;  // clamped to [kLogVarMin, kLogVarMax]
};

struct MvEnsembleStats {
    Grid q_mean;
    Grid v_ale;  // mean of member variance heads
    Grid v_epi;  // population variance of member q maps
    Grid v_all;  // v_ale + v_epi, exact elementwise sum
};

struct MvLossGrad {
    double loss;
    double d_q;
    double d_log_var;
};

// Heteroscedastic Gaussian NLL: 0.5 * exp(-s) * (y - q)^2 + 0.5 * s,
// with analytic partials in (q, s) space.
MvLossGrad mv_nll_loss(double pred_q, double pred_log_var, double target);

// Critic input at a pixel: patch features followed by the pixel's action
// mean (alpha, beta). One row per pixel.
Eigen::MatrixXd append_action_columns(const Eigen::MatrixXd& patches, const Grid3& action_mean);
Eigen::VectorXd append_action(const Eigen::VectorXd& patch, double alpha, double beta);

// Evaluates the two heads at every pixel. Head 0 -> q (sigmoid), head 1 ->
// log_var (clamp). Params must have head_count == 2 over F + 2 inputs.
MvPrediction mv_predict(const net::MlpParams& params, const sim::Observation& obs,
                        const Grid3& action_mean, int patch_window);

// Same, reusing a prebuilt (H*W) x (F+2) input matrix.
MvPrediction mv_predict_from_inputs(const net::MlpParams& params, const Eigen::MatrixXd& inputs,
                                    int rows, int cols);

// Ensemble decomposition over N members (population variance, divisor N):
//   q_mean = (1/N) sum Q_j
//   v_ale  = (1/N) sum exp(log_var_j)
//   v_epi  = (1/N) sum (Q_j - q_mean)^2
//   v_all  = v_ale + v_epi
MvEnsembleStats mv_ensemble_stats(const std::vector<MvPrediction>& preds);

// Mean NLL gradient over a batch of (input row, binary target) pairs,
// chained through the sigmoid and clamp links onto the raw heads.
net::GradientBundle mv_batch_gradient(const net::MlpParams& params, const Eigen::MatrixXd& inputs,
                                      const Eigen::VectorXd& targets);

}  // namespace ugrasp::critic
