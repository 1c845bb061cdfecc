#pragma once

#include <vector>

#include "ugrasp/grid.hpp"
#include "ugrasp/net/mlp.hpp"
#include "ugrasp/sim/render.hpp"

namespace ugrasp::critic {

// One agent's K quantile estimates per pixel. Heads are not sorted;
// crossings are allowed.
struct QuantileTensor {
    Grid3 values;              // H x W x K, each in (0, 1)
    std::vector<double> taus;  // strictly increasing quantile levels
};

struct QrEnsembleStats {
    Grid q_mean;  // flat mean over all K*N head values
    Grid v_epi;   // within-quantile across-member variance, averaged over quantiles
    Grid v_ale;   // variance of the member-averaged quantile curve around q_mean
};

// Midpoint quantile levels tau_k = (2k - 1) / (2K), k = 1..K.
std::vector<double> midpoint_taus(int quantile_count);

struct QuantileLossGrad {
    double loss;
    double d_pred;
};

// Quantile Huber loss |tau - 1[u < 0]| * H_kappa(u) / kappa with u = target - pred.
QuantileLossGrad quantile_huber_loss(double pred, double target, double tau, double kappa);

// Evaluates K heads at every pixel through the sigmoid link.
QuantileTensor qr_predict(const net::MlpParams& params, const sim::Observation& obs,
                          const Grid3& action_mean, int patch_window);
QuantileTensor qr_predict_from_inputs(const net::MlpParams& params, const Eigen::MatrixXd& inputs,
                                      int rows, int cols);

// Q map: elementwise mean over all K*N head values of the ensemble.
Grid qr_q_map(const std::vector<QuantileTensor>& ensemble);

// Uncertainty decomposition:
//   v_epi = (1/(K*N)) sum_k sum_j (Qhat_kj - mean_j Qhat_kj)^2
//   v_ale = (1/K) sum_k (mean_j Qhat_kj - Q)^2
QrEnsembleStats qr_ensemble_stats(const std::vector<QuantileTensor>& ensemble);

// Mean quantile-Huber gradient over a batch; every head trains against the
// same binary target of its sample.
net::GradientBundle qr_batch_gradient(const net::MlpParams& params, const Eigen::MatrixXd& inputs,
                                      const Eigen::VectorXd& targets,
                                      const std::vector<double>& taus, double kappa);

}  // namespace ugrasp::critic
