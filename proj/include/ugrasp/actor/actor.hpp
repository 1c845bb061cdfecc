#pragma once

#include <functional>
#include <numbers>
#include <vector>

#include "ugrasp/critic/ensemble.hpp"
#include "ugrasp/grid.hpp"
#include "ugrasp/net/mlp.hpp"
#include "ugrasp/rng.hpp"
#include "ugrasp/sim/render.hpp"

namespace ugrasp::actor {

constexpr double kActionBound = std::numbers::pi / 4.0;
constexpr double kSigmaMin = 1e-3;
constexpr double kSigmaMax = std::numbers::pi / 4.0;

// Pixel-wise Gaussian action heads: means tanh-squashed into the action
// bounds, stds softplus-mapped and clamped into [kSigmaMin, kSigmaMax].
struct ActionMaps {
    Grid3 mu;     // H x W x 2 (alpha, beta)
    Grid3 sigma;  // H x W x 2
};

// Actor net has 4 heads: mu_alpha, mu_beta, sigma_alpha, sigma_beta (raw).
ActionMaps actor_predict(const net::MlpParams& params, const sim::Observation& obs,
                         int patch_window);
ActionMaps actor_predict_from_patches(const net::MlpParams& params, const Eigen::MatrixXd& patches,
                                      int rows, int cols);

// Inference-time action map: elementwise mean of the member means.
Grid3 ensemble_action_mean(const std::vector<ActionMaps>& maps);

// Diagonal Gaussian log density with analytic partials.
struct GaussianLogProb {
    double log_prob;
    double d_x;
    double d_mu;
    double d_sigma;
};
GaussianLogProb gaussian_log_prob(double x, double mu, double sigma);

// SAC-style objective at one pixel: entropy_coeff * log_prob - critic_q.
struct ActorLoss {
    double loss;
    double d_critic_q;  // -1
    double d_log_prob;  // entropy_coeff
};
ActorLoss actor_loss(double critic_q_at_sampled_action, double log_prob, double entropy_coeff);

// Batched q(input) and dq/dinput provider; the last two input columns are
// the action the gradient flows through.
using CriticBatchFn = std::function<void(const Eigen::MatrixXd& inputs, Eigen::VectorXd& q_out,
                                         Eigen::MatrixXd& dq_dinput_out)>;

// Mean actor gradient over a batch of patch rows: reparameterized Gaussian
// sample per row, critic evaluated at (patch, sample), gradients flow through
// the critic's action inputs and the Gaussian's scale. The noise stream makes
// the sample draws deterministic.
net::GradientBundle actor_sac_batch_gradient(const net::MlpParams& actor_params,
                                             const CriticBatchFn& critic_fn,
                                             const Eigen::MatrixXd& patches, double entropy_coeff,
                                             rng::Stream& noise);
net::GradientBundle actor_sac_batch_gradient(const net::MlpParams& actor_params,
                                             const net::MlpParams& critic_params,
                                             const critic::CriticConfig& critic_config,
                                             const Eigen::MatrixXd& patches, double entropy_coeff,
                                             rng::Stream& noise);

// Pretraining regression of the mean heads onto target tilt angles;
// sigma heads are left to the entropy term.
net::GradientBundle actor_regression_batch_gradient(const net::MlpParams& actor_params,
                                                    const Eigen::MatrixXd& patches,
                                                    const Eigen::MatrixXd& target_mu);

}  // namespace ugrasp::actor
