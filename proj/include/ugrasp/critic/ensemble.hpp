#pragma once

#include <string>
#include <vector>

#include "ugrasp/critic/mv.hpp"
#include "ugrasp/critic/qr.hpp"

namespace ugrasp::critic {

enum class CriticKind { mean_variance, quantile };

std::string to_string(CriticKind k);
CriticKind critic_kind_from_string(const std::string& s);

struct CriticConfig {
    CriticKind kind = CriticKind::mean_variance;
    int quantile_count = 20;  // K, quantile critics only
    double kappa = 1.0;

    int head_count() const { return kind == CriticKind::quantile ? quantile_count : 2; }
};

// Ensemble maps under either critic family. For the quantile family v_all is
// reported as v_epi + v_ale.
struct CriticMaps {
    Grid q_mean;
    Grid v_ale;
    Grid v_epi;
    Grid v_all;
};

CriticMaps ensemble_critic_maps(const std::vector<const net::MlpParams*>& members,
                                const CriticConfig& config, const Eigen::MatrixXd& inputs,
                                int rows, int cols);
CriticMaps ensemble_critic_maps(const std::vector<net::MlpParams>& members,
                                const CriticConfig& config, const Eigen::MatrixXd& inputs,
                                int rows, int cols);

// Scalar grasp-reward estimate of one member at one input row.
double critic_q_scalar(const net::MlpParams& params, const CriticConfig& config,
                       const Eigen::VectorXd& input);

// Batched q plus dq/dinput, used by the actor update to push gradients
// through the critic's action columns.
void critic_q_batch_with_grad(const net::MlpParams& params, const CriticConfig& config,
                              const Eigen::MatrixXd& inputs, Eigen::VectorXd& q_out,
                              Eigen::MatrixXd& dq_dinput_out);

// Supervised gradient of the family's loss against binary targets.
net::GradientBundle critic_batch_gradient(const net::MlpParams& params, const CriticConfig& config,
                                          const Eigen::MatrixXd& inputs,
                                          const Eigen::VectorXd& targets);

}  // namespace ugrasp::critic
