#include "ugrasp/actor/actor.hpp"

#include <cmath>
#include <stdexcept>

#include "ugrasp/mathx.hpp"
#include "ugrasp/net/patch.hpp"

namespace ugrasp::actor {

namespace {

double squash_mu(double raw) { return kActionBound * std::tanh(raw); }
double squash_mu_grad(double raw) {
    const double t = std::tanh(raw);
    return kActionBound * (1.0 - t * t);
}

// softplus squashed smoothly into (kSigmaMin, kSigmaMax); a hard clamp would
// zero the gradient for heads initialized above the bound
double map_sigma(double raw) {
    return kSigmaMin + (kSigmaMax - kSigmaMin) * std::tanh(softplus(raw));
}
double map_sigma_grad(double raw) {
    const double t = std::tanh(softplus(raw));
    return (kSigmaMax - kSigmaMin) * (1.0 - t * t) * softplus_grad(raw);
}

}  // namespace

ActionMaps actor_predict_from_patches(const net::MlpParams& params, const Eigen::MatrixXd& patches,
                                      int rows, int cols) {
    if (params.arch.head_count != 4) throw std::invalid_argument("actor needs 4 heads");
    const Eigen::MatrixXd raw = net::forward(params, patches);
    ActionMaps maps;
    maps.mu = Grid3(rows, cols, 2);
    maps.sigma = Grid3(rows, cols, 2);
    for (Eigen::Index i = 0; i < raw.rows(); ++i) {
        const int r = static_cast<int>(i) / cols;
        const int c = static_cast<int>(i) % cols;
        maps.mu(r, c, 0) = squash_mu(raw(i, 0));
        maps.mu(r, c, 1) = squash_mu(raw(i, 1));
        maps.sigma(r, c, 0) = map_sigma(raw(i, 2));
        maps.sigma(r, c, 1) = map_sigma(raw(i, 3));
    }
    return maps;
}

ActionMaps actor_predict(const net::MlpParams& params, const sim::Observation& obs,
                         int patch_window) {
    const Eigen::MatrixXd patches = net::extract_patch_matrix(obs, patch_window);
    return actor_predict_from_patches(params, patches, obs.height.rows(), obs.height.cols());
}

Grid3 ensemble_action_mean(const std::vector<ActionMaps>& maps) {
    if (maps.empty()) throw std::invalid_argument("empty ensemble");
    const int rows = maps[0].mu.rows();
    const int cols = maps[0].mu.cols();
    Grid3 mean(rows, cols, 2, 0.0);
    for (const ActionMaps& m : maps) {
        if (m.mu.rows() != rows || m.mu.cols() != cols) throw std::invalid_argument("shape mismatch");
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) {
                mean(r, c, 0) += m.mu(r, c, 0) - maps[0].mu(r, c, 0);
                mean(r, c, 1) += m.mu(r, c, 1) - maps[0].mu(r, c, 1);
            }
    }
    const double n = static_cast<double>(maps.size());
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            mean(r, c, 0) = maps[0].mu(r, c, 0) + mean(r, c, 0) / n;
            mean(r, c, 1) = maps[0].mu(r, c, 1) + mean(r, c, 1) / n;
        }
    return mean;
}

GaussianLogProb gaussian_log_prob(double x, double mu, double sigma) {
    const double z = (x - mu) / sigma;
    GaussianLogProb out;
    out.log_prob = -0.5 * z * z - std::log(sigma) - 0.5 * std::log(2.0 * std::numbers::pi);
    out.d_x = -z / sigma;
    out.d_mu = z / sigma;
    out.d_sigma = (z * z - 1.0) / sigma;
    return out;
}

ActorLoss actor_loss(double critic_q_at_sampled_action, double log_prob, double entropy_coeff) {
    ActorLoss out;
    out.loss = entropy_coeff * log_prob - critic_q_at_sampled_action;
    out.d_critic_q = -1.0;
    out.d_log_prob = entropy_coeff;
    return out;
}

net::GradientBundle actor_sac_batch_gradient(const net::MlpParams& actor_params,
                                             const CriticBatchFn& critic_fn,
                                             const Eigen::MatrixXd& patches, double entropy_coeff,
                                             rng::Stream& noise) {
    const Eigen::Index b = patches.rows();
    net::ForwardTrace actor_trace;
    const Eigen::MatrixXd raw = net::forward(actor_params, patches, &actor_trace);

    // reparameterized samples a = mu + sigma * xi
    Eigen::MatrixXd xi(b, 2);
    Eigen::MatrixXd critic_inputs(b, patches.cols() + 2);
    critic_inputs.leftCols(patches.cols()) = patches;
    for (Eigen::Index i = 0; i < b; ++i) {
        for (int d = 0; d < 2; ++d) {
            xi(i, d) = noise.normal();
            const double mu = squash_mu(raw(i, d));
            const double sigma = map_sigma(raw(i, 2 + d));
            critic_inputs(i, patches.cols() + d) = mu + sigma * xi(i, d);
        }
    }

    Eigen::VectorXd q;
    Eigen::MatrixXd dq_dinput;
    critic_fn(critic_inputs, q, dq_dinput);

    Eigen::MatrixXd dY = Eigen::MatrixXd::Zero(b, 4);
    double total_loss = 0.0;
    const double inv_b = 1.0 / static_cast<double>(b);
    for (Eigen::Index i = 0; i < b; ++i) {
        double log_prob = 0.0;
        for (int d = 0; d < 2; ++d) {
            const double sigma = map_sigma(raw(i, 2 + d));
            // with a = mu + sigma*xi the density reduces to -0.5*xi^2 - log(sigma) - c
            log_prob += -0.5 * xi(i, d) * xi(i, d) - std::log(sigma) -
                        0.5 * std::log(2.0 * std::numbers::pi);
        }
        const ActorLoss al = actor_loss(q[i], log_prob, entropy_coeff);
        total_loss += al.loss;
        for (int d = 0; d < 2; ++d) {
            const double dq_da = dq_dinput(i, patches.cols() + d);
            const double dL_da = al.d_critic_q * dq_da;  // -dq/da
            const double sigma = map_sigma(raw(i, 2 + d));
            const double dL_dmu = dL_da;
            const double dL_dsigma = dL_da * xi(i, d) + al.d_log_prob * (-1.0 / sigma);
            dY(i, d) = inv_b * dL_dmu * squash_mu_grad(raw(i, d));
            dY(i, 2 + d) = inv_b * dL_dsigma * map_sigma_grad(raw(i, 2 + d));
        }
    }

    net::GradientBundle g = net::backward(actor_params, actor_trace, dY);
    g.loss = total_loss * inv_b;
    return g;
}

net::GradientBundle actor_sac_batch_gradient(const net::MlpParams& actor_params,
                                             const net::MlpParams& critic_params,
                                             const critic::CriticConfig& critic_config,
                                             const Eigen::MatrixXd& patches, double entropy_coeff,
                                             rng::Stream& noise) {
    const CriticBatchFn fn = [&](const Eigen::MatrixXd& inputs, Eigen::VectorXd& q_out,
                                 Eigen::MatrixXd& dq_out) {
        critic::critic_q_batch_with_grad(critic_params, critic_config, inputs, q_out, dq_out);
    };
    return actor_sac_batch_gradient(actor_params, fn, patches, entropy_coeff, noise);
}

net::GradientBundle actor_regression_batch_gradient(const net::MlpParams& actor_params,
                                                    const Eigen::MatrixXd& patches,
                                                    const Eigen::MatrixXd& target_mu) {
    if (patches.rows() != target_mu.rows() || target_mu.cols() != 2)
        throw std::invalid_argument("target shape mismatch");
    net::ForwardTrace trace;
    const Eigen::MatrixXd raw = net::forward(actor_params, patches, &trace);

    Eigen::MatrixXd dY = Eigen::MatrixXd::Zero(raw.rows(), 4);
    double total_loss = 0.0;
    const double inv_b = 1.0 / static_cast<double>(raw.rows());
    for (Eigen::Index i = 0; i < raw.rows(); ++i) {
        for (int d = 0; d < 2; ++d) {
            const double mu = squash_mu(raw(i, d));
            const double err = mu - target_mu(i, d);
            total_loss += err * err;
            dY(i, d) = inv_b * 2.0 * err * squash_mu_grad(raw(i, d));
        }
    }
    net::GradientBundle g = net::backward(actor_params, trace, dY);
    g.loss = total_loss * inv_b;
    return g;
}

}  // namespace ugrasp::actor
