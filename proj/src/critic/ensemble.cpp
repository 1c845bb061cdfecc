#include "ugrasp/critic/ensemble.hpp"

#include <stdexcept>

#include "ugrasp/mathx.hpp"

namespace ugrasp::critic {

std::string to_string(CriticKind k) {
    return k == CriticKind::quantile ? "qr" : "mv";
}

CriticKind critic_kind_from_string(const std::string& s) {
    if (s == "mv" || s == "mean_variance") return CriticKind::mean_variance;
    if (s == "qr" || s == "quantile") return CriticKind::quantile;
    throw std::invalid_argument("unknown critic kind: " + s);
}

CriticMaps ensemble_critic_maps(const std::vector<const net::MlpParams*>& members,
                                const CriticConfig& config, const Eigen::MatrixXd& inputs,
                                int rows, int cols) {
    if (members.empty()) throw std::invalid_argument("empty ensemble");
    CriticMaps maps;
    if (config.kind == CriticKind::mean_variance) {
        std::vector<MvPrediction> preds;
        preds.reserve(members.size());
        for (const auto* m : members) preds.push_back(mv_predict_from_inputs(*m, inputs, rows, cols));
        const MvEnsembleStats st = mv_ensemble_stats(preds);
        maps.q_mean = st.q_mean;
        maps.v_ale = st.v_ale;
        maps.v_epi = st.v_epi;
        maps.v_all = st.v_all;
    } else {
        std::vector<QuantileTensor> preds;
        preds.reserve(members.size());
        for (const auto* m : members) preds.push_back(qr_predict_from_inputs(*m, inputs, rows, cols));
        const QrEnsembleStats st = qr_ensemble_stats(preds);
        maps.q_mean = st.q_mean;
        maps.v_ale = st.v_ale;
        maps.v_epi = st.v_epi;
        maps.v_all = Grid(rows, cols);
        for (size_t i = 0; i < maps.v_all.size(); ++i)
            maps.v_all.at_index(i) = st.v_ale.at_index(i) + st.v_epi.at_index(i);
    }
    return maps;
}

CriticMaps ensemble_critic_maps(const std::vector<net::MlpParams>& members,
                                const CriticConfig& config, const Eigen::MatrixXd& inputs,
                                int rows, int cols) {
    std::vector<const net::MlpParams*> views;
    views.reserve(members.size());
    for (const auto& m : members) views.push_back(&m);
    return ensemble_critic_maps(views, config, inputs, rows, cols);
}

double critic_q_scalar(const net::MlpParams& params, const CriticConfig& config,
                       const Eigen::VectorXd& input) {
    const Eigen::VectorXd raw = net::forward_one(params, input);
    if (config.kind == CriticKind::mean_variance) return sigmoid(raw[0]);
    double q = 0.0;
    for (Eigen::Index k = 0; k < raw.size(); ++k) q += sigmoid(raw[k]);
    return q / static_cast<double>(raw.size());
}

void critic_q_batch_with_grad(const net::MlpParams& params, const CriticConfig& config,
                              const Eigen::MatrixXd& inputs, Eigen::VectorXd& q_out,
                              Eigen::MatrixXd& dq_dinput_out) {
    net::ForwardTrace trace;
    const Eigen::MatrixXd raw = net::forward(params, inputs, &trace);
    const Eigen::Index b = raw.rows();
    q_out.resize(b);

    Eigen::MatrixXd dY = Eigen::MatrixXd::Zero(b, raw.cols());
    if (config.kind == CriticKind::mean_variance) {
        for (Eigen::Index i = 0; i < b; ++i) {
            const double q = sigmoid(raw(i, 0));
            q_out[i] = q;
            dY(i, 0) = sigmoid_grad_from_value(q);
        }
    } else {
        const double inv_k = 1.0 / static_cast<double>(raw.cols());
        for (Eigen::Index i = 0; i < b; ++i) {
            double q = 0.0;
            for (Eigen::Index k = 0; k < raw.cols(); ++k) {
                const double v = sigmoid(raw(i, k));
                q += v;
                dY(i, k) = inv_k * sigmoid_grad_from_value(v);
            }
            q_out[i] = q * inv_k;
        }
    }
    const net::GradientBundle g = net::backward(params, trace, dY);
    dq_dinput_out = g.d_input;
}

net::GradientBundle critic_batch_gradient(const net::MlpParams& params, const CriticConfig& config,
                                          const Eigen::MatrixXd& inputs,
                                          const Eigen::VectorXd& targets) {
    if (config.kind == CriticKind::mean_variance) return mv_batch_gradient(params, inputs, targets);
    return qr_batch_gradient(params, inputs, targets, midpoint_taus(params.arch.head_count),
                             config.kappa);
}

}  // namespace ugrasp::critic
