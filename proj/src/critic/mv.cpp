#include "ugrasp/critic/mv.hpp"

#include <stdexcept>

#include "ugrasp/mathx.hpp"
#include "ugrasp/net/patch.hpp"

namespace ugrasp::critic {

MvLossGrad mv_nll_loss(double pred_q, double pred_log_var, double target) {
    const double s = pred_log_var;
    const double inv_var = std::exp(-s);
    const double resid = target - pred_q;
    MvLossGrad out;
    out.loss = 0.5 * inv_var * resid * resid + 0.5 * s;
    out.d_q = -inv_var * resid;
    out.d_log_var = -0.5 * inv_var * resid * resid + 0.5;
    return out;
}

Eigen::MatrixXd append_action_columns(const Eigen::MatrixXd& patches, const Grid3& action_mean) {
    if (action_mean.channels() != 2) throw std::invalid_argument("action map must have 2 channels");
    const Eigen::Index n = patches.rows();
    if (n != static_cast<Eigen::Index>(action_mean.rows()) * action_mean.cols())
        throw std::invalid_argument("action map size mismatch");
    Eigen::MatrixXd out(n, patches.cols() + 2);
    out.leftCols(patches.cols()) = patches;
    for (Eigen::Index i = 0; i < n; ++i) {
        const int r = static_cast<int>(i) / action_mean.cols();
        const int c = static_cast<int>(i) % action_mean.cols();
        out(i, patches.cols()) = action_mean(r, c, 0);
        out(i, patches.cols() + 1) = action_mean(r, c, 1);
    }
    return out;
}

Eigen::VectorXd append_action(const Eigen::VectorXd& patch, double alpha, double beta) {
    Eigen::VectorXd out(patch.size() + 2);
    out.head(patch.size()) = patch;
    out[patch.size()] = alpha;
    out[patch.size() + 1] = beta;
    return out;
}

MvPrediction mv_predict_from_inputs(const net::MlpParams& params, const Eigen::MatrixXd& inputs,
                                    int rows, int cols) {
    if (params.arch.head_count != 2) throw std::invalid_argument("mv critic needs 2 heads");
    const Eigen::MatrixXd raw = net::forward(params, inputs);
    MvPrediction pred;
    pred.q = Grid(rows, cols);
    pred.log_var = Grid(rows, cols);
    for (Eigen::Index i = 0; i < raw.rows(); ++i) {
        pred.q.at_index(static_cast<size_t>(i)) = sigmoid(raw(i, 0));
        pred.log_var.at_index(static_cast<size_t>(i)) = std::clamp(raw(i, 1), kLogVarMin, kLogVarMax);
    }
    return pred;
}

MvPrediction mv_predict(const net::MlpParams& params, const sim::Observation& obs,
                        const Grid3& action_mean, int patch_window) {
    const Eigen::MatrixXd patches = net::extract_patch_matrix(obs, patch_window);
    const Eigen::MatrixXd inputs = append_action_columns(patches, action_mean);
    return mv_predict_from_inputs(params, inputs, obs.height.rows(), obs.height.cols());
}

MvEnsembleStats mv_ensemble_stats(const std::vector<MvPrediction>& preds) {
    if (preds.empty()) throw std::invalid_argument("empty ensemble");
    const int rows = preds[0].q.rows();
    const int cols = preds[0].q.cols();
    const double n = static_cast<double>(preds.size());

    MvEnsembleStats st;
    st.q_mean = Grid(rows, cols, 0.0);
    st.v_ale = Grid(rows, cols, 0.0);
    st.v_epi = Grid(rows, cols, 0.0);
    st.v_all = Grid(rows, cols, 0.0);

    for (const MvPrediction& p : preds) {
        if (p.q.rows() != rows || p.q.cols() != cols) throw std::invalid_argument("shape mismatch");
        for (size_t i = 0; i < st.q_mean.size(); ++i) {
            // mean accumulated as deviations from member 0, so identical
            // members yield an exactly zero spread
            st.q_mean.at_index(i) += p.q.at_index(i) - preds[0].q.at_index(i);
            st.v_ale.at_index(i) += std::exp(p.log_var.at_index(i));
        }
    }
    for (size_t i = 0; i < st.q_mean.size(); ++i) {
        st.q_mean.at_index(i) = preds[0].q.at_index(i) + st.q_mean.at_index(i) / n;
        st.v_ale.at_index(i) /= n;
    }
    for (const MvPrediction& p : preds) {
        for (size_t i = 0; i < st.q_mean.size(); ++i) {
            const double d = p.q.at_index(i) - st.q_mean.at_index(i);
            st.v_epi.at_index(i) += d * d;
        }
    }
    for (size_t i = 0; i < st.q_mean.size(); ++i) {
        st.v_epi.at_index(i) /= n;
        st.v_all.at_index(i) = st.v_ale.at_index(i) + st.v_epi.at_index(i);
    }
    return st;
}

net::GradientBundle mv_batch_gradient(const net::MlpParams& params, const Eigen::MatrixXd& inputs,
                                      const Eigen::VectorXd& targets) {
    if (inputs.rows() != targets.size()) throw std::invalid_argument("batch size mismatch");
    net::ForwardTrace trace;
    const Eigen::MatrixXd raw = net::forward(params, inputs, &trace);

    Eigen::MatrixXd dY(raw.rows(), 2);
    double total_loss = 0.0;
    const double inv_b = 1.0 / static_cast<double>(raw.rows());
    for (Eigen::Index i = 0; i < raw.rows(); ++i) {
        const double q = sigmoid(raw(i, 0));
        const double s = std::clamp(raw(i, 1), kLogVarMin, kLogVarMax);
        const MvLossGrad lg = mv_nll_loss(q, s, targets[i]);
        total_loss += lg.loss;
        dY(i, 0) = inv_b * lg.d_q * sigmoid_grad_from_value(q);
        // clamp is flat outside its range
        const bool inside = raw(i, 1) > kLogVarMin && raw(i, 1) < kLogVarMax;
        dY(i, 1) = inside ? inv_b * lg.d_log_var : 0.0;
    }
    net::GradientBundle g = net::backward(params, trace, dY);
    g.loss = total_loss * inv_b;
    return g;
}

}  // namespace ugrasp::critic
