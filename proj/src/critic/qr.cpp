#include "ugrasp/critic/qr.hpp"

#include <cmath>
#include <stdexcept>

#include "ugrasp/critic/mv.hpp"
#include "ugrasp/mathx.hpp"
#include "ugrasp/net/patch.hpp"

namespace ugrasp::critic {

std::vector<double> midpoint_taus(int quantile_count) {
    if (quantile_count < 1) throw std::invalid_argument("quantile_count must be >= 1");
    std::vector<double> taus(quantile_count);
    for (int k = 0; k < quantile_count; ++k)
        taus[k] = (2.0 * (k + 1) - 1.0) / (2.0 * quantile_count);
    return taus;
}

QuantileLossGrad quantile_huber_loss(double pred, double target, double tau, double kappa) {
    if (kappa <= 0.0) throw std::invalid_argument("kappa must be positive");
    const double u = target - pred;
    const double weight = std::abs(tau - (u < 0.0 ? 1.0 : 0.0));
    double huber, dhuber;  // H_kappa(u) and its derivative in u
    if (std::abs(u) <= kappa) {
        huber = 0.5 * u * u;
        dhuber = u;
    } else {
        huber = kappa * (std::abs(u) - 0.5 * kappa);
        dhuber = kappa * (u > 0.0 ? 1.0 : -1.0);
    }
    QuantileLossGrad out;
    out.loss = weight * huber / kappa;
    out.d_pred = -weight * dhuber / kappa;  // du/dpred = -1
    return out;
}

QuantileTensor qr_predict_from_inputs(const net::MlpParams& params, const Eigen::MatrixXd& inputs,
                                      int rows, int cols) {
    const int K = params.arch.head_count;
    const Eigen::MatrixXd raw = net::forward(params, inputs);
    QuantileTensor qt;
    qt.values = Grid3(rows, cols, K);
    qt.taus = midpoint_taus(K);
    for (Eigen::Index i = 0; i < raw.rows(); ++i) {
        const int r = static_cast<int>(i) / cols;
        const int c = static_cast<int>(i) % cols;
        for (int k = 0; k < K; ++k) qt.values(r, c, k) = sigmoid(raw(i, k));
    }
    return qt;
}

QuantileTensor qr_predict(const net::MlpParams& params, const sim::Observation& obs,
                          const Grid3& action_mean, int patch_window) {
    const Eigen::MatrixXd patches = net::extract_patch_matrix(obs, patch_window);
    const Eigen::MatrixXd inputs = append_action_columns(patches, action_mean);
    return qr_predict_from_inputs(params, inputs, obs.height.rows(), obs.height.cols());
}

Grid qr_q_map(const std::vector<QuantileTensor>& ensemble) {
    if (ensemble.empty()) throw std::invalid_argument("empty ensemble");
    const int rows = ensemble[0].values.rows();
    const int cols = ensemble[0].values.cols();
    const int K = ensemble[0].values.channels();
    Grid q(rows, cols, 0.0);
    for (const QuantileTensor& qt : ensemble) {
        if (qt.values.rows() != rows || qt.values.cols() != cols || qt.values.channels() != K)
            throw std::invalid_argument("shape mismatch");
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c)
                for (int k = 0; k < K; ++k) q(r, c) += qt.values(r, c, k);
    }
    const double denom = static_cast<double>(K) * ensemble.size();
    for (size_t i = 0; i < q.size(); ++i) q.at_index(i) /= denom;
    return q;
}

QrEnsembleStats qr_ensemble_stats(const std::vector<QuantileTensor>& ensemble) {
    if (ensemble.empty()) throw std::invalid_argument("empty ensemble");
    const int rows = ensemble[0].values.rows();
    const int cols = ensemble[0].values.cols();
    const int K = ensemble[0].values.channels();
    const double N = static_cast<double>(ensemble.size());

    QrEnsembleStats st;
    st.q_mean = qr_q_map(ensemble);
    st.v_epi = Grid(rows, cols, 0.0);
    st.v_ale = Grid(rows, cols, 0.0);

    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            double epi = 0.0;
            double ale = 0.0;
            for (int k = 0; k < K; ++k) {
                // per-quantile member mean, accumulated as deviations from
                // member 0 so identical members give exactly zero spread
                const double base = ensemble[0].values(r, c, k);
                double shift = 0.0;
                for (const QuantileTensor& qt : ensemble) shift += qt.values(r, c, k) - base;
                const double m = base + shift / N;
                for (const QuantileTensor& qt : ensemble) {
                    const double d = qt.values(r, c, k) - m;
                    epi += d * d;
                }
                const double dm = m - st.q_mean(r, c);
                ale += dm * dm;
            }
            st.v_epi(r, c) = epi / (K * N);
            st.v_ale(r, c) = ale / K;
        }
    }
    return st;
}

net::GradientBundle qr_batch_gradient(const net::MlpParams& params, const Eigen::MatrixXd& inputs,
                                      const Eigen::VectorXd& targets,
                                      const std::vector<double>& taus, double kappa) {
    if (inputs.rows() != targets.size()) throw std::invalid_argument("batch size mismatch");
    const int K = params.arch.head_count;
    if (static_cast<int>(taus.size()) != K) throw std::invalid_argument("taus size mismatch");

    net::ForwardTrace trace;
    const Eigen::MatrixXd raw = net::forward(params, inputs, &trace);

    Eigen::MatrixXd dY(raw.rows(), K);
    double total_loss = 0.0;
    const double norm = 1.0 / (static_cast<double>(raw.rows()) * K);  // mean over batch and heads
    for (Eigen::Index i = 0; i < raw.rows(); ++i) {
        for (int k = 0; k < K; ++k) {
            const double q = sigmoid(raw(i, k));
            const QuantileLossGrad lg = quantile_huber_loss(q, targets[i], taus[k], kappa);
            total_loss += lg.loss;
            dY(i, k) = norm * lg.d_pred * sigmoid_grad_from_value(q);
        }
    }
    net::GradientBundle g = net::backward(params, trace, dY);
    g.loss = total_loss * norm;
    return g;
}

}  // namespace ugrasp::critic
