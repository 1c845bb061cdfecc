#include <doctest.h>

#include "oracles.hpp"
#include "ugrasp/critic/qr.hpp"
#include "ugrasp/mathx.hpp"
#include "ugrasp/net/patch.hpp"
#include "ugrasp/rng.hpp"
#include "ugrasp/sim/render.hpp"
#include "ugrasp/sim/scene_gen.hpp"

using namespace ugrasp;
using namespace ugrasp::critic;

namespace {

QuantileTensor constant_tensor(int rows, int cols, const std::vector<double>& heads) {
    QuantileTensor qt;
    qt.values = Grid3(rows, cols, static_cast<int>(heads.size()));
    qt.taus = midpoint_taus(static_cast<int>(heads.size()));
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            for (size_t k = 0; k < heads.size(); ++k)
                qt.values(r, c, static_cast<int>(k)) = heads[k];
    return qt;
}

// naive double-loop reimplementation of the two displayed formulas
void brute_force_qr(const std::vector<QuantileTensor>& ens, int r, int c, double& q_mean,
                    double& v_epi, double& v_ale) {
    const int K = ens[0].values.channels();
    const int N = static_cast<int>(ens.size());
    q_mean = 0.0;
    for (int k = 0; k < K; ++k)
        for (int j = 0; j < N; ++j) q_mean += ens[j].values(r, c, k);
    q_mean /= (K * N);

    v_epi = 0.0;
    for (int k = 0; k < K; ++k) {
        double mk = 0.0;
        for (int j = 0; j < N; ++j) mk += ens[j].values(r, c, k);
        mk /= N;
        for (int j = 0; j < N; ++j) {
            const double d = ens[j].values(r, c, k) - mk;
            v_epi += d * d;
        }
    }
    v_epi /= (K * N);

    v_ale = 0.0;
    for (int k = 0; k < K; ++k) {
        double mk = 0.0;
        for (int j = 0; j < N; ++j) mk += ens[j].values(r, c, k);
        mk /= N;
        v_ale += (mk - q_mean) * (mk - q_mean);
    }
    v_ale /= K;
}

}  // namespace

TEST_CASE("midpoint taus are strictly increasing in (0,1)") {
    const auto taus = midpoint_taus(20);
    CHECK(taus.front() == doctest::Approx(0.025).epsilon(1e-12));
    CHECK(taus.back() == doctest::Approx(0.975).epsilon(1e-12));
    for (size_t k = 1; k < taus.size(); ++k) CHECK(taus[k] > taus[k - 1]);
    CHECK(midpoint_taus(1)[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("quantile_huber_loss: worked values and finite differences") {
    const QuantileLossGrad zero = quantile_huber_loss(0.4, 0.4, 0.3, 1.0);
    CHECK(zero.loss == 0.0);
    CHECK(zero.d_pred == 0.0);

    // tau = 0.5, kappa = 1, pred 0, target 1: H_1(1) = 0.5, weight 0.5
    const QuantileLossGrad mid = quantile_huber_loss(0.0, 1.0, 0.5, 1.0);
    CHECK(mid.loss == doctest::Approx(0.25).epsilon(1e-12));

    rng::Stream rs(9, "qr-fd");
    int checked = 0;
    while (checked < 100) {
        const double pred = rs.uniform(-1.5, 1.5);
        const double target = rs.u01() < 0.5 ? 0.0 : 1.0;
        const double tau = rs.uniform(0.05, 0.95);
        const double kappa = rs.uniform(0.2, 2.0);
        const double u = target - pred;
        if (std::abs(std::abs(u) - kappa) < 1e-3 || std::abs(u) < 1e-3) continue;  // kinks
        const QuantileLossGrad g = quantile_huber_loss(pred, target, tau, kappa);
        const double fd = oracles::central_diff(
            [&](double v) { return quantile_huber_loss(v, target, tau, kappa).loss; }, pred);
        CHECK(oracles::close_rel(g.d_pred, fd, 1e-6));
        ++checked;
    }
}

TEST_CASE("qr_predict: zero network gives 0.5 everywhere; K=1 degenerates") {
    sim::Scene scene = sim::generate_scene(31, 3, sim::Difficulty::easy);
    const sim::Observation obs = sim::render(scene);
    const int window = 3;
    const int F = net::patch_feature_count(window);

    net::MlpArchitecture arch;
    arch.input_dim = F + 2;
    arch.hidden = {8};
    arch.head_count = 5;
    net::MlpParams zero = net::init_params(1, arch);
    for (auto& w : zero.weights) w.setZero();
    for (auto& b : zero.biases) b.setZero();

    Grid3 actions(scene.rows, scene.cols, 2, 0.0);
    const QuantileTensor qt = qr_predict(zero, obs, actions, window);
    CHECK(qt.values(10, 10, 0) == 0.5);
    CHECK(qt.values(10, 10, 4) == 0.5);

    const QuantileTensor again = qr_predict(zero, obs, actions, window);
    CHECK(qt.values == again.values);

    // K = 1: the Q map equals the single head
    arch.head_count = 1;
    net::MlpParams one = net::init_params(5, arch);
    const QuantileTensor single = qr_predict(one, obs, actions, window);
    const Grid q = qr_q_map({single});
    for (int r = 0; r < scene.rows; ++r)
        for (int c = 0; c < scene.cols; ++c) CHECK(q(r, c) == single.values(r, c, 0));
}

TEST_CASE("qr_q_map: constants, arithmetic mean, member-order symmetry") {
    CHECK_THROWS_AS(qr_q_map({}), std::invalid_argument);

    const Grid constant = qr_q_map({constant_tensor(2, 2, {0.3, 0.3}),
                                    constant_tensor(2, 2, {0.3, 0.3})});
    CHECK(constant(1, 1) == doctest::Approx(0.3).epsilon(1e-15));

    const QuantileTensor a = constant_tensor(1, 1, {0.1, 0.3});
    const QuantileTensor b = constant_tensor(1, 1, {0.5, 0.7});
    CHECK(qr_q_map({a, b})(0, 0) == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(qr_q_map({b, a})(0, 0) == qr_q_map({a, b})(0, 0));
}

TEST_CASE("qr_ensemble_stats: worked example and collapse cases") {
    // identical members: no epistemic spread
    const QuantileTensor same = constant_tensor(2, 2, {0.2, 0.8});
    const QrEnsembleStats s0 = qr_ensemble_stats({same, same, same});
    CHECK(s0.v_epi(0, 0) == 0.0);

    // N = 1: v_epi = 0 and v_ale is the population variance of the heads
    const QrEnsembleStats s1 = qr_ensemble_stats({constant_tensor(1, 1, {0.2, 0.4, 0.9})});
    CHECK(s1.v_epi(0, 0) == 0.0);
    const double mean = 0.5;
    const double var = ((0.2 - mean) * (0.2 - mean) + (0.4 - mean) * (0.4 - mean) +
                        (0.9 - mean) * (0.9 - mean)) /
                       3.0;
    CHECK(s1.v_ale(0, 0) == doctest::Approx(var).epsilon(1e-12));

    // member A = (0.2, 0.8), member B = (0.4, 0.6)
    const QrEnsembleStats s2 = qr_ensemble_stats(
        {constant_tensor(1, 1, {0.2, 0.8}), constant_tensor(1, 1, {0.4, 0.6})});
    CHECK(s2.q_mean(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(s2.v_epi(0, 0) == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(s2.v_ale(0, 0) == doctest::Approx(0.04).epsilon(1e-12));
}

TEST_CASE("qr_ensemble_stats matches the brute-force oracle on random tensors") {
    rng::Stream rs(13, "qr-oracle");
    for (int trial = 0; trial < 200; ++trial) {
        const int n = rs.uniform_int(1, 5);
        const int K = rs.uniform_int(1, 7);
        std::vector<QuantileTensor> ens;
        for (int j = 0; j < n; ++j) {
            QuantileTensor qt;
            qt.values = Grid3(4, 4, K);
            qt.taus = midpoint_taus(K);
            for (int r = 0; r < 4; ++r)
                for (int c = 0; c < 4; ++c)
                    for (int k = 0; k < K; ++k) qt.values(r, c, k) = rs.u01();
            ens.push_back(std::move(qt));
        }
        const QrEnsembleStats st = qr_ensemble_stats(ens);
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c) {
                double qm, ve, va;
                brute_force_qr(ens, r, c, qm, ve, va);
                CHECK(std::abs(st.q_mean(r, c) - qm) < 1e-12);
                CHECK(std::abs(st.v_epi(r, c) - ve) < 1e-12);
                CHECK(std::abs(st.v_ale(r, c) - va) < 1e-12);
            }
    }
}

TEST_CASE("minimizing the quantile Huber loss with small kappa recovers the sample quantile") {
    rng::Stream rs(17, "qr-sample");
    std::vector<double> sample;
    for (int i = 0; i < 20; ++i) sample.push_back(rs.uniform(0.0, 1.0));

    for (double tau : {0.25, 0.5, 0.9}) {
        // dense scan of the empirical loss with kappa -> 0
        const double kappa = 1e-4;
        double best_x = 0.0, best_loss = 1e300;
        for (double x = -0.05; x <= 1.05; x += 1e-4) {
            double total = 0.0;
            for (double y : sample) total += quantile_huber_loss(x, y, tau, kappa).loss;
            if (total < best_loss) {
                best_loss = total;
                best_x = x;
            }
        }
        const double oracle = oracles::sorted_quantile(sample, tau);
        // tolerance: one sample gap around the oracle
        std::vector<double> sorted = sample;
        std::sort(sorted.begin(), sorted.end());
        double gap = 0.0;
        for (size_t i = 1; i < sorted.size(); ++i)
            gap = std::max(gap, sorted[i] - sorted[i - 1]);
        CHECK(std::abs(best_x - oracle) <= gap + 1e-3);
    }
}
