#include <doctest.h>

#include <filesystem>

#include "oracles.hpp"
#include "ugrasp/net/mlp.hpp"
#include "ugrasp/net/patch.hpp"
#include "ugrasp/rng.hpp"
#include "ugrasp/sim/render.hpp"
#include "ugrasp/sim/scene_gen.hpp"

using namespace ugrasp;
using namespace ugrasp::net;

namespace {

MlpArchitecture small_arch(int input = 6, int heads = 3) {
    MlpArchitecture a;
    a.input_dim = input;
    a.hidden = {5, 4};
    a.head_count = heads;
    return a;
}

Eigen::VectorXd random_vec(rng::Stream& rs, int n, double lo = -1.0, double hi = 1.0) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = rs.uniform(lo, hi);
    return v;
}

}  // namespace

TEST_CASE("extract_patch: floor pixel, edge replication, uniformity") {
    sim::Scene scene;
    scene.rows = 16;
    scene.cols = 16;
    scene.rng_seed = 3;
    scene.bin_mask = sim::make_border_mask(16, 16, 2);
    const sim::Observation obs = sim::render(scene);

    const Eigen::VectorXd p1 = extract_patch(obs, 8, 8, 1);
    REQUIRE(p1.size() == 5);
    CHECK(p1[0] == 0.0);
    CHECK(p1[1] == 0.0);
    CHECK(p1[2] == 0.0);
    CHECK(p1[3] == 1.0);
    CHECK(p1[4] == obs.intensity(8, 8));

    // corner window replicates the corner pixel
    const Eigen::VectorXd corner = extract_patch(obs, 0, 0, 3);
    for (int cell = 0; cell < 9; ++cell)
        for (int ch = 0; ch < kPatchChannels; ++ch)
            CHECK(corner[cell * kPatchChannels + ch] ==
                  extract_patch(obs, 0, 0, 1)[ch]);

    // uniform scene: all cells identical
    const Eigen::VectorXd uni = extract_patch(obs, 8, 8, 3);
    for (int cell = 1; cell < 9; ++cell)
        for (int ch = 0; ch < kPatchChannels; ++ch)
            CHECK(uni[cell * kPatchChannels + ch] == uni[ch]);

    CHECK_THROWS_WITH_AS(extract_patch(obs, 8, 8, 4), "window must be odd",
                         std::invalid_argument);

    const Eigen::MatrixXd X = extract_patch_matrix(obs, 3);
    CHECK(X.rows() == 16 * 16);
    CHECK((X.row(8 * 16 + 8).transpose() - uni).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("forward: zeros, hand-evaluated linear layer, determinism") {
    MlpArchitecture arch = small_arch();
    MlpParams zero = init_params(1, arch);
    for (auto& w : zero.weights) w.setZero();
    for (auto& b : zero.biases) b.setZero();
    const Eigen::VectorXd x = Eigen::VectorXd::Constant(arch.input_dim, 0.7);
    CHECK(forward_one(zero, x).isZero(0.0));

    // single linear layer: outputs are weight row sums on a unit input
    MlpArchitecture lin;
    lin.input_dim = 4;
    lin.head_count = 2;
    MlpParams p = init_params(7, lin);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(4);
    const Eigen::VectorXd y = forward_one(p, ones);
    CHECK(y[0] == doctest::Approx(p.weights[0].row(0).sum()).epsilon(1e-12));
    CHECK(y[1] == doctest::Approx(p.weights[0].row(1).sum()).epsilon(1e-12));

    rng::Stream rs(5, "fwd");
    MlpParams q = init_params(9, arch);
    const Eigen::VectorXd xr = random_vec(rs, arch.input_dim);
    CHECK((forward_one(q, xr) - forward_one(q, xr)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("backward: zero cotangent, linear closed form") {
    MlpParams p = init_params(3, small_arch());
    const Eigen::VectorXd x = Eigen::VectorXd::Constant(6, 0.25);
    const GradientBundle g = backward_one(p, x, Eigen::VectorXd::Zero(3));
    for (const auto& w : g.d_weights) CHECK(w.isZero(0.0));
    for (const auto& b : g.d_biases) CHECK(b.isZero(0.0));

    // pure linear net: dW = dy x^T
    MlpArchitecture lin;
    lin.input_dim = 4;
    lin.head_count = 2;
    MlpParams q = init_params(11, lin);
    rng::Stream rs(2, "bwd");
    const Eigen::VectorXd xr = random_vec(rs, 4);
    Eigen::VectorXd dy(2);
    dy << 0.3, -1.2;
    const GradientBundle gl = backward_one(q, xr, dy);
    const Eigen::MatrixXd expected = dy * xr.transpose();
    CHECK((gl.d_weights[0] - expected).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((gl.d_biases[0] - dy).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("backward matches central finite differences on 100 random draws") {
    rng::Stream rs(17, "fd-draws");
    double worst = 0.0;
    for (int draw = 0; draw < 100; ++draw) {
        const MlpParams p = init_params(rs.next_u64(), small_arch());
        const Eigen::VectorXd x = random_vec(rs, 6, -2.0, 2.0);
        const Eigen::VectorXd dy = random_vec(rs, 3);
        const GradientBundle g = backward_one(p, x, dy);
        worst = std::max(worst, oracles::max_grad_mismatch(p, x, dy, g));
    }
    CHECK(worst < 1e-5);
}

TEST_CASE("backward handles input scaling") {
    MlpArchitecture arch = small_arch();
    arch.input_scale = Eigen::VectorXd::LinSpaced(6, 0.2, 1.5);
    rng::Stream rs(23, "fd-scale");
    const MlpParams p = init_params(rs.next_u64(), arch);
    const Eigen::VectorXd x = random_vec(rs, 6, -2.0, 2.0);
    const Eigen::VectorXd dy = random_vec(rs, 3);
    const GradientBundle g = backward_one(p, x, dy);
    CHECK(oracles::max_grad_mismatch(p, x, dy, g) < 1e-5);
}

TEST_CASE("adam: no-op on zero gradient, first-step size, purity, divergence") {
    MlpArchitecture scalar;
    scalar.input_dim = 1;
    scalar.head_count = 1;
    MlpParams p = init_params(1, scalar);
    p.weights[0](0, 0) = 1.0;
    p.biases[0][0] = 0.0;

    AdamState s = make_adam_state(p);
    GradientBundle zero = zero_gradients(p);
    auto [p_same, s_same] = adam_step(p, s, zero, 0.1);
    CHECK(p_same.weights[0](0, 0) == 1.0);

    GradientBundle g = zero_gradients(p);
    g.d_weights[0](0, 0) = 1.0;
    auto [p1, s1] = adam_step(p, s, g, 0.1);
    CHECK(p1.weights[0](0, 0) == doctest::Approx(0.9).epsilon(1e-7));

    auto [p2a, s2a] = adam_step(p1, s1, g, 0.1);
    auto [p2b, s2b] = adam_step(p1, s1, g, 0.1);
    CHECK(p2a.weights[0](0, 0) == p2b.weights[0](0, 0));
    CHECK(s2a.step == s2b.step);

    g.d_weights[0](0, 0) = std::nan("");
    CHECK_THROWS_WITH_AS(adam_step(p, s, g, 0.1), "diverged", std::runtime_error);
}

TEST_CASE("init_params: deterministic, seed-sensitive, bounded") {
    const MlpArchitecture arch = small_arch(10, 2);
    const MlpParams a = init_params(5, arch);
    const MlpParams b = init_params(5, arch);
    const MlpParams c = init_params(6, arch);
    CHECK((a.weights[0] - b.weights[0]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.weights[1] - b.weights[1]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.weights[0] - c.weights[0]).cwiseAbs().maxCoeff() > 0.0);

    const std::vector<int> fan_in = {10, 5, 4};
    for (size_t l = 0; l < a.weights.size(); ++l) {
        const double bound = std::sqrt(6.0 / fan_in[l]);
        CHECK(a.weights[l].cwiseAbs().maxCoeff() <= bound);
        CHECK(a.biases[l].isZero(0.0));
    }
}

TEST_CASE("forward is Lipschitz-bounded by the product of weight norms") {
    rng::Stream rs(31, "lip");
    const MlpParams p = init_params(77, small_arch());
    double bound = 1.0;
    for (const auto& w : p.weights) bound *= w.norm();  // Frobenius >= spectral
    for (int i = 0; i < 50; ++i) {
        const Eigen::VectorXd x = random_vec(rs, 6, -2.0, 2.0);
        const Eigen::VectorXd y = random_vec(rs, 6, -2.0, 2.0);
        const double lhs = (forward_one(p, x) - forward_one(p, y)).norm();
        CHECK(lhs <= bound * (x - y).norm() + 1e-12);
    }
}

TEST_CASE("checkpoint round trip is bit exact") {
    MlpArchitecture arch = small_arch(8, 4);
    arch.input_scale = Eigen::VectorXd::LinSpaced(8, 0.1, 1.0);
    const MlpParams p = init_params(123, arch);
    const auto tmp = std::filesystem::temp_directory_path() / "ugrasp_ckpt_test.bin";
    save_params(p, tmp.string());
    const MlpParams q = load_params(tmp.string());
    CHECK(q.arch == p.arch);
    for (size_t l = 0; l < p.weights.size(); ++l) {
        CHECK((p.weights[l] - q.weights[l]).cwiseAbs().maxCoeff() == 0.0);
        CHECK((p.biases[l] - q.biases[l]).cwiseAbs().maxCoeff() == 0.0);
    }
    CHECK(std::filesystem::exists(tmp.string() + ".manifest"));
    std::filesystem::remove(tmp);
    std::filesystem::remove(tmp.string() + ".manifest");
}
