#include <doctest.h>

#include "oracles.hpp"
#include "ugrasp/actor/actor.hpp"
#include "ugrasp/actor/explore.hpp"
#include "ugrasp/mathx.hpp"
#include "ugrasp/net/patch.hpp"
#include "ugrasp/rng.hpp"
#include "ugrasp/sim/render.hpp"
#include "ugrasp/sim/scene_gen.hpp"

using namespace ugrasp;
using namespace ugrasp::actor;

namespace {

net::MlpArchitecture actor_arch(int input_dim) {
    net::MlpArchitecture arch;
    arch.input_dim = input_dim;
    arch.hidden = {12};
    arch.head_count = 4;
    return arch;
}

critic::CriticMaps constant_maps(int rows, int cols, double q, double ale, double epi) {
    critic::CriticMaps maps;
    maps.q_mean = Grid(rows, cols, q);
    maps.v_ale = Grid(rows, cols, ale);
    maps.v_epi = Grid(rows, cols, epi);
    maps.v_all = Grid(rows, cols, ale + epi);
    return maps;
}

}  // namespace

TEST_CASE("actor_predict: zero network and output bounds") {
    sim::Scene scene = sim::generate_scene(41, 4, sim::Difficulty::mixed);
    const sim::Observation obs = sim::render(scene);
    const int window = 3;
    const int F = net::patch_feature_count(window);

    net::MlpParams zero = net::init_params(1, actor_arch(F));
    for (auto& w : zero.weights) w.setZero();
    for (auto& b : zero.biases) b.setZero();
    const ActionMaps maps = actor_predict(zero, obs, window);
    CHECK(maps.mu(5, 5, 0) == 0.0);
    CHECK(maps.mu(5, 5, 1) == 0.0);
    CHECK(maps.sigma(5, 5, 0) ==
          doctest::Approx(kSigmaMin + (kSigmaMax - kSigmaMin) * std::tanh(softplus(0.0)))
              .epsilon(1e-12));

    const ActionMaps again = actor_predict(zero, obs, window);
    CHECK(maps.mu == again.mu);
    CHECK(maps.sigma == again.sigma);

    // bounds hold for random parameters and random inputs (10 000 draws)
    rng::Stream rs(3, "actor-bounds");
    for (int p = 0; p < 50; ++p) {
        const net::MlpParams params = net::init_params(rs.next_u64(), actor_arch(8));
        for (int i = 0; i < 200; ++i) {
            Eigen::VectorXd x(8);
            for (int k = 0; k < 8; ++k) x[k] = rs.uniform(-5.0, 5.0);
            const Eigen::VectorXd raw = net::forward_one(params, x);
            const double mu_a = kActionBound * std::tanh(raw[0]);
            const double sg_a = kSigmaMin + (kSigmaMax - kSigmaMin) * std::tanh(softplus(raw[2]));
            CHECK(std::abs(mu_a) <= kActionBound);
            CHECK(sg_a >= kSigmaMin);
            CHECK(sg_a <= kSigmaMax);
        }
    }
}

TEST_CASE("ensemble_action_mean") {
    ActionMaps a, b, c;
    a.mu = Grid3(2, 2, 2, 0.2);
    b.mu = Grid3(2, 2, 2, -0.2);
    a.sigma = b.sigma = Grid3(2, 2, 2, 0.1);
    CHECK(ensemble_action_mean({a, a})(1, 1, 0) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(ensemble_action_mean({a, b})(1, 1, 0) == doctest::Approx(0.0).epsilon(1e-15));

    c.mu = Grid3(2, 2, 2, 0.6);
    c.sigma = a.sigma;
    ActionMaps d;
    d.mu = Grid3(2, 2, 2, 0.1);
    d.sigma = a.sigma;
    CHECK(ensemble_action_mean({d, a, c})(0, 0, 1) == doctest::Approx(0.3).epsilon(1e-12));
    CHECK_THROWS_AS(ensemble_action_mean({}), std::invalid_argument);
}

TEST_CASE("gaussian_log_prob matches finite differences") {
    rng::Stream rs(7, "glp-fd");
    for (int i = 0; i < 100; ++i) {
        const double x = rs.uniform(-1.0, 1.0);
        const double mu = rs.uniform(-1.0, 1.0);
        const double sigma = rs.uniform(0.05, 1.0);
        const GaussianLogProb g = gaussian_log_prob(x, mu, sigma);
        CHECK(oracles::close_rel(
            g.d_x,
            oracles::central_diff([&](double v) { return gaussian_log_prob(v, mu, sigma).log_prob; }, x),
            1e-5));
        CHECK(oracles::close_rel(
            g.d_mu,
            oracles::central_diff([&](double v) { return gaussian_log_prob(x, v, sigma).log_prob; }, mu),
            1e-5));
        CHECK(oracles::close_rel(
            g.d_sigma,
            oracles::central_diff([&](double v) { return gaussian_log_prob(x, mu, v).log_prob; }, sigma),
            1e-5));
    }
}

TEST_CASE("actor_loss fields") {
    const ActorLoss l = actor_loss(0.8, -1.3, 0.01);
    CHECK(l.loss == doctest::Approx(0.01 * -1.3 - 0.8).epsilon(1e-15));
    CHECK(l.d_critic_q == -1.0);
    CHECK(l.d_log_prob == 0.01);

    const ActorLoss pure = actor_loss(0.8, -1.3, 0.0);
    CHECK(pure.loss == doctest::Approx(-0.8).epsilon(1e-15));
    CHECK(pure.d_log_prob == 0.0);
}

TEST_CASE("actor climbs a quadratic critic to its known maximum") {
    // synthetic critic oracle: Q(a) = 1 - |a - a*|^2, maximum at a*
    const Eigen::Vector2d target(0.3, -0.25);
    const CriticBatchFn quad = [&](const Eigen::MatrixXd& inputs, Eigen::VectorXd& q,
                                   Eigen::MatrixXd& dq) {
        const Eigen::Index F = inputs.cols() - 2;
        q.resize(inputs.rows());
        dq = Eigen::MatrixXd::Zero(inputs.rows(), inputs.cols());
        for (Eigen::Index i = 0; i < inputs.rows(); ++i) {
            const double da = inputs(i, F) - target[0];
            const double db = inputs(i, F + 1) - target[1];
            q[i] = 1.0 - da * da - db * db;
            dq(i, F) = -2.0 * da;
            dq(i, F + 1) = -2.0 * db;
        }
    };

    net::MlpParams params = net::init_params(9, actor_arch(6));
    net::AdamState adam = net::make_adam_state(params);
    Eigen::MatrixXd patch(1, 6);
    patch << 0.1, 0.4, -0.2, 0.9, 0.0, 0.5;
    Eigen::MatrixXd batch(32, 6);
    for (int b = 0; b < 32; ++b) batch.row(b) = patch.row(0);

    rng::Stream noise(5, "actor-noise");
    for (int step = 0; step < 500; ++step) {
        const net::GradientBundle g = actor_sac_batch_gradient(params, quad, batch, 0.001, noise);
        net::adam_step_inplace(params, adam, g, 1e-2);
    }
    const Eigen::VectorXd raw = net::forward_one(params, patch.row(0).transpose());
    CHECK(std::abs(kActionBound * std::tanh(raw[0]) - target[0]) < 0.05);
    CHECK(std::abs(kActionBound * std::tanh(raw[1]) - target[1]) < 0.05);
}

TEST_CASE("actor gradient matches finite differences through a fixed critic") {
    const CriticBatchFn critic = [](const Eigen::MatrixXd& inputs, Eigen::VectorXd& q,
                                    Eigen::MatrixXd& dq) {
        const Eigen::Index F = inputs.cols() - 2;
        q.resize(inputs.rows());
        dq = Eigen::MatrixXd::Zero(inputs.rows(), inputs.cols());
        for (Eigen::Index i = 0; i < inputs.rows(); ++i) {
            const double a = inputs(i, F), b = inputs(i, F + 1);
            q[i] = std::sin(a) * 0.4 + std::cos(0.7 * b) * 0.3;
            dq(i, F) = 0.4 * std::cos(a);
            dq(i, F + 1) = -0.3 * 0.7 * std::sin(0.7 * b);
        }
    };

    const net::MlpParams params = net::init_params(21, actor_arch(5));
    Eigen::MatrixXd patch(1, 5);
    patch << 0.3, -0.4, 0.8, 0.1, -0.9;
    const double coeff = 0.02;

    // the loss as a pure function of the parameters, with frozen noise
    auto loss_of = [&](const net::MlpParams& p) {
        rng::Stream noise(77, "fd-noise");
        net::GradientBundle g = actor_sac_batch_gradient(p, critic, patch, coeff, noise);
        return g.loss;
    };
    rng::Stream noise(77, "fd-noise");
    const net::GradientBundle g = actor_sac_batch_gradient(params, critic, patch, coeff, noise);

    const double h = 1e-6;
    double worst = 0.0;
    net::MlpParams probe = params;
    for (size_t l = 0; l < probe.weights.size(); ++l) {
        for (Eigen::Index r = 0; r < probe.weights[l].rows(); ++r)
            for (Eigen::Index c = 0; c < probe.weights[l].cols(); ++c) {
                const double keep = probe.weights[l](r, c);
                probe.weights[l](r, c) = keep + h;
                const double up = loss_of(probe);
                probe.weights[l](r, c) = keep - h;
                const double dn = loss_of(probe);
                probe.weights[l](r, c) = keep;
                const double fd = (up - dn) / (2.0 * h);
                const double scale = std::max({std::abs(fd), std::abs(g.d_weights[l](r, c)), 1e-2});
                worst = std::max(worst, std::abs(fd - g.d_weights[l](r, c)) / scale);
            }
    }
    CHECK(worst < 1e-5);
}

TEST_CASE("delta_schedule: fixed and cosine endpoints") {
    UcbConfig fixed;
    fixed.delta = 1.0;
    fixed.schedule = ScheduleKind::fixed;
    CHECK(delta_schedule(fixed, 0) == 1.0);
    CHECK(delta_schedule(fixed, 123456) == 1.0);

    UcbConfig cosine;
    cosine.delta = 1.0;
    cosine.schedule = ScheduleKind::cosine_adaptive;
    cosine.horizon = 3000;
    CHECK(delta_schedule(cosine, 0) == 1.0);
    CHECK(delta_schedule(cosine, 1500) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(delta_schedule(cosine, 3000) == 0.0);
    CHECK(delta_schedule(cosine, 9000) == 0.0);
}

TEST_CASE("ucb_map: Eq-style arithmetic and kind selection") {
    const critic::CriticMaps maps = constant_maps(3, 3, 0.5, 0.15, 0.2);
    UcbConfig config;
    config.kind = UncertaintyKind::epistemic;
    config.delta = 0.0;
    const Grid identity = ucb_map(maps.q_mean, maps, config, 0);
    CHECK(identity(1, 1) == 0.5);

    config.delta = 1.0;
    CHECK(ucb_map(maps.q_mean, maps, config, 0)(1, 1) == doctest::Approx(0.7).epsilon(1e-12));

    config.kind = UncertaintyKind::aleatoric;
    CHECK(ucb_map(maps.q_mean, maps, config, 0)(1, 1) == doctest::Approx(0.65).epsilon(1e-12));

    config.kind = UncertaintyKind::total;
    CHECK(ucb_map(maps.q_mean, maps, config, 0)(1, 1) == doctest::Approx(0.85).epsilon(1e-12));

    config.kind = UncertaintyKind::none;
    config.delta = 5.0;
    CHECK(ucb_map(maps.q_mean, maps, config, 0)(1, 1) == 0.5);

    // optional std bonus
    config.kind = UncertaintyKind::epistemic;
    config.delta = 1.0;
    config.on_std = true;
    CHECK(ucb_map(maps.q_mean, maps, config, 0)(1, 1) ==
          doctest::Approx(0.5 + std::sqrt(0.2)).epsilon(1e-12));
}

TEST_CASE("select_pixel: masks, tie-breaking, shift invariance") {
    sim::Scene scene;
    scene.rows = 8;
    scene.cols = 8;
    scene.bin_mask = sim::make_border_mask(8, 8, 1);
    const sim::Observation obs = sim::render(scene);
    Grid3 actions(8, 8, 2, 0.1);

    // single valid pixel
    MaskGrid one(8, 8, 0);
    one(4, 6) = 1;
    Grid flat(8, 8, 1.0);
    const PixelSelection only = select_pixel(flat, one, actions, obs);
    CHECK(only.row == 4);
    CHECK(only.col == 6);

    // uniform map: lowest row-major index inside the mask
    const PixelSelection first = select_pixel(flat, scene.bin_mask, actions, obs);
    CHECK(first.row == 1);
    CHECK(first.col == 1);

    // adding a constant never moves the argmax
    Grid bumpy(8, 8, 0.0);
    bumpy(5, 3) = 2.0;
    const PixelSelection base = select_pixel(bumpy, scene.bin_mask, actions, obs);
    for (size_t i = 0; i < bumpy.size(); ++i) bumpy.at_index(i) += 17.5;
    const PixelSelection shifted = select_pixel(bumpy, scene.bin_mask, actions, obs);
    CHECK(base.row == shifted.row);
    CHECK(base.col == shifted.col);
    CHECK(base.row == 5);
    CHECK(base.col == 3);

    MaskGrid none(8, 8, 0);
    CHECK_THROWS_AS(select_pixel(flat, none, actions, obs), std::runtime_error);
}

TEST_CASE("argmax monotonicity: raising V at the selected pixel keeps it selected") {
    critic::CriticMaps maps = constant_maps(6, 6, 0.4, 0.0, 0.0);
    maps.q_mean(2, 2) = 0.6;
    maps.v_epi(2, 2) = 0.1;

    MaskGrid mask(6, 6, 1);
    UcbConfig config;
    config.kind = UncertaintyKind::epistemic;
    config.delta = 1.0;

    sim::Scene scene;
    scene.rows = 6;
    scene.cols = 6;
    scene.bin_mask = mask;
    const sim::Observation obs = sim::render(scene);
    Grid3 actions(6, 6, 2, 0.0);

    const PixelSelection before =
        select_pixel(ucb_map(maps.q_mean, maps, config, 0), mask, actions, obs);
    CHECK(before.row == 2);
    CHECK(before.col == 2);

    maps.v_epi(2, 2) = 5.0;  // only increases V at the already-selected pixel
    const PixelSelection after =
        select_pixel(ucb_map(maps.q_mean, maps, config, 0), mask, actions, obs);
    CHECK(after.row == 2);
    CHECK(after.col == 2);

    // with a large enough delta the argmax follows V wherever q is bounded
    maps = constant_maps(6, 6, 0.4, 0.0, 0.0);
    maps.q_mean(1, 1) = 0.9;
    maps.v_epi(4, 4) = 0.3;
    config.delta = 100.0;
    const PixelSelection v_driven =
        select_pixel(ucb_map(maps.q_mean, maps, config, 0), mask, actions, obs);
    CHECK(v_driven.row == 4);
    CHECK(v_driven.col == 4);
}

TEST_CASE("identical ensemble members make epistemic UCB degenerate to q_mean") {
    sim::Scene scene = sim::generate_scene(51, 5, sim::Difficulty::mixed);
    const sim::Observation obs = sim::render(scene);
    const int window = 3;
    const Eigen::MatrixXd patches = net::extract_patch_matrix(obs, window);

    critic::CriticConfig ccfg;
    ccfg.kind = critic::CriticKind::mean_variance;
    net::MlpArchitecture arch;
    arch.input_dim = net::patch_feature_count(window) + 2;
    arch.hidden = {8};
    arch.head_count = 2;
    const net::MlpParams member = net::init_params(3, arch);

    Grid3 actions(scene.rows, scene.cols, 2, 0.0);
    const Eigen::MatrixXd inputs = critic::append_action_columns(patches, actions);
    const critic::CriticMaps maps =
        critic::ensemble_critic_maps({member, member, member}, ccfg, inputs, scene.rows, scene.cols);

    UcbConfig config;
    config.kind = UncertaintyKind::epistemic;
    config.delta = 1.0;
    const Grid ucb = ucb_map(maps.q_mean, maps, config, 0);
    for (size_t i = 0; i < ucb.size(); ++i) CHECK(ucb.at_index(i) == maps.q_mean.at_index(i));
}
