#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "qudqn/env.hpp"
#include "qudqn/errors.hpp"
#include "qudqn/qlearn.hpp"

using namespace qudqn;

namespace {

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

ActionMask full_mask(std::size_t n) {
    ActionMask m(1, n);
    for (std::size_t i = 0; i < n; ++i) m.set(i, true);
    return m;
}

Transition terminal(std::vector<double> s, std::size_t a, double r) {
    return Transition{s, a, r, s, true, ActionMask(1, 1)};
}

}  // namespace

TEST_CASE("mlp_init shapes, determinism and zero biases") {
    const auto net = Mlp::init({4, 8, 8, 3}, 5);
    CHECK(net.parameter_count() == 139);
    CHECK(net.flat_parameters().size() == 139);
    CHECK(net == Mlp::init({4, 8, 8, 3}, 5));
    CHECK_FALSE(net == Mlp::init({4, 8, 8, 3}, 6));
    for (const auto& l : net.layers()) {
        CHECK(l.bias.isZero(0.0));
        const double bound = 1.0 / std::sqrt(static_cast<double>(l.weight.cols()));
        CHECK(l.weight.cwiseAbs().maxCoeff() <= bound);
    }
    CHECK_THROWS_AS(Mlp::init({}, 1), ConfigError);
    CHECK_THROWS_AS(Mlp::init({4}, 1), ConfigError);
    CHECK_THROWS_AS(Mlp::init({4, 0, 2}, 1), ConfigError);
}

TEST_CASE("forward on hand-set networks") {
    const Mlp zero({3, 5, 2});
    const std::vector<double> x{1.0, -2.0, 3.0};
    CHECK(zero.forward(x).isZero(0.0));

    Mlp identity({3, 3});
    identity.layers()[0].weight = Eigen::MatrixXd::Identity(3, 3);
    const auto y = identity.forward(x);
    for (int i = 0; i < 3; ++i) CHECK(y(i) == x[static_cast<std::size_t>(i)]);

    // z1 = [1*1 + 2*1 + 0.5, 3*1 - 4*1] = [3.5, -1] -> h = [3.5, 0]
    // q  = [1*3.5 + 1*0 + 0, 2*3.5 - 1*0 + 1] = [3.5, 8]
    Mlp tiny({2, 2, 2});
    tiny.layers()[0].weight << 1, 2, 3, -4;
    tiny.layers()[0].bias << 0.5, 0;
    tiny.layers()[1].weight << 1, 1, 2, -1;
    tiny.layers()[1].bias << 0, 1;
    const auto q = tiny.forward(std::vector<double>{1.0, 1.0});
    CHECK(q(0) == 3.5);
    CHECK(q(1) == 8.0);

    CHECK_THROWS_AS(tiny.forward(std::vector<double>{1.0}), ConfigError);
}

TEST_CASE("td_target bootstraps through valid actions only") {
    Mlp target({2, 3});
    target.layers()[0].bias << 1.0, 5.0, 0.5;
    ActionMask mask(1, 3);
    mask.set(0, true);
    mask.set(2, true);
    const std::vector<double> s{0.0, 0.0};

    const std::vector<Transition> batch{
        Transition{s, 0, -2.0, s, true, mask},
        Transition{s, 1, 0.2, s, false, mask},
    };
    const auto y = td_target(batch, target, 0.9);
    CHECK(y[0] == -2.0);
    CHECK(std::abs(y[1] - 1.1) < 1e-15);

    const auto myopic = td_target(batch, target, 0.0);
    CHECK(myopic[1] == 0.2);

    std::vector<Transition> dead{Transition{s, 0, 0.5, s, false, ActionMask(1, 3)}};
    CHECK_THROWS_AS(td_target(dead, target, 0.9), ContractViolation);
    CHECK_THROWS_AS(td_target(std::vector<Transition>{}, target, 0.9), ContractViolation);
}

TEST_CASE("td_target with a single valid action uses exactly that output") {
    std::mt19937_64 rng(11);
    const auto net = Mlp::init({6, 10, 4}, 3);
    for (std::size_t j = 0; j < 4; ++j) {
        ActionMask mask(1, 4);
        mask.set(j, true);
        const auto s = random_vector(6, rng);
        const std::vector<Transition> batch{Transition{s, 0, 0.3, s, false, mask}};
        const auto y = td_target(batch, net, 0.9);
        CHECK(y[0] == 0.3 + 0.9 * net.forward(s)(static_cast<Eigen::Index>(j)));
    }
}

TEST_CASE("train step with zero error leaves parameters unchanged") {
    std::mt19937_64 rng(1);
    auto net = Mlp::init({3, 4, 2}, 9);
    const auto s = random_vector(3, rng);
    const double q = net.forward(s)(1);
    const Transition t = terminal(s, 1, q);
    const Transition* batch[] = {&t};
    const auto before = net;
    const double loss = train_on_batch(net, net, batch, 0.1, 0.9);
    CHECK(loss == 0.0);
    CHECK(net == before);
}

TEST_CASE("single-transition update matches a hand-derived gradient") {
    Mlp net({2, 2, 1});
    net.layers()[0].weight << 0.5, -0.3, 0.2, 0.4;
    net.layers()[0].bias << 0.3, -0.2;
    net.layers()[1].weight << 0.7, -0.6;
    net.layers()[1].bias << 0.05;
    // x = (1, 2), target 0.3:
    //   z1 = (0.5 - 0.6 + 0.3, 0.2 + 0.8 - 0.2) = (0.2, 0.8), both active
    //   q  = 0.7*0.2 - 0.6*0.8 + 0.05 = -0.29, dL/dq = 2(q - y) = -1.18
    //   dW2 = -1.18 * (0.2, 0.8) = (-0.236, -0.944), db2 = -1.18
    //   dh  = (0.7, -0.6) * -1.18 = (-0.826, 0.708)
    //   dW1 = dh x^T = [[-0.826, -1.652], [0.708, 1.416]], db1 = (-0.826, 0.708)
    const Transition t = terminal({1.0, 2.0}, 0, 0.3);
    const Transition* batch[] = {&t};
    const auto before = net.flat_parameters();
    const double loss = train_on_batch(net, net, batch, 0.1, 0.9);
    CHECK(std::abs(loss - 0.59 * 0.59) < 1e-12);
    const auto after = net.flat_parameters();
    // Flat order: W1 row-major, b1, W2, b2.
    const double grad[] = {-0.826, -1.652, 0.708, 1.416, -0.826, 0.708, -0.236, -0.944, -1.18};
    for (std::size_t i = 0; i < 9; ++i) CHECK(std::abs((after[i] - before[i]) - (-0.1 * grad[i])) < 1e-9);
}

TEST_CASE("repeated training on one batch lowers the loss") {
    std::mt19937_64 rng(2);
    auto net = Mlp::init({4, 8, 8, 3}, 21);
    std::vector<Transition> data;
    for (int i = 0; i < 16; ++i) data.push_back(terminal(random_vector(4, rng, 0.0, 1.0), rng() % 3, random_vector(1, rng)[0]));
    std::vector<const Transition*> batch;
    for (const auto& t : data) batch.push_back(&t);
    double prev = std::numeric_limits<double>::infinity();
    for (int step = 0; step < 50; ++step) {
        const double loss = train_on_batch(net, net, batch, 0.01, 0.9);
        CHECK(loss < prev);
        prev = loss;
    }
}

TEST_CASE("replay buffer is a ring with distinct uniform samples") {
    ReplayBuffer buf(5);
    for (int i = 0; i < 8; ++i) buf.push(terminal({double(i)}, 0, double(i)));
    CHECK(buf.size() == 5);
    std::set<double> rewards;
    for (std::size_t i = 0; i < buf.size(); ++i) rewards.insert(buf[i].reward);
    CHECK(rewards == std::set<double>{3, 4, 5, 6, 7});

    Rng rng(4);
    std::vector<int> hits(5, 0);
    for (int trial = 0; trial < 20000; ++trial) {
        const auto idx = buf.sample_indices(3, rng);
        CHECK(std::set<std::size_t>(idx.begin(), idx.end()).size() == 3);
        for (auto i : idx) ++hits[i];
    }
    for (int h : hits) CHECK(std::abs(h / 60000.0 - 0.2) < 0.01);
    CHECK_THROWS_AS(buf.sample_indices(6, rng), ContractViolation);
    CHECK_THROWS_AS(ReplayBuffer(0), ConfigError);
}

TEST_CASE("train_step signals not ready on an under-filled buffer") {
    TrainConfig cfg;
    cfg.batch = 4;
    auto net = Mlp::init({1, 2}, 1);
    ReplayBuffer buf(10);
    Rng rng(1);
    buf.push(terminal({0.5}, 0, 1.0));
    CHECK_FALSE(train_step(net, net, buf, cfg, rng).has_value());
    for (int i = 0; i < 3; ++i) buf.push(terminal({0.5}, 1, 1.0));
    CHECK(train_step(net, net, buf, cfg, rng).has_value());
}

TEST_CASE("target network sync") {
    TrainConfig cfg;
    cfg.batch = 1;
    cfg.buffer_capacity = 10;
    cfg.target_sync_period = 100;
    cfg.lr = 0.01;
    std::mt19937_64 rng(3);
    DqnLearner learner(Mlp::init({3, 6, 2}, 4), cfg, 4);
    ActionMask mask = full_mask(2);
    const auto s = random_vector(3, rng);
    learner.remember(Transition{s, 0, 1.0, random_vector(3, rng), false, mask});

    const auto probe = random_vector(3, rng);
    CHECK(learner.main().forward(probe) == learner.target().forward(probe));

    const Mlp frozen = learner.target();
    for (int i = 0; i < 99; ++i) REQUIRE(learner.learn().has_value());
    CHECK(learner.target() == frozen);
    CHECK_FALSE(learner.main() == frozen);
    CHECK(learner.target().forward(probe) == frozen.forward(probe));

    REQUIRE(learner.learn().has_value());
    CHECK(learner.target() == learner.main());
    CHECK(learner.main().forward(probe) == learner.target().forward(probe));
    for (int i = 100; i < 1000; ++i) learner.learn();
    CHECK(learner.gradient_steps() == 1000);
    CHECK(learner.sync_count() == 10);

    Mlp other = Mlp::init({3, 6, 2}, 99);
    sync_target(learner.main(), other);
    CHECK(other == learner.main());
}

TEST_CASE("grad_check agrees with backprop") {
    std::mt19937_64 rng(8);
    const auto net = Mlp::init({3, 4, 2}, 12);
    const auto x = random_vector(3, rng);
    CHECK(grad_check(net, x, 1, 0.7, 1e-5) <= 1e-4);

    // At prediction == target every gradient vanishes.
    const double q = net.forward(x)(0);
    CHECK(grad_check(net, x, 0, q, 1e-5) == 0.0);

    CHECK_THROWS_AS(grad_check(net, x, 0, 0.0, 1e-2), ConfigError);
    CHECK_THROWS_AS(grad_check(net, x, 0, 0.0, 1e-9), ConfigError);
}

TEST_CASE("grad_check error is stable across step sizes") {
    std::mt19937_64 rng(9);
    const auto net = Mlp::init({5, 7, 7, 3}, 13);
    const auto x = random_vector(5, rng);
    std::vector<double> errs;
    for (double eps : {1e-4, 1e-5, 1e-6}) errs.push_back(grad_check(net, x, 2, -0.4, eps));
    for (double e : errs) CHECK(e <= 1e-4);
    // Shrinking eps trades truncation for rounding error; the worst case grows
    // at most one order of magnitude per decade here.
    for (std::size_t i = 1; i < errs.size(); ++i) CHECK(errs[i] <= 10.0 * errs[i - 1] + 1e-12);
}

TEST_CASE("backprop matches finite differences on nets up to 20-32-32-10") {
    std::mt19937_64 rng(10);
    const std::vector<std::vector<std::size_t>> shapes{{2, 3, 1}, {6, 5, 4}, {8, 16, 16, 5}, {20, 32, 32, 10}};
    for (const auto& dims : shapes) {
        for (int rep = 0; rep < 3; ++rep) {
            const auto net = Mlp::init(dims, rng());
            const auto x = random_vector(dims.front(), rng);
            const auto a = static_cast<std::size_t>(rng() % dims.back());
            CHECK(grad_check(net, x, a, random_vector(1, rng)[0], 1e-5) <= 1e-4);
        }
    }
}

TEST_CASE("checkpoint round trip reproduces forward outputs bit-exactly") {
    std::mt19937_64 rng(12);
    auto net = Mlp::init({7, 9, 5, 3}, 6);
    for (auto& l : net.layers()) l.bias = Eigen::VectorXd::Random(l.bias.size()) * 0.123456789;
    const auto path = std::filesystem::temp_directory_path() / "qudqn_test_checkpoint.json";
    save_checkpoint(path, net, 4242);
    const auto cp = load_checkpoint(path);
    CHECK(cp.global_step == 4242);
    CHECK(cp.net == net);
    for (int i = 0; i < 10; ++i) {
        const auto x = random_vector(7, rng);
        CHECK(cp.net.forward(x) == net.forward(x));
    }
    std::filesystem::remove(path);

    CHECK_THROWS_AS(load_checkpoint("/nonexistent/dir/cp.json"), IoError);
    const auto bad = std::filesystem::temp_directory_path() / "qudqn_bad_checkpoint.json";
    std::ofstream(bad) << R"({"format":"qudqn-mlp","version":1,"dims":[2,1],"global_step":0,"weights":[[[1]]],"biases":[[0]]})";
    CHECK_THROWS_AS(load_checkpoint(bad), ConfigError);
    std::filesystem::remove(bad);
}

TEST_CASE("train config validation and epsilon schedule") {
    TrainConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    CHECK(cfg.lr == 0.1);
    CHECK(cfg.batch == 512);
    CHECK(cfg.discount == 0.9);
    CHECK(cfg.target_sync_period == 100);
    cfg.episodes = 100;
    CHECK(cfg.epsilon_at(0) == 1.0);
    CHECK(cfg.epsilon_at(25) == doctest::Approx(0.525));
    CHECK(cfg.epsilon_at(50) == 0.05);
    CHECK(cfg.epsilon_at(99) == 0.05);

    auto bad = cfg;
    bad.lr = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.discount = 1.5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.target_sync_period = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.batch = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("parameters stay finite over 1e5 steps at the default learning rate") {
    // Transitions from random play on a 2x2 grid, 2 requests, 2 paths each.
    EnvConfig env;
    env.topology.rows = 2;
    env.topology.cols = 2;
    env.requests = 2;
    env.k_paths = 2;
    const auto topo = grid_topology(env.topology, 1);
    TrainConfig cfg;
    cfg.batch = 32;
    cfg.hidden = {32, 32};
    DqnLearner learner(Mlp::init(network_dims(topo, env, cfg), 1), cfg, 1);
    Rng choose(2);
    for (std::size_t i = 0; learner.buffer().size() < learner.buffer().capacity() && i < 100000; ++i) {
        const auto seed = episode_seed(3, i);
        Episode ep(topo, generate_demands(topo, env.requests, seed), env, seed);
        while (!ep.done()) {
            auto s = ep.state_vector();
            const auto valid = ep.mask().valid_actions();
            const auto a = valid[choose() % valid.size()];
            const auto out = ep.step(a);
            learner.remember(Transition{std::move(s), a, out.reward, ep.state_vector(), out.terminal, ep.mask()});
        }
    }
    REQUIRE(learner.buffer().size() >= cfg.batch);
    for (int step = 0; step < 100000; ++step) {
        const auto loss = learner.learn();
        REQUIRE(loss.has_value());
        REQUIRE(std::isfinite(*loss));
        if (step % 1000 == 0) REQUIRE(learner.main().all_finite());
    }
    CHECK(learner.main().all_finite());
    CHECK(learner.target().all_finite());
}
