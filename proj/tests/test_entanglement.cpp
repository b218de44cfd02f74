#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "qudqn/entanglement.hpp"
#include "qudqn/errors.hpp"
#include "qudqn/routing.hpp"
#include "test_support.hpp"

using namespace qudqn;
using qudqn::testing::line_topology;
using qudqn::testing::make_path;
using qudqn::testing::node;
using qudqn::testing::uniform_grid;

TEST_CASE("path fidelity is the product of link fidelities") {
    const auto one = line_topology({4, 4}, {0.8});
    CHECK(path_fidelity(NetworkState(one), make_path({0, 1})) == doctest::Approx(0.8).epsilon(1e-15));

    const auto two = line_topology({4, 4, 4}, {0.9, 0.9});
    CHECK(std::abs(path_fidelity(NetworkState(two), make_path({0, 1, 2})) - 0.81) < 1e-15);

    const auto three = line_topology({4, 4, 4, 4}, {0.95, 0.95, 0.95});
    CHECK(std::abs(path_fidelity(NetworkState(three), make_path({3, 2, 1, 0})) - 0.857375) < 1e-15);
}

TEST_CASE("invalid paths are rejected") {
    const auto t = uniform_grid(3, 3, 4, 10, 0.9);
    const NetworkState s(t);
    CHECK_THROWS_AS(path_fidelity(s, make_path({0})), PathError);
    CHECK_THROWS_AS(path_fidelity(s, make_path({0, 4})), PathError);
    CHECK_THROWS_AS(path_fidelity(s, make_path({0, 1, 0})), PathError);
    CHECK_THROWS_AS(path_fidelity(s, make_path({0, 9})), PathError);
}

TEST_CASE("qubit cost is two per hop") {
    // Oracle: 1 per endpoint, 2 per intermediate, summed node by node.
    for (std::uint32_t hops = 1; hops <= 8; ++hops) {
        Path p;
        for (std::uint32_t i = 0; i <= hops; ++i) p.nodes.push_back(node(i));
        int by_role = 0;
        for (std::size_t i = 0; i < p.nodes.size(); ++i) by_role += (i == 0 || i + 1 == p.nodes.size()) ? 1 : 2;
        CHECK(qubit_cost(p) == by_role);
    }
    CHECK(qubit_cost(make_path({0, 1})) == 2);
    CHECK(qubit_cost(make_path({0, 1, 2, 3})) == 6);
    CHECK(qubit_cost(make_path({0, 1, 2, 3, 4, 5})) == 10);
}

TEST_CASE("feasibility checks capacities and fidelity") {
    const auto t = uniform_grid(5, 5, 4, 30, 0.95);
    NetworkState s(t);
    const auto path = make_path({0, 1, 2});
    CHECK(feasible(s, path, PhysParams{0.9, 0.9, 0.85}));
    CHECK_FALSE(feasible(s, path, PhysParams{0.9, 0.9, 0.95}));

    s.set_residual_qubits(node(1), 1);
    CHECK_FALSE(feasible(s, path, PhysParams{0.9, 0.9, 0.85}));
    s.set_residual_qubits(node(1), 2);
    CHECK(feasible(s, path, PhysParams{0.9, 0.9, 0.85}));

    s.set_residual_qubits(node(0), 0);
    CHECK_FALSE(feasible(s, path, PhysParams{0.9, 0.9, 0.85}));
    s.set_residual_qubits(node(0), 1);
    CHECK(feasible(s, path, PhysParams{0.9, 0.9, 0.85}));

    s.set_residual_channels(*t.find_edge(node(1), node(2)), 0);
    CHECK_FALSE(feasible(s, path, PhysParams{0.9, 0.9, 0.85}));
}

TEST_CASE("certain success consumes 2h qubits and h channels") {
    const auto t = uniform_grid(4, 4, 4, 30, 0.95);
    NetworkState s(t);
    Rng rng(1);
    const auto path = make_path({0, 1, 2, 3});
    const auto r = attempt_path(s, path, PhysParams{1.0, 1.0, 0.5}, rng);
    CHECK(r.success);
    CHECK(r.failure_stage == FailureStage::none);
    CHECK(r.qubits_consumed == 6);
    CHECK(r.channels_consumed == 3);
    CHECK(r.realized_fidelity == doctest::Approx(std::pow(0.95, 3)));
    CHECK(s.residual_qubits(node(0)) == 3);
    CHECK(s.residual_qubits(node(1)) == 2);
    CHECK(s.residual_qubits(node(2)) == 2);
    CHECK(s.residual_qubits(node(3)) == 3);
    CHECK(s.residual_channels(*t.find_edge(node(0), node(1))) == 29);
}

TEST_CASE("failures leave the state untouched") {
    const auto t = uniform_grid(4, 4, 4, 30, 0.95);
    NetworkState s(t);
    const NetworkState snapshot = s;
    Rng rng(1);
    const auto gen = attempt_path(s, make_path({0, 1, 2}), PhysParams{0.0, 1.0, 0.5}, rng);
    CHECK_FALSE(gen.success);
    CHECK(gen.failure_stage == FailureStage::generation);
    CHECK(gen.qubits_consumed == 0);
    CHECK(gen.channels_consumed == 0);
    CHECK(s == snapshot);

    const auto swap = attempt_path(s, make_path({0, 1, 2}), PhysParams{1.0, 0.0, 0.5}, rng);
    CHECK(swap.failure_stage == FailureStage::swap);
    CHECK(s == snapshot);

    // A 1-hop path has no swap.
    const auto direct = attempt_path(s, make_path({0, 1}), PhysParams{1.0, 0.0, 0.5}, rng);
    CHECK(direct.success);
}

TEST_CASE("attempting an infeasible path is a contract violation") {
    const auto t = uniform_grid(3, 3, 4, 30, 0.8);
    NetworkState s(t);
    Rng rng(1);
    CHECK_THROWS_AS(attempt_path(s, make_path({0, 1, 2}), PhysParams{1.0, 1.0, 0.85}, rng), ContractViolation);
    s.set_residual_qubits(node(1), 0);
    CHECK_THROWS_AS(attempt_path(s, make_path({0, 1}), PhysParams{1.0, 1.0, 0.5}, rng), ContractViolation);
}

TEST_CASE("two-hop success rate matches p_e^2 q_v") {
    const auto t = uniform_grid(3, 3, 4, 30, 0.95);
    const PhysParams params{0.9, 0.9, 0.5};
    const double expected = path_success_probability(2, params);
    CHECK(expected == doctest::Approx(0.729).epsilon(1e-12));
    Rng rng(2024);
    const NetworkState fresh(t);
    int successes = 0;
    const int trials = 100000;
    for (int i = 0; i < trials; ++i) {
        NetworkState s = fresh;
        successes += attempt_path(s, make_path({0, 1, 2}), params, rng).success ? 1 : 0;
    }
    const double rate = successes / double(trials);
    const double sigma = std::sqrt(expected * (1 - expected) / trials);
    CHECK(std::abs(rate - expected) <= 3 * sigma);
    CHECK(std::abs(rate - expected) <= 0.01);
}

TEST_CASE("success probability of h hops is p_e^h q_v^(h-1)") {
    const PhysParams params{0.8, 0.7, 0.1};
    const auto t = uniform_grid(1, 5, 4, 30, 0.99);
    for (std::uint32_t h = 1; h <= 4; ++h) {
        Path p;
        for (std::uint32_t i = 0; i <= h; ++i) p.nodes.push_back(node(i));
        const double expected = std::pow(0.8, h) * std::pow(0.7, h - 1);
        CHECK(path_success_probability(h, params) == doctest::Approx(expected).epsilon(1e-12));
        Rng rng(h);
        const NetworkState fresh(t);
        const int trials = 40000;
        int ok = 0;
        for (int i = 0; i < trials; ++i) {
            NetworkState s = fresh;
            ok += attempt_path(s, p, params, rng).success ? 1 : 0;
        }
        const double sigma = std::sqrt(expected * (1 - expected) / trials);
        CHECK(std::abs(ok / double(trials) - expected) <= 3 * sigma);
    }
}

TEST_CASE("random attempt streams conserve resources") {
    TopologyConfig cfg;
    cfg.rows = 5;
    cfg.cols = 5;
    cfg.qubit_capacity = {4, 6};
    cfg.channel_capacity = {2, 4};
    cfg.fidelity = {0.9, 1.0};
    const auto t = grid_topology(cfg, 3);
    const PhysParams params{0.8, 0.8, 0.5};
    long long total_capacity = 0;
    for (int q : t.qubit_capacities()) total_capacity += q;

    Rng rng(5);
    for (int episode = 0; episode < 200; ++episode) {
        NetworkState s(t);
        long long consumed = 0;
        long long expected = 0;
        for (int step = 0; step < 40; ++step) {
            const auto src = node(static_cast<std::uint32_t>(rng() % 25));
            const auto dst = node(static_cast<std::uint32_t>(rng() % 25));
            if (src == dst) continue;
            const auto paths = k_shortest_paths(s, src, dst, 3);
            if (paths.empty()) continue;
            const auto& p = paths[rng() % paths.size()];
            if (!feasible(s, p, params)) continue;
            const NetworkState before = s;
            const auto r = attempt_path(s, p, params, rng);
            consumed += r.qubits_consumed;
            if (r.success) {
                expected += 2 * static_cast<long long>(p.hops());
            } else {
                CHECK(s == before);
            }
            for (int q : s.residual_qubits()) REQUIRE(q >= 0);
            for (int c : s.residual_channels()) REQUIRE(c >= 0);
        }
        long long residual = 0;
        for (int q : s.residual_qubits()) residual += q;
        CHECK(consumed == expected);
        CHECK(consumed == total_capacity - residual);
        CHECK(consumed <= total_capacity);
    }
}
