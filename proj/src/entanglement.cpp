#include "qudqn/entanglement.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qudqn/errors.hpp"

namespace qudqn {

void PhysParams::validate() const {
    const auto in_unit = [](double x) { return x > 0.0 && x <= 1.0; };
    if (!in_unit(p_e)) throw ConfigError("pe must lie in (0,1]");
    if (!in_unit(q_v)) throw ConfigError("qv must lie in (0,1]");
    if (!(f_min >= 0.0 && f_min <= 1.0)) throw ConfigError("fmin must lie in [0,1]");
}

std::vector<EdgeId> path_edges(const Topology& topology, const Path& path) {
    if (path.nodes.size() < 2) throw PathError("path needs at least two nodes");
    std::vector<bool> seen(topology.node_count(), false);
    std::vector<EdgeId> edges;
    edges.reserve(path.hops());
    for (std::size_t i = 0; i < path.nodes.size(); ++i) {
        const NodeId n = path.nodes[i];
        if (!topology.contains(n)) throw PathError("path visits unknown node " + std::to_string(n.index));
        if (seen[n.index]) throw PathError("path repeats node " + std::to_string(n.index));
        seen[n.index] = true;
        if (i == 0) continue;
        const auto e = topology.find_edge(path.nodes[i - 1], n);
        if (!e)
            throw PathError("nodes " + std::to_string(path.nodes[i - 1].index) + " and " +
                            std::to_string(n.index) + " are not adjacent");
        edges.push_back(*e);
    }
    return edges;
}

NetworkState::NetworkState(const Topology& topology)
    : topology_(&topology),
      residual_qubits_(topology.qubit_capacities().begin(), topology.qubit_capacities().end()) {
    residual_channels_.reserve(topology.edge_count());
    for (const auto& e : topology.edges()) residual_channels_.push_back(e.channel_capacity);
}

void NetworkState::set_residual_qubits(NodeId n, int value) {
    residual_qubits_.at(n.index) = std::clamp(value, 0, topology_->qubit_capacity(n));
}

void NetworkState::set_residual_channels(EdgeId e, int value) {
    residual_channels_.at(e) = std::clamp(value, 0, topology_->edge(e).channel_capacity);
}

double path_fidelity(const Topology& topology, const Path& path) {
    double f = 1.0;
    for (EdgeId e : path_edges(topology, path)) f *= topology.edge(e).link_fidelity;
    return f;
}

double path_fidelity(const NetworkState& state, const Path& path) {
    return path_fidelity(state.topology(), path);
}

int qubit_cost(const Path& path) { return static_cast<int>(2 * path.hops()); }

double path_success_probability(std::size_t hops, const PhysParams& params) {
    if (hops == 0) return 0.0;
    return std::pow(params.p_e, static_cast<double>(hops)) * std::pow(params.q_v, static_cast<double>(hops - 1));
}

namespace {

int role_cost(const Path& path, std::size_t position) {
    return (position == 0 || position + 1 == path.nodes.size()) ? 1 : 2;
}

}  // namespace

bool feasible(const NetworkState& state, const Path& path, const PhysParams& params) {
    const auto edges = path_edges(state.topology(), path);
    for (std::size_t i = 0; i < path.nodes.size(); ++i)
        if (state.residual_qubits(path.nodes[i]) < role_cost(path, i)) return false;
    double f = 1.0;
    for (EdgeId e : edges) {
        if (state.residual_channels(e) < 1) return false;
        f *= state.topology().edge(e).link_fidelity;
    }
    return f >= params.f_min;
}

AttemptResult attempt_path(NetworkState& state, const Path& path, const PhysParams& params, Rng& rng) {
    if (!feasible(state, path, params)) throw ContractViolation("attempt_path called on an infeasible path");
    const auto edges = path_edges(state.topology(), path);

    AttemptResult result;
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const bool ok = uniform01(rng) < params.p_e;
        if (!ok && result.failure_stage == FailureStage::none) result.failure_stage = FailureStage::generation;
    }
    for (std::size_t i = 1; i + 1 < path.nodes.size(); ++i) {
        const bool ok = uniform01(rng) < params.q_v;
        if (!ok && result.failure_stage == FailureStage::none) result.failure_stage = FailureStage::swap;
    }
    if (result.failure_stage != FailureStage::none) return result;

    for (std::size_t i = 0; i < path.nodes.size(); ++i) {
        const int cost = role_cost(path, i);
        state.residual_qubits_[path.nodes[i].index] -= cost;
        result.qubits_consumed += cost;
    }
    double f = 1.0;
    for (EdgeId e : edges) {
        state.residual_channels_[e] -= 1;
        f *= state.topology().edge(e).link_fidelity;
    }
    result.channels_consumed = static_cast<int>(edges.size());
    result.success = true;
    result.realized_fidelity = f;
    return result;
}

}  // namespace qudqn
