#pragma once

#include <cstddef>
#include <vector>

#include "qudqn/rng.hpp"
#include "qudqn/topology.hpp"

namespace qudqn {

// Physical-layer parameters, each in (0,1].
struct PhysParams {
    double p_e = 0.9;    // ebit generation success per edge
    double q_v = 0.9;    // swap success per intermediate node
    double f_min = 0.85; // required end-to-end fidelity

    void validate() const;
};

// A simple path, stored as its node sequence (at least two nodes).
struct Path {
    std::vector<NodeId> nodes;

    std::size_t hops() const { return nodes.empty() ? 0 : nodes.size() - 1; }
    NodeId src() const { return nodes.front(); }
    NodeId dst() const { return nodes.back(); }

    auto operator<=>(const Path&) const = default;
    bool operator==(const Path&) const = default;
};

// Throws PathError unless `path` is a simple path of >= 2 nodes in `topology`.
// Returns the edge ids in path order.
std::vector<EdgeId> path_edges(const Topology& topology, const Path& path);

enum class FailureStage { none, generation, swap };

struct AttemptResult {
    bool success = false;
    double realized_fidelity = 0.0;
    int qubits_consumed = 0;
    int channels_consumed = 0;
    FailureStage failure_stage = FailureStage::none;
};

// Residual qubits per node and channel units per edge for one episode.
class NetworkState {
public:
    explicit NetworkState(const Topology& topology);

    const Topology& topology() const { return *topology_; }
    int residual_qubits(NodeId n) const { return residual_qubits_.at(n.index); }
    int residual_channels(EdgeId e) const { return residual_channels_.at(e); }
    const std::vector<int>& residual_qubits() const { return residual_qubits_; }
    const std::vector<int>& residual_channels() const { return residual_channels_; }

    // Test and scenario hook: override a residual, clamped to [0, capacity].
    void set_residual_qubits(NodeId n, int value);
    void set_residual_channels(EdgeId e, int value);

    bool operator==(const NetworkState& other) const {
        return topology_ == other.topology_ && residual_qubits_ == other.residual_qubits_ &&
               residual_channels_ == other.residual_channels_;
    }

private:
    friend AttemptResult attempt_path(NetworkState&, const Path&, const PhysParams&, Rng&);

    const Topology* topology_;
    std::vector<int> residual_qubits_;
    std::vector<int> residual_channels_;
};

// Product of link fidelities along the path.
double path_fidelity(const NetworkState& state, const Path& path);
double path_fidelity(const Topology& topology, const Path& path);

// 1 qubit per endpoint plus 2 per intermediate node = 2 * hops.
int qubit_cost(const Path& path);

// Probability that every generation and swap on an h-hop path succeeds.
double path_success_probability(std::size_t hops, const PhysParams& params);

bool feasible(const NetworkState& state, const Path& path, const PhysParams& params);

// One Bernoulli(p_e) draw per edge, then one Bernoulli(q_v) per intermediate,
// always in that order and always all of them. Resources are deducted only on
// success. Throws ContractViolation if the path is not feasible.
AttemptResult attempt_path(NetworkState& state, const Path& path, const PhysParams& params, Rng& rng);

}  // namespace qudqn
