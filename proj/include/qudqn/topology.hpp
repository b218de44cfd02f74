#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace qudqn {

struct NodeId {
    std::uint32_t index = 0;

    constexpr auto operator<=>(const NodeId&) const = default;
};

using EdgeId = std::size_t;

struct Edge {
    NodeId u;  // u < v
    NodeId v;
    int channel_capacity = 0;
    double link_fidelity = 1.0;

    bool operator==(const Edge&) const = default;
};

template <typename T>
struct Range {
    T lo{};
    T hi{};

    bool operator==(const Range&) const = default;
};

struct TopologyConfig {
    int rows = 5;
    int cols = 5;
    Range<int> qubit_capacity{4, 4};
    Range<int> channel_capacity{26, 35};
    Range<double> fidelity{0.70, 0.95};

    // Throws ConfigError naming the first offending field.
    void validate() const;
};

// Static undirected network graph: nodes carry qubit capacity, edges carry a
// per-episode channel budget and a fixed link fidelity. Immutable once built.
class Topology {
public:
    struct Adjacent {
        NodeId node;
        EdgeId edge;
    };

    Topology() = default;

    // Builds from explicit node capacities and edges. Endpoints are normalized
    // so that u < v; throws ConfigError on self-loops, duplicate pairs or
    // out-of-range endpoints.
    Topology(std::vector<int> qubit_capacity, std::vector<Edge> edges);

    std::size_t node_count() const { return qubit_capacity_.size(); }
    std::size_t edge_count() const { return edges_.size(); }

    int qubit_capacity(NodeId n) const;
    const Edge& edge(EdgeId e) const;
    std::span<const Edge> edges() const { return edges_; }
    std::span<const int> qubit_capacities() const { return qubit_capacity_; }

    // Sorted by ascending neighbor index.
    std::span<const Adjacent> adjacent(NodeId n) const;
    std::vector<NodeId> neighbors(NodeId n) const;
    std::optional<EdgeId> find_edge(NodeId a, NodeId b) const;

    int max_qubit_capacity() const;
    int max_channel_capacity() const;

    bool contains(NodeId n) const { return n.index < node_count(); }

    bool operator==(const Topology& other) const {
        return qubit_capacity_ == other.qubit_capacity_ && edges_ == other.edges_;
    }

private:
    std::vector<int> qubit_capacity_;
    std::vector<Edge> edges_;
    std::vector<std::vector<Adjacent>> adjacency_;
};

// rows x cols grid, row-major node numbering, 4-neighborhood edges.
Topology grid_topology(const TopologyConfig& cfg, std::uint64_t seed);

std::vector<NodeId> neighbors(const Topology& topology, NodeId node);

// JSON document {"nodes":[{"id","qubits"}],"edges":[{"u","v","capacity","fidelity"}]}.
std::string topology_to_json(const Topology& topology);
Topology topology_from_json(const std::string& text);

}  // namespace qudqn
