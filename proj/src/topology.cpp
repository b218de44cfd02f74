#include "qudqn/topology.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <json.hpp>

#include "qudqn/errors.hpp"
#include "qudqn/rng.hpp"

namespace qudqn {

void TopologyConfig::validate() const {
    if (rows < 1) throw ConfigError("rows must be positive");
    if (cols < 1) throw ConfigError("cols must be positive");
    if (static_cast<long long>(rows) * cols < 2) throw ConfigError("rows*cols must be at least 2");
    if (qubit_capacity.lo < 0 || qubit_capacity.lo > qubit_capacity.hi)
        throw ConfigError("qubit_capacity_range must satisfy 0 <= lo <= hi");
    if (channel_capacity.lo < 0 || channel_capacity.lo > channel_capacity.hi)
        throw ConfigError("channel_capacity_range must satisfy 0 <= lo <= hi");
    if (!(fidelity.lo > 0.0) || !(fidelity.lo <= fidelity.hi) || !(fidelity.hi <= 1.0))
        throw ConfigError("fidelity_range must satisfy 0 < lo <= hi <= 1");
}

Topology::Topology(std::vector<int> qubit_capacity, std::vector<Edge> edges)
    : qubit_capacity_(std::move(qubit_capacity)), edges_(std::move(edges)),
      adjacency_(qubit_capacity_.size()) {
    for (int c : qubit_capacity_)
        if (c < 0) throw ConfigError("qubit capacity must be non-negative");
    const auto n = node_count();
    for (EdgeId e = 0; e < edges_.size(); ++e) {
        Edge& edge = edges_[e];
        if (edge.u.index >= n || edge.v.index >= n) throw ConfigError("edge endpoint out of range");
        if (edge.u == edge.v) throw ConfigError("self-loop edges are not allowed");
        if (edge.v < edge.u) std::swap(edge.u, edge.v);
        if (edge.channel_capacity < 0) throw ConfigError("channel capacity must be non-negative");
        if (!(edge.link_fidelity > 0.0 && edge.link_fidelity <= 1.0))
            throw ConfigError("link fidelity must lie in (0,1]");
        adjacency_[edge.u.index].push_back({edge.v, e});
        adjacency_[edge.v.index].push_back({edge.u, e});
    }
    for (auto& adj : adjacency_) {
        std::sort(adj.begin(), adj.end(),
                  [](const Adjacent& a, const Adjacent& b) { return a.node < b.node; });
        auto dup = std::adjacent_find(adj.begin(), adj.end(), [](const Adjacent& a, const Adjacent& b) {
            return a.node == b.node;
        });
        if (dup != adj.end()) throw ConfigError("duplicate edge between the same node pair");
    }
}

int Topology::qubit_capacity(NodeId n) const {
    if (!contains(n)) throw LookupError("unknown node " + std::to_string(n.index));
    return qubit_capacity_[n.index];
}

const Edge& Topology::edge(EdgeId e) const {
    if (e >= edges_.size()) throw LookupError("unknown edge " + std::to_string(e));
    return edges_[e];
}

std::span<const Topology::Adjacent> Topology::adjacent(NodeId n) const {
    if (!contains(n)) throw LookupError("unknown node " + std::to_string(n.index));
    return adjacency_[n.index];
}

std::vector<NodeId> Topology::neighbors(NodeId n) const {
    std::vector<NodeId> out;
    for (const auto& a : adjacent(n)) out.push_back(a.node);
    return out;
}

std::optional<EdgeId> Topology::find_edge(NodeId a, NodeId b) const {
    for (const auto& adj : adjacent(a))
        if (adj.node == b) return adj.edge;
    return std::nullopt;
}

int Topology::max_qubit_capacity() const {
    return qubit_capacity_.empty() ? 0 : *std::max_element(qubit_capacity_.begin(), qubit_capacity_.end());
}

int Topology::max_channel_capacity() const {
    int best = 0;
    for (const auto& e : edges_) best = std::max(best, e.channel_capacity);
    return best;
}

Topology grid_topology(const TopologyConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Rng rng = make_rng(seed, Stream::topology);
    std::uniform_int_distribution<int> qubits(cfg.qubit_capacity.lo, cfg.qubit_capacity.hi);
    std::uniform_int_distribution<int> channels(cfg.channel_capacity.lo, cfg.channel_capacity.hi);
    // nextafter makes the fidelity interval closed at the top.
    std::uniform_real_distribution<double> fidelity(
        cfg.fidelity.lo, std::nextafter(cfg.fidelity.hi, 2.0));

    const auto id = [&](int r, int c) { return NodeId{static_cast<std::uint32_t>(r * cfg.cols + c)}; };

    std::vector<int> caps(static_cast<std::size_t>(cfg.rows * cfg.cols));
    for (auto& c : caps) c = qubits(rng);

    std::vector<Edge> edges;
    edges.reserve(static_cast<std::size_t>(2 * cfg.rows * cfg.cols));
    auto add = [&](NodeId a, NodeId b) {
        Edge e{a, b, channels(rng), 0.0};
        e.link_fidelity = std::min(fidelity(rng), cfg.fidelity.hi);
        edges.push_back(e);
    };
    for (int r = 0; r < cfg.rows; ++r) {
        for (int c = 0; c < cfg.cols; ++c) {
            if (c + 1 < cfg.cols) add(id(r, c), id(r, c + 1));
            if (r + 1 < cfg.rows) add(id(r, c), id(r + 1, c));
        }
    }
    return Topology(std::move(caps), std::move(edges));
}

std::vector<NodeId> neighbors(const Topology& topology, NodeId node) {
    return topology.neighbors(node);
}

std::string topology_to_json(const Topology& topology) {
    nlohmann::ordered_json doc;
    doc["nodes"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < topology.node_count(); ++i)
        doc["nodes"].push_back({{"id", i}, {"qubits", topology.qubit_capacities()[i]}});
    doc["edges"] = nlohmann::ordered_json::array();
    for (const auto& e : topology.edges())
        doc["edges"].push_back({{"u", e.u.index},
                                {"v", e.v.index},
                                {"capacity", e.channel_capacity},
                                {"fidelity", e.link_fidelity}});
    return doc.dump(2) + "\n";
}

Topology topology_from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("topology json: ") + e.what());
    }
    try {
        const auto& nodes = doc.at("nodes");
        std::vector<int> caps(nodes.size(), -1);
        for (const auto& n : nodes) {
            const auto id = n.at("id").get<std::size_t>();
            if (id >= caps.size() || caps[id] != -1) throw ConfigError("topology json: node ids must be dense and unique");
            caps[id] = n.at("qubits").get<int>();
        }
        std::vector<Edge> edges;
        for (const auto& e : doc.at("edges")) {
            edges.push_back(Edge{NodeId{e.at("u").get<std::uint32_t>()}, NodeId{e.at("v").get<std::uint32_t>()},
                                 e.at("capacity").get<int>(), e.at("fidelity").get<double>()});
        }
        return Topology(std::move(caps), std::move(edges));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("topology json: ") + e.what());
    }
}

}  // namespace qudqn
