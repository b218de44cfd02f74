#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "qudqn/demand.hpp"
#include "qudqn/entanglement.hpp"

namespace qudqn {

// Orders paths by hop count, then lexicographically by node index.
struct PathOrder {
    bool operator()(const Path& a, const Path& b) const {
        if (a.hops() != b.hops()) return a.hops() < b.hops();
        return a.nodes < b.nodes;
    }
};

// Minimum-hop path over edges with residual channel capacity, ties broken by
// the lexicographically smallest node sequence. Throws ConfigError if src == dst.
std::optional<Path> shortest_path(const NetworkState& state, NodeId src, NodeId dst);

// Yen enumeration over the residual graph: up to k loopless paths in
// (hops, lexicographic) order. The first entry equals shortest_path().
std::vector<Path> k_shortest_paths(const NetworkState& state, NodeId src, NodeId dst, std::size_t k);

// Per request slot, up to k candidate paths; empty for non-pending requests.
struct CandidateSet {
    std::size_t k = 0;
    std::vector<std::vector<Path>> paths;

    const Path* at(std::size_t request, std::size_t slot) const {
        if (request >= paths.size() || slot >= paths[request].size()) return nullptr;
        return &paths[request][slot];
    }
};

CandidateSet compute_candidates(const NetworkState& state, const DemandSet& demands, std::size_t k);

// Flat (request slot, path slot) mask; action id = request * paths_per_request + slot.
class ActionMask {
public:
    ActionMask() = default;
    ActionMask(std::size_t requests, std::size_t paths_per_request)
        : requests_(requests), paths_(paths_per_request), bits_(requests * paths_per_request, 0) {}

    std::size_t size() const { return bits_.size(); }
    std::size_t requests() const { return requests_; }
    std::size_t paths_per_request() const { return paths_; }

    bool operator[](std::size_t action) const { return bits_.at(action) != 0; }
    bool at(std::size_t request, std::size_t slot) const { return (*this)[request * paths_ + slot]; }
    void set(std::size_t action, bool value) { bits_.at(action) = value ? 1 : 0; }

    bool any() const;
    std::size_t count() const;
    std::vector<std::size_t> valid_actions() const;
    const std::vector<std::uint8_t>& bits() const { return bits_; }

    bool operator==(const ActionMask&) const = default;

private:
    std::size_t requests_ = 0;
    std::size_t paths_ = 0;
    std::vector<std::uint8_t> bits_;
};

ActionMask build_action_mask(const NetworkState& state, const DemandSet& demands, const CandidateSet& candidates,
                             const PhysParams& params);

struct ScheduledAttempt {
    std::size_t request = 0;
    Path path;
    AttemptResult attempt;
};

// Greedy baseline: each step attempts the lowest-id pending request whose
// current shortest path is feasible. Stops when no such request remains or
// after max_steps attempts (0 means 4 * |D|). Mutates state and demands.
std::vector<ScheduledAttempt> policy_shortest(NetworkState& state, DemandSet& demands, const PhysParams& params,
                                              Rng& physics, std::size_t max_steps = 0);

// Random baseline: as policy_shortest, but each step draws the request
// uniformly among pending requests with a feasible shortest path.
std::vector<ScheduledAttempt> policy_random(NetworkState& state, DemandSet& demands, const PhysParams& params,
                                            Rng& choice, Rng& physics, std::size_t max_steps = 0);

}  // namespace qudqn
