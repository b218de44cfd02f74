#include "qudqn/routing.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <set>
#include <string>

#include "qudqn/errors.hpp"

namespace qudqn {

namespace {

constexpr std::size_t kUnreached = std::numeric_limits<std::size_t>::max();

struct Blocked {
    std::vector<bool> nodes;
    std::vector<bool> edges;
};

// BFS distances to `dst`, then a greedy walk from `src` that always takes the
// smallest-index neighbor one hop closer. That walk is the lexicographically
// smallest among all minimum-hop paths.
std::optional<Path> lex_shortest(const NetworkState& state, NodeId src, NodeId dst, const Blocked& blocked) {
    const Topology& topo = state.topology();
    const auto usable = [&](const Topology::Adjacent& a) {
        return !blocked.edges[a.edge] && !blocked.nodes[a.node.index] && state.residual_channels(a.edge) >= 1;
    };
    if (blocked.nodes[src.index] || blocked.nodes[dst.index]) return std::nullopt;

    std::vector<std::size_t> dist(topo.node_count(), kUnreached);
    std::deque<NodeId> queue{dst};
    dist[dst.index] = 0;
    while (!queue.empty()) {
        const NodeId n = queue.front();
        queue.pop_front();
        if (n == src) break;
        for (const auto& a : topo.adjacent(n)) {
            if (!usable(a) || dist[a.node.index] != kUnreached) continue;
            dist[a.node.index] = dist[n.index] + 1;
            queue.push_back(a.node);
        }
    }
    if (dist[src.index] == kUnreached) return std::nullopt;

    Path path;
    path.nodes.push_back(src);
    NodeId cur = src;
    while (cur != dst) {
        for (const auto& a : topo.adjacent(cur)) {
            if (usable(a) && dist[a.node.index] + 1 == dist[cur.index]) {
                cur = a.node;
                break;
            }
        }
        path.nodes.push_back(cur);
    }
    return path;
}

void check_endpoints(const NetworkState& state, NodeId src, NodeId dst) {
    if (!state.topology().contains(src)) throw LookupError("unknown node " + std::to_string(src.index));
    if (!state.topology().contains(dst)) throw LookupError("unknown node " + std::to_string(dst.index));
    if (src == dst) throw ConfigError("src and dst must differ");
}

}  // namespace

std::optional<Path> shortest_path(const NetworkState& state, NodeId src, NodeId dst) {
    check_endpoints(state, src, dst);
    const Topology& topo = state.topology();
    Blocked none{std::vector<bool>(topo.node_count(), false), std::vector<bool>(topo.edge_count(), false)};
    return lex_shortest(state, src, dst, none);
}

std::vector<Path> k_shortest_paths(const NetworkState& state, NodeId src, NodeId dst, std::size_t k) {
    check_endpoints(state, src, dst);
    if (k < 1) throw ConfigError("k must be at least 1");
    const Topology& topo = state.topology();

    std::vector<Path> accepted;
    auto first = shortest_path(state, src, dst);
    if (!first) return accepted;
    accepted.push_back(std::move(*first));

    std::set<Path, PathOrder> candidates;
    while (accepted.size() < k) {
        const Path& prev = accepted.back();
        for (std::size_t spur = 0; spur + 1 < prev.nodes.size(); ++spur) {
            Blocked blocked{std::vector<bool>(topo.node_count(), false), std::vector<bool>(topo.edge_count(), false)};
            const auto root_begin = prev.nodes.begin();
            const auto root_end = prev.nodes.begin() + static_cast<std::ptrdiff_t>(spur + 1);
            for (const Path& p : accepted) {
                if (p.nodes.size() > spur + 1 && std::equal(root_begin, root_end, p.nodes.begin()))
                    blocked.edges[*topo.find_edge(p.nodes[spur], p.nodes[spur + 1])] = true;
            }
            for (std::size_t i = 0; i < spur; ++i) blocked.nodes[prev.nodes[i].index] = true;

            auto tail = lex_shortest(state, prev.nodes[spur], dst, blocked);
            if (!tail) continue;
            Path full;
            full.nodes.assign(root_begin, root_end - 1);
            full.nodes.insert(full.nodes.end(), tail->nodes.begin(), tail->nodes.end());
            if (std::find(accepted.begin(), accepted.end(), full) == accepted.end())
                candidates.insert(std::move(full));
        }
        if (candidates.empty()) break;
        accepted.push_back(*candidates.begin());
        candidates.erase(candidates.begin());
    }
    return accepted;
}

CandidateSet compute_candidates(const NetworkState& state, const DemandSet& demands, std::size_t k) {
    CandidateSet set;
    set.k = k;
    set.paths.resize(demands.size());
    for (const auto& r : demands.requests())
        if (r.status == RequestStatus::pending) set.paths[r.id] = k_shortest_paths(state, r.src, r.dst, k);
    return set;
}

bool ActionMask::any() const {
    return std::any_of(bits_.begin(), bits_.end(), [](std::uint8_t b) { return b != 0; });
}

std::size_t ActionMask::count() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

std::vector<std::size_t> ActionMask::valid_actions() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < bits_.size(); ++i)
        if (bits_[i]) out.push_back(i);
    return out;
}

ActionMask build_action_mask(const NetworkState& state, const DemandSet& demands, const CandidateSet& candidates,
                             const PhysParams& params) {
    ActionMask mask(demands.size(), candidates.k);
    for (const auto& r : demands.requests()) {
        if (r.status != RequestStatus::pending || r.id >= candidates.paths.size()) continue;
        const auto& paths = candidates.paths[r.id];
        for (std::size_t slot = 0; slot < paths.size() && slot < candidates.k; ++slot)
            if (feasible(state, paths[slot], params)) mask.set(r.id * candidates.k + slot, true);
    }
    return mask;
}

namespace {

std::optional<Path> feasible_shortest(const NetworkState& state, const Request& r, const PhysParams& params) {
    auto path = shortest_path(state, r.src, r.dst);
    if (path && feasible(state, *path, params)) return path;
    return std::nullopt;
}

ScheduledAttempt commit(NetworkState& state, DemandSet& demands, std::size_t request, Path path,
                        const PhysParams& params, Rng& physics) {
    ScheduledAttempt s{request, std::move(path), {}};
    s.attempt = attempt_path(state, s.path, params, physics);
    if (s.attempt.success) demands.mark_resolved(request);
    return s;
}

}  // namespace

std::vector<ScheduledAttempt> policy_shortest(NetworkState& state, DemandSet& demands, const PhysParams& params,
                                              Rng& physics, std::size_t max_steps) {
    if (max_steps == 0) max_steps = 4 * demands.size();
    std::vector<ScheduledAttempt> schedule;
    while (schedule.size() < max_steps) {
        bool acted = false;
        for (const auto& r : demands.requests()) {
            if (r.status != RequestStatus::pending) continue;
            if (auto path = feasible_shortest(state, r, params)) {
                schedule.push_back(commit(state, demands, r.id, std::move(*path), params, physics));
                acted = true;
                break;
            }
        }
        if (!acted) break;
    }
    return schedule;
}

std::vector<ScheduledAttempt> policy_random(NetworkState& state, DemandSet& demands, const PhysParams& params,
                                            Rng& choice, Rng& physics, std::size_t max_steps) {
    if (max_steps == 0) max_steps = 4 * demands.size();
    std::vector<ScheduledAttempt> schedule;
    while (schedule.size() < max_steps) {
        std::vector<std::pair<std::size_t, Path>> options;
        for (const auto& r : demands.requests()) {
            if (r.status != RequestStatus::pending) continue;
            if (auto path = feasible_shortest(state, r, params)) options.emplace_back(r.id, std::move(*path));
        }
        if (options.empty()) break;
        std::uniform_int_distribution<std::size_t> pick(0, options.size() - 1);
        auto& [id, path] = options[pick(choice)];
        schedule.push_back(commit(state, demands, id, std::move(path), params, physics));
    }
    return schedule;
}

}  // namespace qudqn
