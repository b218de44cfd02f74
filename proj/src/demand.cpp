#include "qudqn/demand.hpp"

#include <algorithm>
#include <random>
#include <string>

#include "qudqn/errors.hpp"
#include "qudqn/rng.hpp"

namespace qudqn {

DemandSet::DemandSet(std::vector<Request> requests) : requests_(std::move(requests)) {
    for (std::size_t i = 0; i < requests_.size(); ++i) {
        if (requests_[i].id != i) throw ConfigError("request ids must be dense and ordered");
        if (requests_[i].src == requests_[i].dst) throw ConfigError("request src and dst must differ");
    }
}

const Request& DemandSet::at(std::size_t id) const {
    if (id >= requests_.size()) throw LookupError("unknown request " + std::to_string(id));
    return requests_[id];
}

void DemandSet::transition(std::size_t id, RequestStatus to) {
    at(id);
    if (requests_[id].status != RequestStatus::pending)
        throw ContractViolation("request " + std::to_string(id) + " is no longer pending");
    requests_[id].status = to;
}

void DemandSet::mark_resolved(std::size_t id) { transition(id, RequestStatus::resolved); }
void DemandSet::mark_failed(std::size_t id) { transition(id, RequestStatus::failed_permanent); }

std::size_t DemandSet::count(RequestStatus status) const {
    return static_cast<std::size_t>(std::count_if(requests_.begin(), requests_.end(),
                                                  [&](const Request& r) { return r.status == status; }));
}

DemandSet generate_demands(const Topology& topology, std::size_t count, std::uint64_t seed) {
    if (count < 1) throw ConfigError("requests must be at least 1");
    const auto n = topology.node_count();
    if (n < 2) throw ConfigError("demand generation needs at least 2 nodes");

    Rng rng = make_rng(seed, Stream::demands);
    // Draw one of the n*(n-1) ordered pairs directly: dst skips over src.
    std::uniform_int_distribution<std::uint64_t> pick(0, static_cast<std::uint64_t>(n) * (n - 1) - 1);
    std::vector<Request> requests;
    requests.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const auto k = pick(rng);
        const auto src = static_cast<std::uint32_t>(k / (n - 1));
        auto dst = static_cast<std::uint32_t>(k % (n - 1));
        if (dst >= src) ++dst;
        requests.push_back(Request{i, NodeId{src}, NodeId{dst}, RequestStatus::pending});
    }
    return DemandSet(std::move(requests));
}

std::vector<Request> pending(const DemandSet& demands) {
    std::vector<Request> out;
    for (const auto& r : demands.requests())
        if (r.status == RequestStatus::pending) out.push_back(r);
    return out;
}

}  // namespace qudqn
