#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "qudqn/topology.hpp"

namespace qudqn {

enum class RequestStatus { pending, resolved, failed_permanent };

struct Request {
    std::size_t id = 0;
    NodeId src;
    NodeId dst;
    RequestStatus status = RequestStatus::pending;
};

// The request set of one episode. Ids are dense in [0, size()).
class DemandSet {
public:
    DemandSet() = default;
    explicit DemandSet(std::vector<Request> requests);

    std::size_t size() const { return requests_.size(); }
    const Request& at(std::size_t id) const;
    const std::vector<Request>& requests() const { return requests_; }

    // Only pending -> resolved and pending -> failed_permanent are legal.
    void mark_resolved(std::size_t id);
    void mark_failed(std::size_t id);

    bool is_pending(std::size_t id) const { return at(id).status == RequestStatus::pending; }
    std::size_t count(RequestStatus status) const;
    std::size_t resolved_count() const { return count(RequestStatus::resolved); }
    std::size_t pending_count() const { return count(RequestStatus::pending); }

private:
    void transition(std::size_t id, RequestStatus to);

    std::vector<Request> requests_;
};

// count requests, (src,dst) uniform over ordered pairs with src != dst.
DemandSet generate_demands(const Topology& topology, std::size_t count, std::uint64_t seed);

std::vector<Request> pending(const DemandSet& demands);

}  // namespace qudqn
