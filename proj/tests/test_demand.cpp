#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>

#include "qudqn/demand.hpp"
#include "qudqn/errors.hpp"
#include "test_support.hpp"

using namespace qudqn;
using qudqn::testing::node;
using qudqn::testing::uniform_grid;

TEST_CASE("ten requests on a 7x7 grid") {
    const auto t = uniform_grid(7, 7, 20, 30, 0.9);
    const auto d = generate_demands(t, 10, 4);
    REQUIRE(d.size() == 10);
    for (std::size_t i = 0; i < d.size(); ++i) {
        CHECK(d.at(i).id == i);
        CHECK(d.at(i).src != d.at(i).dst);
        CHECK(d.at(i).status == RequestStatus::pending);
        CHECK(t.contains(d.at(i).src));
        CHECK(t.contains(d.at(i).dst));
    }
}

TEST_CASE("single request on a 1x2 grid uses the only pair") {
    const auto t = uniform_grid(1, 2, 4, 30, 0.9);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto d = generate_demands(t, 1, seed);
        const auto& r = d.at(0);
        CHECK(((r.src == node(0) && r.dst == node(1)) || (r.src == node(1) && r.dst == node(0))));
    }
}

TEST_CASE("demand generation is deterministic") {
    const auto t = uniform_grid(5, 5, 4, 30, 0.9);
    const auto a = generate_demands(t, 8, 99);
    const auto b = generate_demands(t, 8, 99);
    for (std::size_t i = 0; i < 8; ++i) {
        CHECK(a.at(i).src == b.at(i).src);
        CHECK(a.at(i).dst == b.at(i).dst);
    }
}

TEST_CASE("ordered pairs are drawn uniformly") {
    // 1x3 grid has 6 ordered pairs.
    const auto t = uniform_grid(1, 3, 4, 30, 0.9);
    std::map<std::pair<std::uint32_t, std::uint32_t>, int> freq;
    const int n = 60000;
    const auto d = generate_demands(t, n, 3);
    for (const auto& r : d.requests()) ++freq[{r.src.index, r.dst.index}];
    CHECK(freq.size() == 6);
    for (const auto& [pair, count] : freq) CHECK(std::abs(count / double(n) - 1.0 / 6.0) < 0.01);
}

TEST_CASE("pending tracks resolutions") {
    const auto t = uniform_grid(3, 3, 4, 30, 0.9);
    auto d = generate_demands(t, 5, 1);
    CHECK(pending(d).size() == 5);
    d.mark_resolved(1);
    d.mark_resolved(3);
    const auto p = pending(d);
    REQUIRE(p.size() == 3);
    CHECK(p[0].id == 0);
    CHECK(p[1].id == 2);
    CHECK(p[2].id == 4);
    for (std::size_t i : {0, 2, 4}) d.mark_resolved(i);
    CHECK(pending(d).empty());
}

TEST_CASE("status transitions only leave pending") {
    const auto t = uniform_grid(3, 3, 4, 30, 0.9);
    auto d = generate_demands(t, 3, 1);
    d.mark_resolved(0);
    d.mark_failed(1);
    CHECK_THROWS_AS(d.mark_resolved(0), ContractViolation);
    CHECK_THROWS_AS(d.mark_resolved(1), ContractViolation);
    CHECK_THROWS_AS(d.mark_failed(0), ContractViolation);
    CHECK_THROWS_AS(d.mark_resolved(7), LookupError);
    CHECK(d.resolved_count() + d.pending_count() + d.count(RequestStatus::failed_permanent) == d.size());
}

TEST_CASE("demand configuration errors") {
    const auto t = uniform_grid(3, 3, 4, 30, 0.9);
    CHECK_THROWS_AS(generate_demands(t, 0, 1), ConfigError);
    const Topology single({4}, {});
    CHECK_THROWS_AS(generate_demands(single, 1, 1), ConfigError);
    CHECK_THROWS_AS(DemandSet({Request{0, node(1), node(1)}}), ConfigError);
    CHECK_THROWS_AS(DemandSet({Request{1, node(0), node(1)}}), ConfigError);
}
