#include "qudqn/env.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "qudqn/errors.hpp"

namespace qudqn {

void RewardParams::validate() const {
    if (!(beta <= 0.0 && 0.0 <= alpha)) throw ConfigError("reward parameters must satisfy beta <= 0 <= alpha");
    if (!(discount >= 0.0 && discount <= 1.0)) throw ConfigError("discount must lie in [0,1]");
}

void EnvConfig::validate() const {
    topology.validate();
    phys.validate();
    reward.validate();
    if (requests < 1) throw ConfigError("requests must be at least 1");
    if (k_paths < 1) throw ConfigError("k-paths must be at least 1");
    if (step_budget_factor < 1) throw ConfigError("step budget factor must be at least 1");
}

std::size_t state_dimension(const Topology& topology, std::size_t request_slots) {
    const auto n = topology.node_count();
    return n + topology.edge_count() + request_slots * (2 * n + 1) + 3;
}

std::vector<double> encode_state(const NetworkState& state, const DemandSet& demands, const PhysParams& params) {
    const Topology& topo = state.topology();
    const auto n = topo.node_count();
    std::vector<double> v;
    v.reserve(state_dimension(topo, demands.size()));

    for (std::size_t i = 0; i < n; ++i) {
        const int cap = topo.qubit_capacities()[i];
        v.push_back(cap > 0 ? static_cast<double>(state.residual_qubits()[i]) / cap : 0.0);
    }
    for (std::size_t e = 0; e < topo.edge_count(); ++e) {
        const int cap = topo.edge(e).channel_capacity;
        v.push_back(cap > 0 ? static_cast<double>(state.residual_channels()[e]) / cap : 0.0);
    }
    for (const auto& r : demands.requests()) {
        const auto base = v.size();
        v.resize(base + 2 * n + 1, 0.0);
        if (r.status != RequestStatus::pending) continue;
        v[base + r.src.index] = 1.0;
        v[base + n + r.dst.index] = 1.0;
        v[base + 2 * n] = 1.0;
    }
    v.push_back(params.p_e);
    v.push_back(params.q_v);
    v.push_back(params.f_min);
    return v;
}

double fidelity_bonus(std::size_t hops, double path_fidelity, const RewardParams& rp, const PhysParams& phys) {
    if (hops == 0) return 0.0;
    return rp.gamma_w * path_fidelity * std::pow(phys.q_v, static_cast<double>(hops - 1)) *
           std::pow(phys.p_e, static_cast<double>(hops));
}

double reward(const RewardInputs& in, const RewardParams& rp, const PhysParams& phys) {
    const double f = in.terminal ? 1.0 : 0.0;
    const double unresolved = static_cast<double>(in.total_requests) - static_cast<double>(in.resolved_total);
    const double terminal_term = unresolved * rp.beta * f;
    if (in.invalid_action) return rp.beta + terminal_term;
    double r = in.resolved_delta * rp.alpha + terminal_term;
    if (in.success) r += fidelity_bonus(in.hops, in.path_fidelity, rp, phys);
    return r;
}

std::size_t select_action(const Mlp& net, std::span<const double> state, const ActionMask& mask, double epsilon,
                          Rng& rng) {
    const auto valid = mask.valid_actions();
    if (valid.empty()) throw ContractViolation("select_action called with no valid action");
    if (mask.size() != net.output_size()) throw ConfigError("mask size does not match network outputs");
    if (epsilon > 0.0 && uniform01(rng) < epsilon) {
        std::uniform_int_distribution<std::size_t> pick(0, valid.size() - 1);
        return valid[pick(rng)];
    }
    const Eigen::VectorXd q = net.forward(state);
    std::size_t best = valid.front();
    for (auto a : valid)
        if (q(static_cast<Eigen::Index>(a)) > q(static_cast<Eigen::Index>(best))) best = a;
    return best;
}

double EpisodeRecord::mean_fidelity() const {
    if (fidelities.empty()) return 0.0;
    return std::accumulate(fidelities.begin(), fidelities.end(), 0.0) / static_cast<double>(fidelities.size());
}

Episode::Episode(const Topology& topology, DemandSet demands, const EnvConfig& cfg, std::uint64_t seed)
    : topology_(&topology), cfg_(cfg), state_(topology), demands_(std::move(demands)),
      physics_(make_rng(seed, Stream::physics)) {
    if (demands_.size() != cfg_.requests)
        throw ConfigError("demand set size " + std::to_string(demands_.size()) + " does not match configured " +
                          std::to_string(cfg_.requests));
    record_.seed = seed;
    record_.total_requests = demands_.size();
    refresh();
    if (!mask_.any()) {
        done_ = true;
        record_.total_return =
            reward({0, demands_.size(), demands_.resolved_count(), true, false, 0, 0.0, false}, cfg_.reward, cfg_.phys);
    }
}

void Episode::refresh() {
    candidates_ = compute_candidates(state_, demands_, cfg_.k_paths);
    mask_ = build_action_mask(state_, demands_, candidates_, cfg_.phys);
}

StepOutcome Episode::step(std::size_t action) {
    if (done_) throw ContractViolation("step on a finished episode");
    if (action >= cfg_.action_count())
        throw ContractViolation("action id " + std::to_string(action) + " outside the action space");

    StepOutcome out;
    out.request = action / cfg_.k_paths;
    ++steps_;
    ++record_.steps;

    RewardInputs in;
    in.total_requests = demands_.size();
    if (!mask_[action]) {
        out.invalid_action = true;
        in.invalid_action = true;
    } else {
        const Path path = *candidates_.at(out.request, action % cfg_.k_paths);
        out.hops = path.hops();
        out.attempt = attempt_path(state_, path, cfg_.phys, physics_);
        if (out.attempt.success) {
            demands_.mark_resolved(out.request);
            out.resolved_delta = 1;
            record_.qubits_used += out.attempt.qubits_consumed;
            record_.channels_used += out.attempt.channels_consumed;
            record_.fidelities.push_back(out.attempt.realized_fidelity);
            record_.bonus_total += fidelity_bonus(out.hops, out.attempt.realized_fidelity, cfg_.reward, cfg_.phys);
        }
        refresh();
    }

    out.terminal = demands_.pending_count() == 0 || !mask_.any() || budget_exhausted();
    in.resolved_delta = out.resolved_delta;
    in.resolved_total = demands_.resolved_count();
    in.terminal = out.terminal;
    in.success = out.attempt.success;
    in.hops = out.hops;
    in.path_fidelity = out.attempt.realized_fidelity;
    out.reward = reward(in, cfg_.reward, cfg_.phys);

    record_.resolved = demands_.resolved_count();
    record_.total_return += out.reward;
    done_ = out.terminal;
    return out;
}

std::uint64_t episode_seed(std::uint64_t base, std::size_t index) {
    return mix_seed(mix_seed(base) + 0x632be59bd9b4e019ULL * (static_cast<std::uint64_t>(index) + 1));
}

}  // namespace qudqn
