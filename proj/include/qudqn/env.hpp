#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qudqn/demand.hpp"
#include "qudqn/entanglement.hpp"
#include "qudqn/mlp.hpp"
#include "qudqn/qlearn.hpp"
#include "qudqn/routing.hpp"
#include "qudqn/topology.hpp"

namespace qudqn {

struct RewardParams {
    double alpha = 0.2;    // per resolved request
    double beta = -1.0;    // per request still unresolved at the terminal step
    double gamma_w = 0.9;  // weight of the fidelity/success bonus
    double discount = 0.9; // lambda, applied through the bootstrap target

    void validate() const;
};

// Everything an episode needs besides the topology itself.
struct EnvConfig {
    TopologyConfig topology;
    std::uint64_t topology_seed = 1;
    std::size_t requests = 5;
    std::size_t k_paths = 3;
    PhysParams phys;
    RewardParams reward;
    std::size_t step_budget_factor = 4;

    void validate() const;
    std::size_t step_budget() const { return step_budget_factor * requests; }
    std::size_t action_count() const { return requests * k_paths; }
};

// N + |E| + K(2N+1) + 3
std::size_t state_dimension(const Topology& topology, std::size_t request_slots);

// Layout, in order:
//   [0, N)            residual qubits / node capacity
//   [N, N+|E|)        residual channel units / edge capacity
//   K blocks of 2N+1  src one-hot, dst one-hot, pending flag (zeros unless pending)
//   last 3            p_e, q_v, f_min
// Slot count K is demands.size().
std::vector<double> encode_state(const NetworkState& state, const DemandSet& demands, const PhysParams& params);

struct RewardInputs {
    int resolved_delta = 0;         // 0 or 1
    std::size_t total_requests = 0; // |D|
    std::size_t resolved_total = 0; // n_r after the step
    bool terminal = false;
    bool success = false;
    std::size_t hops = 0;
    double path_fidelity = 0.0;
    bool invalid_action = false;
};

// alpha * dn + (|D| - n_r) * beta * f + gamma_w * F * q_v^(h-1) * p_e^h (success only).
// A mask-violating action earns beta (plus the terminal term when terminal).
double reward(const RewardInputs& in, const RewardParams& rp, const PhysParams& phys);
// Just the success bonus term.
double fidelity_bonus(std::size_t hops, double path_fidelity, const RewardParams& rp, const PhysParams& phys);

// epsilon-greedy over mask-valid actions; greedy ties go to the lowest id.
// Throws ContractViolation when the mask has no valid action.
std::size_t select_action(const Mlp& net, std::span<const double> state, const ActionMask& mask, double epsilon,
                          Rng& rng);

struct Observation {
    std::vector<double> state;
    ActionMask mask;
};

struct StepOutcome {
    double reward = 0.0;
    int resolved_delta = 0;
    bool terminal = false;
    bool invalid_action = false;
    std::size_t request = 0;
    std::size_t hops = 0;
    AttemptResult attempt;
};

struct EpisodeRecord {
    std::uint64_t seed = 0;
    std::size_t resolved = 0;
    std::size_t total_requests = 0;
    long long qubits_used = 0;
    long long channels_used = 0;
    std::vector<double> fidelities;  // realized, one per delivered entanglement
    std::size_t steps = 0;
    double total_return = 0.0;
    double bonus_total = 0.0;

    double mean_fidelity() const;
};

// One MDP episode over a borrowed topology.
class Episode {
public:
    Episode(const Topology& topology, DemandSet demands, const EnvConfig& cfg, std::uint64_t seed);

    const NetworkState& state() const { return state_; }
    const DemandSet& demands() const { return demands_; }
    const CandidateSet& candidates() const { return candidates_; }
    const ActionMask& mask() const { return mask_; }
    std::vector<double> state_vector() const { return encode_state(state_, demands_, cfg_.phys); }
    Observation observe() const { return {state_vector(), mask_}; }

    // True once the terminal step has been taken, or from the start when no
    // action was ever feasible (the terminal penalty is then booked without a step).
    bool done() const { return done_; }
    std::size_t steps() const { return steps_; }

    // Throws ContractViolation for an out-of-range id or a finished episode.
    StepOutcome step(std::size_t action);

    const EpisodeRecord& record() const { return record_; }

private:
    void refresh();
    bool budget_exhausted() const { return steps_ >= cfg_.step_budget(); }

    const Topology* topology_;
    EnvConfig cfg_;
    NetworkState state_;
    DemandSet demands_;
    Rng physics_;
    CandidateSet candidates_;
    ActionMask mask_;
    std::size_t steps_ = 0;
    bool done_ = false;
    EpisodeRecord record_;
};

// Seed of the index-th episode derived from a run seed.
std::uint64_t episode_seed(std::uint64_t base, std::size_t index);

struct TrainLogRow {
    std::size_t episode = 0;
    double total_return = 0.0;
    std::size_t resolved = 0;
    double loss_mean = 0.0;  // NaN when no gradient step happened
    double epsilon = 0.0;
};

struct TrainResult {
    Mlp net;
    std::vector<TrainLogRow> log;
    std::vector<double> losses;  // one per gradient step
    std::size_t env_steps = 0;
    std::size_t gradient_steps = 0;
    std::size_t syncs = 0;
};

std::vector<std::size_t> network_dims(const Topology& topology, const EnvConfig& env, const TrainConfig& train);

TrainResult train(const Topology& topology, const EnvConfig& env, const TrainConfig& cfg, std::uint64_t seed);

enum class Policy { qudqn, shortest, random };

std::string to_string(Policy p);
Policy parse_policy(const std::string& name);

// Greedy evaluation over `episodes` independent episodes. `agent` is required
// for Policy::qudqn. Results are in episode order regardless of `threads`.
std::vector<EpisodeRecord> evaluate(Policy policy, const Topology& topology, const EnvConfig& env, const Mlp* agent,
                                    std::size_t episodes, std::uint64_t seed, unsigned threads = 1);

// Runs a single episode with the given policy; evaluate() is built on this.
EpisodeRecord run_episode(Policy policy, const Topology& topology, const EnvConfig& env, const Mlp* agent,
                          std::uint64_t seed);

// CSV "episode,return,resolved,loss_mean,epsilon".
void write_train_log(const std::string& path, const std::vector<TrainLogRow>& log);

}  // namespace qudqn
