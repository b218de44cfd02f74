#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <thread>

#include "qudqn/env.hpp"
#include "qudqn/errors.hpp"

namespace qudqn {

std::vector<std::size_t> network_dims(const Topology& topology, const EnvConfig& env, const TrainConfig& train) {
    std::vector<std::size_t> dims{state_dimension(topology, env.requests)};
    dims.insert(dims.end(), train.hidden.begin(), train.hidden.end());
    dims.push_back(env.action_count());
    return dims;
}

TrainResult train(const Topology& topology, const EnvConfig& env, const TrainConfig& cfg, std::uint64_t seed) {
    env.validate();
    cfg.validate();
    if (topology.node_count() < 2) throw ConfigError("topology needs at least 2 nodes");

    DqnLearner learner(Mlp::init(network_dims(topology, env, cfg), seed), cfg, seed);
    Rng explore = make_rng(seed, Stream::explore);
    const std::uint64_t episode_base = derive_seed(seed, Stream::explore, 1);

    TrainResult result;
    const auto step_cap_hit = [&] { return cfg.max_env_steps != 0 && result.env_steps >= cfg.max_env_steps; };

    for (std::size_t ep = 0; ep < cfg.episodes && !step_cap_hit(); ++ep) {
        const double epsilon = cfg.epsilon_at(ep);
        const auto ep_seed = episode_seed(episode_base, ep);
        Episode episode(topology, generate_demands(topology, env.requests, ep_seed), env, ep_seed);

        double loss_sum = 0.0;
        std::size_t loss_count = 0;
        while (!episode.done() && !step_cap_hit()) {
            auto state = episode.state_vector();
            const auto action = select_action(learner.main(), state, episode.mask(), epsilon, explore);
            const auto out = episode.step(action);
            ++result.env_steps;
            learner.remember(Transition{std::move(state), action, out.reward, episode.state_vector(), out.terminal,
                                        episode.mask()});
            if (auto loss = learner.learn()) {
                result.losses.push_back(*loss);
                loss_sum += *loss;
                ++loss_count;
            }
        }
        result.log.push_back(TrainLogRow{
            ep, episode.record().total_return, episode.record().resolved,
            loss_count ? loss_sum / static_cast<double>(loss_count) : std::numeric_limits<double>::quiet_NaN(),
            epsilon});
    }
    result.net = learner.main();
    result.gradient_steps = learner.gradient_steps();
    result.syncs = learner.sync_count();
    return result;
}

std::string to_string(Policy p) {
    switch (p) {
        case Policy::qudqn: return "qudqn";
        case Policy::shortest: return "shortest";
        case Policy::random: return "random";
    }
    return "unknown";
}

Policy parse_policy(const std::string& name) {
    if (name == "qudqn") return Policy::qudqn;
    if (name == "shortest") return Policy::shortest;
    if (name == "random") return Policy::random;
    throw ConfigError("unknown policy '" + name + "' (expected qudqn, shortest or random)");
}

namespace {

EpisodeRecord run_baseline(Policy policy, const Topology& topology, const EnvConfig& env, std::uint64_t seed) {
    NetworkState state(topology);
    DemandSet demands = generate_demands(topology, env.requests, seed);
    Rng physics = make_rng(seed, Stream::physics);
    Rng choice = make_rng(seed, Stream::policy);

    const auto schedule = policy == Policy::shortest
                              ? policy_shortest(state, demands, env.phys, physics, env.step_budget())
                              : policy_random(state, demands, env.phys, choice, physics, env.step_budget());

    EpisodeRecord rec;
    rec.seed = seed;
    rec.total_requests = demands.size();
    rec.steps = schedule.size();
    for (const auto& s : schedule) {
        if (!s.attempt.success) continue;
        rec.qubits_used += s.attempt.qubits_consumed;
        rec.channels_used += s.attempt.channels_consumed;
        rec.fidelities.push_back(s.attempt.realized_fidelity);
        const double bonus = fidelity_bonus(s.path.hops(), s.attempt.realized_fidelity, env.reward, env.phys);
        rec.bonus_total += bonus;
        rec.total_return += env.reward.alpha + bonus;
    }
    rec.resolved = demands.resolved_count();
    rec.total_return += static_cast<double>(rec.total_requests - rec.resolved) * env.reward.beta;
    return rec;
}

}  // namespace

EpisodeRecord run_episode(Policy policy, const Topology& topology, const EnvConfig& env, const Mlp* agent,
                          std::uint64_t seed) {
    if (policy != Policy::qudqn) return run_baseline(policy, topology, env, seed);
    if (!agent) throw ConfigError("policy qudqn needs a trained network");
    if (agent->input_size() != state_dimension(topology, env.requests) || agent->output_size() != env.action_count())
        throw ConfigError("network dimensions do not match the environment (retrain or pass a matching checkpoint)");

    Episode episode(topology, generate_demands(topology, env.requests, seed), env, seed);
    Rng unused(0);
    while (!episode.done()) {
        const auto state = episode.state_vector();
        episode.step(select_action(*agent, state, episode.mask(), 0.0, unused));
    }
    return episode.record();
}

std::vector<EpisodeRecord> evaluate(Policy policy, const Topology& topology, const EnvConfig& env, const Mlp* agent,
                                    std::size_t episodes, std::uint64_t seed, unsigned threads) {
    env.validate();
    if (episodes < 1) throw ConfigError("episodes must be at least 1");
    std::vector<EpisodeRecord> records(episodes);
    if (threads <= 1) {
        for (std::size_t i = 0; i < episodes; ++i)
            records[i] = run_episode(policy, topology, env, agent, episode_seed(seed, i));
        return records;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < episodes; i = next++) {
            try {
                records[i] = run_episode(policy, topology, env, agent, episode_seed(seed, i));
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    return records;
}

void write_train_log(const std::string& path, const std::vector<TrainLogRow>& log) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write training log " + path);
    out << "episode,return,resolved,loss_mean,epsilon\n";
    char buf[128];
    for (const auto& row : log) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%zu,%.17g,%.17g\n", row.episode, row.total_return, row.resolved,
                      row.loss_mean, row.epsilon);
        out << buf;
    }
    if (!out) throw IoError("failed writing training log " + path);
}

}  // namespace qudqn
