#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "qudqn/mlp.hpp"
#include "qudqn/rng.hpp"
#include "qudqn/routing.hpp"

namespace qudqn {

struct Transition {
    std::vector<double> state;
    std::size_t action = 0;
    double reward = 0.0;
    std::vector<double> next_state;
    bool done = false;
    ActionMask next_mask;
};

// Fixed-capacity ring buffer; the oldest transition is overwritten first.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    void push(Transition t);
    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }
    const Transition& operator[](std::size_t i) const { return items_.at(i); }

    // `count` distinct indices drawn uniformly. Requires count <= size().
    std::vector<std::size_t> sample_indices(std::size_t count, Rng& rng) const;

private:
    std::size_t capacity_;
    std::size_t next_ = 0;
    std::vector<Transition> items_;
};

struct TrainConfig {
    double lr = 0.1;
    std::size_t batch = 512;
    double discount = 0.9;              // lambda
    std::size_t target_sync_period = 100;  // in gradient steps
    double epsilon_start = 1.0;
    double epsilon_end = 0.05;
    double epsilon_decay_fraction = 0.5;  // of training episodes
    std::size_t buffer_capacity = 10000;
    std::size_t episodes = 2000;
    std::size_t max_env_steps = 0;  // 0: no cap beyond `episodes`
    std::vector<std::size_t> hidden{128, 128};

    void validate() const;
    double epsilon_at(std::size_t episode) const;
};

// y = r for terminal transitions, else r + discount * max over next_mask-valid
// actions of target(next_state). Throws ContractViolation for a non-terminal
// transition whose next_mask is empty.
std::vector<double> td_target(std::span<const Transition* const> batch, const Mlp& target, double discount);
std::vector<double> td_target(std::span<const Transition> batch, const Mlp& target, double discount);

// One SGD step on the mean squared TD error of a uniformly sampled batch.
// Returns the loss before the update, or nullopt while the buffer holds fewer
// than cfg.batch transitions.
std::optional<double> train_step(Mlp& main, const Mlp& target, const ReplayBuffer& buffer, const TrainConfig& cfg,
                                 Rng& rng);

// Same update on an explicit batch; used by train_step and by tests.
double train_on_batch(Mlp& main, const Mlp& target, std::span<const Transition* const> batch, double lr,
                      double discount);

inline void sync_target(const Mlp& main, Mlp& target) { target = main; }

// Central finite differences of (Q(x)[action] - y)^2 against backprop, over
// every parameter. Components where both gradients are below 1e-8 count as 0.
double grad_check(const Mlp& net, std::span<const double> x, std::size_t action, double y, double eps);

// Main and target networks plus the replay buffer and step counters.
class DqnLearner {
public:
    DqnLearner(Mlp initial, TrainConfig cfg, std::uint64_t seed);

    const Mlp& main() const { return main_; }
    const Mlp& target() const { return target_; }
    const TrainConfig& config() const { return cfg_; }
    ReplayBuffer& buffer() { return buffer_; }

    void remember(Transition t) { buffer_.push(std::move(t)); }
    // Trains once if the buffer is ready and syncs the target every
    // target_sync_period gradient steps.
    std::optional<double> learn();

    std::size_t gradient_steps() const { return gradient_steps_; }
    std::size_t sync_count() const { return sync_count_; }

private:
    TrainConfig cfg_;
    Mlp main_;
    Mlp target_;
    ReplayBuffer buffer_;
    Rng rng_;
    std::size_t gradient_steps_ = 0;
    std::size_t sync_count_ = 0;
};

struct Checkpoint {
    Mlp net;
    std::uint64_t global_step = 0;
};

// JSON {"format","version","dims","weights","biases","global_step"}; doubles
// are written in shortest round-trip form so reloads are bit-exact.
void save_checkpoint(const std::filesystem::path& path, const Mlp& net, std::uint64_t global_step);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace qudqn
