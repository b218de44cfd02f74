#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qudqn/env.hpp"
#include "qudqn/qlearn.hpp"

namespace qudqn {

struct Scenario {
    std::string name;
    EnvConfig env;
    std::vector<Policy> policies{Policy::qudqn, Policy::shortest, Policy::random};
    std::size_t episodes = 500;
    std::uint64_t seed = 1;
    TrainConfig train;  // train.episodes is the training budget
    std::optional<std::filesystem::path> checkpoint;  // load instead of training

    void validate() const;
};

// Grid scaling (5x5..10x10 with 5..10 requests, 4 qubits/node), demand scaling
// (7x7, 20 qubits/node, 10..30 requests) and the 4x5 illustration network.
std::vector<Scenario> grid_scaling_suite();
std::vector<Scenario> demand_scaling_suite();
std::vector<Scenario> illustration_suite();
std::vector<Scenario> scenario_suite();

struct MetricsRow {
    std::string scenario;
    std::string policy;
    std::uint64_t seed = 0;
    std::size_t episode = 0;
    std::size_t resolved = 0;
    std::size_t total_requests = 0;
    long long qubits_used = 0;
    long long channels_used = 0;
    double mean_fidelity = 0.0;
    std::size_t steps = 0;
};

inline constexpr const char* kMetricsHeader =
    "scenario,policy,seed,episode,resolved,total_requests,qubits_used,channels_used,mean_fidelity,steps";

std::string format_metrics_row(const MetricsRow& row);
void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path);

struct Stat {
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation; 0 for a single value
};

Stat describe(const std::vector<double>& values);

struct PolicySummary {
    std::string policy;
    std::size_t episodes = 0;
    Stat resolved;
    Stat total_requests;
    Stat qubits_used;
    Stat channels_used;
    Stat mean_fidelity;
    Stat steps;
    Stat resolved_ratio;  // resolved / total_requests, the throughput view
};

struct ScenarioSummary {
    std::string scenario;
    std::uint64_t seed = 0;
    std::vector<PolicySummary> policies;

    const PolicySummary* find(const std::string& policy) const;
};

// Aggregates the rows of one scenario, policies in first-seen order.
ScenarioSummary summarize(const std::string& scenario, std::uint64_t seed, const std::vector<MetricsRow>& rows);

std::string summary_to_json(const ScenarioSummary& summary);
ScenarioSummary summary_from_json(const std::string& text);
ScenarioSummary load_summary(const std::filesystem::path& path);

struct RunOptions {
    unsigned threads = 1;
    std::ostream* progress = nullptr;
};

// Trains (or loads) the agent when qudqn is listed, evaluates every policy and
// writes <out>/<name>.csv and <out>/<name>.summary.json. Training additionally
// writes <name>.train.csv and <name>.checkpoint.json.
ScenarioSummary run_scenario(const Scenario& s, const std::filesystem::path& out_dir, const RunOptions& opts = {});

// (a - b) / b * 100; 0 when both are 0.
double percent_difference(double a, double b);

struct PolicyComparison {
    std::string policy;
    double resolved = 0.0;
    double qubits_used = 0.0;
    double channels_used = 0.0;
};

struct PairwiseComparison {
    std::string a;
    std::string b;
    double resolved_pct = 0.0;
    double qubits_pct = 0.0;
    double channels_pct = 0.0;
};

struct ComparisonTable {
    std::string scenario;
    std::vector<PolicyComparison> policies;
    std::vector<PairwiseComparison> pairs;  // every ordered pair a != b
};

// All summaries must describe the same scenario (ConfigError otherwise).
ComparisonTable compare(const std::vector<ScenarioSummary>& summaries);
std::string format_comparison(const ComparisonTable& table);
std::string comparison_to_json(const ComparisonTable& table);

}  // namespace qudqn
