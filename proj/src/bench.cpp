#include "qudqn/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "qudqn/errors.hpp"

namespace qudqn {

namespace fs = std::filesystem;

void Scenario::validate() const {
    if (name.empty() || name.find_first_of(",\n\"/") != std::string::npos)
        throw ConfigError("scenario name must be non-empty and free of ',', '\"', '/' and newlines");
    env.validate();
    if (episodes < 1) throw ConfigError("episodes must be at least 1");
    if (policies.empty()) throw ConfigError("scenario lists no policies");
    if (std::find(policies.begin(), policies.end(), Policy::qudqn) != policies.end() && !checkpoint)
        train.validate();
}

namespace {

Scenario base_scenario(std::string name, int rows, int cols, Range<int> qubits, std::size_t requests) {
    Scenario s;
    s.name = std::move(name);
    s.env.topology.rows = rows;
    s.env.topology.cols = cols;
    s.env.topology.qubit_capacity = qubits;
    s.env.topology.channel_capacity = {26, 35};
    s.env.topology.fidelity = {0.70, 0.95};
    s.env.phys = PhysParams{0.9, 0.9, 0.85};
    s.env.reward = RewardParams{0.2, -1.0, 0.9, 0.9};
    s.env.requests = requests;
    s.env.k_paths = 3;
    s.train.discount = s.env.reward.discount;
    return s;
}

std::string grid_name(const char* prefix, int rows, int cols, std::size_t requests) {
    return std::string(prefix) + "-" + std::to_string(rows) + "x" + std::to_string(cols) + "-d" +
           std::to_string(requests);
}

}  // namespace

std::vector<Scenario> grid_scaling_suite() {
    std::vector<Scenario> out;
    for (int n = 5; n <= 10; ++n) {
        const auto requests = static_cast<std::size_t>(n);
        out.push_back(base_scenario(grid_name("grid", n, n, requests), n, n, {4, 4}, requests));
    }
    return out;
}

std::vector<Scenario> demand_scaling_suite() {
    std::vector<Scenario> out;
    for (std::size_t d = 10; d <= 30; d += 5) out.push_back(base_scenario(grid_name("demand", 7, 7, d), 7, 7, {20, 20}, d));
    return out;
}

std::vector<Scenario> illustration_suite() {
    return {base_scenario(grid_name("illustration", 4, 5, 6), 4, 5, {4, 6}, 6)};
}

std::vector<Scenario> scenario_suite() {
    auto out = grid_scaling_suite();
    for (auto& s : demand_scaling_suite()) out.push_back(std::move(s));
    for (auto& s : illustration_suite()) out.push_back(std::move(s));
    return out;
}

std::string format_metrics_row(const MetricsRow& r) {
    char num[64];
    std::snprintf(num, sizeof num, "%.17g", r.mean_fidelity);
    std::ostringstream os;
    os << r.scenario << ',' << r.policy << ',' << r.seed << ',' << r.episode << ',' << r.resolved << ','
       << r.total_requests << ',' << r.qubits_used << ',' << r.channels_used << ',' << num << ',' << r.steps;
    return os.str();
}

void write_metrics_csv(const fs::path& path, const std::vector<MetricsRow>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << kMetricsHeader << '\n';
    for (const auto& r : rows) out << format_metrics_row(r) << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

std::vector<MetricsRow> read_metrics_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != kMetricsHeader)
        throw ConfigError(path.string() + ": header does not match the metrics CSV contract");
    std::vector<MetricsRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
        if (f.size() != 10) throw ConfigError(path.string() + ": malformed row '" + line + "'");
        try {
            rows.push_back(MetricsRow{f[0], f[1], std::stoull(f[2]), std::stoull(f[3]), std::stoull(f[4]),
                                      std::stoull(f[5]), std::stoll(f[6]), std::stoll(f[7]), std::stod(f[8]),
                                      std::stoull(f[9])});
        } catch (const std::logic_error&) {
            throw ConfigError(path.string() + ": malformed row '" + line + "'");
        }
    }
    return rows;
}

Stat describe(const std::vector<double>& values) {
    Stat s;
    if (values.empty()) return s;
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return s;
}

const PolicySummary* ScenarioSummary::find(const std::string& policy) const {
    for (const auto& p : policies)
        if (p.policy == policy) return &p;
    return nullptr;
}

ScenarioSummary summarize(const std::string& scenario, std::uint64_t seed, const std::vector<MetricsRow>& rows) {
    ScenarioSummary summary{scenario, seed, {}};
    std::vector<std::string> order;
    for (const auto& r : rows)
        if (r.scenario == scenario && std::find(order.begin(), order.end(), r.policy) == order.end())
            order.push_back(r.policy);
    for (const auto& policy : order) {
        std::vector<double> resolved, total, qubits, channels, fidelity, steps, ratio;
        for (const auto& r : rows) {
            if (r.scenario != scenario || r.policy != policy) continue;
            resolved.push_back(static_cast<double>(r.resolved));
            total.push_back(static_cast<double>(r.total_requests));
            qubits.push_back(static_cast<double>(r.qubits_used));
            channels.push_back(static_cast<double>(r.channels_used));
            fidelity.push_back(r.mean_fidelity);
            steps.push_back(static_cast<double>(r.steps));
            ratio.push_back(r.total_requests ? static_cast<double>(r.resolved) / static_cast<double>(r.total_requests)
                                             : 0.0);
        }
        summary.policies.push_back(PolicySummary{policy, resolved.size(), describe(resolved), describe(total),
                                                 describe(qubits), describe(channels), describe(fidelity),
                                                 describe(steps), describe(ratio)});
    }
    return summary;
}

namespace {

nlohmann::ordered_json stat_json(const Stat& s) { return {{"mean", s.mean}, {"std", s.stddev}}; }

Stat stat_from(const nlohmann::json& j) { return Stat{j.at("mean").get<double>(), j.at("std").get<double>()}; }

const char* const kStatFields[] = {"resolved",      "total_requests", "qubits_used",   "channels_used",
                                   "mean_fidelity", "steps",          "resolved_ratio"};

Stat PolicySummary::*const kStatMembers[] = {&PolicySummary::resolved,      &PolicySummary::total_requests,
                                             &PolicySummary::qubits_used,   &PolicySummary::channels_used,
                                             &PolicySummary::mean_fidelity, &PolicySummary::steps,
                                             &PolicySummary::resolved_ratio};

}  // namespace

std::string summary_to_json(const ScenarioSummary& summary) {
    nlohmann::ordered_json doc;
    doc["scenario"] = summary.scenario;
    doc["seed"] = summary.seed;
    doc["policies"] = nlohmann::ordered_json::array();
    for (const auto& p : summary.policies) {
        nlohmann::ordered_json j;
        j["policy"] = p.policy;
        j["episodes"] = p.episodes;
        for (std::size_t i = 0; i < std::size(kStatFields); ++i) j[kStatFields[i]] = stat_json(p.*kStatMembers[i]);
        doc["policies"].push_back(std::move(j));
    }
    return doc.dump(2) + "\n";
}

ScenarioSummary summary_from_json(const std::string& text) {
    try {
        const auto doc = nlohmann::json::parse(text);
        ScenarioSummary s{doc.at("scenario").get<std::string>(), doc.at("seed").get<std::uint64_t>(), {}};
        for (const auto& j : doc.at("policies")) {
            PolicySummary p;
            p.policy = j.at("policy").get<std::string>();
            p.episodes = j.at("episodes").get<std::size_t>();
            for (std::size_t i = 0; i < std::size(kStatFields); ++i) p.*kStatMembers[i] = stat_from(j.at(kStatFields[i]));
            s.policies.push_back(std::move(p));
        }
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("summary json: ") + e.what());
    }
}

ScenarioSummary load_summary(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    std::stringstream text;
    text << in.rdbuf();
    return summary_from_json(text.str());
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

ScenarioSummary run_scenario(const Scenario& s, const fs::path& out_dir, const RunOptions& opts) {
    s.validate();
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec || !fs::is_directory(out_dir)) throw IoError("cannot create output directory " + out_dir.string());

    const Topology topology = grid_topology(s.env.topology, s.env.topology_seed);
    const auto log = [&](const std::string& msg) {
        if (opts.progress) *opts.progress << "[" << s.name << "] " << msg << '\n';
    };

    std::optional<Mlp> agent;
    if (std::find(s.policies.begin(), s.policies.end(), Policy::qudqn) != s.policies.end()) {
        if (s.checkpoint) {
            agent = load_checkpoint(*s.checkpoint).net;
            log("loaded checkpoint " + s.checkpoint->string());
        } else {
            log("training for " + std::to_string(s.train.episodes) + " episodes");
            auto result = train(topology, s.env, s.train, derive_seed(s.seed, Stream::init, 1));
            write_train_log((out_dir / (s.name + ".train.csv")).string(), result.log);
            save_checkpoint(out_dir / (s.name + ".checkpoint.json"), result.net, result.gradient_steps);
            agent = std::move(result.net);
        }
        if (agent->input_size() != state_dimension(topology, s.env.requests) ||
            agent->output_size() != s.env.action_count())
            throw ConfigError("checkpoint dimensions do not match scenario " + s.name);
    }

    std::vector<MetricsRow> rows;
    for (Policy p : s.policies) {
        log("evaluating " + to_string(p) + " over " + std::to_string(s.episodes) + " episodes");
        const auto records = evaluate(p, topology, s.env, agent ? &*agent : nullptr, s.episodes, s.seed, opts.threads);
        for (std::size_t i = 0; i < records.size(); ++i) {
            const auto& r = records[i];
            rows.push_back(MetricsRow{s.name, to_string(p), s.seed, i, r.resolved, r.total_requests, r.qubits_used,
                                      r.channels_used, r.mean_fidelity(), r.steps});
        }
    }
    write_metrics_csv(out_dir / (s.name + ".csv"), rows);
    auto summary = summarize(s.name, s.seed, rows);
    write_text(out_dir / (s.name + ".summary.json"), summary_to_json(summary));
    return summary;
}

double percent_difference(double a, double b) {
    if (a == b) return 0.0;
    return (a - b) / b * 100.0;
}

ComparisonTable compare(const std::vector<ScenarioSummary>& summaries) {
    if (summaries.empty()) throw ConfigError("compare needs at least one summary");
    ComparisonTable table;
    table.scenario = summaries.front().scenario;
    for (const auto& s : summaries) {
        if (s.scenario != table.scenario)
            throw ConfigError("cannot compare summaries of different scenarios ('" + table.scenario + "' vs '" +
                              s.scenario + "')");
        for (const auto& p : s.policies) {
            auto it = std::find_if(table.policies.begin(), table.policies.end(),
                                   [&](const PolicyComparison& c) { return c.policy == p.policy; });
            PolicyComparison row{p.policy, p.resolved.mean, p.qubits_used.mean, p.channels_used.mean};
            if (it == table.policies.end()) {
                table.policies.push_back(row);
            } else {
                *it = row;  // later summaries win for duplicated policies
            }
        }
    }
    for (const auto& a : table.policies)
        for (const auto& b : table.policies)
            if (a.policy != b.policy)
                table.pairs.push_back(PairwiseComparison{a.policy, b.policy,
                                                         percent_difference(a.resolved, b.resolved),
                                                         percent_difference(a.qubits_used, b.qubits_used),
                                                         percent_difference(a.channels_used, b.channels_used)});
    return table;
}

std::string format_comparison(const ComparisonTable& table) {
    std::ostringstream os;
    char line[256];
    os << "scenario: " << table.scenario << '\n';
    std::snprintf(line, sizeof line, "%-10s %12s %12s %12s\n", "policy", "resolved", "qubits", "channels");
    os << line;
    for (const auto& p : table.policies) {
        std::snprintf(line, sizeof line, "%-10s %12.4f %12.4f %12.4f\n", p.policy.c_str(), p.resolved, p.qubits_used,
                      p.channels_used);
        os << line;
    }
    for (const auto& d : table.pairs) {
        std::snprintf(line, sizeof line, "%s vs %s: resolved %+.2f%%, qubits %+.2f%%, channels %+.2f%%\n",
                      d.a.c_str(), d.b.c_str(), d.resolved_pct, d.qubits_pct, d.channels_pct);
        os << line;
    }
    return os.str();
}

std::string comparison_to_json(const ComparisonTable& table) {
    nlohmann::ordered_json doc;
    doc["scenario"] = table.scenario;
    doc["policies"] = nlohmann::ordered_json::array();
    for (const auto& p : table.policies)
        doc["policies"].push_back({{"policy", p.policy},
                                   {"resolved", p.resolved},
                                   {"qubits_used", p.qubits_used},
                                   {"channels_used", p.channels_used}});
    doc["pairs"] = nlohmann::ordered_json::array();
    for (const auto& d : table.pairs)
        doc["pairs"].push_back({{"a", d.a},
                                {"b", d.b},
                                {"resolved_pct", d.resolved_pct},
                                {"qubits_pct", d.qubits_pct},
                                {"channels_pct", d.channels_pct}});
    return doc.dump(2) + "\n";
}

}  // namespace qudqn
