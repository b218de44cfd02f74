// qudqn: command-line front end for topology generation, training,
// evaluation, comparison and the scenario suites.
//
// Exit codes: 0 success, 2 configuration error, 3 I/O error, 1 anything else.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "qudqn/bench.hpp"
#include "qudqn/errors.hpp"

namespace fs = std::filesystem;
using namespace qudqn;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

struct Options {
    std::string grid = "5x5";
    std::string qubits = "4:4";
    std::string channels = "26:35";
    std::string fidelity = "0.70:0.95";
    double pe = 0.9;
    double qv = 0.9;
    double fmin = 0.85;
    std::size_t requests = 5;
    std::size_t k_paths = 3;
    std::size_t episodes = 500;
    std::size_t train_episodes = 2000;
    std::uint64_t seed = 1;
    std::string out;
    std::vector<std::string> policies;
    std::string checkpoint;
    std::string config;
    std::string name;
    std::string suite = "all";
    std::string log;
    unsigned threads = 1;
    double lr = 0.1;
    std::size_t batch = 512;
    std::vector<std::size_t> hidden{128, 128};
    bool quiet = false;
    std::vector<std::string> summaries;
};

std::pair<int, int> parse_grid(const std::string& text) {
    const auto x = text.find_first_of("xX");
    try {
        if (x == std::string::npos) throw std::invalid_argument(text);
        std::size_t used_r = 0, used_c = 0;
        const int r = std::stoi(text.substr(0, x), &used_r);
        const int c = std::stoi(text.substr(x + 1), &used_c);
        if (used_r != x || used_c != text.size() - x - 1) throw std::invalid_argument(text);
        return {r, c};
    } catch (const std::logic_error&) {
        throw ConfigError("--grid expects RxC, got '" + text + "'");
    }
}

template <typename T>
Range<T> parse_range(const std::string& flag, const std::string& text) {
    const auto colon = text.find(':');
    try {
        if (colon == std::string::npos) throw std::invalid_argument(text);
        std::istringstream lo(text.substr(0, colon)), hi(text.substr(colon + 1));
        Range<T> r;
        if (!(lo >> r.lo) || !(hi >> r.hi) || !lo.eof() || !hi.eof()) throw std::invalid_argument(text);
        return r;
    } catch (const std::logic_error&) {
        throw ConfigError(flag + " expects LO:HI, got '" + text + "'");
    }
}

EnvConfig env_from(const Options& o) {
    EnvConfig env;
    std::tie(env.topology.rows, env.topology.cols) = parse_grid(o.grid);
    env.topology.qubit_capacity = parse_range<int>("--qubits", o.qubits);
    env.topology.channel_capacity = parse_range<int>("--channels", o.channels);
    env.topology.fidelity = parse_range<double>("--fidelity", o.fidelity);
    env.topology_seed = o.seed;
    env.phys = PhysParams{o.pe, o.qv, o.fmin};
    env.requests = o.requests;
    env.k_paths = o.k_paths;
    env.validate();
    return env;
}

TrainConfig train_from(const Options& o, const EnvConfig& env) {
    TrainConfig cfg;
    cfg.episodes = o.train_episodes;
    cfg.lr = o.lr;
    cfg.batch = o.batch;
    cfg.hidden = o.hidden;
    cfg.discount = env.reward.discount;
    cfg.validate();
    return cfg;
}

std::vector<Policy> policies_from(const Options& o) {
    if (o.policies.empty()) return {Policy::qudqn, Policy::shortest, Policy::random};
    std::vector<Policy> out;
    for (const auto& name : o.policies) {
        const Policy p = parse_policy(name);
        if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(p);
    }
    return out;
}

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << text)) throw IoError("cannot write " + path.string());
}

// Turns a JSON config object into command-line tokens for `sub`. Keys are the
// long flag names without dashes; flags given on the command line win.
std::vector<std::string> config_tokens(const std::string& path, const CLI::App& sub,
                                       const std::vector<std::string>& user_args) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config file " + path);
    nlohmann::json cfg;
    try {
        in >> cfg;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config file " + path + ": " + e.what());
    }
    if (!cfg.is_object()) throw ConfigError("config file " + path + " must hold a JSON object");

    const auto given = [&](const std::string& flag) {
        return std::any_of(user_args.begin(), user_args.end(),
                           [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
    };
    const auto scalar = [&](const std::string& key, const nlohmann::json& v) -> std::string {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_number() || v.is_boolean()) return v.dump();
        throw ConfigError("config key '" + key + "' must be a string, number or boolean");
    };

    std::vector<std::string> tokens;
    for (const auto& [key, value] : cfg.items()) {
        if (key == "config") throw ConfigError("config files cannot include other config files");
        const std::string flag = "--" + key;
        const CLI::Option* opt = sub.get_option_no_throw(flag);
        if (!opt) continue;  // belongs to another subcommand
        if (given(flag)) continue;
        if (opt->get_expected_min() == 0) {
            if (!value.is_boolean()) throw ConfigError("config key '" + key + "' must be a boolean");
            if (value.get<bool>()) tokens.push_back(flag);
            continue;
        }
        if (value.is_array()) {
            for (const auto& item : value) {
                tokens.push_back(flag);
                tokens.push_back(scalar(key, item));
            }
        } else {
            tokens.push_back(flag);
            tokens.push_back(scalar(key, value));
        }
    }
    return tokens;
}

void add_topology_flags(CLI::App& app, Options& o) {
    app.add_option("--grid", o.grid, "grid size RxC")->capture_default_str();
    app.add_option("--qubits", o.qubits, "per-node qubit capacity range LO:HI")->capture_default_str();
    app.add_option("--channels", o.channels, "per-edge channel capacity range LO:HI")->capture_default_str();
    app.add_option("--fidelity", o.fidelity, "per-edge link fidelity range LO:HI")->capture_default_str();
    app.add_option("--seed", o.seed, "run seed")->capture_default_str();
    app.add_option("--config", o.config, "JSON file with default flag values");
}

void add_env_flags(CLI::App& app, Options& o) {
    add_topology_flags(app, o);
    app.add_option("--pe", o.pe, "link-level entanglement success probability")->capture_default_str();
    app.add_option("--qv", o.qv, "swap success probability")->capture_default_str();
    app.add_option("--fmin", o.fmin, "minimum end-to-end fidelity")->capture_default_str();
    app.add_option("--requests", o.requests, "requests per episode")->capture_default_str();
    app.add_option("--k-paths", o.k_paths, "candidate paths per request")->capture_default_str();
}

void add_train_flags(CLI::App& app, Options& o) {
    app.add_option("--train-episodes", o.train_episodes, "training episodes")->capture_default_str();
    app.add_option("--lr", o.lr, "SGD learning rate")->capture_default_str();
    app.add_option("--batch", o.batch, "minibatch size")->capture_default_str();
    app.add_option("--hidden", o.hidden, "hidden layer widths")->capture_default_str()->delimiter(',');
}

void print_table(const ScenarioSummary& summary) {
    std::cout << format_comparison(compare({summary}));
}

int run_gen_topology(const Options& o) {
    TopologyConfig cfg;
    std::tie(cfg.rows, cfg.cols) = parse_grid(o.grid);
    cfg.qubit_capacity = parse_range<int>("--qubits", o.qubits);
    cfg.channel_capacity = parse_range<int>("--channels", o.channels);
    cfg.fidelity = parse_range<double>("--fidelity", o.fidelity);
    const auto text = topology_to_json(grid_topology(cfg, o.seed)) + "\n";
    if (o.out.empty()) {
        std::cout << text;
    } else {
        write_file(o.out, text);
    }
    return 0;
}

int run_train(const Options& o) {
    const EnvConfig env = env_from(o);
    const TrainConfig cfg = train_from(o, env);
    const Topology topology = grid_topology(env.topology, env.topology_seed);
    const auto result = train(topology, env, cfg, derive_seed(o.seed, Stream::init, 1));
    const fs::path out = o.out.empty() ? fs::path("checkpoint.json") : fs::path(o.out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    save_checkpoint(out, result.net, result.gradient_steps);
    if (!o.log.empty()) write_train_log(o.log, result.log);

    double tail = 0.0;
    const std::size_t n = std::min<std::size_t>(100, result.losses.size());
    for (std::size_t i = result.losses.size() - n; i < result.losses.size(); ++i) tail += result.losses[i];
    std::printf("episodes %zu  env steps %zu  gradient steps %zu  target syncs %zu\n", result.log.size(),
                result.env_steps, result.gradient_steps, result.syncs);
    if (n > 0) std::printf("mean loss over the last %zu steps %.6g\n", n, tail / static_cast<double>(n));
    std::printf("checkpoint written to %s\n", out.string().c_str());
    return 0;
}

int run_evaluate(const Options& o) {
    Scenario s;
    s.env = env_from(o);
    s.name = o.name.empty() ? "custom-" + std::to_string(s.env.topology.rows) + "x" +
                                  std::to_string(s.env.topology.cols) + "-d" + std::to_string(s.env.requests)
                            : o.name;
    s.policies = policies_from(o);
    s.episodes = o.episodes;
    s.seed = o.seed;
    if (!o.checkpoint.empty()) s.checkpoint = fs::path(o.checkpoint);
    else if (std::find(s.policies.begin(), s.policies.end(), Policy::qudqn) != s.policies.end())
        s.train = train_from(o, s.env);
    const fs::path out = o.out.empty() ? fs::path("results") : fs::path(o.out);
    print_table(run_scenario(s, out, RunOptions{o.threads, o.quiet ? nullptr : &std::cerr}));
    return 0;
}

int run_compare(const Options& o) {
    std::vector<ScenarioSummary> summaries;
    for (const auto& path : o.summaries) summaries.push_back(load_summary(path));
    const auto table = compare(summaries);
    std::cout << format_comparison(table);
    if (!o.out.empty()) write_file(o.out, comparison_to_json(table) + "\n");
    return 0;
}

int run_suite(const Options& o, bool episodes_given, bool train_given) {
    std::vector<Scenario> scenarios;
    if (o.suite == "all") scenarios = scenario_suite();
    else if (o.suite == "grid") scenarios = grid_scaling_suite();
    else if (o.suite == "demand") scenarios = demand_scaling_suite();
    else if (o.suite == "illustration") scenarios = illustration_suite();
    else throw ConfigError("--suite expects all, grid, demand or illustration, got '" + o.suite + "'");

    const auto policies = policies_from(o);
    const fs::path out = o.out.empty() ? fs::path("results") : fs::path(o.out);
    for (auto& s : scenarios) {
        s.policies = policies;
        s.seed = o.seed;
        s.env.topology_seed = o.seed;
        if (episodes_given) s.episodes = o.episodes;
        if (train_given) s.train.episodes = o.train_episodes;
        s.train.lr = o.lr;
        s.train.batch = o.batch;
        s.train.hidden = o.hidden;
        print_table(run_scenario(s, out, RunOptions{o.threads, o.quiet ? nullptr : &std::cerr}));
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Entanglement routing simulator with a deep Q-network scheduler and two baselines"};
    app.require_subcommand(1);
    Options o;

    auto* gen = app.add_subcommand("gen-topology", "generate a grid topology as JSON");
    add_topology_flags(*gen, o);
    gen->add_option("--out", o.out, "output file (stdout when omitted)");

    auto* tr = app.add_subcommand("train", "train the Q-network and write a checkpoint");
    add_env_flags(*tr, o);
    add_train_flags(*tr, o);
    tr->add_option("--out", o.out, "checkpoint file")->capture_default_str();
    tr->add_option("--log", o.log, "training log CSV");

    auto* ev = app.add_subcommand("evaluate", "evaluate policies on one configuration");
    add_env_flags(*ev, o);
    add_train_flags(*ev, o);
    ev->add_option("--episodes", o.episodes, "evaluation episodes")->capture_default_str();
    ev->add_option("--policy", o.policies, "qudqn, shortest or random (repeatable)")->take_all();
    ev->add_option("--checkpoint", o.checkpoint, "trained network to load instead of training");
    ev->add_option("--name", o.name, "scenario name used for output files");
    ev->add_option("--out", o.out, "output directory (default: results)");
    ev->add_option("--threads", o.threads, "evaluation threads")->capture_default_str();
    ev->add_flag("--quiet", o.quiet, "suppress progress messages");

    auto* cmp = app.add_subcommand("compare", "compare policy summaries of one scenario");
    cmp->add_option("summaries", o.summaries, "summary JSON files")->required();
    cmp->add_option("--out", o.out, "also write the table as JSON");
    cmp->add_option("--config", o.config, "JSON file with default flag values");

    auto* suite = app.add_subcommand("suite", "run a predefined scenario suite");
    suite->add_option("--suite", o.suite, "all, grid, demand or illustration")->capture_default_str();
    suite->add_option("--episodes", o.episodes, "evaluation episodes per scenario");
    suite->add_option("--train-episodes", o.train_episodes, "training episodes per scenario");
    suite->add_option("--seed", o.seed, "run seed")->capture_default_str();
    suite->add_option("--policy", o.policies, "qudqn, shortest or random (repeatable)")->take_all();
    suite->add_option("--out", o.out, "output directory (default: results)");
    suite->add_option("--threads", o.threads, "evaluation threads")->capture_default_str();
    suite->add_option("--lr", o.lr, "SGD learning rate")->capture_default_str();
    suite->add_option("--batch", o.batch, "minibatch size")->capture_default_str();
    suite->add_option("--hidden", o.hidden, "hidden layer widths")->capture_default_str()->delimiter(',');
    suite->add_option("--config", o.config, "JSON file with default flag values");
    suite->add_flag("--quiet", o.quiet, "suppress progress messages");

    try {
        std::vector<std::string> args(argv + 1, argv + argc);
        const auto cfg_it = std::find_if(args.begin(), args.end(), [](const std::string& a) {
            return a == "--config" || a.rfind("--config=", 0) == 0;
        });
        if (cfg_it != args.end() && !args.empty()) {
            std::string path;
            if (*cfg_it == "--config") {
                if (cfg_it + 1 == args.end()) throw ConfigError("--config needs a file");
                path = *(cfg_it + 1);
            } else {
                path = cfg_it->substr(std::string("--config=").size());
            }
            const CLI::App* sub = nullptr;
            for (const auto* candidate : {gen, tr, ev, cmp, suite})
                if (candidate->get_name() == args.front()) sub = candidate;
            if (!sub) throw ConfigError("--config must follow a subcommand");
            const auto extra = config_tokens(path, *sub, args);
            args.insert(args.begin() + 1, extra.begin(), extra.end());
        }
        std::reverse(args.begin(), args.end());
        app.parse(std::move(args));

        if (*gen) return run_gen_topology(o);
        if (*tr) return run_train(o);
        if (*ev) return run_evaluate(o);
        if (*cmp) return run_compare(o);
        return run_suite(o, suite->count("--episodes") > 0, suite->count("--train-episodes") > 0);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const LookupError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return kExitIo;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
