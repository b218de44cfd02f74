#include "qudqn/qlearn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "qudqn/errors.hpp"

namespace qudqn {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw ConfigError("replay buffer capacity must be positive");
    items_.reserve(std::min<std::size_t>(capacity_, 1 << 16));
}

void ReplayBuffer::push(Transition t) {
    if (items_.size() < capacity_) {
        items_.push_back(std::move(t));
    } else {
        items_[next_] = std::move(t);
    }
    next_ = (next_ + 1) % capacity_;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t count, Rng& rng) const {
    if (count > items_.size()) throw ContractViolation("sample larger than replay buffer");
    // Partial Fisher-Yates over the index range.
    std::vector<std::size_t> idx(items_.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < count; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(count);
    return idx;
}

void TrainConfig::validate() const {
    if (!(lr > 0.0)) throw ConfigError("lr must be positive");
    if (batch < 1) throw ConfigError("batch must be at least 1");
    if (!(discount >= 0.0 && discount <= 1.0)) throw ConfigError("discount must lie in [0,1]");
    if (target_sync_period < 1) throw ConfigError("target_sync_period must be at least 1");
    if (buffer_capacity < batch) throw ConfigError("buffer_capacity must be at least batch");
    if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0 && epsilon_end >= 0.0 && epsilon_end <= 1.0))
        throw ConfigError("epsilon schedule must lie in [0,1]");
    if (!(epsilon_decay_fraction >= 0.0 && epsilon_decay_fraction <= 1.0))
        throw ConfigError("epsilon_decay_fraction must lie in [0,1]");
    if (hidden.empty()) throw ConfigError("hidden layer list must not be empty");
}

double TrainConfig::epsilon_at(std::size_t episode) const {
    const double horizon = epsilon_decay_fraction * static_cast<double>(episodes);
    if (horizon <= 0.0 || static_cast<double>(episode) >= horizon) return epsilon_end;
    const double t = static_cast<double>(episode) / horizon;
    return epsilon_start + (epsilon_end - epsilon_start) * t;
}

std::vector<double> td_target(std::span<const Transition* const> batch, const Mlp& target, double discount) {
    if (batch.empty()) throw ContractViolation("td_target on an empty batch");
    std::vector<double> y(batch.size());
    std::vector<std::size_t> bootstrap;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const Transition& t = *batch[i];
        y[i] = t.reward;
        if (t.done) continue;
        if (!t.next_mask.any())
            throw ContractViolation("non-terminal transition with no valid next action");
        bootstrap.push_back(i);
    }
    if (bootstrap.empty() || discount == 0.0) return y;

    Eigen::MatrixXd next(static_cast<Eigen::Index>(target.input_size()), static_cast<Eigen::Index>(bootstrap.size()));
    for (std::size_t j = 0; j < bootstrap.size(); ++j) {
        const auto& s = batch[bootstrap[j]]->next_state;
        if (s.size() != target.input_size()) throw ConfigError("next_state dimension mismatch");
        next.col(static_cast<Eigen::Index>(j)) =
            Eigen::Map<const Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
    }
    const Eigen::MatrixXd q = target.forward(next);
    for (std::size_t j = 0; j < bootstrap.size(); ++j) {
        const Transition& t = *batch[bootstrap[j]];
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < t.next_mask.size(); ++a)
            if (t.next_mask[a]) best = std::max(best, q(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(j)));
        y[bootstrap[j]] += discount * best;
    }
    return y;
}

std::vector<double> td_target(std::span<const Transition> batch, const Mlp& target, double discount) {
    std::vector<const Transition*> ptrs;
    for (const auto& t : batch) ptrs.push_back(&t);
    return td_target(std::span<const Transition* const>(ptrs), target, discount);
}

double train_on_batch(Mlp& main, const Mlp& target, std::span<const Transition* const> batch, double lr,
                      double discount) {
    const auto y = td_target(batch, target, discount);
    Eigen::MatrixXd states(static_cast<Eigen::Index>(main.input_size()), static_cast<Eigen::Index>(batch.size()));
    std::vector<std::size_t> actions(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto& s = batch[i]->state;
        if (s.size() != main.input_size()) throw ConfigError("state dimension mismatch");
        states.col(static_cast<Eigen::Index>(i)) =
            Eigen::Map<const Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
        actions[i] = batch[i]->action;
    }
    double loss = 0.0;
    const auto grad = main.loss_gradient(states, actions, y, &loss);
    main.apply_gradient(grad, lr);
    return loss;
}

std::optional<double> train_step(Mlp& main, const Mlp& target, const ReplayBuffer& buffer, const TrainConfig& cfg,
                                 Rng& rng) {
    if (buffer.size() < cfg.batch) return std::nullopt;
    const auto idx = buffer.sample_indices(cfg.batch, rng);
    std::vector<const Transition*> batch;
    batch.reserve(idx.size());
    for (auto i : idx) batch.push_back(&buffer[i]);
    return train_on_batch(main, target, batch, cfg.lr, cfg.discount);
}

double grad_check(const Mlp& net, std::span<const double> x, std::size_t action, double y, double eps) {
    if (!(eps >= 1e-7 && eps <= 1e-3)) throw ConfigError("grad_check eps must lie in [1e-7, 1e-3]");
    if (x.size() != net.input_size()) throw ConfigError("grad_check input dimension mismatch");
    const Eigen::MatrixXd input =
        Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
    const std::size_t actions[] = {action};
    const double targets[] = {y};
    const auto analytic = Mlp::flatten(net.loss_gradient(input, actions, targets));

    Mlp probe = net;
    auto params = net.flat_parameters();
    const auto loss_at = [&](std::size_t i, double value) {
        const double saved = params[i];
        params[i] = value;
        probe.set_flat_parameters(params);
        params[i] = saved;
        const double q = probe.forward(input)(static_cast<Eigen::Index>(action), 0);
        return (q - y) * (q - y);
    };

    constexpr double kFloor = 1e-8;
    double worst = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double numeric = (loss_at(i, params[i] + eps) - loss_at(i, params[i] - eps)) / (2.0 * eps);
        const double scale = std::max(std::abs(numeric), std::abs(analytic[i]));
        if (scale < kFloor) continue;
        worst = std::max(worst, std::abs(numeric - analytic[i]) / scale);
    }
    return worst;
}

DqnLearner::DqnLearner(Mlp initial, TrainConfig cfg, std::uint64_t seed)
    : cfg_(std::move(cfg)), main_(std::move(initial)), target_(main_), buffer_(cfg_.buffer_capacity),
      rng_(make_rng(seed, Stream::replay)) {
    cfg_.validate();
}

std::optional<double> DqnLearner::learn() {
    auto loss = train_step(main_, target_, buffer_, cfg_, rng_);
    if (!loss) return loss;
    ++gradient_steps_;
    if (gradient_steps_ % cfg_.target_sync_period == 0) {
        sync_target(main_, target_);
        ++sync_count_;
    }
    return loss;
}

void save_checkpoint(const std::filesystem::path& path, const Mlp& net, std::uint64_t global_step) {
    nlohmann::ordered_json doc;
    doc["format"] = "qudqn-mlp";
    doc["version"] = 1;
    doc["dims"] = net.dims();
    doc["global_step"] = global_step;
    doc["weights"] = nlohmann::ordered_json::array();
    doc["biases"] = nlohmann::ordered_json::array();
    for (const auto& l : net.layers()) {
        nlohmann::ordered_json rows = nlohmann::ordered_json::array();
        for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
            std::vector<double> row(static_cast<std::size_t>(l.weight.cols()));
            for (Eigen::Index c = 0; c < l.weight.cols(); ++c) row[static_cast<std::size_t>(c)] = l.weight(r, c);
            rows.push_back(row);
        }
        doc["weights"].push_back(std::move(rows));
        doc["biases"].push_back(std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size()));
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot write checkpoint " + path.string());
    out << doc.dump() << '\n';
    if (!out) throw IoError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read checkpoint " + path.string());
    std::stringstream text;
    text << in.rdbuf();
    try {
        const auto doc = nlohmann::json::parse(text.str());
        if (doc.at("format").get<std::string>() != "qudqn-mlp" || doc.at("version").get<int>() != 1)
            throw ConfigError("unsupported checkpoint format");
        Checkpoint cp{Mlp(doc.at("dims").get<std::vector<std::size_t>>()), doc.at("global_step").get<std::uint64_t>()};
        const auto& weights = doc.at("weights");
        const auto& biases = doc.at("biases");
        auto& layers = cp.net.layers();
        if (weights.size() != layers.size() || biases.size() != layers.size())
            throw ConfigError("checkpoint layer count does not match dims");
        for (std::size_t l = 0; l < layers.size(); ++l) {
            auto& layer = layers[l];
            if (weights[l].size() != static_cast<std::size_t>(layer.weight.rows()) ||
                biases[l].size() != static_cast<std::size_t>(layer.bias.size()))
                throw ConfigError("checkpoint layer shape does not match dims");
            for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
                const auto& row = weights[l][static_cast<std::size_t>(r)];
                if (row.size() != static_cast<std::size_t>(layer.weight.cols()))
                    throw ConfigError("checkpoint layer shape does not match dims");
                for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
                    layer.weight(r, c) = row[static_cast<std::size_t>(c)].get<double>();
            }
            for (Eigen::Index r = 0; r < layer.bias.size(); ++r)
                layer.bias(r) = biases[l][static_cast<std::size_t>(r)].get<double>();
        }
        return cp;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("checkpoint ") + path.string() + ": " + e.what());
    }
}

}  // namespace qudqn
