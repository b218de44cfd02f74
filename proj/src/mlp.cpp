#include "qudqn/mlp.hpp"

#include <cmath>
#include <random>
#include <string>

#include "qudqn/errors.hpp"
#include "qudqn/rng.hpp"

namespace qudqn {

Mlp::Mlp(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
    if (dims_.size() < 2) throw ConfigError("mlp needs at least an input and an output size");
    for (auto d : dims_)
        if (d == 0) throw ConfigError("mlp layer sizes must be positive");
    for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
        const auto in = static_cast<Eigen::Index>(dims_[l]);
        const auto out = static_cast<Eigen::Index>(dims_[l + 1]);
        layers_.push_back(Layer{Eigen::MatrixXd::Zero(out, in), Eigen::VectorXd::Zero(out)});
    }
}

Mlp Mlp::init(std::vector<std::size_t> dims, std::uint64_t seed) {
    Mlp net(std::move(dims));
    Rng rng = make_rng(seed, Stream::init);
    for (auto& layer : net.layers_) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(layer.weight.cols()));
        std::uniform_real_distribution<double> u(-scale, scale);
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
            for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = u(rng);
    }
    return net;
}

std::size_t Mlp::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
}

Eigen::VectorXd Mlp::forward(std::span<const double> x) const {
    if (x.size() != input_size())
        throw ConfigError("input has " + std::to_string(x.size()) + " entries, network expects " +
                          std::to_string(input_size()));
    Eigen::MatrixXd in = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
    return forward(in).col(0);
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& inputs) const {
    if (static_cast<std::size_t>(inputs.rows()) != input_size())
        throw ConfigError("input has " + std::to_string(inputs.rows()) + " rows, network expects " +
                          std::to_string(input_size()));
    Eigen::MatrixXd a = inputs;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        Eigen::MatrixXd z = layers_[l].weight * a;
        z.colwise() += layers_[l].bias;
        a = (l + 1 < layers_.size()) ? Eigen::MatrixXd(z.cwiseMax(0.0)) : std::move(z);
    }
    return a;
}

Mlp::Gradients Mlp::loss_gradient(const Eigen::MatrixXd& inputs, std::span<const std::size_t> actions,
                                  std::span<const double> targets, double* loss) const {
    const auto batch = inputs.cols();
    if (static_cast<std::size_t>(batch) != actions.size() || actions.size() != targets.size())
        throw ConfigError("batch, action and target sizes differ");
    if (batch == 0) throw ConfigError("empty batch");

    // Keep every layer's activation for the backward pass.
    std::vector<Eigen::MatrixXd> acts;
    acts.reserve(layers_.size() + 1);
    acts.push_back(inputs);
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        Eigen::MatrixXd z = layers_[l].weight * acts.back();
        z.colwise() += layers_[l].bias;
        if (l + 1 < layers_.size()) z = z.cwiseMax(0.0);
        acts.push_back(std::move(z));
    }

    const Eigen::MatrixXd& q = acts.back();
    Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(q.rows(), batch);
    double sum_sq = 0.0;
    for (Eigen::Index i = 0; i < batch; ++i) {
        const auto a = static_cast<Eigen::Index>(actions[static_cast<std::size_t>(i)]);
        if (a >= q.rows()) throw ConfigError("action id out of range");
        const double err = q(a, i) - targets[static_cast<std::size_t>(i)];
        sum_sq += err * err;
        delta(a, i) = 2.0 * err / static_cast<double>(batch);
    }
    if (loss) *loss = sum_sq / static_cast<double>(batch);

    Gradients grad(layers_.size());
    for (std::size_t l = layers_.size(); l-- > 0;) {
        grad[l].weight = delta * acts[l].transpose();
        grad[l].bias = delta.rowwise().sum();
        if (l == 0) break;
        Eigen::MatrixXd back = layers_[l].weight.transpose() * delta;
        // Rectifier derivative: pass through where the activation was positive.
        delta = back.cwiseProduct((acts[l].array() > 0.0).cast<double>().matrix());
    }
    return grad;
}

void Mlp::apply_gradient(const Gradients& grad, double lr) {
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        layers_[l].weight -= lr * grad[l].weight;
        layers_[l].bias -= lr * grad[l].bias;
    }
}

bool Mlp::all_finite() const {
    for (const auto& l : layers_)
        if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
    return true;
}

std::vector<double> Mlp::flatten(const Gradients& grad) {
    std::vector<double> out;
    for (const auto& l : grad) {
        for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
            for (Eigen::Index c = 0; c < l.weight.cols(); ++c) out.push_back(l.weight(r, c));
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) out.push_back(l.bias(r));
    }
    return out;
}

std::vector<double> Mlp::flat_parameters() const { return flatten(layers_); }

void Mlp::set_flat_parameters(std::span<const double> values) {
    if (values.size() != parameter_count()) throw ConfigError("parameter vector has the wrong length");
    std::size_t i = 0;
    for (auto& l : layers_) {
        for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
            for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = values[i++];
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = values[i++];
    }
}

}  // namespace qudqn
