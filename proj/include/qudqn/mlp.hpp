#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qudqn {

// Feed-forward Q-function approximator: affine layers with rectifiers between
// them and an identity output layer. Weights are stored out x in.
class Mlp {
public:
    struct Layer {
        Eigen::MatrixXd weight;
        Eigen::VectorXd bias;

        bool operator==(const Layer& o) const { return weight == o.weight && bias == o.bias; }
    };

    // Per-layer gradients, same shapes as the layers.
    using Gradients = std::vector<Layer>;

    Mlp() = default;
    // Zero-initialized network with the given layer sizes (at least two entries).
    explicit Mlp(std::vector<std::size_t> dims);

    // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
    static Mlp init(std::vector<std::size_t> dims, std::uint64_t seed);

    const std::vector<std::size_t>& dims() const { return dims_; }
    std::size_t input_size() const { return dims_.front(); }
    std::size_t output_size() const { return dims_.back(); }
    std::size_t parameter_count() const;

    std::vector<Layer>& layers() { return layers_; }
    const std::vector<Layer>& layers() const { return layers_; }

    Eigen::VectorXd forward(std::span<const double> x) const;
    // Columns of `inputs` are samples; returns output_size x batch.
    Eigen::MatrixXd forward(const Eigen::MatrixXd& inputs) const;

    // Exact gradient of mean_i (Q(x_i)[a_i] - y_i)^2 over the batch columns.
    // Also returns the loss through `loss` when non-null.
    Gradients loss_gradient(const Eigen::MatrixXd& inputs, std::span<const std::size_t> actions,
                            std::span<const double> targets, double* loss = nullptr) const;

    // theta <- theta - lr * grad
    void apply_gradient(const Gradients& grad, double lr);

    bool all_finite() const;

    // Flat view used by finite-difference checks: layer by layer, weights
    // (row-major) then biases.
    std::vector<double> flat_parameters() const;
    void set_flat_parameters(std::span<const double> values);
    static std::vector<double> flatten(const Gradients& grad);

    bool operator==(const Mlp& o) const { return dims_ == o.dims_ && layers_ == o.layers_; }

private:
    std::vector<std::size_t> dims_;
    std::vector<Layer> layers_;
};

}  // namespace qudqn
