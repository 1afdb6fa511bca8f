#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace gridlab {

/// Fully connected layer; weights are out x in, row-major.
struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Multi-layer perceptron: affine + ReLU on hidden layers, affine output.
class Mlp {
 public:
  Mlp() = default;
  /// Zero-initialized network with the given layer widths (input first).
  explicit Mlp(std::vector<std::size_t> layer_sizes);
  /// He-uniform weights drawn from xoshiro256** seeded with `seed`; zero bias.
  Mlp(std::vector<std::size_t> layer_sizes, std::uint64_t seed);

  std::size_t input_size() const { return layers_.front().in; }
  std::size_t output_size() const { return layers_.back().out; }
  std::size_t parameter_count() const;
  const std::vector<std::size_t>& layer_sizes() const { return sizes_; }

  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  /// Flat parameter view in layer order, weights before bias.
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> params);

  void save(const std::filesystem::path& path) const;
  static Mlp load(const std::filesystem::path& path);

  friend bool operator==(const Mlp&, const Mlp&) = default;

 private:
  std::vector<std::size_t> sizes_;
  std::vector<DenseLayer> layers_;
};

/// Gradient of a scalar with respect to every parameter, in
/// Mlp::parameters() order.
struct Gradients {
  std::vector<double> values;

  Gradients() = default;
  explicit Gradients(const Mlp& net) : values(net.parameter_count(), 0.0) {}
  friend bool operator==(const Gradients&, const Gradients&) = default;
};

/// A batch of TD regression samples: row-major inputs (size x input_size),
/// the action whose Q-value is regressed, and its target.
struct TdBatch {
  std::size_t size = 0;
  std::vector<double> inputs;
  std::vector<std::size_t> actions;
  std::vector<double> targets;
};

/// Dense kernels. Each `*_serial` routine is the reference; the
/// `*_parallel` twin uses OpenMP and returns bit-identical results because
/// every floating-point sum runs in the same order.
namespace kernels {

std::vector<double> forward(const Mlp& net, std::span<const double> input);

/// Row-major (batch x output_size) Q-values.
std::vector<double> forward_batch_serial(const Mlp& net, std::span<const double> inputs, std::size_t batch);
std::vector<double> forward_batch_parallel(const Mlp& net, std::span<const double> inputs, std::size_t batch);

/// Loss = mean over samples of (Q(s)[a] - y)^2. Writes dLoss/dparams into
/// `grads` and returns the loss.
double td_loss_and_gradients_serial(const Mlp& net, const TdBatch& batch, Gradients& grads);
double td_loss_and_gradients_parallel(const Mlp& net, const TdBatch& batch, Gradients& grads);

/// Loss only, for finite-difference checks.
double td_loss(const Mlp& net, const TdBatch& batch);

/// params -= lr * grads
void sgd_step(Mlp& net, const Gradients& grads, double lr);

}  // namespace kernels

}  // namespace gridlab
