#include "gridlab/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gridlab/errors.hpp"
#include "gridlab/model_io.hpp"
#include "gridlab/rng.hpp"

namespace gridlab {

Mlp::Mlp(std::vector<std::size_t> layer_sizes) : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2) throw ConfigError("an MLP needs at least an input and an output width");
  for (std::size_t s : sizes_) {
    if (s == 0) throw ConfigError("MLP layer widths must be positive");
  }
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    DenseLayer d;
    d.in = sizes_[l];
    d.out = sizes_[l + 1];
    d.weights.assign(d.in * d.out, 0.0);
    d.bias.assign(d.out, 0.0);
    layers_.push_back(std::move(d));
  }
}

Mlp::Mlp(std::vector<std::size_t> layer_sizes, std::uint64_t seed) : Mlp(std::move(layer_sizes)) {
  Rng rng(seed);
  for (auto& layer : layers_) {
    const double limit = std::sqrt(6.0 / static_cast<double>(layer.in));
    for (double& w : layer.weights) w = (2.0 * rng.uniform01() - 1.0) * limit;
  }
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
  return n;
}

std::vector<double> Mlp::parameters() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (const auto& l : layers_) {
    out.insert(out.end(), l.weights.begin(), l.weights.end());
    out.insert(out.end(), l.bias.begin(), l.bias.end());
  }
  return out;
}

void Mlp::set_parameters(std::span<const double> params) {
  if (params.size() != parameter_count()) throw ContractError("parameter vector length mismatch");
  std::size_t pos = 0;
  for (auto& l : layers_) {
    std::copy_n(params.begin() + static_cast<std::ptrdiff_t>(pos), l.weights.size(), l.weights.begin());
    pos += l.weights.size();
    std::copy_n(params.begin() + static_cast<std::ptrdiff_t>(pos), l.bias.size(), l.bias.begin());
    pos += l.bias.size();
  }
}

void Mlp::save(const std::filesystem::path& path) const {
  std::vector<MatrixRecord> records;
  for (const auto& l : layers_) {
    MatrixRecord m;
    m.rows = static_cast<std::uint32_t>(l.out);
    m.cols = static_cast<std::uint32_t>(l.in + 1);
    m.data.reserve(l.out * (l.in + 1));
    for (std::size_t j = 0; j < l.out; ++j) {
      m.data.insert(m.data.end(), l.weights.begin() + static_cast<std::ptrdiff_t>(j * l.in),
                    l.weights.begin() + static_cast<std::ptrdiff_t>((j + 1) * l.in));
      m.data.push_back(l.bias[j]);
    }
    records.push_back(std::move(m));
  }
  write_matrices(path, records);
}

Mlp Mlp::load(const std::filesystem::path& path) {
  const auto records = read_matrices(path);
  if (records.empty()) throw IoError("'" + path.string() + "' holds no layers");
  std::vector<std::size_t> sizes{records.front().cols - 1u};
  for (const auto& m : records) {
    if (m.cols == 0 || m.cols - 1 != sizes.back()) throw IoError("'" + path.string() + "' has inconsistent layer shapes");
    sizes.push_back(m.rows);
  }
  Mlp net(sizes);
  for (std::size_t l = 0; l < records.size(); ++l) {
    auto& layer = net.layers_[l];
    const auto& m = records[l];
    for (std::size_t j = 0; j < layer.out; ++j) {
      for (std::size_t k = 0; k < layer.in; ++k) layer.weights[j * layer.in + k] = m.data[j * m.cols + k];
      layer.bias[j] = m.data[j * m.cols + layer.in];
    }
  }
  return net;
}

namespace kernels {

namespace {

void check_input(const Mlp& net, std::size_t n) {
  if (n != net.input_size()) {
    throw ContractError("MLP input has length " + std::to_string(n) + ", expected " +
                        std::to_string(net.input_size()));
  }
}

/// Pre-activations of every layer for one sample; activations are derived
/// on the fly.
std::vector<std::vector<double>> forward_trace(const Mlp& net, std::span<const double> x) {
  const auto& layers = net.layers();
  std::vector<std::vector<double>> z(layers.size());
  std::vector<double> act(x.begin(), x.end());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& d = layers[l];
    z[l].resize(d.out);
    for (std::size_t j = 0; j < d.out; ++j) {
      double s = d.bias[j];
      const double* w = d.weights.data() + j * d.in;
      for (std::size_t k = 0; k < d.in; ++k) s += w[k] * act[k];
      z[l][j] = s;
    }
    if (l + 1 < layers.size()) {
      act.resize(d.out);
      for (std::size_t j = 0; j < d.out; ++j) act[j] = std::max(0.0, z[l][j]);
    }
  }
  return z;
}

/// Adds one sample's gradient contribution into `grad` (parameter order)
/// and returns the sample's error Q(s)[a] - y.
double backward_sample(const Mlp& net, std::span<const double> x, std::size_t action, double target, double scale,
                       std::span<double> grad) {
  const auto& layers = net.layers();
  const auto z = forward_trace(net, x);
  const auto& q = z.back();
  const double err = q[action] - target;

  std::vector<std::size_t> offset(layers.size());
  std::size_t pos = 0;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    offset[l] = pos;
    pos += layers[l].weights.size() + layers[l].bias.size();
  }

  std::vector<double> delta(q.size(), 0.0);
  delta[action] = scale * err;
  for (std::size_t l = layers.size(); l-- > 0;) {
    const auto& d = layers[l];
    double* gw = grad.data() + offset[l];
    double* gb = gw + d.weights.size();
    // Input activation of layer l.
    std::vector<double> a_in(d.in);
    if (l == 0) {
      std::copy(x.begin(), x.end(), a_in.begin());
    } else {
      for (std::size_t k = 0; k < d.in; ++k) a_in[k] = std::max(0.0, z[l - 1][k]);
    }
    for (std::size_t j = 0; j < d.out; ++j) {
      if (delta[j] == 0.0) continue;
      for (std::size_t k = 0; k < d.in; ++k) gw[j * d.in + k] += delta[j] * a_in[k];
      gb[j] += delta[j];
    }
    if (l == 0) break;
    std::vector<double> prev(d.in, 0.0);
    for (std::size_t k = 0; k < d.in; ++k) {
      if (z[l - 1][k] <= 0.0) continue;
      double s = 0.0;
      for (std::size_t j = 0; j < d.out; ++j) s += d.weights[j * d.in + k] * delta[j];
      prev[k] = s;
    }
    delta = std::move(prev);
  }
  return err;
}

void check_batch(const Mlp& net, const TdBatch& batch) {
  if (batch.size == 0) throw ContractError("empty TD batch");
  if (batch.inputs.size() != batch.size * net.input_size() || batch.actions.size() != batch.size ||
      batch.targets.size() != batch.size) {
    throw ContractError("TD batch arrays do not match its size");
  }
  for (std::size_t a : batch.actions) {
    if (a >= net.output_size()) throw ContractError("TD batch action " + std::to_string(a) + " outside the output");
  }
}

}  // namespace

std::vector<double> forward(const Mlp& net, std::span<const double> input) {
  check_input(net, input.size());
  return forward_trace(net, input).back();
}

std::vector<double> forward_batch_serial(const Mlp& net, std::span<const double> inputs, std::size_t batch) {
  if (inputs.size() != batch * net.input_size()) throw ContractError("batch input length mismatch");
  const std::size_t in = net.input_size();
  const std::size_t out = net.output_size();
  std::vector<double> result(batch * out);
  for (std::size_t i = 0; i < batch; ++i) {
    const auto q = forward_trace(net, inputs.subspan(i * in, in)).back();
    std::copy(q.begin(), q.end(), result.begin() + static_cast<std::ptrdiff_t>(i * out));
  }
  return result;
}

std::vector<double> forward_batch_parallel(const Mlp& net, std::span<const double> inputs, std::size_t batch) {
  if (inputs.size() != batch * net.input_size()) throw ContractError("batch input length mismatch");
  const std::size_t in = net.input_size();
  const std::size_t out = net.output_size();
  std::vector<double> result(batch * out);
  const auto n = static_cast<std::ptrdiff_t>(batch);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto row = static_cast<std::size_t>(i);
    const auto q = forward_trace(net, inputs.subspan(row * in, in)).back();
    std::copy(q.begin(), q.end(), result.begin() + static_cast<std::ptrdiff_t>(row * out));
  }
  return result;
}

double td_loss_and_gradients_serial(const Mlp& net, const TdBatch& batch, Gradients& grads) {
  check_batch(net, batch);
  const std::size_t in = net.input_size();
  const double scale = 2.0 / static_cast<double>(batch.size);
  grads.values.assign(net.parameter_count(), 0.0);
  std::vector<double> sample(net.parameter_count());
  double sum = 0.0;
  for (std::size_t i = 0; i < batch.size; ++i) {
    std::fill(sample.begin(), sample.end(), 0.0);
    const double err = backward_sample(net, std::span(batch.inputs).subspan(i * in, in), batch.actions[i],
                                       batch.targets[i], scale, sample);
    for (std::size_t p = 0; p < sample.size(); ++p) grads.values[p] += sample[p];
    sum += err * err;
  }
  return sum / static_cast<double>(batch.size);
}

double td_loss_and_gradients_parallel(const Mlp& net, const TdBatch& batch, Gradients& grads) {
  check_batch(net, batch);
  const std::size_t in = net.input_size();
  const std::size_t params = net.parameter_count();
  const double scale = 2.0 / static_cast<double>(batch.size);
  // Samples go through in chunks; each parameter still sums its samples in
  // batch order, so the result matches the serial kernel bit for bit.
  constexpr std::size_t kChunk = 16;
  std::vector<double> chunk(std::min(kChunk, batch.size) * params);
  std::vector<double> errors(batch.size);
  grads.values.assign(params, 0.0);
  const auto np = static_cast<std::ptrdiff_t>(params);
#pragma omp parallel
  for (std::size_t first = 0; first < batch.size; first += kChunk) {
    const std::size_t count = std::min(kChunk, batch.size - first);
    const auto nc = static_cast<std::ptrdiff_t>(count);
#pragma omp for schedule(static)
    for (std::ptrdiff_t c = 0; c < nc; ++c) {
      const auto k = static_cast<std::size_t>(c);
      const std::size_t s = first + k;
      const std::span<double> g = std::span(chunk).subspan(k * params, params);
      std::fill(g.begin(), g.end(), 0.0);
      errors[s] = backward_sample(net, std::span(batch.inputs).subspan(s * in, in), batch.actions[s],
                                  batch.targets[s], scale, g);
    }
#pragma omp for schedule(static)
    for (std::ptrdiff_t p = 0; p < np; ++p) {
      const auto q = static_cast<std::size_t>(p);
      double acc = grads.values[q];
      for (std::size_t k = 0; k < count; ++k) acc += chunk[k * params + q];
      grads.values[q] = acc;
    }
  }
  double sum = 0.0;
  for (double e : errors) sum += e * e;
  return sum / static_cast<double>(batch.size);
}

double td_loss(const Mlp& net, const TdBatch& batch) {
  check_batch(net, batch);
  const std::size_t in = net.input_size();
  double sum = 0.0;
  for (std::size_t i = 0; i < batch.size; ++i) {
    const auto q = forward(net, std::span(batch.inputs).subspan(i * in, in));
    const double err = q.at(batch.actions[i]) - batch.targets[i];
    sum += err * err;
  }
  return sum / static_cast<double>(batch.size);
}

void sgd_step(Mlp& net, const Gradients& grads, double lr) {
  if (grads.values.size() != net.parameter_count()) throw ContractError("gradient length mismatch");
  std::size_t pos = 0;
  for (auto& l : net.layers()) {
    for (double& w : l.weights) w -= lr * grads.values[pos++];
    for (double& b : l.bias) b -= lr * grads.values[pos++];
  }
}

}  // namespace kernels

}  // namespace gridlab
