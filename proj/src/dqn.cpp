#include "gridlab/dqn.hpp"

#include <algorithm>
#include <string>

#include "gridlab/errors.hpp"

namespace gridlab {

namespace {

std::vector<std::size_t> layer_sizes(std::size_t input, const std::vector<std::size_t>& hidden, std::size_t output) {
  std::vector<std::size_t> sizes{input};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(output);
  return sizes;
}

}  // namespace

DqnLearner::DqnLearner(std::size_t input_size, std::size_t action_count, DqnParams params, std::uint64_t seed)
    : params_(std::move(params)),
      online_(layer_sizes(input_size, params_.hidden, action_count), splitmix64(seed)),
      target_(online_),
      buffer_(params_.buffer_capacity),
      rng_(seed) {
  if (params_.batch_size == 0) throw ConfigError("DQN batch_size must be >= 1");
  if (!(params_.lr > 0.0)) throw ConfigError("DQN lr must be > 0");
  if (!(params_.gamma >= 0.0 && params_.gamma < 1.0)) throw ConfigError("DQN gamma must lie in [0, 1)");
  if (params_.sync_interval == 0) throw ConfigError("DQN sync_interval must be >= 1");
}

TdBatch DqnLearner::sample_batch() {
  const std::size_t in = online_.input_size();
  const std::size_t out = online_.output_size();
  TdBatch batch;
  batch.size = params_.batch_size;
  batch.inputs.reserve(batch.size * in);
  std::vector<double> next_inputs;
  next_inputs.reserve(batch.size * in);
  std::vector<const Experience*> picked;
  for (std::size_t i = 0; i < batch.size; ++i) {
    const Experience& e = buffer_[rng_.uniform_index(buffer_.size())];
    picked.push_back(&e);
    batch.inputs.insert(batch.inputs.end(), e.state.begin(), e.state.end());
    next_inputs.insert(next_inputs.end(), e.next_state.begin(), e.next_state.end());
    batch.actions.push_back(e.action);
  }
  const auto next_q = batch.size >= params_.parallel_threshold
                          ? kernels::forward_batch_parallel(target_, next_inputs, batch.size)
                          : kernels::forward_batch_serial(target_, next_inputs, batch.size);
  for (std::size_t i = 0; i < batch.size; ++i) {
    double y = picked[i]->reward;
    if (!picked[i]->done) {
      const auto row = next_q.begin() + static_cast<std::ptrdiff_t>(i * out);
      y += params_.gamma * *std::max_element(row, row + static_cast<std::ptrdiff_t>(out));
    }
    batch.targets.push_back(y);
  }
  return batch;
}

std::optional<double> DqnLearner::train_step() {
  if (buffer_.size() < params_.batch_size) return std::nullopt;
  const TdBatch batch = sample_batch();
  Gradients grads(online_);
  const double loss = batch.size >= params_.parallel_threshold
                          ? kernels::td_loss_and_gradients_parallel(online_, batch, grads)
                          : kernels::td_loss_and_gradients_serial(online_, batch, grads);
  kernels::sgd_step(online_, grads, params_.lr);
  ++train_counter_;
  if (train_counter_ % params_.sync_interval == 0) target_ = online_;
  return loss;
}

DqnModel::DqnModel(std::size_t input_size, std::size_t action_count, DqnParams params, EpsilonSchedule schedule,
                   std::size_t total_epochs, std::uint64_t seed)
    : action_count_(action_count),
      learner_(input_size, action_count, std::move(params), splitmix64(seed ^ 0x5DEECE66DULL)),
      schedule_(schedule),
      total_epochs_(total_epochs),
      epsilon_(schedule.at(0, total_epochs)),
      rng_(seed) {
  validate(schedule_);
}

std::size_t DqnModel::take_action(const Observation& obs) {
  const auto q = kernels::forward(learner_.online(), obs.features());
  return epsilon_greedy(q, epsilon_, rng_);
}

void DqnModel::observe_transition(const Transition& t) {
  learner_.remember({t.state.features(), t.action, t.reward, t.next_state.features(), t.done});
}

void DqnModel::reset_episode() {
  if (started_) ++epoch_;
  started_ = true;
  epsilon_ = schedule_.at(epoch_, total_epochs_);
}

void DqnModel::load(const std::filesystem::path& path) {
  Mlp net = Mlp::load(path);
  if (net.layer_sizes() != learner_.online().layer_sizes()) {
    throw IoError("'" + path.string() + "' holds a network of a different shape");
  }
  learner_.load_weights(std::move(net));
}

}  // namespace gridlab
