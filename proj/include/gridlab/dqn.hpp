#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "gridlab/errors.hpp"
#include "gridlab/learning.hpp"
#include "gridlab/mlp.hpp"

namespace gridlab {

/// Fixed-capacity FIFO; pushing into a full buffer evicts the oldest item.
/// Index 0 is the oldest retained item.
template <typename T>
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ConfigError("replay buffer capacity must be >= 1");
    items_.reserve(capacity);
  }

  void push(T item) {
    if (items_.size() < capacity_) {
      items_.push_back(std::move(item));
    } else {
      items_[head_] = std::move(item);
      head_ = (head_ + 1) % capacity_;
    }
  }

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return items_.empty(); }

  const T& operator[](std::size_t i) const { return items_[(head_ + i) % items_.size()]; }

 private:
  std::size_t capacity_;
  std::vector<T> items_;
  std::size_t head_ = 0;
};

/// Transition in feature form, as stored for replay.
struct Experience {
  std::vector<double> state;
  std::size_t action = 0;
  double reward = 0.0;
  std::vector<double> next_state;
  bool done = false;
};

struct DqnParams {
  std::vector<std::size_t> hidden{64, 64};
  std::size_t batch_size = 32;
  std::size_t buffer_capacity = 10000;
  double lr = 0.01;
  double gamma = 0.9;
  std::size_t sync_interval = 100;
  /// Batches at or above this size use the OpenMP kernels. Results are
  /// identical either way.
  std::size_t parallel_threshold = 64;
};

/// Online network, lagged target network and replay memory, trained by
/// plain gradient descent on the squared TD error.
class DqnLearner {
 public:
  DqnLearner(std::size_t input_size, std::size_t action_count, DqnParams params, std::uint64_t seed);

  void remember(Experience e) { buffer_.push(std::move(e)); }
  /// nullopt while the buffer holds fewer than batch_size experiences.
  /// Otherwise the pre-update batch loss.
  std::optional<double> train_step();

  /// Samples batch_size indices with replacement and builds TD targets from
  /// the target network.
  TdBatch sample_batch();

  const Mlp& online() const { return online_; }
  Mlp& online() { return online_; }
  /// Replaces both networks.
  void load_weights(Mlp net) {
    online_ = net;
    target_ = std::move(net);
  }
  const Mlp& target() const { return target_; }
  const ReplayBuffer<Experience>& buffer() const { return buffer_; }
  std::size_t train_counter() const { return train_counter_; }
  const DqnParams& params() const { return params_; }

 private:
  DqnParams params_;
  Mlp online_;
  Mlp target_;
  ReplayBuffer<Experience> buffer_;
  std::size_t train_counter_ = 0;
  Rng rng_;
};

class DqnModel : public Model {
 public:
  DqnModel(std::size_t input_size, std::size_t action_count, DqnParams params, EpsilonSchedule schedule,
           std::size_t total_epochs, std::uint64_t seed);

  std::size_t take_action(const Observation& obs) override;
  void observe_transition(const Transition& t) override;
  std::optional<double> train_step() override { return learner_.train_step(); }
  void reset_episode() override;
  void save(const std::filesystem::path& path) const override { learner_.online().save(path); }
  void load(const std::filesystem::path& path) override;
  std::size_t action_count() const override { return action_count_; }
  double epsilon() const override { return epsilon_; }

  const DqnLearner& learner() const { return learner_; }

 private:
  std::size_t action_count_;
  DqnLearner learner_;
  EpsilonSchedule schedule_;
  std::size_t total_epochs_;
  std::size_t epoch_ = 0;
  bool started_ = false;
  double epsilon_;
  Rng rng_;
};

}  // namespace gridlab
