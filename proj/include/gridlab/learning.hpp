#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "gridlab/model.hpp"
#include "gridlab/rng.hpp"

namespace gridlab {

/// Linear from `start` to `end` over the first decay_fraction of the epochs,
/// then flat at `end`.
struct EpsilonSchedule {
  double start = 1.0;
  double end = 0.1;
  double decay_fraction = 0.75;

  double at(std::size_t epoch, std::size_t total_epochs) const;
};

void validate(const EpsilonSchedule& s);

/// Argmax with lowest-index tie-breaking.
std::size_t argmax(std::span<const double> values);

/// With probability epsilon a uniform index, else argmax. Draws one
/// uniform01, plus one uniform_index when exploring. epsilon == 0 draws
/// nothing.
std::size_t epsilon_greedy(std::span<const double> q_values, double epsilon, Rng& rng);

/// 64-bit FNV-1a digest of an observation's canonical bytes. Collisions
/// between distinct observations are possible but not handled.
std::uint64_t state_key(const Observation& obs);

class QTable {
 public:
  QTable(std::size_t action_count, double alpha, double gamma, double default_q = 0.0);

  std::size_t action_count() const { return action_count_; }
  double alpha() const { return alpha_; }
  double gamma() const { return gamma_; }
  double default_q() const { return default_q_; }
  std::size_t size() const { return table_.size(); }

  /// Stored row, or the default row for unseen keys.
  std::vector<double> values(std::uint64_t key) const;
  std::vector<double>& row(std::uint64_t key);
  const std::unordered_map<std::uint64_t, std::vector<double>>& entries() const { return table_; }

  void save(const std::filesystem::path& path) const;
  void load(const std::filesystem::path& path);

 private:
  std::size_t action_count_;
  double alpha_;
  double gamma_;
  double default_q_;
  std::unordered_map<std::uint64_t, std::vector<double>> table_;
};

/// One-step Q-learning backup on t. Returns the new value of
/// (key(t.state), t.action).
double q_update(QTable& table, const Transition& t);

/// Uniform random policy.
class RandomModel : public Model {
 public:
  RandomModel(std::size_t action_count, std::uint64_t seed) : action_count_(action_count), rng_(seed) {}

  std::size_t take_action(const Observation&) override { return rng_.uniform_index(action_count_); }
  std::size_t action_count() const override { return action_count_; }
  void save(const std::filesystem::path&) const override {}
  void load(const std::filesystem::path&) override {}

 private:
  std::size_t action_count_;
  Rng rng_;
};

/// Replays a fixed action sequence, then `fallback` once it runs out.
class ScriptedModel : public Model {
 public:
  ScriptedModel(std::vector<std::size_t> actions, std::size_t action_count, std::size_t fallback)
      : actions_(std::move(actions)), action_count_(action_count), fallback_(fallback) {}

  std::size_t take_action(const Observation&) override {
    return next_ < actions_.size() ? actions_[next_++] : fallback_;
  }
  std::size_t action_count() const override { return action_count_; }
  void save(const std::filesystem::path&) const override {}
  void load(const std::filesystem::path&) override {}

 private:
  std::vector<std::size_t> actions_;
  std::size_t next_ = 0;
  std::size_t action_count_;
  std::size_t fallback_;
};

struct TabularQParams {
  double alpha = 0.1;
  double gamma = 0.9;
  double default_q = 0.0;
};

/// Epsilon-greedy tabular Q-learner; updates online in observe_transition.
class TabularQModel : public Model {
 public:
  TabularQModel(std::size_t action_count, TabularQParams params, EpsilonSchedule schedule, std::size_t total_epochs,
                std::uint64_t seed);

  std::size_t take_action(const Observation& obs) override;
  void observe_transition(const Transition& t) override;
  void reset_episode() override;
  void save(const std::filesystem::path& path) const override { table_.save(path); }
  void load(const std::filesystem::path& path) override { table_.load(path); }
  std::size_t action_count() const override { return table_.action_count(); }
  double epsilon() const override { return epsilon_; }

  const QTable& table() const { return table_; }
  QTable& table() { return table_; }
  /// Overrides the schedule until the next reset_episode.
  void set_epsilon(double eps) { epsilon_ = eps; }

 private:
  QTable table_;
  EpsilonSchedule schedule_;
  std::size_t total_epochs_;
  std::size_t epoch_ = 0;
  bool started_ = false;
  double epsilon_;
  Rng rng_;
};

}  // namespace gridlab
