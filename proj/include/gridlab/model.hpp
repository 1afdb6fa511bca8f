#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>

#include "gridlab/agent.hpp"

namespace gridlab {

/// Policy contract shared by every model the runner can drive. Implement
/// take_action at minimum; learning models also override observe_transition
/// and train_step.
class Model {
 public:
  virtual ~Model() = default;

  /// Index in [0, action_count()).
  virtual std::size_t take_action(const Observation& obs) = 0;
  virtual void observe_transition(const Transition&) {}
  /// Loss of the update, or nullopt when nothing was trained.
  virtual std::optional<double> train_step() { return std::nullopt; }
  /// Called before every epoch.
  virtual void reset_episode() {}
  virtual void save(const std::filesystem::path& path) const;
  virtual void load(const std::filesystem::path& path);

  virtual std::size_t action_count() const = 0;
  /// Exploration rate for the current epoch, for metrics.
  virtual double epsilon() const { return 0.0; }
};

}  // namespace gridlab
