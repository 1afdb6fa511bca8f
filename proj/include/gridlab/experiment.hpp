#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "gridlab/dqn.hpp"
#include "gridlab/environments.hpp"
#include "gridlab/human.hpp"
#include "gridlab/learning.hpp"
#include "gridlab/replay.hpp"

namespace gridlab {

enum class EnvKind : std::uint8_t { TreasureHunt, Cleanup };
enum class ModelKind : std::uint8_t { Random, TabularQ, Dqn };

std::string_view to_string(EnvKind e);
std::string_view to_string(ModelKind m);
EnvKind parse_env_kind(std::string_view s);
ModelKind parse_model_kind(std::string_view s);

struct ExperimentConfig {
  EnvKind env = EnvKind::TreasureHunt;
  TreasureHuntConfig treasure_hunt;
  CleanupConfig cleanup;
  std::uint64_t seed = 0;
  std::size_t epochs = 1;
  std::size_t turns_per_epoch = 50;
  /// Model for every agent slot without an entry in agent_models.
  ModelKind model = ModelKind::Random;
  /// Optional per-slot models, indexed by agent id.
  std::vector<ModelKind> agent_models;
  /// Slots driven by a HumanActionSource instead of their model.
  std::vector<std::int32_t> human_agents;
  std::int64_t human_timeout_ms = 10000;
  TabularQParams tabular_q;
  DqnParams dqn;
  EpsilonSchedule epsilon;
  std::optional<std::filesystem::path> record_path;
  std::optional<std::filesystem::path> metrics_path;
  /// Measure wall_ms. Off by default so metrics files are reproducible.
  bool timing = false;

  std::size_t n_agents() const { return env == EnvKind::TreasureHunt ? treasure_hunt.n_agents : cleanup.n_agents; }
  void set_n_agents(std::size_t n);
  ModelKind model_for(std::size_t agent_id) const {
    return agent_id < agent_models.size() ? agent_models[agent_id] : model;
  }
  bool is_human(std::int32_t agent_id) const;
};

/// Checks ranges, paths and the environment configuration (by building the
/// epoch-0 environment). Throws ConfigError.
void validate(const ExperimentConfig& config);

/// Config document. Unknown keys are rejected at every level.
nlohmann::ordered_json config_to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::ordered_json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Builds the environment for one epoch from its sub-seed.
Environment make_environment(const ExperimentConfig& config, std::uint64_t seed);

struct EpochMetrics {
  std::size_t epoch = 0;
  std::vector<double> per_agent_reward;
  std::optional<double> mean_loss;
  double epsilon = 0.0;
  std::int64_t wall_ms = 0;

  friend bool operator==(const EpochMetrics&, const EpochMetrics&) = default;
};

/// Header `epoch,agent_id,reward,mean_loss,epsilon,wall_ms`, one row per
/// (epoch, agent), LF endings, shortest round-trip decimals, blank loss when
/// absent.
void write_metrics(const std::vector<EpochMetrics>& metrics, const std::filesystem::path& path);
std::string format_metrics(const std::vector<EpochMetrics>& metrics);

/// Shortest decimal that reads back to the same double.
std::string format_real(double v);

struct TurnOutcome {
  /// Agent ids in the order they acted.
  std::vector<std::int32_t> order;
  /// (agent id, transition) in acting order.
  std::vector<std::pair<std::int32_t, Transition>> transitions;
  /// Entity changes caused by actions, then by dynamics.
  std::vector<WorldChange> changes;
};

/// Shuffles agent order with the world's rng (Fisher-Yates, high index
/// first), runs each agent's turn, steps the entities and advances the turn
/// counter. On the final turn every transition has done = true and every
/// agent is marked done.
TurnOutcome run_turn(Environment& env, std::size_t turn_index, std::size_t turns_per_epoch);

/// Instantiates the model for one agent slot.
std::unique_ptr<Model> make_model(const ExperimentConfig& config, ModelKind kind, std::int32_t agent_id,
                                  std::size_t input_size, std::size_t action_count);

/// Observation length fed to function approximators for this config.
std::size_t observation_size(const Environment& env);

struct RunHooks {
  /// Replaces the configured model of a slot. Not owned.
  std::map<std::int32_t, Model*> model_overrides;
  /// Required when the config names human agents.
  HumanActionSource* human_source = nullptr;
  std::function<void(const ReplayHeader&)> on_header;
  std::function<void(const Environment&, const FrameRecord&, const TurnOutcome&)> on_frame;
  std::function<void(const EpochMetrics&)> on_epoch_end;
  /// Called before each turn with (epoch, turn).
  std::function<void(std::size_t, std::size_t)> on_turn_start;
};

/// Episodic loop: per epoch, rebuild the world from epoch_seed(seed, epoch),
/// reset the models, run turns_per_epoch turns, train, record. Models
/// persist across epochs.
std::vector<EpochMetrics> run_experiment(const ExperimentConfig& config, const RunHooks& hooks = {});

}  // namespace gridlab
