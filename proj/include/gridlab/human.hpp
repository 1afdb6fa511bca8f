#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>

#include "gridlab/model.hpp"

namespace gridlab {

/// Thread-safe mailbox of pending human actions, one slot per agent. Any
/// thread may submit; the episode loop consumes. A second submission before
/// consumption overwrites the first (last writer wins) and is counted.
class HumanActionSource {
 public:
  using Clock = std::chrono::steady_clock;
  /// Called on the episode thread when an agent starts waiting for input.
  using AwaitHook = std::function<void(std::int32_t agent_id, std::chrono::milliseconds timeout)>;
  /// Called on the episode thread once the agent's action is decided.
  using ResolveHook = std::function<void(std::int32_t agent_id, std::size_t action, bool timed_out)>;

  explicit HumanActionSource(std::chrono::milliseconds timeout = std::chrono::milliseconds(10000))
      : timeout_(timeout) {}

  void register_agent(std::int32_t agent_id, std::size_t default_action);
  bool registered(std::int32_t agent_id) const;

  /// Stores the action, replacing any pending one. Returns false for an
  /// unregistered agent.
  bool submit(std::int32_t agent_id, std::size_t action);
  /// Like submit, but only while the agent is waiting for input.
  bool submit_if_awaiting(std::int32_t agent_id, std::size_t action);
  bool awaiting(std::int32_t agent_id) const;

  /// Pending action if present before `deadline`, else the agent's default.
  /// Always leaves the slot empty.
  std::size_t next_action(std::int32_t agent_id, Clock::time_point deadline);

  /// Marks the agent as waiting, runs the await hook, blocks for up to the
  /// timeout and runs the resolve hook.
  std::size_t await_action(std::int32_t agent_id);

  void set_await_hook(AwaitHook hook);
  void set_resolve_hook(ResolveHook hook);

  std::chrono::milliseconds timeout() const { return timeout_; }
  std::size_t overwrites() const;

 private:
  struct Slot {
    std::size_t default_action = 0;
    std::optional<std::size_t> pending;
    bool awaiting = false;
  };

  Slot& slot(std::int32_t agent_id);

  std::chrono::milliseconds timeout_;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::map<std::int32_t, Slot> slots_;
  std::size_t overwrites_ = 0;
  AwaitHook await_hook_;
  ResolveHook resolve_hook_;
};

/// Model whose actions come from a HumanActionSource.
class HumanModel : public Model {
 public:
  HumanModel(HumanActionSource& source, std::int32_t agent_id, std::size_t action_count)
      : source_(source), agent_id_(agent_id), action_count_(action_count) {}

  std::size_t take_action(const Observation&) override { return source_.await_action(agent_id_); }
  std::size_t action_count() const override { return action_count_; }
  void save(const std::filesystem::path&) const override {}
  void load(const std::filesystem::path&) override {}

 private:
  HumanActionSource& source_;
  std::int32_t agent_id_;
  std::size_t action_count_;
};

}  // namespace gridlab
