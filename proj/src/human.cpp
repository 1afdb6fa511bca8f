#include "gridlab/human.hpp"

#include <iostream>
#include <string>

#include "gridlab/errors.hpp"

namespace gridlab {

void HumanActionSource::register_agent(std::int32_t agent_id, std::size_t default_action) {
  std::lock_guard lock(mutex_);
  slots_[agent_id] = Slot{default_action, std::nullopt, false};
}

bool HumanActionSource::registered(std::int32_t agent_id) const {
  std::lock_guard lock(mutex_);
  return slots_.count(agent_id) != 0;
}

HumanActionSource::Slot& HumanActionSource::slot(std::int32_t agent_id) {
  const auto it = slots_.find(agent_id);
  if (it == slots_.end()) throw ContractError("agent " + std::to_string(agent_id) + " is not human-controlled");
  return it->second;
}

bool HumanActionSource::submit(std::int32_t agent_id, std::size_t action) {
  {
    std::lock_guard lock(mutex_);
    const auto it = slots_.find(agent_id);
    if (it == slots_.end()) return false;
    if (it->second.pending) {
      ++overwrites_;
      std::clog << "human action for agent " << agent_id << " overwritten: " << *it->second.pending << " -> "
                << action << '\n';
    }
    it->second.pending = action;
  }
  cv_.notify_all();
  return true;
}

bool HumanActionSource::submit_if_awaiting(std::int32_t agent_id, std::size_t action) {
  {
    std::lock_guard lock(mutex_);
    const auto it = slots_.find(agent_id);
    if (it == slots_.end() || !it->second.awaiting) return false;
  }
  return submit(agent_id, action);
}

bool HumanActionSource::awaiting(std::int32_t agent_id) const {
  std::lock_guard lock(mutex_);
  const auto it = slots_.find(agent_id);
  return it != slots_.end() && it->second.awaiting;
}

std::size_t HumanActionSource::next_action(std::int32_t agent_id, Clock::time_point deadline) {
  std::unique_lock lock(mutex_);
  Slot& s = slot(agent_id);
  cv_.wait_until(lock, deadline, [&s] { return s.pending.has_value(); });
  const std::size_t action = s.pending.value_or(s.default_action);
  s.pending.reset();
  s.awaiting = false;
  return action;
}

std::size_t HumanActionSource::await_action(std::int32_t agent_id) {
  AwaitHook await_hook;
  ResolveHook resolve_hook;
  {
    std::lock_guard lock(mutex_);
    slot(agent_id).awaiting = true;
    await_hook = await_hook_;
    resolve_hook = resolve_hook_;
  }
  const auto deadline = Clock::now() + timeout_;
  if (await_hook) await_hook(agent_id, timeout_);
  bool timed_out;
  std::size_t action;
  {
    std::unique_lock lock(mutex_);
    Slot& s = slot(agent_id);
    cv_.wait_until(lock, deadline, [&s] { return s.pending.has_value(); });
    timed_out = !s.pending.has_value();
    action = s.pending.value_or(s.default_action);
    s.pending.reset();
    s.awaiting = false;
  }
  if (resolve_hook) resolve_hook(agent_id, action, timed_out);
  return action;
}

void HumanActionSource::set_await_hook(AwaitHook hook) {
  std::lock_guard lock(mutex_);
  await_hook_ = std::move(hook);
}

void HumanActionSource::set_resolve_hook(ResolveHook hook) {
  std::lock_guard lock(mutex_);
  resolve_hook_ = std::move(hook);
}

std::size_t HumanActionSource::overwrites() const {
  std::lock_guard lock(mutex_);
  return overwrites_;
}

}  // namespace gridlab
