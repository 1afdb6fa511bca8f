#include "gridlab/learning.hpp"

#include <algorithm>
#include <string>

#include "gridlab/errors.hpp"
#include "gridlab/model_io.hpp"

namespace gridlab {

void Model::save(const std::filesystem::path&) const { throw ContractError("this model has no saved form"); }
void Model::load(const std::filesystem::path&) { throw ContractError("this model has no saved form"); }

double EpsilonSchedule::at(std::size_t epoch, std::size_t total_epochs) const {
  const double decay_epochs = decay_fraction * static_cast<double>(total_epochs);
  if (decay_epochs <= 0.0) return end;
  const double progress = static_cast<double>(epoch) / decay_epochs;
  if (progress >= 1.0) return end;
  return start + (end - start) * progress;
}

void validate(const EpsilonSchedule& s) {
  if (!(s.start >= 0.0 && s.start <= 1.0) || !(s.end >= 0.0 && s.end <= 1.0)) {
    throw ConfigError("epsilon start and end must lie in [0, 1]");
  }
  if (!(s.decay_fraction > 0.0 && s.decay_fraction <= 1.0)) throw ConfigError("epsilon decay_fraction must lie in (0, 1]");
}

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw ContractError("argmax of an empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

std::size_t epsilon_greedy(std::span<const double> q_values, double epsilon, Rng& rng) {
  if (q_values.empty()) throw ContractError("epsilon_greedy over zero actions");
  if (epsilon > 0.0 && rng.uniform01() < epsilon) return rng.uniform_index(q_values.size());
  return argmax(q_values);
}

std::uint64_t state_key(const Observation& obs) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (std::uint8_t b : obs.canonical_bytes()) {
    h ^= b;
    h *= 0x100000001B3ULL;
  }
  return h;
}

QTable::QTable(std::size_t action_count, double alpha, double gamma, double default_q)
    : action_count_(action_count), alpha_(alpha), gamma_(gamma), default_q_(default_q) {
  if (action_count == 0) throw ConfigError("Q-table needs at least one action");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in (0, 1], got " + std::to_string(alpha));
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in [0, 1), got " + std::to_string(gamma));
}

std::vector<double> QTable::values(std::uint64_t key) const {
  const auto it = table_.find(key);
  if (it == table_.end()) return std::vector<double>(action_count_, default_q_);
  return it->second;
}

std::vector<double>& QTable::row(std::uint64_t key) {
  auto [it, inserted] = table_.try_emplace(key);
  if (inserted) it->second.assign(action_count_, default_q_);
  return it->second;
}

void QTable::save(const std::filesystem::path& path) const {
  std::vector<QRecord> records;
  records.reserve(table_.size());
  for (const auto& [key, values] : table_) records.push_back({key, values});
  std::sort(records.begin(), records.end(), [](const QRecord& a, const QRecord& b) { return a.key < b.key; });
  write_qrecords(path, records);
}

void QTable::load(const std::filesystem::path& path) {
  std::unordered_map<std::uint64_t, std::vector<double>> loaded;
  for (auto& rec : read_qrecords(path)) {
    if (rec.values.size() != action_count_) {
      throw IoError("Q-table file row has " + std::to_string(rec.values.size()) + " actions, expected " +
                    std::to_string(action_count_));
    }
    loaded.emplace(rec.key, std::move(rec.values));
  }
  table_ = std::move(loaded);
}

double q_update(QTable& table, const Transition& t) {
  if (t.action >= table.action_count()) {
    throw ContractError("transition action " + std::to_string(t.action) + " outside the Q-table's " +
                        std::to_string(table.action_count()) + " actions");
  }
  double target = t.reward;
  if (!t.done) {
    const auto next = table.values(state_key(t.next_state));
    target += table.gamma() * *std::max_element(next.begin(), next.end());
  }
  double& cell = table.row(state_key(t.state))[t.action];
  cell += table.alpha() * (target - cell);
  return cell;
}

TabularQModel::TabularQModel(std::size_t action_count, TabularQParams params, EpsilonSchedule schedule,
                             std::size_t total_epochs, std::uint64_t seed)
    : table_(action_count, params.alpha, params.gamma, params.default_q),
      schedule_(schedule),
      total_epochs_(total_epochs),
      epsilon_(schedule.at(0, total_epochs)),
      rng_(seed) {
  validate(schedule_);
}

std::size_t TabularQModel::take_action(const Observation& obs) {
  const auto q = table_.values(state_key(obs));
  return epsilon_greedy(q, epsilon_, rng_);
}

void TabularQModel::observe_transition(const Transition& t) { q_update(table_, t); }

void TabularQModel::reset_episode() {
  if (started_) ++epoch_;
  started_ = true;
  epsilon_ = schedule_.at(epoch_, total_epochs_);
}

}  // namespace gridlab
