#include "gridlab/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "gridlab/errors.hpp"

namespace gridlab {

using ojson = nlohmann::ordered_json;

std::string_view to_string(EnvKind e) { return e == EnvKind::TreasureHunt ? "treasure_hunt" : "cleanup"; }

std::string_view to_string(ModelKind m) {
  switch (m) {
    case ModelKind::Random:
      return "random";
    case ModelKind::TabularQ:
      return "tabular_q";
    case ModelKind::Dqn:
      return "dqn";
  }
  return "?";
}

EnvKind parse_env_kind(std::string_view s) {
  if (s == "treasure_hunt") return EnvKind::TreasureHunt;
  if (s == "cleanup") return EnvKind::Cleanup;
  throw ConfigError("unknown environment '" + std::string(s) + "' (expected treasure_hunt or cleanup)");
}

ModelKind parse_model_kind(std::string_view s) {
  if (s == "random") return ModelKind::Random;
  if (s == "tabular_q") return ModelKind::TabularQ;
  if (s == "dqn") return ModelKind::Dqn;
  throw ConfigError("unknown model '" + std::string(s) + "' (expected random, tabular_q or dqn)");
}

void ExperimentConfig::set_n_agents(std::size_t n) {
  treasure_hunt.n_agents = n;
  cleanup.n_agents = n;
}

bool ExperimentConfig::is_human(std::int32_t agent_id) const {
  return std::find(human_agents.begin(), human_agents.end(), agent_id) != human_agents.end();
}

Environment make_environment(const ExperimentConfig& config, std::uint64_t seed) {
  if (config.env == EnvKind::TreasureHunt) return build_treasure_hunt(config.treasure_hunt, seed);
  return std::move(build_cleanup(config.cleanup, seed).env);
}

namespace {

void check_writable_parent(const std::optional<std::filesystem::path>& p, const char* what) {
  if (!p) return;
  const auto parent = p->has_parent_path() ? p->parent_path() : std::filesystem::path(".");
  std::error_code ec;
  if (!std::filesystem::is_directory(parent, ec)) {
    throw ConfigError(std::string(what) + " directory '" + parent.string() + "' does not exist");
  }
}

}  // namespace

void validate(const ExperimentConfig& c) {
  if (c.epochs < 1) throw ConfigError("epochs must be >= 1, got " + std::to_string(c.epochs));
  if (c.turns_per_epoch < 1) throw ConfigError("turns_per_epoch must be >= 1, got " + std::to_string(c.turns_per_epoch));
  const std::size_t n = c.n_agents();
  if (c.agent_models.size() > n) throw ConfigError("agent_models lists more slots than there are agents");
  std::set<std::int32_t> seen;
  for (const auto id : c.human_agents) {
    if (id < 0 || static_cast<std::size_t>(id) >= n) throw ConfigError("human agent id " + std::to_string(id) + " out of range");
    if (!seen.insert(id).second) throw ConfigError("human agent id " + std::to_string(id) + " listed twice");
  }
  if (c.human_timeout_ms < 0) throw ConfigError("human_timeout_ms must be >= 0");
  validate(c.epsilon);
  QTable(1, c.tabular_q.alpha, c.tabular_q.gamma);
  if (c.dqn.batch_size == 0 || c.dqn.buffer_capacity == 0 || c.dqn.sync_interval == 0 || !(c.dqn.lr > 0.0) ||
      !(c.dqn.gamma >= 0.0 && c.dqn.gamma < 1.0)) {
    throw ConfigError("invalid dqn parameters");
  }
  check_writable_parent(c.record_path, "record");
  check_writable_parent(c.metrics_path, "metrics");
  const Environment env = make_environment(c, epoch_seed(c.seed, 0));
  for (std::size_t i = 0; i < n; ++i) {
    if (c.model_for(i) == ModelKind::Dqn && !c.is_human(static_cast<std::int32_t>(i)) && observation_size(env) == 0) {
      throw ConfigError("dqn needs multi_hot observations");
    }
  }
}

// ---------------------------------------------------------------------------
// Config document

namespace {

std::string_view encoding_name(Encoding e) { return e == Encoding::MultiHot ? "multi_hot" : "ascii"; }

Encoding parse_encoding(const std::string& s) {
  if (s == "multi_hot") return Encoding::MultiHot;
  if (s == "ascii") return Encoding::Ascii;
  throw ConfigError("unknown encoding '" + s + "' (expected multi_hot or ascii)");
}

/// Reads keys from one JSON object and rejects any it did not consume.
class Fields {
 public:
  Fields(const ojson& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j.is_object()) throw ConfigError(where_ + " must be an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    used_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(where_ + "." + key + " has the wrong type");
    }
  }

  const ojson* sub(const char* key) {
    used_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!used_.count(key)) throw ConfigError("unknown key '" + key + "' in " + where_);
    }
  }

 private:
  const ojson& j_;
  std::string where_;
  std::set<std::string> used_;
};

}  // namespace

ojson config_to_json(const ExperimentConfig& c) {
  ojson env_config;
  if (c.env == EnvKind::TreasureHunt) {
    const auto& t = c.treasure_hunt;
    env_config = ojson{{"size", t.size},
                       {"n_agents", t.n_agents},
                       {"gem_prob", t.gem_prob},
                       {"gem_reward", t.gem_reward},
                       {"bump_penalty", t.bump_penalty},
                       {"obs_radius", t.obs_radius},
                       {"encoding", encoding_name(t.encoding)}};
  } else {
    const auto& k = c.cleanup;
    env_config = ojson{{"map", k.map},
                       {"n_agents", k.n_agents},
                       {"dirt_prob", k.dirt_prob},
                       {"p_max", k.p_max},
                       {"pollution_threshold", k.pollution_threshold},
                       {"beam_range", k.beam_range},
                       {"apple_reward", k.apple_reward},
                       {"obs_radius", k.obs_radius},
                       {"encoding", encoding_name(k.encoding)}};
  }
  ojson agent_models = ojson::array();
  for (auto m : c.agent_models) agent_models.push_back(to_string(m));
  auto path_or_null = [](const std::optional<std::filesystem::path>& p) { return p ? ojson(p->string()) : ojson(nullptr); };
  return ojson{
      {"env", to_string(c.env)},
      {"env_config", std::move(env_config)},
      {"seed", c.seed},
      {"epochs", c.epochs},
      {"turns_per_epoch", c.turns_per_epoch},
      {"model", to_string(c.model)},
      {"agent_models", std::move(agent_models)},
      {"human_agents", c.human_agents},
      {"human_timeout_ms", c.human_timeout_ms},
      {"model_params",
       {{"tabular_q", {{"alpha", c.tabular_q.alpha}, {"gamma", c.tabular_q.gamma}, {"default_q", c.tabular_q.default_q}}},
        {"dqn",
         {{"hidden", c.dqn.hidden},
          {"batch_size", c.dqn.batch_size},
          {"buffer_capacity", c.dqn.buffer_capacity},
          {"lr", c.dqn.lr},
          {"gamma", c.dqn.gamma},
          {"sync_interval", c.dqn.sync_interval},
          {"parallel_threshold", c.dqn.parallel_threshold}}}}},
      {"epsilon", {{"start", c.epsilon.start}, {"end", c.epsilon.end}, {"decay_fraction", c.epsilon.decay_fraction}}},
      {"record_path", path_or_null(c.record_path)},
      {"metrics_path", path_or_null(c.metrics_path)},
      {"timing", c.timing},
  };
}

ExperimentConfig config_from_json(const ojson& j) {
  ExperimentConfig c;
  Fields top(j, "config");
  std::string env = std::string(to_string(c.env));
  top.read("env", env);
  c.env = parse_env_kind(env);
  if (const ojson* ec = top.sub("env_config")) {
    std::string encoding = "multi_hot";
    if (c.env == EnvKind::TreasureHunt) {
      Fields f(*ec, "env_config");
      auto& t = c.treasure_hunt;
      f.read("size", t.size);
      f.read("n_agents", t.n_agents);
      f.read("gem_prob", t.gem_prob);
      f.read("gem_reward", t.gem_reward);
      f.read("bump_penalty", t.bump_penalty);
      f.read("obs_radius", t.obs_radius);
      f.read("encoding", encoding);
      f.finish();
      t.encoding = parse_encoding(encoding);
    } else {
      Fields f(*ec, "env_config");
      auto& k = c.cleanup;
      f.read("map", k.map);
      f.read("n_agents", k.n_agents);
      f.read("dirt_prob", k.dirt_prob);
      f.read("p_max", k.p_max);
      f.read("pollution_threshold", k.pollution_threshold);
      f.read("beam_range", k.beam_range);
      f.read("apple_reward", k.apple_reward);
      f.read("obs_radius", k.obs_radius);
      f.read("encoding", encoding);
      f.finish();
      k.encoding = parse_encoding(encoding);
    }
  }
  top.read("seed", c.seed);
  top.read("epochs", c.epochs);
  top.read("turns_per_epoch", c.turns_per_epoch);
  std::string model = std::string(to_string(c.model));
  top.read("model", model);
  c.model = parse_model_kind(model);
  std::vector<std::string> agent_models;
  top.read("agent_models", agent_models);
  for (const auto& m : agent_models) c.agent_models.push_back(parse_model_kind(m));
  top.read("human_agents", c.human_agents);
  top.read("human_timeout_ms", c.human_timeout_ms);
  if (const ojson* mp = top.sub("model_params")) {
    Fields f(*mp, "model_params");
    if (const ojson* tq = f.sub("tabular_q")) {
      Fields g(*tq, "model_params.tabular_q");
      g.read("alpha", c.tabular_q.alpha);
      g.read("gamma", c.tabular_q.gamma);
      g.read("default_q", c.tabular_q.default_q);
      g.finish();
    }
    if (const ojson* dq = f.sub("dqn")) {
      Fields g(*dq, "model_params.dqn");
      g.read("hidden", c.dqn.hidden);
      g.read("batch_size", c.dqn.batch_size);
      g.read("buffer_capacity", c.dqn.buffer_capacity);
      g.read("lr", c.dqn.lr);
      g.read("gamma", c.dqn.gamma);
      g.read("sync_interval", c.dqn.sync_interval);
      g.read("parallel_threshold", c.dqn.parallel_threshold);
      g.finish();
    }
    f.finish();
  }
  if (const ojson* eps = top.sub("epsilon")) {
    Fields f(*eps, "epsilon");
    f.read("start", c.epsilon.start);
    f.read("end", c.epsilon.end);
    f.read("decay_fraction", c.epsilon.decay_fraction);
    f.finish();
  }
  for (auto [key, target] : {std::pair{"record_path", &c.record_path}, std::pair{"metrics_path", &c.metrics_path}}) {
    if (const ojson* p = top.sub(key); p && !p->is_null()) {
      if (!p->is_string()) throw ConfigError(std::string("config.") + key + " must be a string or null");
      *target = p->get<std::string>();
    }
  }
  top.read("timing", c.timing);
  top.finish();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path.string() + "'");
  ojson j;
  try {
    j = ojson::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file '" + path.string() + "': " + e.what());
  }
  return config_from_json(j);
}

// ---------------------------------------------------------------------------
// Metrics

std::string format_real(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string format_metrics(const std::vector<EpochMetrics>& metrics) {
  std::string out = "epoch,agent_id,reward,mean_loss,epsilon,wall_ms\n";
  for (const auto& m : metrics) {
    for (std::size_t a = 0; a < m.per_agent_reward.size(); ++a) {
      out += std::to_string(m.epoch) + ',' + std::to_string(a) + ',' + format_real(m.per_agent_reward[a]) + ',' +
             (m.mean_loss ? format_real(*m.mean_loss) : std::string()) + ',' + format_real(m.epsilon) + ',' +
             std::to_string(m.wall_ms) + '\n';
    }
  }
  return out;
}

void write_metrics(const std::vector<EpochMetrics>& metrics, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open metrics file '" + path.string() + "' for writing");
  out << format_metrics(metrics);
  if (!out) throw IoError("write to metrics file '" + path.string() + "' failed");
}

// ---------------------------------------------------------------------------
// Loop

TurnOutcome run_turn(Environment& env, std::size_t turn_index, std::size_t turns_per_epoch) {
  TurnOutcome outcome;
  std::vector<std::size_t> order(env.agents.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = order.size(); i > 1; --i) {
    const std::size_t j = env.world.rng().uniform_index(i);
    std::swap(order[i - 1], order[j]);
  }

  const bool last = turn_index + 1 == turns_per_epoch;
  for (const std::size_t idx : order) {
    Agent& agent = env.agents[idx];
    if (agent.done) continue;
    outcome.order.push_back(agent.id);
    try {
      outcome.transitions.emplace_back(agent.id, agent_turn(env.world, agent, last, env.rules, &outcome.changes));
    } catch (const ContractError& e) {
      throw ContractError(std::string(e.what()) + " (turn " + std::to_string(turn_index) + ")");
    }
  }
  const auto dynamics = step_entities(env.world, env.dynamics);
  outcome.changes.insert(outcome.changes.end(), dynamics.begin(), dynamics.end());
  env.world.advance_turn();
  if (last) {
    for (auto& a : env.agents) a.done = true;
  }
  return outcome;
}

std::size_t observation_size(const Environment& env) {
  if (env.agents.empty()) return 0;
  const Observation obs = observe_agent(env.world, env.agents.front());
  const auto* mh = std::get_if<MultiHot>(&obs.view);
  return mh ? mh->bits.size() + obs.aux.size() : 0;
}

std::unique_ptr<Model> make_model(const ExperimentConfig& config, ModelKind kind, std::int32_t agent_id,
                                  std::size_t input_size, std::size_t action_count) {
  const std::uint64_t seed = model_seed(config.seed, static_cast<std::uint64_t>(agent_id));
  switch (kind) {
    case ModelKind::Random:
      return std::make_unique<RandomModel>(action_count, seed);
    case ModelKind::TabularQ:
      return std::make_unique<TabularQModel>(action_count, config.tabular_q, config.epsilon, config.epochs, seed);
    case ModelKind::Dqn:
      if (input_size == 0) throw ConfigError("dqn needs multi_hot observations");
      return std::make_unique<DqnModel>(input_size, action_count, config.dqn, config.epsilon, config.epochs, seed);
  }
  throw ConfigError("unknown model kind");
}

std::vector<EpochMetrics> run_experiment(const ExperimentConfig& config, const RunHooks& hooks) {
  validate(config);
  for (const auto id : config.human_agents) {
    if (!hooks.human_source && !hooks.model_overrides.count(id)) {
      throw ConfigError("agent " + std::to_string(id) + " is a human slot but no human action source was supplied");
    }
  }

  const Environment probe = make_environment(config, epoch_seed(config.seed, 0));
  const std::size_t n = probe.agents.size();
  const std::size_t input_size = observation_size(probe);
  const ActionSpec& actions = probe.agents.front().action_spec;

  std::vector<std::unique_ptr<Model>> owned(n);
  std::vector<Model*> active(n, nullptr);
  for (std::size_t i = 0; i < n; ++i) {
    const auto id = static_cast<std::int32_t>(i);
    if (const auto it = hooks.model_overrides.find(id); it != hooks.model_overrides.end()) {
      active[i] = it->second;
      continue;
    }
    if (config.is_human(id)) {
      hooks.human_source->register_agent(id, actions.index_of(ActionKind::Noop).value_or(0));
      owned[i] = std::make_unique<HumanModel>(*hooks.human_source, id, actions.count());
    } else {
      owned[i] = make_model(config, config.model_for(i), id, input_size, actions.count());
    }
    active[i] = owned[i].get();
  }

  const ReplayHeader header = make_header(probe, config_to_json(config));
  std::optional<ReplayWriter> writer;
  std::vector<EpochMetrics> metrics;
  try {
    if (config.record_path) {
      writer.emplace(*config.record_path);
      writer->write_header(header);
    }
    if (hooks.on_header) hooks.on_header(header);

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
      Environment env = make_environment(config, epoch_seed(config.seed, epoch));
      for (auto& a : env.agents) a.model = active[static_cast<std::size_t>(a.id)];
      for (Model* m : active) m->reset_episode();

      const auto started = std::chrono::steady_clock::now();
      double loss_sum = 0.0;
      std::size_t loss_count = 0;
      for (std::size_t turn = 0; turn < config.turns_per_epoch; ++turn) {
        if (hooks.on_turn_start) hooks.on_turn_start(epoch, turn);
        const TurnOutcome outcome = run_turn(env, turn, config.turns_per_epoch);
        for (Model* m : active) {
          if (const auto loss = m->train_step()) {
            loss_sum += *loss;
            ++loss_count;
          }
        }
        const FrameRecord frame = record_frame(env, epoch, turn, outcome.transitions);
        if (writer) writer->write_frame(frame);
        if (hooks.on_frame) hooks.on_frame(env, frame, outcome);
      }

      EpochMetrics m;
      m.epoch = epoch;
      for (const auto& a : env.agents) m.per_agent_reward.push_back(a.score);
      if (loss_count > 0) m.mean_loss = loss_sum / static_cast<double>(loss_count);
      m.epsilon = active.front()->epsilon();
      if (config.timing) {
        m.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started).count();
      }
      metrics.push_back(std::move(m));
      if (hooks.on_epoch_end) hooks.on_epoch_end(metrics.back());
    }
    if (writer) writer->flush();
  } catch (const IoError&) {
    if (config.metrics_path) write_metrics(metrics, *config.metrics_path);
    throw;
  }
  if (config.metrics_path) write_metrics(metrics, *config.metrics_path);
  return metrics;
}

}  // namespace gridlab
