// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails.
//
//   acceptance <path to gridlab executable>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <thread>

#include "gridlab/experiment.hpp"
#include "gridlab/replay.hpp"
#include "gridlab/session.hpp"
#include "oracles.hpp"
#include "ws_client.hpp"

using namespace gridlab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = false;
  std::string detail;
};

int failures = 0;

void criterion(const std::string& name, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = secs < limit_s;
  const bool pass = out.ok && in_time;
  if (!pass) ++failures;
  std::printf("%s %-26s %7.2f s (limit %g s%s)  %s\n", pass ? "PASS" : "FAIL", name.c_str(), secs, limit_s,
              in_time ? "" : ", over", out.detail.c_str());
  std::fflush(stdout);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir() {
  const auto dir = fs::temp_directory_path() / ("gridlab_accept_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

Outcome determinism(const std::string& cli) {
  const fs::path root = scratch_dir();
  std::string files[2][2];
  for (int k = 0; k < 2; ++k) {
    const fs::path dir = root / ("det" + std::to_string(k));
    fs::create_directories(dir);
    const std::string cmd = "cd '" + dir.string() + "' && '" + cli +
                            "' run --env treasure_hunt --seed 42 --epochs 20 --turns 50 --model tabular_q"
                            " --record a.jsonl --metrics a.csv > run.log 2>&1";
    if (std::system(cmd.c_str()) != 0) return {false, "cli run failed: " + slurp(dir / "run.log")};
    files[k][0] = slurp(dir / "a.jsonl");
    files[k][1] = slurp(dir / "a.csv");
  }
  const bool same = files[0][0] == files[1][0] && files[0][1] == files[1][1];
  const bool nonempty = !files[0][0].empty() && !files[0][1].empty();
  return {same && nonempty, "replay " + std::to_string(files[0][0].size()) + " B, metrics " +
                                std::to_string(files[0][1].size()) + " B, " + (same ? "byte-identical" : "DIFFER")};
}

Outcome world_suite() {
  const auto r = oracle::run_world_suite(100000, 20, 2024);
  return {r.total() == 0 && r.sequences == 100000,
          std::to_string(r.sequences) + " sequences, " + std::to_string(r.ops) + " ops, violations slot " +
              std::to_string(r.slot_violations) + " actor " + std::to_string(r.actor_violations) + " purity " +
              std::to_string(r.purity_violations)};
}

Outcome observation_suite() {
  const auto r = oracle::run_observation_suite(10000, 77);
  return {r.total() == 0 && r.cases == 10000,
          std::to_string(r.cases) + " cases, violations shape " + std::to_string(r.shape_violations) + " cell " +
              std::to_string(r.cell_violations) + " center " + std::to_string(r.center_violations) + " padding " +
              std::to_string(r.padding_violations)};
}

Outcome corridor() {
  const auto qstar = oracle::corridor_value_iteration(0.9);
  TabularQModel m(2, TabularQParams{0.5, 0.9, 0.0}, EpsilonSchedule{1.0, 0.0, 0.5}, 200, 5);
  oracle::train_corridor(m, 200);
  bool greedy_ok = true;
  double max_err = 0.0;
  for (int s = 0; s < oracle::Corridor::kTerminal; ++s) {
    const auto q = m.table().values(state_key(oracle::corridor_obs(s)));
    const std::size_t best = argmax(std::vector<double>{qstar[s][0], qstar[s][1]});
    greedy_ok = greedy_ok && argmax(q) == best;
    for (std::size_t a = 0; a < 2; ++a) max_err = std::max(max_err, std::abs(q[a] - qstar[s][a]));
  }
  return {greedy_ok && max_err <= 1e-6,
          std::string("200 episodes, greedy ") + (greedy_ok ? "matches" : "DIFFERS") +
              fmt(", max |Q - Q*| %.3g over all state-action pairs", max_err)};
}

Outcome gradient_check() {
  const Mlp net({12, 16, 16, 4}, 31);
  const TdBatch batch = oracle::random_batch(8, 12, 4, 32);
  Gradients g(net);
  kernels::td_loss_and_gradients_serial(net, batch, g);
  const auto r = oracle::finite_difference_check(net, batch, g.values, 1e-5);
  return {r.max_rel_error <= 1e-4 && r.checked == net.parameter_count(),
          std::to_string(r.checked) + fmt(" parameters, max relative error %.3g (bound 1e-4)", r.max_rel_error)};
}

Outcome learning_sanity() {
  // Also counts gems spawned in the final epochs: their total reward bounds
  // what any policy could have collected.
  struct Tail {
    double reward = 0.0;
    double ceiling = 0.0;
  };
  auto run = [](ModelKind model) {
    ExperimentConfig c;
    c.treasure_hunt.size = 5;
    c.treasure_hunt.gem_prob = 0.2;
    c.seed = 1;
    c.epochs = 500;
    c.turns_per_epoch = 50;
    c.model = model;
    c.tabular_q = TabularQParams{0.1, 0.9, 0.0};
    c.epsilon = EpsilonSchedule{1.0, 0.1, 0.75};
    const Code gem = treasure_hunt_vocabulary(c.treasure_hunt.gem_reward).code_of("gem");
    std::size_t spawned = 0;
    RunHooks hooks;
    hooks.on_frame = [&](const Environment&, const FrameRecord& f, const TurnOutcome& out) {
      if (f.epoch < c.epochs - 50) return;
      for (const auto& ch : out.changes) spawned += ch.after.code == gem && ch.before.code != gem;
    };
    const auto m = run_experiment(c, hooks);
    Tail t;
    for (std::size_t e = m.size() - 50; e < m.size(); ++e) t.reward += m[e].per_agent_reward[0] / 50.0;
    t.ceiling = static_cast<double>(spawned) * c.treasure_hunt.gem_reward / 50.0;
    return t;
  };
  const Tail tab = run(ModelKind::TabularQ);
  const Tail rnd = run(ModelKind::Random);
  return {tab.reward >= 2.0 * rnd.reward,
          fmt("final-50 mean reward tabular %.2f, random %.2f, ratio %.2f (need 2); ", tab.reward, rnd.reward,
              rnd.reward != 0.0 ? tab.reward / rnd.reward : 0.0) +
              fmt("gem reward available per epoch %.1f (tabular run), 2x random = %.1f", tab.ceiling,
                  2.0 * rnd.reward) +
              (2.0 * rnd.reward > tab.ceiling ? " exceeds it" : "")};
}

Outcome cleanup_coupling() {
  std::size_t crossed = 0, violations = 0, apples_before = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    CleanupConfig cfg;
    cfg.n_agents = 3;
    CleanupEnvironment ce = build_cleanup(cfg, seed);
    std::vector<std::unique_ptr<Model>> models;
    for (auto& a : ce.env.agents) {
      const std::size_t noop = *a.action_spec.index_of(ActionKind::Noop);
      models.push_back(std::make_unique<ScriptedModel>(std::vector<std::size_t>{}, a.action_spec.count(), noop));
      a.model = models.back().get();
    }
    const Code apple = ce.env.world.vocab().code_of("apple");
    double prev = ce.state->pollution_fraction();
    bool over = prev >= cfg.pollution_threshold;
    for (std::size_t t = 0; t < 500; ++t) {
      const TurnOutcome out = run_turn(ce.env, t, 500);
      const double f = ce.state->pollution_fraction();
      if (f < prev) ++violations;
      std::size_t spawned = 0;
      for (const auto& ch : out.changes) spawned += ch.after.code == apple && ch.before.code != apple;
      over = over || f >= cfg.pollution_threshold;
      if (over && spawned > 0) ++violations;
      if (!over) apples_before += spawned;
      prev = f;
    }
    crossed += over;
  }
  return {violations == 0 && crossed > 0,
          "20 seeds x 500 turns, " + std::to_string(crossed) + " seeds crossed the threshold, " +
              std::to_string(apples_before) + " apples grew before crossing, " + std::to_string(violations) +
              " violations"};
}

Outcome replay_round_trip() {
  ExperimentConfig c;
  c.env = EnvKind::Cleanup;
  c.set_n_agents(3);
  c.epochs = 3;
  c.turns_per_epoch = 100;
  c.seed = 9;
  c.model = ModelKind::TabularQ;
  c.record_path = scratch_dir() / "cleanup.jsonl";
  std::vector<std::vector<std::string>> live;
  RunHooks hooks;
  hooks.on_frame = [&](const Environment& env, const FrameRecord&, const TurnOutcome&) {
    live.push_back(render_world(env.world));
  };
  run_experiment(c, hooks);
  const Replay r = read_replay(*c.record_path);
  const fs::path again = scratch_dir() / "cleanup_again.jsonl";
  write_replay(again, r);
  const bool bytes_same = slurp(again) == slurp(*c.record_path);
  std::size_t mismatched = 0;
  for (std::size_t i = 0; i < r.frames.size(); ++i) {
    if (i >= live.size() || render_ascii(r.header, r.frames[i]) != live[i]) ++mismatched;
  }
  const bool ok = bytes_same && mismatched == 0 && r.frames.size() == live.size() && live.size() == 300;
  return {ok, std::to_string(r.frames.size()) + " frames, rewrite " + (bytes_same ? "byte-identical" : "DIFFERS") +
                  ", " + std::to_string(mismatched) + " ASCII mismatches"};
}

Outcome scripted_human() {
  const std::vector<std::string> names{"up", "right", "right", "down", "left", "noop", "down", "right"};
  ExperimentConfig c;
  c.treasure_hunt = TreasureHuntConfig{6, 2};
  c.seed = 123;
  c.epochs = 3;
  c.turns_per_epoch = 20;
  c.model = ModelKind::TabularQ;
  c.human_agents = {0};
  c.human_timeout_ms = 5000;

  // Both runs record to the same path so the config echoed in the header matches.
  c.record_path = scratch_dir() / "human.jsonl";
  SessionServer server(c);
  testing::WsClient client(server.port());
  client.send(nlohmann::json{{"type", "join"}, {"role", "human"}, {"agent_id", 0}});
  if (client.read()["type"] != "joined") return {false, "join rejected"};
  std::thread runner([&] { server.run(); });
  std::size_t sent = 0;
  for (;;) {
    const auto m = client.read();
    if (m["type"] == "await_action") {
      client.send(nlohmann::json{{"type", "action"}, {"agent_id", 0}, {"action", names[sent % names.size()]}});
      ++sent;
    }
    if (m["type"] == "run_end") break;
  }
  runner.join();
  server.stop();
  const std::string session_file = slurp(*c.record_path);

  const Environment probe = make_environment(c, 0);
  std::vector<std::size_t> indices;
  for (std::size_t i = 0; i < c.epochs * c.turns_per_epoch; ++i) {
    indices.push_back(*probe.agents[0].action_spec.index_of(*parse_action(names[i % names.size()])));
  }
  ScriptedModel scripted(indices, probe.agents[0].action_spec.count(), 0);
  RunHooks hooks;
  hooks.model_overrides[0] = &scripted;
  run_experiment(c, hooks);
  const std::string scripted_file = slurp(*c.record_path);

  const bool same = !session_file.empty() && session_file == scripted_file && server.replay_text() == session_file;
  return {same && sent == indices.size(), std::to_string(sent) + " actions submitted over WebSocket, replays " +
                                              std::to_string(session_file.size()) + " B, " +
                                              (same ? "byte-identical" : "DIFFER")};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: acceptance <gridlab executable>\n");
    return 2;
  }
  const std::string cli = fs::absolute(argv[1]).string();

  criterion("determinism", 10, [&] { return determinism(cli); });
  criterion("world-consistency", 30, world_suite);
  criterion("observation-suite", 30, observation_suite);
  criterion("tabular-q-corridor", 5, corridor);
  criterion("dqn-gradient-check", 5, gradient_check);
  criterion("learning-sanity", 60, learning_sanity);
  criterion("cleanup-coupling", 30, cleanup_coupling);
  criterion("replay-round-trip", 10, replay_round_trip);
  criterion("scripted-human", 10, scripted_human);

  if (!std::getenv("GRIDLAB_KEEP")) fs::remove_all(scratch_dir());
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
