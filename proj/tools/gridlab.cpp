// gridlab command line: run experiments, host live sessions, print replays.

#include <atomic>
#include <csignal>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "gridlab/errors.hpp"
#include "gridlab/experiment.hpp"
#include "gridlab/replay.hpp"
#include "gridlab/session.hpp"

using namespace gridlab;

namespace {

struct RunFlags {
  std::string config_file;
  std::string env;
  std::uint64_t seed = 0;
  std::size_t epochs = 0;
  std::size_t turns = 0;
  std::size_t agents = 0;
  std::string model;
  std::vector<std::int32_t> human_agents;
  std::int64_t timeout_ms = 0;
  std::string record;
  std::string metrics;
  bool timing = false;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--config", f.config_file, "JSON config document; flags given here override it")->check(CLI::ExistingFile);
  cmd->add_option("--env", f.env, "treasure_hunt or cleanup");
  cmd->add_option("--seed", f.seed, "Master seed");
  cmd->add_option("--epochs", f.epochs, "Number of epochs");
  cmd->add_option("--turns", f.turns, "Turns per epoch");
  cmd->add_option("--agents", f.agents, "Number of agents");
  cmd->add_option("--model", f.model, "random, tabular_q or dqn");
  cmd->add_option("--human-agent", f.human_agents, "Agent id played by a human (repeatable)");
  cmd->add_option("--timeout-ms", f.timeout_ms, "Human turn timeout in milliseconds");
  cmd->add_option("--record", f.record, "Replay output (JSON lines)");
  cmd->add_option("--metrics", f.metrics, "Metrics CSV output");
  cmd->add_flag("--timing", f.timing, "Fill in wall_ms (makes metrics run-dependent)");
}

ExperimentConfig build_config(CLI::App* cmd, const RunFlags& f) {
  ExperimentConfig c = f.config_file.empty() ? ExperimentConfig{} : load_config(f.config_file);
  if (cmd->count("--env")) c.env = parse_env_kind(f.env);
  if (cmd->count("--seed")) c.seed = f.seed;
  if (cmd->count("--epochs")) c.epochs = f.epochs;
  if (cmd->count("--turns")) c.turns_per_epoch = f.turns;
  if (cmd->count("--agents")) c.set_n_agents(f.agents);
  if (cmd->count("--model")) c.model = parse_model_kind(f.model);
  if (cmd->count("--human-agent")) c.human_agents = f.human_agents;
  if (cmd->count("--timeout-ms")) c.human_timeout_ms = f.timeout_ms;
  if (cmd->count("--record")) c.record_path = f.record;
  if (cmd->count("--metrics")) c.metrics_path = f.metrics;
  if (f.timing) c.timing = true;
  return c;
}

void print_epoch(const EpochMetrics& m) {
  std::cerr << "epoch " << m.epoch << " reward";
  for (double r : m.per_agent_reward) std::cerr << ' ' << format_real(r);
  if (m.mean_loss) std::cerr << " loss " << format_real(*m.mean_loss);
  std::cerr << " epsilon " << format_real(m.epsilon) << '\n';
}

// Terminal play: the board is printed when a human agent is up and a line
// from stdin names the action.
int run_command(const ExperimentConfig& config) {
  RunHooks hooks;
  hooks.on_epoch_end = print_epoch;
  HumanActionSource source{std::chrono::milliseconds(config.human_timeout_ms)};
  std::optional<ReplayHeader> header;
  std::optional<FrameRecord> last;
  std::vector<std::string> names;
  if (!config.human_agents.empty()) {
    const Environment probe = make_environment(config, epoch_seed(config.seed, 0));
    const ActionSpec& spec = probe.agents.front().action_spec;
    for (std::size_t i = 0; i < spec.count(); ++i) names.emplace_back(spec.name(i));
    hooks.human_source = &source;
    hooks.on_header = [&](const ReplayHeader& h) { header = h; };
    hooks.on_frame = [&](const Environment&, const FrameRecord& f, const TurnOutcome&) { last = f; };
    source.set_await_hook([&](std::int32_t id, std::chrono::milliseconds timeout) {
      if (header && last) {
        for (const auto& line : render_ascii(*header, *last)) std::cout << line << '\n';
      }
      std::cout << "agent " << id << " (" << timeout.count() << " ms) action [";
      for (std::size_t i = 0; i < names.size(); ++i) std::cout << (i ? " " : "") << names[i];
      std::cout << "]: " << std::flush;
    });
    source.set_resolve_hook([&](std::int32_t, std::size_t action, bool timed_out) {
      if (timed_out) std::cout << "\ntimed out, playing " << names[action] << '\n';
    });
    std::thread([&source, &names, ids = config.human_agents] {
      std::string line;
      while (std::getline(std::cin, line)) {
        const auto it = std::find(names.begin(), names.end(), line);
        if (it == names.end()) {
          std::cout << "unknown action '" << line << "'\n";
          continue;
        }
        for (auto id : ids) source.submit_if_awaiting(id, static_cast<std::size_t>(it - names.begin()));
      }
    }).detach();
  }
  run_experiment(config, hooks);
  return 0;
}

std::atomic<bool> g_interrupted{false};

int serve_command(const ExperimentConfig& config, const SessionOptions& options, bool exit_when_done) {
  SessionServer server(config, options);
  std::cerr << "listening on http://" << options.address << ':' << server.port() << "/ (websocket /session)\n";
  RunHooks hooks;
  hooks.on_epoch_end = print_epoch;
  server.run(hooks);
  std::cerr << "run finished; replay at /replay\n";
  if (!exit_when_done) {
    std::signal(SIGINT, [](int) { g_interrupted = true; });
    std::signal(SIGTERM, [](int) { g_interrupted = true; });
    while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  server.stop();
  return 0;
}

int render_command(const std::string& file, std::optional<std::size_t> epoch, std::optional<std::size_t> turn) {
  const Replay replay = read_replay(file);
  for (const auto& f : replay.frames) {
    if ((epoch && f.epoch != *epoch) || (turn && f.turn != *turn)) continue;
    std::cout << "epoch " << f.epoch << " turn " << f.turn << " scores";
    for (const auto& [id, s] : f.scores) std::cout << ' ' << id << '=' << format_real(s);
    std::cout << '\n';
    for (const auto& line : render_ascii(replay.header, f)) std::cout << line << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gridlab: multi-agent gridworld experiments"};
  app.require_subcommand(1);

  RunFlags run_flags;
  auto* run = app.add_subcommand("run", "Run an experiment");
  add_run_flags(run, run_flags);

  RunFlags serve_flags;
  SessionOptions options;
  bool exit_when_done = false;
  std::string ui_dir;
  auto* serve = app.add_subcommand("serve", "Run an experiment as a live session");
  add_run_flags(serve, serve_flags);
  serve->add_option("--port", options.port, "Listen port (0 picks one)");
  serve->add_option("--address", options.address, "Listen address");
  serve->add_option("--ui-dir", ui_dir, "Static UI bundle served at /")->check(CLI::ExistingDirectory);
  serve->add_flag("--exit-when-done", exit_when_done, "Exit once the run has finished");

  std::string replay_file;
  std::optional<std::size_t> epoch, turn;
  auto* render = app.add_subcommand("render", "Print replay frames as ASCII");
  render->add_option("file", replay_file, "Replay file")->required();
  render->add_option("--epoch", epoch, "Only this epoch");
  render->add_option("--turn", turn, "Only this turn");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return run_command(build_config(run, run_flags));
    if (*serve) {
      if (!ui_dir.empty()) options.ui_dir = ui_dir;
      return serve_command(build_config(serve, serve_flags), options, exit_when_done);
    }
    if (*render) return render_command(replay_file, epoch, turn);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
