#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "pwbandit/confbounds.hpp"
#include "pwbandit/error.hpp"
#include "pwbandit/harness.hpp"

namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::string radius;
  std::size_t threads = 1;
  std::string out;
};

pwb::ExperimentConfig load(const Common& c) {
  auto cfg = pwb::load_config(c.config);
  if (!c.radius.empty()) pwb::apply_radius_override(cfg, pwb::parse_radius_family(c.radius));
  return cfg;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  return f;
}

// Writes to `out` when set, otherwise to stdout.
template <class Fn>
void emit(const std::string& out, Fn&& fn) {
  if (out.empty()) {
    fn(std::cout);
    return;
  }
  if (auto parent = fs::path(out).parent_path(); !parent.empty()) fs::create_directories(parent);
  auto f = open_out(out);
  fn(f);
}

pwb::ReplicationRange seeds_or_default(const std::string& seeds, const pwb::ExperimentConfig& cfg) {
  if (!seeds.empty()) return pwb::parse_replication_range(seeds);
  return {0, cfg.replications - 1};
}

int cmd_run(const Common& c, const std::string& seeds, bool no_traces) {
  const auto cfg = load(c);
  const fs::path dir = c.out.empty() ? fs::path(cfg.output_dir) : fs::path(c.out);
  fs::create_directories(dir);
  const auto range = seeds_or_default(seeds, cfg);
  const auto result = pwb::run_experiment(cfg.environment, cfg.policies, range, cfg.seed, {c.threads, {}});
  const auto metrics = pwb::compute_metrics(result, cfg.environment);

  if (cfg.write_traces && !no_traces) {
    auto f = open_out(dir / "traces.csv");
    pwb::write_traces_csv(f, result);
  }
  {
    auto f = open_out(dir / "events.csv");
    pwb::write_events_csv(f, metrics);
  }
  {
    auto f = open_out(dir / "summary.csv");
    pwb::write_summary_csv(f, metrics);
  }
  {
    const auto bounds = pwb::regret_bounds(cfg.environment, cfg.bounds);
    const auto assumptions = pwb::validate_assumptions(cfg.environment, cfg.bounds.delta, cfg.bounds.eta);
    auto f = open_out(dir / "bounds.json");
    f << pwb::bounds_json(cfg.environment, bounds, assumptions) << '\n';
  }

  int failed = 0;
  for (const auto& run : result.runs) {
    if (run.failed()) {
      ++failed;
      fmt::print(stderr, "replication {} policy {} failed: {}\n", run.replication, run.policy_name, run.error);
    }
  }
  for (const auto& s : metrics.policies) {
    fmt::print("{:<14} regret {:>10.2f} +- {:<9.2f} det {:>5} miss {:>5} fa {:>5}\n", s.policy, s.mean_final_regret,
               s.std_final_regret, s.detections, s.misses, s.false_alarms);
  }
  fmt::print("wrote {}\n", dir.string());
  return failed ? 3 : 0;
}

int cmd_bounds(const Common& c) {
  const auto cfg = load(c);
  const auto bounds = pwb::regret_bounds(cfg.environment, cfg.bounds);
  const auto assumptions = pwb::validate_assumptions(cfg.environment, cfg.bounds.delta, cfg.bounds.eta);
  emit(c.out, [&](std::ostream& os) { os << pwb::bounds_json(cfg.environment, bounds, assumptions) << '\n'; });
  return 0;
}

int cmd_bench(const Common& c) {
  const auto cfg = load(c);
  pwb::BenchConfig bench = cfg.bench.value_or(pwb::BenchConfig{{cfg.environment.horizon()}, 5});
  const auto rows = pwb::bench_detection_cost(cfg.environment, cfg.policies, bench, cfg.seed);
  emit(c.out, [&](std::ostream& os) { pwb::write_bench_csv(os, rows); });
  return 0;
}

int cmd_eta_sweep(const Common& c, const std::string& seeds) {
  const auto cfg = load(c);
  if (!cfg.eta_sweep) throw pwb::Error(pwb::Errc::InvalidConfig, "config has no 'eta_sweep' block");
  const auto rows = pwb::eta_sweep(*cfg.eta_sweep, cfg.environment.reward_model(), cfg.policies,
                                   seeds_or_default(seeds, cfg), cfg.seed, {c.threads, {}});
  emit(c.out, [&](std::ostream& os) { pwb::write_eta_sweep_csv(os, rows); });
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Piecewise-stationary bandit experiments"};
  app.require_subcommand(1);
  app.fallthrough();

  Common common;
  app.add_option("--radius", common.radius, "Override the CPD radius family")
      ->check(CLI::IsMember({"laplace", "union", "peeling"}));
  app.add_option("--threads", common.threads, "Worker threads")->check(CLI::PositiveNumber);

  std::string seeds;
  bool no_traces = false;

  auto* run = app.add_subcommand("run", "Simulate every policy and write traces, events, summary and bounds");
  run->add_option("--config", common.config)->required()->check(CLI::ExistingFile);
  run->add_option("--seeds", seeds, "Replication range a..b (default 0..replications-1)");
  run->add_option("--out", common.out, "Output directory (default: config output_dir)");
  run->add_flag("--no-traces", no_traces, "Skip traces.csv");

  auto* bounds = app.add_subcommand("bounds", "Evaluate the regret bounds and assumption checks as JSON");
  bounds->add_option("--config", common.config)->required()->check(CLI::ExistingFile);
  bounds->add_option("--out", common.out, "Output file (default stdout)");

  auto* bench = app.add_subcommand("bench", "Detection cost against the horizon");
  bench->add_option("--config", common.config)->required()->check(CLI::ExistingFile);
  bench->add_option("--out", common.out, "Output CSV (default stdout)");

  auto* sweep = app.add_subcommand("eta-sweep", "Detection success against segment length");
  sweep->add_option("--config", common.config)->required()->check(CLI::ExistingFile);
  sweep->add_option("--seeds", seeds, "Replication range a..b");
  sweep->add_option("--out", common.out, "Output CSV (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(common, seeds, no_traces);
    if (*bounds) return cmd_bounds(common);
    if (*bench) return cmd_bench(common);
    if (*sweep) return cmd_eta_sweep(common, seeds);
  } catch (const pwb::Error& e) {
    fmt::print(stderr, "error [{}]: {}\n", pwb::to_string(e.code()), e.what());
    return 2;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  }
  return 1;
}
