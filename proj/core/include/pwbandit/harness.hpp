#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pwbandit/analysis.hpp"
#include "pwbandit/env.hpp"
#include "pwbandit/policies.hpp"

namespace pwb {

// --- configuration --------------------------------------------------------

struct EtaSweepConfig {
  std::vector<double> etas;
  double base_cost = 1000.0;
  // Mean rows of the generated segments; defaults to the environment's.
  std::vector<std::vector<double>> base_means;
};

struct BenchConfig {
  std::vector<Time> horizons;
  std::size_t repeats = 5;
};

struct ExperimentConfig {
  Environment environment = Environment::build({{1, {0.5}}}, 1, RewardModel::bernoulli());
  std::vector<PolicyConfig> policies;
  std::size_t replications = 1;
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  bool write_traces = true;
  BoundOptions bounds;
  std::optional<EtaSweepConfig> eta_sweep;
  std::optional<BenchConfig> bench;
};

// Relative CSV paths resolve against `base_dir`.
ExperimentConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

// Replaces the radius family of every CPD-family policy.
void apply_radius_override(ExperimentConfig& config, RadiusFamily family);

Environment load_mean_matrix_csv(const std::filesystem::path& path, Time horizon,
                                 std::span<const Time> boundaries = {},
                                 RewardModel model = RewardModel::bernoulli());

// --- running --------------------------------------------------------------

// Inclusive replication indices, written "a..b" on the command line.
struct ReplicationRange {
  std::size_t first = 0;
  std::size_t last = 0;

  std::size_t size() const noexcept { return last - first + 1; }
};

ReplicationRange parse_replication_range(std::string_view text);

struct RunOptions {
  std::size_t threads = 1;
  std::optional<Time> horizon;  // run only the first `horizon` steps
};

struct RunTrace {
  std::size_t replication = 0;
  std::size_t policy = 0;
  std::string policy_name;
  std::vector<std::uint32_t> arms;
  std::vector<double> rewards;
  std::vector<double> inst_regret;
  std::vector<double> cum_regret;
  std::vector<std::uint8_t> restart;
  std::vector<RestartEvent> restarts;
  PolicyCounters counters;
  double wall_ms = 0.0;
  std::string error;  // non-empty: the run failed and was quarantined

  bool failed() const noexcept { return !error.empty(); }
  std::size_t steps() const noexcept { return arms.size(); }
};

struct ExperimentResult {
  std::vector<std::string> policy_names;
  std::vector<RunTrace> runs;  // sorted by (replication, policy)
};

RunTrace run_single(const Environment& env, const PolicyConfig& policy, std::size_t policy_index,
                    std::size_t replication, std::uint64_t seed, Time steps);

ExperimentResult run_experiment(const Environment& env, std::span<const PolicyConfig> policies,
                                ReplicationRange replications, std::uint64_t seed, const RunOptions& options = {});

// --- metrics --------------------------------------------------------------

enum class EventKind { Detection, FalseAlarm };

struct EventRow {
  std::size_t replication = 0;
  std::string policy;
  Time time = 0;
  std::size_t arm = 0;
  std::int64_t split = 0;
  EventKind kind = EventKind::Detection;
  std::optional<Time> true_cp;
};

struct RunMetrics {
  std::size_t replication = 0;
  std::size_t policy = 0;
  double final_regret = 0.0;
  double decomposed_regret = 0.0;
  std::vector<std::optional<Time>> delays;  // per changepoint; empty = missed
  std::size_t detections = 0;
  std::size_t misses = 0;
  std::size_t false_alarms = 0;
  double success_rate = 0.0;  // detections / G (1 when G = 0)
  std::vector<EventRow> events;
};

// Detection window for changepoint t_g is (t_g, t_{g+1}] (T + 1 after the
// last); the first detector restart inside it is the detection, every other
// detector restart is a false alarm. Also recomputes the regret from the
// pull counts and throws InconsistentTrace on any disagreement.
RunMetrics compute_run_metrics(const RunTrace& run, const Environment& env);

struct PolicySummary {
  std::string policy;
  std::size_t runs = 0;
  std::size_t failed = 0;
  double mean_final_regret = 0.0;
  double std_final_regret = 0.0;
  std::size_t detections = 0;
  std::size_t misses = 0;
  std::size_t false_alarms = 0;
  double mean_delay = 0.0;    // NaN when nothing was detected
  double median_delay = 0.0;  // NaN when nothing was detected
  double mean_success_rate = 0.0;
  double std_success_rate = 0.0;
  double mean_scan_calls = 0.0;
  double mean_wall_ms = 0.0;
  std::vector<std::size_t> detected_per_changepoint;
  std::vector<double> median_delay_per_changepoint;  // NaN when never detected
};

struct Metrics {
  std::vector<PolicySummary> policies;
  std::vector<RunMetrics> runs;  // successful runs, same order as the result
};

Metrics compute_metrics(const ExperimentResult& result, const Environment& env);

// --- studies ------------------------------------------------------------

struct BenchRun {
  std::uint64_t scan_calls = 0;
  std::uint64_t split_evals = 0;
  std::uint64_t restarts = 0;
  double wall_ms = 0.0;
};

struct BenchRow {
  std::string policy;
  Time horizon = 0;
  int max_phase = -1;  // ImpCPD's M at this horizon, -1 otherwise
  double median_wall_ms = 0.0;
  double mean_scan_calls = 0.0;
  double mean_split_evals = 0.0;
  std::vector<BenchRun> runs;
};

// Runs every policy `repeats` times per horizon on `env` truncated to that
// horizon (policies that need T see the truncated horizon).
std::vector<BenchRow> bench_detection_cost(const Environment& env, std::span<const PolicyConfig> policies,
                                           const BenchConfig& bench, std::uint64_t seed);

// Segments of length ceil(base_cost * eta), one per row of `base_means`.
Environment eta_environment(const std::vector<std::vector<double>>& base_means, double eta, double base_cost,
                            RewardModel model = RewardModel::bernoulli());

struct EtaSweepRow {
  double eta = 0.0;
  Time segment_length = 0;
  std::string policy;
  double mean_success_rate = 0.0;
  double std_success_rate = 0.0;
  std::size_t failed = 0;
};

std::vector<EtaSweepRow> eta_sweep(const EtaSweepConfig& sweep, RewardModel model,
                                   std::span<const PolicyConfig> policies, ReplicationRange replications,
                                   std::uint64_t seed, const RunOptions& options = {});

// --- output ---------------------------------------------------------------

void write_traces_csv(std::ostream& out, const ExperimentResult& result);
void write_events_csv(std::ostream& out, const Metrics& metrics);
void write_summary_csv(std::ostream& out, const Metrics& metrics);
void write_bench_csv(std::ostream& out, std::span<const BenchRow> rows);
void write_eta_sweep_csv(std::ostream& out, std::span<const EtaSweepRow> rows);
std::string bounds_json(const Environment& env, const BoundReport& bounds, const AssumptionReport& assumptions);

}  // namespace pwb
