#include "pwbandit/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "pwbandit/error.hpp"
#include "pwbandit/rng.hpp"

namespace pwb {

namespace {

constexpr std::uint64_t kPolicyStreamTag = 0x706f6c6963790001ULL;
constexpr double kRegretTolerance = 1e-9;

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::pair<double, double> mean_std(const std::vector<double>& v) {
  if (v.empty()) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() < 2) return {m, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

// Runs `jobs` indices on up to `threads` workers; job i writes slot i only.
template <class Fn>
void parallel_for(std::size_t jobs, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, jobs));
  if (threads == 1) {
    for (std::size_t i = 0; i < jobs; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < jobs; i = next++) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace

RunTrace run_single(const Environment& env, const PolicyConfig& config, std::size_t policy_index,
                    std::size_t replication, std::uint64_t seed, Time steps) {
  RunTrace run;
  run.replication = replication;
  run.policy = policy_index;
  run.policy_name = config.name;
  if (steps > env.horizon()) steps = env.horizon();
  if (steps < 0) steps = 0;

  const auto begin = std::chrono::steady_clock::now();
  try {
    PolicyContext ctx;
    ctx.arms = env.arm_count();
    ctx.horizon = env.horizon();
    ctx.changepoints = env.changepoints();
    ctx.rng_key = hash_key({seed, replication, policy_index, kPolicyStreamTag});
    auto policy = make_policy(config, ctx);

    const auto n = static_cast<std::size_t>(steps);
    run.arms.reserve(n);
    run.rewards.reserve(n);
    run.inst_regret.reserve(n);
    run.cum_regret.reserve(n);
    run.restart.reserve(n);

    const RewardKey key{seed, replication};
    double cumulative = 0.0;
    for (Time t = 1; t <= steps; ++t) {
      const std::size_t arm = policy->select(t);
      const double reward = env.reward(arm, t, key);
      const StepOutcome outcome = policy->observe(arm, reward, t);
      const SegmentInfo seg = env.lookup(t);
      const double inst = seg.best_mean - seg.means[arm];
      cumulative += inst;
      run.arms.push_back(static_cast<std::uint32_t>(arm));
      run.rewards.push_back(reward);
      run.inst_regret.push_back(inst);
      run.cum_regret.push_back(cumulative);
      run.restart.push_back(outcome.restart ? 1 : 0);
      if (outcome.restart) run.restarts.push_back(*outcome.restart);
    }
    run.counters = policy->counters();
  } catch (const std::exception& e) {
    run.error = e.what();
  }
  run.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - begin).count();
  return run;
}

ExperimentResult run_experiment(const Environment& env, std::span<const PolicyConfig> policies,
                                ReplicationRange replications, std::uint64_t seed, const RunOptions& options) {
  ExperimentResult result;
  for (const auto& p : policies) result.policy_names.push_back(p.name);
  const Time steps = options.horizon.value_or(env.horizon());
  const std::size_t np = policies.size();
  const std::size_t jobs = replications.size() * np;
  result.runs.resize(jobs);
  parallel_for(jobs, options.threads, [&](std::size_t job) {
    const std::size_t rep = replications.first + job / np;
    const std::size_t pol = job % np;
    result.runs[job] = run_single(env, policies[pol], pol, rep, seed, steps);
  });
  return result;
}

RunMetrics compute_run_metrics(const RunTrace& run, const Environment& env) {
  RunMetrics m;
  m.replication = run.replication;
  m.policy = run.policy;
  const std::size_t steps = run.steps();
  m.final_regret = steps ? run.cum_regret.back() : 0.0;

  // Regret through the pull-count decomposition, checked at every segment end.
  const std::size_t arms = env.arm_count();
  std::vector<std::vector<std::int64_t>> pulls(env.segment_count(), std::vector<std::int64_t>(arms, 0));
  double decomposed = 0.0;
  std::size_t seg = 0;
  std::vector<double> seg_gaps;
  std::size_t seg_gaps_index = env.segment_count();
  auto close_segment = [&](std::size_t g, std::size_t last_step) {
    const auto gaps = optimality_gaps(env, g);
    for (std::size_t i = 0; i < arms; ++i) decomposed += gaps[i] * static_cast<double>(pulls[g][i]);
    if (last_step > 0 && std::abs(decomposed - run.cum_regret[last_step - 1]) > kRegretTolerance) {
      throw Error(Errc::InconsistentTrace, "regret decomposition mismatch at t=" + std::to_string(last_step) +
                                               " (" + std::to_string(decomposed) + " vs " +
                                               std::to_string(run.cum_regret[last_step - 1]) + ")");
    }
  };
  for (std::size_t s = 0; s < steps; ++s) {
    const Time t = static_cast<Time>(s + 1);
    const std::size_t g = env.segment_index(t);
    while (seg < g) close_segment(seg++, s);
    ++pulls[g][run.arms[s]];
    if (seg_gaps_index != g) {
      seg_gaps = optimality_gaps(env, g);
      seg_gaps_index = g;
    }
    if (std::abs(run.inst_regret[s] - seg_gaps[run.arms[s]]) > kRegretTolerance) {
      throw Error(Errc::InconsistentTrace, "instantaneous regret mismatch at t=" + std::to_string(t));
    }
    const double prev = s ? run.cum_regret[s - 1] : 0.0;
    if (std::abs(run.cum_regret[s] - prev - run.inst_regret[s]) > kRegretTolerance) {
      throw Error(Errc::InconsistentTrace, "cumulative regret mismatch at t=" + std::to_string(t));
    }
  }
  if (steps > 0) {
    close_segment(seg, steps);
    for (std::size_t g = seg + 1; g < env.segment_count(); ++g) close_segment(g, steps);
  }
  m.decomposed_regret = decomposed;

  // Detection attribution.
  const auto cps = env.changepoints();
  const Time end = static_cast<Time>(steps);
  m.delays.assign(cps.size(), std::nullopt);
  for (const auto& r : run.restarts) {
    if (!r.detection) continue;
    EventRow ev;
    ev.replication = run.replication;
    ev.policy = run.policy_name;
    ev.time = r.time;
    ev.arm = r.detection->arm;
    ev.split = r.detection->split;
    ev.kind = EventKind::FalseAlarm;
    for (std::size_t g = 0; g < cps.size(); ++g) {
      const Time hi = g + 1 < cps.size() ? cps[g + 1] : env.horizon() + 1;
      if (r.time > cps[g] && r.time <= hi && !m.delays[g]) {
        m.delays[g] = r.time - cps[g];
        ev.kind = EventKind::Detection;
        ev.true_cp = cps[g];
        break;
      }
    }
    if (ev.kind == EventKind::Detection) {
      ++m.detections;
    } else {
      ++m.false_alarms;
    }
    m.events.push_back(std::move(ev));
  }
  // Changepoints the run never reached are neither detected nor missed.
  std::size_t reached = 0;
  for (Time cp : cps) reached += cp <= end ? 1 : 0;
  m.misses = reached - m.detections;
  m.success_rate = reached ? static_cast<double>(m.detections) / static_cast<double>(reached) : 1.0;
  return m;
}

Metrics compute_metrics(const ExperimentResult& result, const Environment& env) {
  Metrics metrics;
  const std::size_t np = result.policy_names.size();
  const std::size_t ncp = env.changepoint_count();
  std::vector<std::vector<double>> regrets(np), successes(np), delays(np), scans(np), walls(np);
  std::vector<std::vector<std::vector<double>>> cp_delays(np, std::vector<std::vector<double>>(ncp));
  metrics.policies.resize(np);
  for (std::size_t p = 0; p < np; ++p) {
    metrics.policies[p].policy = result.policy_names[p];
    metrics.policies[p].detected_per_changepoint.assign(ncp, 0);
  }

  for (const auto& run : result.runs) {
    auto& s = metrics.policies.at(run.policy);
    ++s.runs;
    if (run.failed()) {
      ++s.failed;
      continue;
    }
    RunMetrics m = compute_run_metrics(run, env);
    regrets[run.policy].push_back(m.final_regret);
    successes[run.policy].push_back(m.success_rate);
    scans[run.policy].push_back(static_cast<double>(run.counters.scan_calls));
    walls[run.policy].push_back(run.wall_ms);
    s.detections += m.detections;
    s.misses += m.misses;
    s.false_alarms += m.false_alarms;
    for (std::size_t g = 0; g < ncp; ++g) {
      if (m.delays[g]) {
        ++s.detected_per_changepoint[g];
        delays[run.policy].push_back(static_cast<double>(*m.delays[g]));
        cp_delays[run.policy][g].push_back(static_cast<double>(*m.delays[g]));
      }
    }
    metrics.runs.push_back(std::move(m));
  }

  for (std::size_t p = 0; p < np; ++p) {
    auto& s = metrics.policies[p];
    std::tie(s.mean_final_regret, s.std_final_regret) = mean_std(regrets[p]);
    std::tie(s.mean_success_rate, s.std_success_rate) = mean_std(successes[p]);
    s.mean_delay = mean_std(delays[p]).first;
    s.median_delay = median(delays[p]);
    s.mean_scan_calls = mean_std(scans[p]).first;
    s.mean_wall_ms = mean_std(walls[p]).first;
    for (std::size_t g = 0; g < ncp; ++g) s.median_delay_per_changepoint.push_back(median(cp_delays[p][g]));
  }
  return metrics;
}

std::vector<BenchRow> bench_detection_cost(const Environment& env, std::span<const PolicyConfig> policies,
                                           const BenchConfig& bench, std::uint64_t seed) {
  std::vector<BenchRow> rows;
  for (Time horizon : bench.horizons) {
    const Environment truncated = env.truncated(horizon);
    for (std::size_t p = 0; p < policies.size(); ++p) {
      BenchRow row;
      row.policy = policies[p].name;
      row.horizon = horizon;
      if (policies[p].kind == PolicyKind::ImpCpd) row.max_phase = impcpd_max_phase(horizon, policies[p].gamma);
      std::vector<double> walls;
      for (std::size_t rep = 0; rep < bench.repeats; ++rep) {
        RunTrace run = run_single(truncated, policies[p], p, rep, seed, horizon);
        if (run.failed()) throw Error(Errc::InvalidConfig, "bench run failed: " + run.error);
        row.runs.push_back({run.counters.scan_calls, run.counters.split_evals, run.counters.restarts, run.wall_ms});
        walls.push_back(run.wall_ms);
        row.mean_scan_calls += static_cast<double>(run.counters.scan_calls);
        row.mean_split_evals += static_cast<double>(run.counters.split_evals);
      }
      row.mean_scan_calls /= static_cast<double>(bench.repeats);
      row.mean_split_evals /= static_cast<double>(bench.repeats);
      row.median_wall_ms = median(walls);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

Environment eta_environment(const std::vector<std::vector<double>>& base_means, double eta, double base_cost,
                            RewardModel model) {
  if (!(eta > 0.0 && eta <= 1.0)) throw Error(Errc::InvalidEta, "eta must lie in (0,1]");
  if (base_means.empty()) throw Error(Errc::EmptySpec, "eta sweep needs base mean rows");
  const Time length = static_cast<Time>(std::ceil(base_cost * eta));
  if (length < 1) throw Error(Errc::InvalidConfig, "segment length must be >= 1");
  std::vector<Segment> segs;
  for (std::size_t g = 0; g < base_means.size(); ++g) {
    segs.push_back({1 + static_cast<Time>(g) * length, base_means[g]});
  }
  return build_environment(std::move(segs), static_cast<Time>(base_means.size()) * length, model);
}

std::vector<EtaSweepRow> eta_sweep(const EtaSweepConfig& sweep, RewardModel model,
                                   std::span<const PolicyConfig> policies, ReplicationRange replications,
                                   std::uint64_t seed, const RunOptions& options) {
  std::vector<EtaSweepRow> rows;
  for (double eta : sweep.etas) {
    const Environment env = eta_environment(sweep.base_means, eta, sweep.base_cost, model);
    const auto result = run_experiment(env, policies, replications, seed, options);
    const auto metrics = compute_metrics(result, env);
    for (const auto& s : metrics.policies) {
      rows.push_back({eta, env.segments().size() > 1 ? env.segments()[1].start_time - 1 : env.horizon(), s.policy,
                      s.mean_success_rate, s.std_success_rate, s.failed});
    }
  }
  return rows;
}

}  // namespace pwb
