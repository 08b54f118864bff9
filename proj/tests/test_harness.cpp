#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "pwbandit/error.hpp"
#include "pwbandit/harness.hpp"

using namespace pwb;
namespace fs = std::filesystem;

namespace {

Environment expt1() {
  return build_environment({{1, {0.1, 0.2, 0.9}}, {1001, {0.4, 0.9, 0.1}}, {2001, {0.5, 0.1, 0.2}},
                            {3001, {0.2, 0.2, 0.3}}},
                           4000, RewardModel::bernoulli());
}

std::vector<PolicyConfig> policies(std::initializer_list<const char*> names) {
  std::vector<PolicyConfig> out;
  for (const char* n : names) out.push_back(named_policy(n));
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Compares against a checked-in file; PWBANDIT_UPDATE_GOLDEN=1 rewrites it.
void check_golden(const std::string& name, const std::string& text) {
  const fs::path p = fs::path(PWBANDIT_GOLDEN_DIR) / name;
  if (std::getenv("PWBANDIT_UPDATE_GOLDEN")) {
    std::ofstream(p) << text;
    return;
  }
  REQUIRE_MESSAGE(fs::exists(p), "missing golden file " << p.string());
  CHECK(slurp(p) == text);
}

// Independent UCB1 recursion on deterministic rewards.
double ucb1_reference_regret(const std::vector<double>& means, int T) {
  const std::size_t K = means.size();
  std::vector<double> n(K, 0), s(K, 0);
  const double best = *std::max_element(means.begin(), means.end());
  double regret = 0;
  for (int t = 1; t <= T; ++t) {
    std::size_t pick = K;
    for (std::size_t i = 0; i < K && pick == K; ++i)
      if (n[i] == 0) pick = i;
    if (pick == K) {
      double bv = -1e300;
      for (std::size_t i = 0; i < K; ++i) {
        const double v = s[i] / n[i] + std::sqrt(2 * std::log(double(t)) / n[i]);
        if (v > bv) {
          bv = v;
          pick = i;
        }
      }
    }
    n[pick] += 1;
    s[pick] += means[pick];
    regret += best - means[pick];
  }
  return regret;
}

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("two deterministic arms under ucb1") {
    const auto env = build_environment({{1, {1.0, 0.0}}}, 10, RewardModel::bernoulli());
    const auto run = run_single(env, named_policy("ucb1"), 0, 0, 1, 10);
    REQUIRE_FALSE(run.failed());
    CHECK(run.arms[0] == 0);
    CHECK(run.arms[1] == 1);
    const double reference = ucb1_reference_regret({1.0, 0.0}, 10);
    CHECK(reference == 2.0);  // frozen from the reference recursion
    CHECK(run.cum_regret.back() == reference);
    CHECK(run.arms[6] == 1);  // the padding of arm 2 overtakes at t = 7
  }

  TEST_CASE("single arm and empty runs") {
    const auto env = build_environment({{1, {0.4}}, {50, {0.8}}}, 100, RewardModel::bernoulli());
    for (const auto& p : policies({"ucbl-cpd", "impcpd", "ucb1", "ducb", "swucb", "dts", "oracle-ts"})) {
      const auto run = run_single(env, p, 0, 0, 3, 100);
      REQUIRE_MESSAGE(!run.failed(), run.error);
      CHECK(run.cum_regret.back() == 0.0);
    }
    const auto res = run_experiment(expt1(), policies({"ucb1"}), {0, 1}, 1, {1, Time{0}});
    for (const auto& r : res.runs) CHECK(r.steps() == 0);
    CHECK(compute_metrics(res, expt1()).runs.size() == 2);
  }

  TEST_CASE("trace invariants") {
    const auto env = expt1();
    const auto res = run_experiment(env, policies({"ucbl-cpd", "oracle-ucb1", "dts"}), {0, 1}, 9, {});
    for (const auto& run : res.runs) {
      REQUIRE_FALSE(run.failed());
      double prev = 0;
      for (std::size_t s = 0; s < run.steps(); ++s) {
        CHECK(run.inst_regret[s] >= 0.0);
        CHECK(run.cum_regret[s] >= prev);
        prev = run.cum_regret[s];
      }
      if (run.policy_name == "oracle-ucb1") {
        std::vector<Time> at;
        for (std::size_t s = 0; s < run.steps(); ++s)
          if (run.restart[s]) at.push_back(static_cast<Time>(s + 1));
        CHECK(at == env.changepoints());
      }
    }
  }

  TEST_CASE("worker count does not change results") {
    const auto env = expt1();
    const auto ps = policies({"ucbl-cpd", "impcpd", "dts", "swucb"});
    const auto a = run_experiment(env, ps, {0, 3}, 21, {1, {}});
    const auto b = run_experiment(env, ps, {0, 3}, 21, {3, {}});
    REQUIRE(a.runs.size() == b.runs.size());
    std::ostringstream sa, sb;
    write_traces_csv(sa, a);
    write_traces_csv(sb, b);
    CHECK(sa.str() == sb.str());
    for (std::size_t k = 1; k < a.runs.size(); ++k) {
      const auto& p = a.runs[k - 1];
      const auto& q = a.runs[k];
      CHECK(std::make_pair(p.replication, p.policy) < std::make_pair(q.replication, q.policy));
    }
  }

  TEST_CASE("policies share the reward tape") {
    const auto env = expt1();
    const auto res = run_experiment(env, policies({"ucbl-cpd", "ucb1", "dts", "impcpd"}), {4, 4}, 5, {});
    int shared = 0;
    for (std::size_t x = 0; x < res.runs.size(); ++x) {
      for (std::size_t y = x + 1; y < res.runs.size(); ++y) {
        const auto& a = res.runs[x];
        const auto& b = res.runs[y];
        for (std::size_t s = 0; s < a.steps(); ++s) {
          if (a.arms[s] == b.arms[s]) {
            CHECK(a.rewards[s] == b.rewards[s]);
            ++shared;
          }
        }
      }
    }
    CHECK(shared > 1000);
  }

  TEST_CASE("detection attribution") {
    const auto env = build_environment({{1, {0.5, 0.6}}, {1000, {0.6, 0.5}}, {2000, {0.5, 0.6}}, {3000, {0.6, 0.5}}},
                                       4000, RewardModel::bernoulli());
    auto run = run_single(env, named_policy("ucb1"), 0, 0, 1, 4000);
    auto det = [](Time t) { return RestartEvent{t, Detection{0, 5, t}}; };
    run.restarts = {det(500), det(1042), det(1100), det(2500)};
    const auto m = compute_run_metrics(run, env);
    REQUIRE(m.delays.size() == 3);
    CHECK(m.delays[0] == std::optional<Time>{42});
    CHECK(m.delays[1] == std::optional<Time>{500});
    CHECK_FALSE(m.delays[2]);
    CHECK(m.detections == 2);
    CHECK(m.misses == 1);
    CHECK(m.false_alarms == 2);
    CHECK(m.success_rate == doctest::Approx(2.0 / 3));
    CHECK(m.detections + m.misses == env.changepoint_count());
    CHECK(m.decomposed_regret == doctest::Approx(m.final_regret).epsilon(1e-12));

    // A restart exactly at t_g belongs to the previous window.
    run.restarts = {det(1000)};
    CHECK(compute_run_metrics(run, env).false_alarms == 1);
    run.restarts = {det(4000)};
    CHECK(compute_run_metrics(run, env).delays[2] == std::optional<Time>{1000});
  }

  TEST_CASE("tampered traces are rejected") {
    const auto env = expt1();
    auto run = run_single(env, named_policy("ucbl-cpd"), 0, 0, 1, 4000);
    CHECK_NOTHROW(compute_run_metrics(run, env));
    run.cum_regret[1500] += 1e-6;
    try {
      compute_run_metrics(run, env);
      FAIL("expected InconsistentTrace");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::InconsistentTrace);
    }
  }

  TEST_CASE("failed runs are quarantined and counted") {
    // psi * eps^2 <= 1 for K = 3 at T = 2: ImpCPD cannot start.
    const auto env = build_environment({{1, {0.2, 0.5, 0.6}}}, 2, RewardModel::bernoulli());
    const auto res = run_experiment(env, policies({"impcpd", "ucb1"}), {0, 2}, 1, {});
    const auto m = compute_metrics(res, env);
    CHECK(m.policies[0].failed == 3);
    CHECK(m.policies[0].runs == 3);
    CHECK(m.policies[1].failed == 0);
    CHECK(m.runs.size() == 3);
    std::ostringstream out;
    write_summary_csv(out, m);
    CHECK(out.str().find("impcpd,,,0,0,0,,,,3") != std::string::npos);
  }

  TEST_CASE("ucbl scan count identity") {
    const auto env = expt1();
    for (std::size_t rep = 0; rep < 5; ++rep) {
      const auto run = run_single(env, named_policy("ucbl-cpd"), 0, rep, 8, 4000);
      CHECK(run.counters.scan_calls == 4000 - 3 * (1 + run.counters.restarts));
    }
  }

  TEST_CASE("replication ranges") {
    const auto r = parse_replication_range("3..7");
    CHECK(r.first == 3);
    CHECK(r.last == 7);
    CHECK(r.size() == 5);
    CHECK(parse_replication_range("4").size() == 1);
    CHECK_THROWS_AS(parse_replication_range("7..3"), Error);
    CHECK_THROWS_AS(parse_replication_range("a..b"), Error);
  }

  TEST_CASE("config parsing") {
    const auto cfg = parse_config(R"({
      "environment": {"horizon": 2000, "reward_model": {"kind": "gaussian_clipped", "variance": 0.25},
                      "segments": [[1, 0.1, 0.2], {"start": 1001, "means": [0.5, 0.4]}]},
      "policies": ["ucbl-cpd", {"name": "ucbp-cpd", "label": "peel2", "params": {"alpha": 2.0}},
                   {"name": "impcpd", "params": {"gamma": 0.1}}, {"name": "ducb", "params": {"discount": 0.99}}],
      "replications": 7, "seed": 42,
      "eta_sweep": {"etas": [0.5, 1.0], "base_cost": 200},
      "bench": {"horizons": [500, 1000]}
    })");
    CHECK(cfg.environment.changepoint_count() == 1);
    CHECK(cfg.environment.reward_model().sigma == doctest::Approx(0.5));
    REQUIRE(cfg.policies.size() == 4);
    CHECK(cfg.policies[1].name == "peel2");
    CHECK(cfg.policies[1].alpha == 2.0);
    CHECK(cfg.policies[2].gamma == 0.1);
    CHECK(cfg.policies[3].discount == 0.99);
    CHECK(cfg.replications == 7);
    CHECK(cfg.seed == 42);
    REQUIRE(cfg.eta_sweep);
    CHECK(cfg.eta_sweep->base_means.size() == 2);
    REQUIRE(cfg.bench);
    CHECK(cfg.bench->repeats == 5);

    auto c2 = cfg;
    apply_radius_override(c2, RadiusFamily::Union);
    CHECK(c2.policies[0].radius == RadiusFamily::Union);
    CHECK(c2.policies[1].radius == RadiusFamily::Union);
    CHECK(c2.policies[2].kind == PolicyKind::ImpCpd);

    CHECK_THROWS_AS(parse_config("{"), Error);
    CHECK_THROWS_AS(parse_config(R"({"policies": []})"), Error);
    CHECK_THROWS_AS(parse_config(R"({"environment": {"horizon": 10, "segments": [[1, 0.5]]},
                                     "policies": ["nope"]})"),
                    Error);
  }

  TEST_CASE("shipped configs load") {
    for (const char* name : {"expt1.json", "expt2_small_gaps.json", "expt3.json", "expt4_radius.json",
                             "expt5_bench.json", "eta_sweep.json"}) {
      CAPTURE(name);
      CHECK_NOTHROW(load_config(fs::path(PWBANDIT_CONFIG_DIR) / name));
    }
    const auto e1 = load_config(fs::path(PWBANDIT_CONFIG_DIR) / "expt1.json");
    CHECK(e1.environment == expt1());
    CHECK(validate_assumptions(e1.environment, 0.01, 0.5).global.passed);
    const auto e3 = load_config(fs::path(PWBANDIT_CONFIG_DIR) / "expt3.json");
    CHECK(validate_assumptions(e3.environment, 0.01, 0.5).global.passed);
    const auto e2 = load_config(fs::path(PWBANDIT_CONFIG_DIR) / "expt2_small_gaps.json");
    const auto a2 = validate_assumptions(e2.environment, 0.01, 0.5);
    CHECK((!a2.separated.passed || !a2.isolated.passed));
  }

  TEST_CASE("mean matrix csv") {
    const fs::path dir = fs::temp_directory_path() / "pwbandit_csv_test";
    fs::create_directories(dir);
    std::ofstream(dir / "two.csv") << "1,0.1,0.2,0.9\n1001,0.4,0.9,0.1\n";
    CHECK(load_mean_matrix_csv(dir / "two.csv", 2000).changepoint_count() == 1);
    std::ofstream(dir / "e1.csv") << "start,a,b,c\n1,0.1,0.2,0.9\n1001,0.4,0.9,0.1\n2001,0.5,0.1,0.2\n3001,0.2,0.2,0.3\n";
    CHECK(load_mean_matrix_csv(dir / "e1.csv", 4000) == expt1());
    std::ofstream(dir / "bad.csv") << "1,0.1,0.2\n5,0.3\n";
    CHECK_THROWS_AS(load_mean_matrix_csv(dir / "bad.csv", 100), Error);
    std::ofstream(dir / "range.csv") << "1,0.1,1.3\n";
    try {
      load_mean_matrix_csv(dir / "range.csv", 100);
      FAIL("expected MeanOutOfRange");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::MeanOutOfRange);
    }
    fs::remove_all(dir);
  }

  TEST_CASE("eta environments") {
    const std::vector<std::vector<double>> rows{{0.1, 0.2, 0.9}, {0.4, 0.9, 0.1}, {0.5, 0.1, 0.2}, {0.2, 0.2, 0.3}};
    CHECK(eta_environment(rows, 1.0, 1000, RewardModel::bernoulli()) == expt1());
    const auto half = eta_environment({{0.1}, {0.9}}, 0.5, 200);
    CHECK(half.changepoints() == std::vector<Time>{101});
    CHECK(half.horizon() == 200);
    CHECK(eta_environment({{0.1}, {0.9}}, 0.3, 10).changepoints() == std::vector<Time>{4});
    CHECK_THROWS_AS(eta_environment(rows, 0.0, 1000), Error);
    CHECK_THROWS_AS(eta_environment(rows, 1.5, 1000), Error);
  }

  TEST_CASE("bounds json") {
    const auto env = expt1();
    const auto j = nlohmann::json::parse(
        bounds_json(env, regret_bounds(env, {}), validate_assumptions(env, 0.01, 0.5)));
    CHECK(j.at("changepoints").size() == 3);
    CHECK(j.at("changepoint_gaps").size() == 3);
    CHECK(j.at("impcpd").at("c1").get<double>() == doctest::Approx(194481.0));
    CHECK(j.at("assumptions").at("global_changes").at("passed").get<bool>());
    CHECK(j.at("ucbl_cpd").contains("c_alt"));
  }

  TEST_CASE("golden outputs") {
    const auto env = expt1();
    const auto res = run_experiment(env, policies({"ucbl-cpd", "impcpd", "ucb1", "oracle-ts"}), {0, 1}, 123, {1, Time{40}});
    const auto m = compute_metrics(res, env);
    std::ostringstream traces, events, summary_header;
    write_traces_csv(traces, res);
    check_golden("traces_short.csv", traces.str());

    // A full-length run pins detection events and the summary columns that
    // do not depend on the clock.
    const auto full = run_experiment(env, policies({"ucbl-cpd", "impcpd"}), {0, 1}, 123, {});
    const auto fm = compute_metrics(full, env);
    write_events_csv(events, fm);
    check_golden("events_expt1.csv", events.str());

    std::ostringstream summary;
    write_summary_csv(summary, fm);
    std::string first_line = summary.str().substr(0, summary.str().find('\n') + 1);
    check_golden("summary_header.csv", first_line);
    std::ostringstream bench;
    write_bench_csv(bench, {});
    std::ostringstream eta;
    write_eta_sweep_csv(eta, {});
    check_golden("study_headers.csv", bench.str() + eta.str());
  }
}
