#include <cmath>
#include <map>

#include "doctest.h"
#include "pwbandit/error.hpp"
#include "pwbandit/policies.hpp"

using namespace pwb;

namespace {

// Feeds `policy` a reward stream chosen by `reward(arm, t)` for T steps.
template <class Fn>
std::vector<StepOutcome> drive(Policy& policy, Time T, Fn reward) {
  std::vector<StepOutcome> out;
  for (Time t = 1; t <= T; ++t) {
    const auto arm = policy.select(t);
    out.push_back(policy.observe(arm, reward(arm, t), t));
  }
  return out;
}

}  // namespace

TEST_SUITE("policies") {
  TEST_CASE("ucb1 index") {
    CHECK(ucb1_index(0.5, 4, 100) == doctest::Approx(2.017427).epsilon(1e-6));
    CHECK(ucb1_index(0.3, 7, 1) == 0.3);
    CHECK(ucb1_index(0.0, 16, 50) == doctest::Approx(ucb1_index(0.0, 4, 50) / 2).epsilon(1e-14));
    CHECK_THROWS_AS(ucb1_index(0.5, 0, 3), Error);
  }

  TEST_CASE("discounted ucb") {
    CHECK(default_ducb_discount(4000) == doctest::Approx(0.996047).epsilon(1e-6));
    DiscountedUcb p(1, 0.5);
    p.observe(0, 1.0, 1);
    p.observe(0, 0.0, 2);
    CHECK(p.discounted_count(0) == doctest::Approx(1.5));
    CHECK(p.discounted_mean(0) == doctest::Approx(1.0 / 3));
    CHECK(p.index(0) == doctest::Approx(1.138781).epsilon(1e-6));
    CHECK(ducb_index(0.5, 1.5, 1.5, 0.6) - 0.5 / 1.5 == doctest::Approx(0.805448).epsilon(1e-6));

    // Identity discount is plain counting.
    DiscountedUcb q(2, 1.0);
    drive(q, 30, [](std::size_t a, Time t) { return a == 0 ? 1.0 : static_cast<double>(t % 2); });
    CHECK(q.discounted_count(0) + q.discounted_count(1) == doctest::Approx(30.0));
    CHECK(q.discounted_mean(0) == 1.0);
    CHECK_THROWS_AS(DiscountedUcb(2, 0.9).index(1), Error);
  }

  TEST_CASE("sliding window ucb") {
    CHECK(default_swucb_window(4000) == 729);
    CHECK(swucb_index(1.0, 2, 10, 4, 0.6) == doctest::Approx(2.289788).epsilon(1e-6));
    CHECK(std::isinf(swucb_index(0.0, 0, 10, 4, 0.6)));

    // Window covers [t - W, t - 1]: after W steps away the arm is refreshed.
    SlidingWindowUcb p(2, 4);
    p.observe(0, 1.0, 1);
    p.observe(0, 1.0, 2);
    p.observe(1, 0.0, 3);
    CHECK(p.index(0, 5) == doctest::Approx(1.0 + 2 * std::sqrt(0.6 * std::log(4.0) / 2)));
    CHECK(std::isinf(p.index(0, 7)));

    // W >= t reproduces the full-history mean.
    SlidingWindowUcb w(2, 1000);
    w.observe(0, 1.0, 1);
    w.observe(0, 0.0, 2);
    CHECK(w.index(0, 3) == doctest::Approx(0.5 + 2 * std::sqrt(0.6 * std::log(3.0) / 2)));
  }

  TEST_CASE("discounted thompson sampling updates") {
    DiscountedTs p(2, 0.75, 1);
    p.set_posterior(0, 4.0, 0.0);
    p.observe(0, 1.0, 1);
    CHECK(p.successes(0) == doctest::Approx(4.0));
    CHECK(p.failures(0) == doctest::Approx(0.0));

    DiscountedTs u(1, 1.0, 2);
    double prev = 0.0;
    for (Time t = 1; t <= 20; ++t) {
      u.observe(0, 1.0, t);
      const double m = (u.successes(0) + 1) / (u.successes(0) + u.failures(0) + 2);
      CHECK(m > prev);
      prev = m;
    }

    // Fresh posteriors choose uniformly.
    DiscountedTs f(4, 0.75, 3);
    std::map<std::size_t, int> hits;
    for (Time t = 1; t <= 10000; ++t) ++hits[f.select(t)];
    for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(hits[i] / 10000.0 - 0.25) <= 0.02);

    // Non-binary rewards relax to a coin flip.
    DiscountedTs r(1, 1.0, 4);
    for (Time t = 1; t <= 4000; ++t) r.observe(0, 0.3, t);
    CHECK(r.successes(0) + r.failures(0) == doctest::Approx(4000.0));
    CHECK(r.successes(0) / 4000.0 == doctest::Approx(0.3).epsilon(0.1));
  }

  TEST_CASE("ucbl selection") {
    CpdUcb p(2, {});
    CHECK(p.select(1) == 0);
    p.observe(0, 1.0, 1);
    CHECK(p.select(2) == 1);
    p.observe(1, 0.0, 2);
    CHECK(p.delta_at(3) == doctest::Approx(1.0 / 3));
    CHECK(p.index(0, 3) == doctest::Approx(1.0 + 1.202160).epsilon(1e-6));
    CHECK(p.index(1, 3) == doctest::Approx(1.202160).epsilon(1e-6));
    CHECK(p.select(3) == 0);

    CpdUcb q(3, {});
    std::vector<std::size_t> first;
    for (Time t = 1; t <= 3; ++t) {
      first.push_back(q.select(t));
      CHECK(q.observe(first.back(), 0.5, t).forced_init);
    }
    CHECK(first == std::vector<std::size_t>{0, 1, 2});
    CHECK(q.select(4) == 0);  // identical logs: lowest index
  }

  TEST_CASE("ucbl restarts on a step and re-initialises") {
    CpdUcb p(2, {});
    // Both arms pay 0 until arm 0 has 50 pulls; from then on arm 0 pays 1.
    int pulls0 = 0;
    std::optional<Time> restart_at;
    std::optional<Detection> det;
    for (Time t = 1; t <= 3000 && !restart_at; ++t) {
      const auto arm = p.select(t);
      double r = 0.0;
      if (arm == 0) r = pulls0++ < 50 ? 0.0 : 1.0;
      const auto out = p.observe(arm, r, t);
      if (out.restart) {
        restart_at = t;
        det = out.restart->detection;
      }
    }
    REQUIRE(restart_at);
    REQUIRE(det);
    CHECK(det->arm == 0);
    CHECK(pulls0 <= 100);
    CHECK(det->split <= 50);
    CHECK(p.tracker().count(0) == 0);
    CHECK(p.tracker().count(1) == 0);
    CHECK(p.counters().restarts == 1);
    for (Time t = *restart_at + 1; t <= *restart_at + 2; ++t) {
      const auto arm = p.select(t);
      CHECK(p.observe(arm, 0.5, t).forced_init);
    }
  }

  TEST_CASE("constant rewards never restart and scan every free step") {
    CpdUcb p(3, {});
    const auto out = drive(p, 1000, [](std::size_t a, Time) { return 0.2 + 0.3 * a; });
    for (const auto& o : out) CHECK_FALSE(o.restart);
    CHECK(p.counters().scan_calls == 1000 - 3);
  }

  TEST_CASE("impcpd schedule constants") {
    ImpCpd p(3, 4000, {});
    CHECK(p.psi() == doctest::Approx(1618203.0695588).epsilon(1e-7));
    CHECK(std::log(p.psi()) == doctest::Approx(14.296827).epsilon(1e-6));
    CHECK(p.phase_length() == 8);
    CHECK(p.max_phase() == 74);
    CHECK(impcpd_max_phase(4000, 0.05) == 74);
    CHECK(p.phase_end() == 24);
    CHECK(p.epsilon() == 1.0);
  }

  TEST_CASE("impcpd phases on a stationary stream") {
    ImpCpd p(3, 4000, {});
    double eps = p.epsilon();
    std::int64_t ell = p.phase_length();
    int phase = 0;
    for (Time t = 1; t <= 4000; ++t) {
      const auto arm = p.select(t);
      const auto out = p.observe(arm, 0.5, t);
      CHECK_FALSE(out.restart);
      if (p.phase() != phase) {
        CHECK(p.phase() == phase + 1);
        CHECK(p.epsilon() == doctest::Approx(eps / 1.05).epsilon(1e-15));
        CHECK(p.phase_length() >= ell);
        CHECK(p.active_count() >= 1);
        CHECK(p.phase_end() > t);
        eps = p.epsilon();
        ell = p.phase_length();
        phase = p.phase();
      }
    }
    CHECK(p.phase() > 0);
    CHECK(p.counters().scan_calls <= static_cast<std::uint64_t>(p.max_phase() + 1));
    CHECK(p.boundaries()[0].size() == static_cast<std::size_t>(p.phase()));
  }

  TEST_CASE("impcpd pseudo-elimination floors at one arm") {
    ImpCpd p(3, 200000, {0.5, 1.5});
    for (Time t = 1; t <= 20000; ++t) {
      const auto arm = p.select(t);
      p.observe(arm, arm == 0 ? 1.0 : 0.0, t);
      CHECK(p.active_count() >= 1);
    }
    CHECK(p.active_count() == 1);
  }

  TEST_CASE("impcpd detects a step at a phase boundary") {
    ImpCpd p(1, 4000, {});
    std::optional<Detection> det;
    for (Time t = 1; t <= 2000 && !det; ++t) {
      p.select(t);
      const auto out = p.observe(0, p.tracker().count(0) < 60 ? 0.0 : 1.0, t);
      if (out.restart) det = out.restart->detection;
    }
    REQUIRE(det);
    CHECK(det->family == RadiusFamily::Phase);
    CHECK(p.epsilon() == 1.0);
    CHECK(p.phase() == 0);
    CHECK(p.tracker().count(0) == 0);
  }

  TEST_CASE("argmax ignores a common shift") {
    ImpCpd a(3, 4000, {});
    ImpCpd b(3, 4000, {});
    const auto ra = drive(a, 300, [](std::size_t i, Time t) { return ((t * 7 + i * 3) % 10) / 20.0; });
    const auto rb = drive(b, 300, [](std::size_t i, Time t) { return 0.5 + ((t * 7 + i * 3) % 10) / 20.0; });
    for (std::size_t k = 0; k < ra.size(); ++k) CHECK(ra[k].arm == rb[k].arm);
  }

  TEST_CASE("oracle wrapper") {
    PolicyContext none{2, 100, {}, 5};
    PolicyContext two{2, 100, {40, 70}, 5};
    auto base = make_policy(named_policy("ucb1"), none);
    auto wrapped = make_policy(named_policy("oracle-ucb1"), none);
    auto reward = [](std::size_t a, Time t) { return a == 1 ? 0.7 : static_cast<double>(t % 3 == 0); };
    const auto x = drive(*base, 100, reward);
    const auto y = drive(*wrapped, 100, reward);
    for (std::size_t k = 0; k < x.size(); ++k) CHECK(x[k].arm == y[k].arm);

    auto o = make_policy(named_policy("oracle-ts"), two);
    std::vector<Time> restarts;
    for (Time t = 1; t <= 100; ++t) {
      const auto arm = o->select(t);
      const auto out = o->observe(arm, 1.0, t);
      if (out.restart) {
        restarts.push_back(out.restart->time);
        CHECK_FALSE(out.restart->detection);
      }
    }
    CHECK(restarts == std::vector<Time>{40, 70});
  }

  TEST_CASE("named configs") {
    CHECK(named_policy("ucb-cpd").radius == RadiusFamily::Union);
    CHECK(named_policy("ucbp-cpd").radius == RadiusFamily::Peeling);
    CHECK(named_policy("dts").discount == 0.75);
    CHECK_THROWS_AS(named_policy("exp3"), Error);
    CpdUcb peel(2, {RadiusFamily::Peeling, 1.5, {}});
    CHECK(peel.radius_kind() == RadiusKind::peeling(1.5));
  }
}
