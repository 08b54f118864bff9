#include "pwbandit/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "pwbandit/error.hpp"

namespace pwb {

namespace {

void check_delta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw Error(Errc::InvalidDelta, "delta " + std::to_string(delta));
}

double positive_log(double x) { return std::max(0.0, std::log(x)); }

}  // namespace

std::int64_t min_samples(double window, double gap, double delta) {
  if (!(gap > 0.0)) throw Error(Errc::InvalidGap, "gap must be positive");
  if (!(window >= 1.0)) throw Error(Errc::InvalidCount, "window must be >= 1");
  check_delta(delta);
  return static_cast<std::int64_t>(std::ceil(0.5 * std::log(2.0 * window * window / delta) / (gap * gap)));
}

double oracle_delay_bound(double t, double gap, double delta, double eta, std::size_t arms) {
  if (!(eta > 0.0 && eta < 1.0)) throw Error(Errc::InvalidEta, "eta must lie in (0,1)");
  if (!(gap > 0.0)) throw Error(Errc::InvalidGap, "gap must be positive");
  check_delta(delta);
  if (arms == 0) return 0.0;
  const double k = static_cast<double>(arms);
  const double c = eta * std::log(t / delta);
  return c * k * std::log(t * t / delta) / (2.0 * gap * gap) + k * delta;
}

double detectable_gap_threshold(double window, double delta) {
  check_delta(delta);
  if (!(window >= 1.0)) throw Error(Errc::InvalidCount, "window must be >= 1");
  return std::sqrt(std::log(2.0 * window * window / delta) / (2.0 * window));
}

std::vector<double> optimality_gaps(const Environment& env, std::size_t segment) {
  const auto& means = env.segments().at(segment).means;
  const double best = *std::max_element(means.begin(), means.end());
  std::vector<double> gaps(means.size());
  for (std::size_t i = 0; i < means.size(); ++i) gaps[i] = best - means[i];
  return gaps;
}

GapProfile gap_profile(const Environment& env, double delta, std::span<const double> windows) {
  GapProfile p;
  p.delta = delta;
  p.floor = std::sqrt(std::numbers::e / static_cast<double>(env.horizon()));
  const auto& segs = env.segments();
  for (std::size_t g = 0; g < segs.size(); ++g) p.opt_gap.push_back(optimality_gaps(env, g));
  for (std::size_t g = 0; g + 1 < segs.size(); ++g) {
    ChangepointGaps c;
    c.segment = g;
    c.time = segs[g + 1].start_time;
    c.window = g < windows.size() ? windows[g] : static_cast<double>(segs[g + 1].start_time - segs[g].start_time);
    c.threshold = detectable_gap_threshold(c.window, delta);
    for (std::size_t i = 0; i < env.arm_count(); ++i) {
      const double gap = std::abs(segs[g].means[i] - segs[g + 1].means[i]);
      c.chg_gap.push_back(gap);
      c.delta_optimal.push_back(gap >= c.threshold);
      c.undetectable.push_back(gap >= p.floor && gap < c.threshold);
      c.below_floor.push_back(gap < p.floor);
    }
    p.changepoints.push_back(std::move(c));
  }
  return p;
}

HardnessReport hardness(const Environment& env, std::size_t segment, double delta, double window) {
  if (segment + 1 >= env.segment_count()) {
    throw Error(Errc::LastChangepoint, "segment " + std::to_string(segment) + " is not followed by a changepoint");
  }
  const auto& segs = env.segments();
  HardnessReport h;
  h.threshold = detectable_gap_threshold(window, delta);
  for (double gap : optimality_gaps(env, segment)) {
    if (gap > 0.0) h.optimality_sum += 1.0 / (gap * gap);
  }
  for (std::size_t i = 0; i < env.arm_count(); ++i) {
    const double gap = std::abs(segs[segment].means[i] - segs[segment + 1].means[i]);
    if (gap >= h.threshold) h.changepoint_sum += 1.0 / (gap * gap);
  }
  h.h1 = std::max(h.optimality_sum, h.changepoint_sum);
  const auto next = optimality_gaps(env, segment + 1);
  h.h2 = *std::max_element(next.begin(), next.end()) / h.threshold;
  const double k = static_cast<double>(env.arm_count());
  h.sandwich_holds = h.h2 <= h.h1 && h.h1 <= k * h.h2 / (h.threshold * h.threshold);
  return h;
}

BoundReport regret_bounds(const Environment& env, const BoundOptions& opt) {
  BoundReport r;
  const double T = static_cast<double>(env.horizon());
  const double t = opt.t.value_or(T);
  const double k = static_cast<double>(env.arm_count());
  const double log_t = std::log(t);
  const double log_T = std::log(T);
  if (!(opt.gamma > 0.0 && opt.gamma <= 1.0)) throw Error(Errc::InvalidConfig, "gamma must lie in (0,1]");

  r.gaps = gap_profile(env, opt.delta);
  const auto& gp = r.gaps;
  for (const auto& c : gp.changepoints) r.hardness.push_back(hardness(env, c.segment, opt.delta, c.window));

  for (std::size_t g = 0; g < gp.opt_gap.size(); ++g) {
    for (std::size_t i = 0; i < env.arm_count(); ++i) {
      const double gap = gp.opt_gap[g][i];
      if (gap > 0.0 && gap < gp.floor) r.small_gaps.push_back({g, i, false, gap});
    }
  }
  for (const auto& c : gp.changepoints) {
    for (std::size_t i = 0; i < env.arm_count(); ++i) {
      if (c.below_floor[i]) r.small_gaps.push_back({c.segment, i, true, c.chg_gap[i]});
    }
  }

  r.ucbl_cpd.eta_ok = opt.eta >= 6.0 / (2.0 * log_t + 1.0);
  r.impcpd.eta_ok = opt.eta >= 8.0 / (2.0 * log_T + 1.0);
  if (opt.strict) {
    if (!r.ucbl_cpd.eta_ok || !r.impcpd.eta_ok) throw Error(Errc::EtaTooSmall, "eta below the bound's validity threshold");
    if (!r.small_gaps.empty()) {
      const auto& f = r.small_gaps.front();
      throw Error(Errc::GapTooSmall, "segment " + std::to_string(f.segment) + " arm " + std::to_string(f.arm) +
                                         " gap " + std::to_string(f.gap) + " below sqrt(e/T)");
    }
  }

  // Largest undetectable gap, shared by the linear terms of both upper bounds.
  double worst_undetectable = 0.0;
  for (const auto& c : gp.changepoints) {
    for (std::size_t i = 0; i < env.arm_count(); ++i) {
      if (c.undetectable[i]) worst_undetectable = std::max(worst_undetectable, c.chg_gap[i]);
    }
  }

  auto& t1 = r.ucbl_cpd;
  for (std::size_t g = 0; g < gp.opt_gap.size(); ++g) {
    for (double gap : gp.opt_gap[g]) {
      if (gap > 0.0) t1.a += 6.0 * log_t / gap;
    }
  }
  for (std::size_t c = 0; c < gp.changepoints.size(); ++c) {
    const auto& cp = gp.changepoints[c];
    const double h2 = r.hardness[c].h2;
    for (std::size_t i = 0; i < env.arm_count(); ++i) {
      if (!cp.delta_optimal[i]) continue;
      t1.b += 16.0 * h2 * log_t / cp.chg_gap[i];
      t1.c += 30.0 * k * h2 * log_t / cp.threshold;
      t1.c_alt += (12.0 * k + 18.0) * h2 * log_t / cp.threshold;
    }
  }
  t1.d = worst_undetectable * t;
  t1.total = t1.a + t1.b + t1.c + t1.d;

  auto& t2 = r.impcpd;
  const double ratio = (1.0 + opt.gamma) / opt.gamma;
  t2.c1 = std::pow(ratio, 4.0);
  t2.c1_cubed = std::pow(ratio, 3.0);
  const double log_k = env.arm_count() > 1 ? std::log(k) : 0.0;
  const double phase_factor = 48.0 * k * std::log(T / k) * std::pow(k * log_k, 1.5);
  for (std::size_t g = 0; g < gp.opt_gap.size(); ++g) {
    for (std::size_t i = 0; i < env.arm_count(); ++i) {
      const double gap = gp.opt_gap[g][i];
      const bool chg_ok = g >= gp.changepoints.size() || gp.changepoints[g].chg_gap[i] >= gp.floor;
      if (gap < gp.floor || !chg_ok) continue;
      t2.a += t2.c1 * phase_factor * gap;
      t2.a_with_c1_cubed += t2.c1_cubed * phase_factor * gap;
      t2.b += 16.0 * positive_log(T * gap * gap / k) / gap;
    }
  }
  for (std::size_t c = 0; c < gp.changepoints.size(); ++c) {
    const auto& cp = gp.changepoints[c];
    const double h2 = r.hardness[c].h2;
    for (std::size_t i = 0; i < env.arm_count(); ++i) {
      if (!cp.delta_optimal[i]) continue;
      const double lg = positive_log(T * cp.chg_gap[i] * cp.chg_gap[i] / k);
      t2.c += 16.0 * h2 * lg / cp.chg_gap[i];
      t2.d += 16.0 * k * h2 * lg / cp.threshold;
    }
  }
  t2.e = worst_undetectable * T;
  t2.total = t2.a + t2.b + t2.c + t2.d + t2.e;

  const double G = static_cast<double>(std::max<std::size_t>(env.changepoint_count(), 1));
  auto& c1 = r.gap_independent;
  c1.ucbl_leading = std::sqrt(G * T) * log_T;
  c1.impcpd_leading = std::sqrt(G * T);
  const double constant_shape = std::pow(G, 1.5) * std::pow(k, 4.5) * log_k * log_k;
  c1.impcpd_constant = t2.c1 * constant_shape;
  c1.impcpd_constant_c1_cubed = t2.c1_cubed * constant_shape;

  auto& t3 = r.lower_bound;
  for (std::size_t g = 0; g < gp.opt_gap.size(); ++g) {
    double h1 = 0.0;
    for (double gap : gp.opt_gap[g]) {
      if (gap > 0.0) h1 += 1.0 / (gap * gap);
    }
    if (g < r.hardness.size()) h1 = r.hardness[g].h1;
    for (double gap : gp.opt_gap[g]) {
      if (gap > 0.0 && h1 > 0.0) t3.gap_dependent += positive_log(T / (G * h1)) / gap;
    }
  }
  t3.gap_independent = std::sqrt(k * G * T) / 20.0;
  return r;
}

AssumptionReport validate_assumptions(const Environment& env, double delta, double eta) {
  AssumptionReport rep;
  const auto gp = gap_profile(env, delta);
  const auto& segs = env.segments();
  const std::size_t arms = env.arm_count();

  for (std::size_t c = 0; c < gp.changepoints.size(); ++c) {
    const auto& cp = gp.changepoints[c];
    for (std::size_t i = 0; i < arms; ++i) {
      if (cp.chg_gap[i] == 0.0) rep.global.violations.push_back({c, i, 0.0});
    }

    // The oracle detector restarts on its easiest arm, so the largest gap
    // at this changepoint sets its delay.
    const double largest = *std::max_element(cp.chg_gap.begin(), cp.chg_gap.end());
    const Time next = c + 2 < segs.size() ? segs[c + 2].start_time : env.horizon() + 1;
    SeparationMargin m;
    m.changepoint = c;
    m.budget = eta * static_cast<double>(next - cp.time);
    m.delay_bound = largest > 0.0 ? oracle_delay_bound(static_cast<double>(cp.time), largest, delta, eta, arms)
                                  : std::numeric_limits<double>::infinity();
    if (!(m.delay_bound <= m.budget)) rep.separated.violations.push_back({c, std::nullopt, m.delay_bound - m.budget});
    rep.margins.push_back(m);

    for (std::size_t i = 0; i < arms; ++i) {
      if (cp.below_floor[i]) rep.isolated.violations.push_back({c, i, cp.chg_gap[i]});
      if (c > 0 && cp.undetectable[i] && gp.changepoints[c - 1].undetectable[i]) {
        rep.isolated.violations.push_back({c, i, cp.chg_gap[i]});
      }
    }
  }
  rep.global.passed = rep.global.violations.empty();
  rep.separated.passed = rep.separated.violations.empty();
  rep.isolated.passed = rep.isolated.violations.empty();
  return rep;
}

}  // namespace pwb
