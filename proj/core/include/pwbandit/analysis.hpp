#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pwbandit/env.hpp"

namespace pwb {

// ceil(ln(2 x^2 / delta) / (2 gap^2)): samples needed so a slice mean over a
// window of length x stays within `gap` of its expectation w.p. 1 - delta.
std::int64_t min_samples(double window, double gap, double delta);

// Worst-case delay of the detector that starts exactly at the previous
// changepoint: C K ln(t^2/delta) / (2 gap^2) + K delta with C = eta ln(t/delta).
double oracle_delay_bound(double t, double gap, double delta, double eta, std::size_t arms);

// sqrt(ln(2 x^2 / delta) / (2x)).
double detectable_gap_threshold(double window, double delta);

// Optimality gaps mu* - mu_i of one segment (0 for the best arm).
std::vector<double> optimality_gaps(const Environment& env, std::size_t segment);

// Gaps at the changepoint that ends segment `segment` (i.e. where segment
// `segment + 1` starts).
struct ChangepointGaps {
  std::size_t segment = 0;
  Time time = 0;                    // start of segment + 1
  double window = 0.0;              // x used for the detectable threshold
  double threshold = 0.0;           // detectable gap at this changepoint
  std::vector<double> chg_gap;      // |mu_{i,g} - mu_{i,g+1}|
  std::vector<bool> delta_optimal;  // chg_gap >= threshold
  std::vector<bool> undetectable;   // sqrt(e/T) <= chg_gap < threshold
  std::vector<bool> below_floor;    // chg_gap < sqrt(e/T)
};

struct GapProfile {
  double delta = 0.0;
  double floor = 0.0;  // sqrt(e / T)
  std::vector<std::vector<double>> opt_gap;  // [segment][arm]
  std::vector<ChangepointGaps> changepoints;
};

// The window for changepoint g defaults to the length of the segment it
// ends (t_g - t_{g-1}); `windows`, when given, overrides it per changepoint.
GapProfile gap_profile(const Environment& env, double delta, std::span<const double> windows = {});

struct HardnessReport {
  double h1 = 0.0;
  double h2 = 0.0;
  double optimality_sum = 0.0;  // over suboptimal arms only
  double changepoint_sum = 0.0;  // over delta-optimal arms
  double threshold = 0.0;
  bool sandwich_holds = false;  // h2 <= h1 <= K h2 / threshold^2
};

// Hardness of the changepoint that ends segment `segment`, with window x.
HardnessReport hardness(const Environment& env, std::size_t segment, double delta, double window);

struct BoundOptions {
  std::optional<double> t;  // evaluation time for the anytime bound; default T
  double delta = 0.01;      // confidence used for the detectable thresholds
  double gamma = 0.05;
  double eta = 0.5;
  bool strict = false;      // throw EtaTooSmall / GapTooSmall instead of flagging
};

struct GapFlag {
  std::size_t segment = 0;
  std::size_t arm = 0;
  bool changepoint_gap = false;  // false: optimality gap
  double gap = 0.0;
};

struct UcblCpdBound {
  double a = 0.0, b = 0.0, c = 0.0, d = 0.0;
  double c_alt = 0.0;  // term (c) with coefficient 12K + 18 in place of 30K
  double total = 0.0;
  bool eta_ok = false;  // eta >= 6 / (2 ln t + 1)
};

struct ImpCpdBound {
  double a = 0.0, b = 0.0, c = 0.0, d = 0.0, e = 0.0;
  double c1 = 0.0;        // ((1+gamma)/gamma)^4
  double c1_cubed = 0.0;  // ((1+gamma)/gamma)^3, the constant quoted for gamma = 0.05
  double a_with_c1_cubed = 0.0;
  double total = 0.0;
  bool eta_ok = false;  // eta >= 8 / (2 ln T + 1)
};

struct GapIndependentBound {
  double ucbl_leading = 0.0;    // sqrt(G T) ln T
  double impcpd_leading = 0.0;  // sqrt(G T)
  double impcpd_constant = 0.0;  // C1 G^1.5 K^4.5 (ln K)^2
  double impcpd_constant_c1_cubed = 0.0;
};

struct LowerBound {
  double gap_dependent = 0.0;    // unit constant, "up to constants"
  double gap_independent = 0.0;  // sqrt(K G T) / 20
};

struct BoundReport {
  GapProfile gaps;
  std::vector<HardnessReport> hardness;  // one per changepoint
  UcblCpdBound ucbl_cpd;
  ImpCpdBound impcpd;
  GapIndependentBound gap_independent;
  LowerBound lower_bound;
  std::vector<GapFlag> small_gaps;  // nonzero gaps below sqrt(e/T)
};

BoundReport regret_bounds(const Environment& env, const BoundOptions& options);

struct AssumptionViolation {
  std::size_t changepoint = 0;  // 0-based index into env.changepoints()
  std::optional<std::size_t> arm;
  double value = 0.0;
};

struct AssumptionCheck {
  bool passed = true;
  std::vector<AssumptionViolation> violations;
};

struct SeparationMargin {
  std::size_t changepoint = 0;
  double delay_bound = 0.0;
  double budget = 0.0;  // eta (t_{g+1} - t_g)
};

struct AssumptionReport {
  AssumptionCheck global;     // every arm changes at every changepoint
  AssumptionCheck separated;  // oracle delay fits in the eta budget
  AssumptionCheck isolated;   // no consecutive undetectable gaps, none below sqrt(e/T)
  std::vector<SeparationMargin> margins;
};

AssumptionReport validate_assumptions(const Environment& env, double delta, double eta);

}  // namespace pwb
