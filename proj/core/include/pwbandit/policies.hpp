#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pwbandit/confbounds.hpp"
#include "pwbandit/detect.hpp"
#include "pwbandit/env.hpp"

namespace pwb {

// A restart. `detection` is empty for restarts that were not triggered by a
// detector (oracle resets at the true changepoints).
struct RestartEvent {
  Time time = 0;
  std::optional<Detection> detection;
};

struct StepOutcome {
  std::size_t arm = 0;
  std::optional<RestartEvent> restart;
  bool forced_init = false;  // post-(re)start round-robin pull
};

struct PolicyCounters {
  std::uint64_t scan_calls = 0;
  std::uint64_t split_evals = 0;
  std::uint64_t restarts = 0;
  bool schedule_exhausted = false;  // ImpCPD ran past its last phase in some epoch
};

// Uniform select/observe interface. `select(t)` must be followed by
// `observe(arm, reward, t)` for the same t before the next select.
class Policy {
 public:
  virtual ~Policy() = default;

  virtual std::size_t select(Time t) = 0;
  virtual StepOutcome observe(std::size_t arm, double reward, Time t) = 0;

  // Forget everything, as if the run started at `epoch_start`.
  virtual void reset(Time epoch_start) = 0;

  virtual std::size_t arm_count() const = 0;
  const PolicyCounters& counters() const noexcept { return counters_; }

 protected:
  PolicyCounters counters_;
};

// --- index formulas -------------------------------------------------------

// mean + sqrt(2 ln t / n).
double ucb1_index(double mean, std::int64_t n, std::int64_t t);

// Discounted UCB: disc_sum / disc_count + 2 sqrt(xi ln(total) / disc_count).
double ducb_index(double disc_sum, double disc_count, double total_disc_count, double xi);

// Sliding-window UCB: mean + 2 sqrt(xi ln(min(t, window)) / n_window).
double swucb_index(double window_mean, std::int64_t n_window, std::int64_t t, std::int64_t window, double xi);

// 1 - sqrt(1/T) / 4.
double default_ducb_discount(Time horizon);
// ceil(4 sqrt(T ln T)).
std::int64_t default_swucb_window(Time horizon);

// --- UCB with changepoint detection (UCBL-CPD and its siblings) -----------

struct CpdUcbParams {
  RadiusFamily radius = RadiusFamily::Laplace;
  double peeling_alpha = 1.5;
  std::optional<double> fixed_delta;  // default: delta(t) = 1/t
};

class CpdUcb final : public Policy {
 public:
  CpdUcb(std::size_t arms, CpdUcbParams params);

  std::size_t select(Time t) override;
  StepOutcome observe(std::size_t arm, double reward, Time t) override;
  void reset(Time epoch_start) override;
  std::size_t arm_count() const override { return tracker_.arm_count(); }

  double delta_at(Time t) const;
  double index(std::size_t arm, Time t) const;
  const ArmTracker& tracker() const noexcept { return tracker_; }
  const RadiusKind& radius_kind() const noexcept { return kind_; }

 private:
  CpdUcbParams params_;
  RadiusKind kind_;
  ArmTracker tracker_;
  bool last_forced_ = false;
};

// --- ImpCPD --------------------------------------------------------------

struct ImpCpdParams {
  double gamma = 0.05;
  double alpha = 1.5;
};

// psi = T^2 / (K^2 ln K). K = 1 uses ln 2 so that psi stays finite.
double impcpd_psi(Time horizon, std::size_t arms);
// ceil(ln(psi eps^2) / (2 eps)).
std::int64_t impcpd_phase_length(double psi, double eps);
// floor(0.5 log_{1+gamma}(T / e)).
int impcpd_max_phase(Time horizon, double gamma);

class ImpCpd final : public Policy {
 public:
  ImpCpd(std::size_t arms, Time horizon, ImpCpdParams params);

  std::size_t select(Time t) override;
  StepOutcome observe(std::size_t arm, double reward, Time t) override;
  void reset(Time epoch_start) override;
  std::size_t arm_count() const override { return tracker_.arm_count(); }

  double index(std::size_t arm) const;
  double epsilon() const noexcept { return eps_; }
  int phase() const noexcept { return phase_; }
  int max_phase() const noexcept { return max_phase_; }
  std::int64_t phase_length() const noexcept { return ell_; }
  Time phase_end() const noexcept { return phase_end_; }
  std::size_t active_count() const noexcept;
  double psi() const noexcept { return psi_; }
  const ArmTracker& tracker() const noexcept { return tracker_; }
  const std::vector<std::vector<std::int64_t>>& boundaries() const noexcept { return boundaries_; }

 private:
  void start_epoch(Time restart_time);
  double radius(std::size_t arm) const;

  ImpCpdParams params_;
  Time horizon_;
  double psi_;
  int max_phase_;
  ArmTracker tracker_;
  std::vector<std::vector<std::int64_t>> boundaries_;
  std::vector<bool> active_;
  double eps_ = 1.0;
  int phase_ = 0;
  std::int64_t ell_ = 0;
  Time phase_end_ = 0;
  bool last_forced_ = false;
};

// --- passive baselines ----------------------------------------------------

class Ucb1 final : public Policy {
 public:
  explicit Ucb1(std::size_t arms);

  std::size_t select(Time t) override;
  StepOutcome observe(std::size_t arm, double reward, Time t) override;
  void reset(Time epoch_start) override;
  std::size_t arm_count() const override { return counts_.size(); }

  double index(std::size_t arm, Time t) const;

 private:
  std::vector<std::int64_t> counts_;
  std::vector<double> sums_;
  Time epoch_start_ = 1;
  bool last_forced_ = false;
};

class DiscountedUcb final : public Policy {
 public:
  DiscountedUcb(std::size_t arms, double discount, double xi = 0.6);

  std::size_t select(Time t) override;
  StepOutcome observe(std::size_t arm, double reward, Time t) override;
  void reset(Time epoch_start) override;
  std::size_t arm_count() const override { return counts_.size(); }

  double index(std::size_t arm) const;
  double discounted_count(std::size_t arm) const { return counts_.at(arm); }
  double discounted_mean(std::size_t arm) const;

 private:
  double discount_;
  double xi_;
  std::vector<double> counts_;
  std::vector<double> sums_;
  bool last_forced_ = false;
};

class SlidingWindowUcb final : public Policy {
 public:
  SlidingWindowUcb(std::size_t arms, std::int64_t window, double xi = 0.6);

  std::size_t select(Time t) override;
  StepOutcome observe(std::size_t arm, double reward, Time t) override;
  void reset(Time epoch_start) override;
  std::size_t arm_count() const override { return counts_.size(); }

  // Index for selection at time t (window covers [t - W, t - 1]).
  double index(std::size_t arm, Time t);
  std::int64_t window() const noexcept { return window_; }

 private:
  struct Entry {
    Time t;
    std::size_t arm;
    double reward;
  };
  void evict_before(Time first_kept);

  std::int64_t window_;
  double xi_;
  std::deque<Entry> history_;
  std::vector<std::int64_t> counts_;
  std::vector<double> sums_;
  bool last_forced_ = false;
};

// Discounted Thompson sampling over Beta(S+1, F+1) posteriors. Randomness
// for step t comes from the counter stream (rng_key, t).
class DiscountedTs final : public Policy {
 public:
  DiscountedTs(std::size_t arms, double discount, std::uint64_t rng_key);

  std::size_t select(Time t) override;
  StepOutcome observe(std::size_t arm, double reward, Time t) override;
  void reset(Time epoch_start) override;
  std::size_t arm_count() const override { return successes_.size(); }

  double successes(std::size_t arm) const { return successes_.at(arm); }
  double failures(std::size_t arm) const { return failures_.at(arm); }
  void set_posterior(std::size_t arm, double successes, double failures);

 private:
  double discount_;
  std::uint64_t rng_key_;
  std::vector<double> successes_;
  std::vector<double> failures_;
};

// Resets the wrapped policy at every true changepoint.
class OracleRestart final : public Policy {
 public:
  OracleRestart(std::unique_ptr<Policy> base, std::vector<Time> changepoints);

  std::size_t select(Time t) override;
  StepOutcome observe(std::size_t arm, double reward, Time t) override;
  void reset(Time epoch_start) override;
  std::size_t arm_count() const override { return base_->arm_count(); }

 private:
  std::unique_ptr<Policy> base_;
  std::vector<Time> changepoints_;
  std::optional<Time> pending_reset_;
};

// --- construction from configuration -----------------------------------

enum class PolicyKind { CpdUcb, ImpCpd, Ucb1, Ducb, Swucb, Dts, OracleUcb1, OracleTs };

struct PolicyConfig {
  std::string name;  // label used in every output file
  PolicyKind kind = PolicyKind::CpdUcb;
  RadiusFamily radius = RadiusFamily::Laplace;  // CpdUcb only
  double alpha = 1.5;                           // peeling alpha (CpdUcb) or ImpCPD alpha
  std::optional<double> delta;                  // CpdUcb fixed delta; default 1/t
  double gamma = 0.05;                          // ImpCPD exploration parameter
  std::optional<double> discount;               // DUCB / DTS
  std::optional<std::int64_t> window;           // SWUCB
  double xi = 0.6;                              // DUCB / SWUCB padding constant
};

// Canonical configs: ucbl-cpd, ucb-cpd, ucbp-cpd, impcpd, ucb1, ducb,
// swucb, dts, oracle-ucb1, oracle-ts.
PolicyConfig named_policy(std::string_view name);
std::string_view to_string(PolicyKind kind) noexcept;

struct PolicyContext {
  std::size_t arms = 0;
  Time horizon = 0;
  std::vector<Time> changepoints;  // oracle policies only
  std::uint64_t rng_key = 0;       // policy-internal randomness
};

std::unique_ptr<Policy> make_policy(const PolicyConfig& config, const PolicyContext& context);

}  // namespace pwb
