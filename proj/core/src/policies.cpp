#include "pwbandit/policies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "pwbandit/error.hpp"
#include "pwbandit/rng.hpp"

namespace pwb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class IndexFn>
std::size_t argmax(std::size_t arms, IndexFn&& index) {
  std::size_t best = 0;
  double best_value = -kInf;
  for (std::size_t i = 0; i < arms; ++i) {
    const double v = index(i);
    if (v > best_value) {
      best = i;
      best_value = v;
    }
  }
  return best;
}

std::optional<std::size_t> first_unpulled(const ArmTracker& tracker) {
  for (std::size_t i = 0; i < tracker.arm_count(); ++i) {
    if (tracker.count(i) == 0) return i;
  }
  return std::nullopt;
}

void check_arm(std::size_t arm, std::size_t arms) {
  if (arm >= arms) throw Error(Errc::ArmOutOfRange, "arm " + std::to_string(arm));
}

}  // namespace

double ucb1_index(double mean, std::int64_t n, std::int64_t t) {
  if (n < 1) throw Error(Errc::InvalidCount, "ucb1 index needs n >= 1");
  return mean + std::sqrt(2.0 * std::log(static_cast<double>(t)) / static_cast<double>(n));
}

double ducb_index(double disc_sum, double disc_count, double total_disc_count, double xi) {
  if (!(disc_count > 0.0)) throw Error(Errc::NoObservations, "discounted count is zero");
  return disc_sum / disc_count + 2.0 * std::sqrt(xi * std::log(total_disc_count) / disc_count);
}

double swucb_index(double window_mean, std::int64_t n_window, std::int64_t t, std::int64_t window, double xi) {
  if (n_window == 0) return kInf;
  const double horizon = static_cast<double>(std::min(t, window));
  return window_mean + 2.0 * std::sqrt(xi * std::log(horizon) / static_cast<double>(n_window));
}

double default_ducb_discount(Time horizon) {
  return 1.0 - 0.25 * std::sqrt(1.0 / static_cast<double>(horizon));
}

std::int64_t default_swucb_window(Time horizon) {
  const double T = static_cast<double>(horizon);
  return static_cast<std::int64_t>(std::ceil(4.0 * std::sqrt(T * std::log(T))));
}

// --- CpdUcb ---------------------------------------------------------------

CpdUcb::CpdUcb(std::size_t arms, CpdUcbParams params) : params_(params), tracker_(arms) {
  if (arms == 0) throw Error(Errc::InvalidConfig, "policy needs at least one arm");
  switch (params.radius) {
    case RadiusFamily::Laplace: kind_ = RadiusKind::laplace(); break;
    case RadiusFamily::Union: kind_ = RadiusKind::union_bound(); break;
    case RadiusFamily::Peeling: kind_ = RadiusKind::peeling(params.peeling_alpha); break;
    case RadiusFamily::Phase: throw Error(Errc::InvalidConfig, "CPD policies take laplace, union or peeling radii");
  }
  if (params.fixed_delta && !(*params.fixed_delta > 0.0 && *params.fixed_delta < 1.0)) {
    throw Error(Errc::InvalidDelta, "fixed delta must lie in (0,1)");
  }
}

double CpdUcb::delta_at(Time t) const {
  return params_.fixed_delta ? *params_.fixed_delta : 1.0 / static_cast<double>(t);
}

double CpdUcb::index(std::size_t arm, Time t) const {
  const std::int64_t n = tracker_.count(arm);
  // Radius time is the step being chosen, measured from the epoch start.
  const std::int64_t local_t = t - tracker_.epoch_start() + 1;
  return tracker_.mean(arm) + radius(kind_, n, local_t, delta_at(t));
}

std::size_t CpdUcb::select(Time t) {
  if (auto arm = first_unpulled(tracker_)) {
    last_forced_ = true;
    return *arm;
  }
  last_forced_ = false;
  return argmax(tracker_.arm_count(), [&](std::size_t i) { return index(i, t); });
}

StepOutcome CpdUcb::observe(std::size_t arm, double reward, Time t) {
  check_arm(arm, tracker_.arm_count());
  tracker_.record(arm, reward);
  StepOutcome out{arm, std::nullopt, last_forced_};
  if (last_forced_) return out;

  ScanStats stats;
  auto detection = cpd_scan(tracker_, delta_at(t), kind_, &stats);
  counters_.scan_calls += stats.calls;
  counters_.split_evals += stats.splits;
  if (detection) {
    detection->time = t;
    ++counters_.restarts;
    tracker_.restart(t + 1);
    out.restart = RestartEvent{t, detection};
  }
  return out;
}

void CpdUcb::reset(Time epoch_start) {
  tracker_.restart(epoch_start);
  last_forced_ = false;
}

// --- ImpCpd ---------------------------------------------------------------

double impcpd_psi(Time horizon, std::size_t arms) {
  const double T = static_cast<double>(horizon);
  const double K = static_cast<double>(arms);
  const double log_k = arms > 1 ? std::log(K) : std::numbers::ln2;
  return T * T / (K * K * log_k);
}

std::int64_t impcpd_phase_length(double psi, double eps) {
  const double arg = psi * eps * eps;
  if (!(arg > 1.0)) throw Error(Errc::DegenerateLog, "psi*eps^2 = " + std::to_string(arg) + " <= 1");
  return static_cast<std::int64_t>(std::ceil(std::log(arg) / (2.0 * eps)));
}

int impcpd_max_phase(Time horizon, double gamma) {
  return static_cast<int>(
      std::floor(0.5 * std::log(static_cast<double>(horizon) / std::numbers::e) / std::log1p(gamma)));
}

ImpCpd::ImpCpd(std::size_t arms, Time horizon, ImpCpdParams params)
    : params_(params),
      horizon_(horizon),
      psi_(0.0),
      max_phase_(0),
      tracker_(arms),
      boundaries_(arms),
      active_(arms, true) {
  if (arms == 0) throw Error(Errc::InvalidConfig, "policy needs at least one arm");
  if (horizon < 1) throw Error(Errc::InvalidConfig, "ImpCPD needs the horizon T >= 1");
  if (!(params.gamma > 0.0 && params.gamma <= 1.0)) throw Error(Errc::InvalidConfig, "ImpCPD gamma must lie in (0,1]");
  if (!(params.alpha > 0.0)) throw Error(Errc::InvalidAlpha, "ImpCPD alpha must be positive");
  psi_ = impcpd_psi(horizon, arms);
  max_phase_ = impcpd_max_phase(horizon, params.gamma);
  start_epoch(0);
}

void ImpCpd::start_epoch(Time restart_time) {
  tracker_.restart(restart_time + 1);
  for (auto& b : boundaries_) b.clear();
  std::fill(active_.begin(), active_.end(), true);
  eps_ = 1.0;
  phase_ = 0;
  ell_ = impcpd_phase_length(psi_, eps_);
  phase_end_ = restart_time + static_cast<Time>(active_.size()) * ell_;
  last_forced_ = false;
}

std::size_t ImpCpd::active_count() const noexcept {
  return static_cast<std::size_t>(std::count(active_.begin(), active_.end(), true));
}

double ImpCpd::radius(std::size_t arm) const {
  return phase_radius(tracker_.count(arm), eps_, psi_, params_.alpha);
}

double ImpCpd::index(std::size_t arm) const { return tracker_.mean(arm) + radius(arm); }

std::size_t ImpCpd::select(Time /*t*/) {
  if (auto arm = first_unpulled(tracker_)) {
    last_forced_ = true;
    return *arm;
  }
  last_forced_ = false;
  // Pseudo-elimination never restricts the choice: argmax over every arm.
  return argmax(tracker_.arm_count(), [&](std::size_t i) { return index(i); });
}

StepOutcome ImpCpd::observe(std::size_t arm, double reward, Time t) {
  check_arm(arm, tracker_.arm_count());
  tracker_.record(arm, reward);
  StepOutcome out{arm, std::nullopt, last_forced_};
  if (last_forced_ || t < phase_end_) return out;
  if (phase_ > max_phase_) {
    counters_.schedule_exhausted = true;
    return out;
  }

  ScanStats stats;
  auto detection = cpdi_scan(tracker_, boundaries_, eps_, psi_, params_.alpha, &stats);
  counters_.scan_calls += stats.calls;
  counters_.split_evals += stats.splits;
  if (detection) {
    detection->time = t;
    ++counters_.restarts;
    start_epoch(t);
    out.restart = RestartEvent{t, detection};
    return out;
  }

  const std::size_t arms = tracker_.arm_count();
  double max_lcb = -kInf;
  std::vector<double> ucb(arms);
  for (std::size_t i = 0; i < arms; ++i) {
    const double mu = tracker_.mean(i);
    const double r = radius(i);
    ucb[i] = mu + r;
    max_lcb = std::max(max_lcb, mu - r);
  }
  for (std::size_t i = 0; i < arms; ++i) {
    if (ucb[i] < max_lcb && active_[i] && active_count() > 1) active_[i] = false;
  }

  eps_ /= (1.0 + params_.gamma);
  ell_ = impcpd_phase_length(psi_, eps_);
  phase_end_ = t + static_cast<Time>(active_count()) * ell_;
  ++phase_;
  for (std::size_t i = 0; i < arms; ++i) boundaries_[i].push_back(tracker_.count(i));
  return out;
}

void ImpCpd::reset(Time epoch_start) { start_epoch(epoch_start - 1); }

// --- Ucb1 -----------------------------------------------------------------

Ucb1::Ucb1(std::size_t arms) : counts_(arms, 0), sums_(arms, 0.0) {
  if (arms == 0) throw Error(Errc::InvalidConfig, "policy needs at least one arm");
}

double Ucb1::index(std::size_t arm, Time t) const {
  return ucb1_index(sums_.at(arm) / static_cast<double>(counts_.at(arm)), counts_[arm], t - epoch_start_ + 1);
}

std::size_t Ucb1::select(Time t) {
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    if (counts_[i] == 0) {
      last_forced_ = true;
      return i;
    }
  }
  last_forced_ = false;
  return argmax(counts_.size(), [&](std::size_t i) { return index(i, t); });
}

StepOutcome Ucb1::observe(std::size_t arm, double reward, Time /*t*/) {
  check_arm(arm, counts_.size());
  ++counts_[arm];
  sums_[arm] += reward;
  return {arm, std::nullopt, last_forced_};
}

void Ucb1::reset(Time epoch_start) {
  std::fill(counts_.begin(), counts_.end(), 0);
  std::fill(sums_.begin(), sums_.end(), 0.0);
  epoch_start_ = epoch_start;
  last_forced_ = false;
}

// --- DiscountedUcb --------------------------------------------------------

DiscountedUcb::DiscountedUcb(std::size_t arms, double discount, double xi)
    : discount_(discount), xi_(xi), counts_(arms, 0.0), sums_(arms, 0.0) {
  if (arms == 0) throw Error(Errc::InvalidConfig, "policy needs at least one arm");
  if (!(discount > 0.0 && discount <= 1.0)) throw Error(Errc::InvalidConfig, "DUCB discount must lie in (0,1]");
}

double DiscountedUcb::discounted_mean(std::size_t arm) const {
  if (!(counts_.at(arm) > 0.0)) throw Error(Errc::NoObservations, "arm " + std::to_string(arm));
  return sums_[arm] / counts_[arm];
}

double DiscountedUcb::index(std::size_t arm) const {
  double total = 0.0;
  for (double c : counts_) total += c;
  return ducb_index(sums_.at(arm), counts_[arm], total, xi_);
}

std::size_t DiscountedUcb::select(Time /*t*/) {
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    if (counts_[i] == 0.0) {
      last_forced_ = true;
      return i;
    }
  }
  last_forced_ = false;
  return argmax(counts_.size(), [&](std::size_t i) { return index(i); });
}

StepOutcome DiscountedUcb::observe(std::size_t arm, double reward, Time /*t*/) {
  check_arm(arm, counts_.size());
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    counts_[i] *= discount_;
    sums_[i] *= discount_;
  }
  counts_[arm] += 1.0;
  sums_[arm] += reward;
  return {arm, std::nullopt, last_forced_};
}

void DiscountedUcb::reset(Time /*epoch_start*/) {
  std::fill(counts_.begin(), counts_.end(), 0.0);
  std::fill(sums_.begin(), sums_.end(), 0.0);
  last_forced_ = false;
}

// --- SlidingWindowUcb -----------------------------------------------------

SlidingWindowUcb::SlidingWindowUcb(std::size_t arms, std::int64_t window, double xi)
    : window_(window), xi_(xi), counts_(arms, 0), sums_(arms, 0.0) {
  if (arms == 0) throw Error(Errc::InvalidConfig, "policy needs at least one arm");
  if (window < 1) throw Error(Errc::InvalidConfig, "SWUCB window must be >= 1");
}

void SlidingWindowUcb::evict_before(Time first_kept) {
  while (!history_.empty() && history_.front().t < first_kept) {
    const Entry& e = history_.front();
    --counts_[e.arm];
    sums_[e.arm] -= e.reward;
    if (counts_[e.arm] == 0) sums_[e.arm] = 0.0;  // drop accumulated rounding
    history_.pop_front();
  }
}

double SlidingWindowUcb::index(std::size_t arm, Time t) {
  evict_before(t - window_);
  const std::int64_t n = counts_.at(arm);
  return swucb_index(n > 0 ? sums_[arm] / static_cast<double>(n) : 0.0, n, t, window_, xi_);
}

std::size_t SlidingWindowUcb::select(Time t) {
  evict_before(t - window_);
  last_forced_ = std::any_of(counts_.begin(), counts_.end(), [](std::int64_t c) { return c == 0; });
  return argmax(counts_.size(), [&](std::size_t i) { return index(i, t); });
}

StepOutcome SlidingWindowUcb::observe(std::size_t arm, double reward, Time t) {
  check_arm(arm, counts_.size());
  history_.push_back({t, arm, reward});
  ++counts_[arm];
  sums_[arm] += reward;
  return {arm, std::nullopt, last_forced_};
}

void SlidingWindowUcb::reset(Time /*epoch_start*/) {
  history_.clear();
  std::fill(counts_.begin(), counts_.end(), 0);
  std::fill(sums_.begin(), sums_.end(), 0.0);
  last_forced_ = false;
}

// --- DiscountedTs ---------------------------------------------------------

DiscountedTs::DiscountedTs(std::size_t arms, double discount, std::uint64_t rng_key)
    : discount_(discount), rng_key_(rng_key), successes_(arms, 0.0), failures_(arms, 0.0) {
  if (arms == 0) throw Error(Errc::InvalidConfig, "policy needs at least one arm");
  if (!(discount > 0.0 && discount <= 1.0)) throw Error(Errc::InvalidConfig, "DTS discount must lie in (0,1]");
}

std::size_t DiscountedTs::select(Time t) {
  CounterEngine eng(hash_key({rng_key_, static_cast<std::uint64_t>(t), 0}));
  return argmax(successes_.size(), [&](std::size_t i) {
    std::gamma_distribution<double> ga(successes_[i] + 1.0, 1.0);
    std::gamma_distribution<double> gb(failures_[i] + 1.0, 1.0);
    const double x = ga(eng);
    const double y = gb(eng);
    return x / (x + y);
  });
}

StepOutcome DiscountedTs::observe(std::size_t arm, double reward, Time t) {
  check_arm(arm, successes_.size());
  for (std::size_t i = 0; i < successes_.size(); ++i) {
    successes_[i] *= discount_;
    failures_[i] *= discount_;
  }
  double success = reward;
  if (reward != 0.0 && reward != 1.0) {
    CounterEngine eng(hash_key({rng_key_, static_cast<std::uint64_t>(t), 1}));
    success = eng.uniform() < reward ? 1.0 : 0.0;
  }
  successes_[arm] += success;
  failures_[arm] += 1.0 - success;
  return {arm, std::nullopt, false};
}

void DiscountedTs::reset(Time /*epoch_start*/) {
  std::fill(successes_.begin(), successes_.end(), 0.0);
  std::fill(failures_.begin(), failures_.end(), 0.0);
}

void DiscountedTs::set_posterior(std::size_t arm, double successes, double failures) {
  check_arm(arm, successes_.size());
  successes_[arm] = successes;
  failures_[arm] = failures;
}

// --- OracleRestart --------------------------------------------------------

OracleRestart::OracleRestart(std::unique_ptr<Policy> base, std::vector<Time> changepoints)
    : base_(std::move(base)), changepoints_(std::move(changepoints)) {
  std::sort(changepoints_.begin(), changepoints_.end());
}

std::size_t OracleRestart::select(Time t) {
  pending_reset_.reset();
  if (t > 1 && std::binary_search(changepoints_.begin(), changepoints_.end(), t)) {
    base_->reset(t);
    ++counters_.restarts;
    pending_reset_ = t;
  }
  return base_->select(t);
}

StepOutcome OracleRestart::observe(std::size_t arm, double reward, Time t) {
  StepOutcome out = base_->observe(arm, reward, t);
  if (pending_reset_) out.restart = RestartEvent{*pending_reset_, std::nullopt};
  return out;
}

void OracleRestart::reset(Time epoch_start) {
  base_->reset(epoch_start);
  pending_reset_.reset();
}

// --- factory --------------------------------------------------------------

std::string_view to_string(PolicyKind kind) noexcept {
  switch (kind) {
    case PolicyKind::CpdUcb: return "cpd-ucb";
    case PolicyKind::ImpCpd: return "impcpd";
    case PolicyKind::Ucb1: return "ucb1";
    case PolicyKind::Ducb: return "ducb";
    case PolicyKind::Swucb: return "swucb";
    case PolicyKind::Dts: return "dts";
    case PolicyKind::OracleUcb1: return "oracle-ucb1";
    case PolicyKind::OracleTs: return "oracle-ts";
  }
  return "unknown";
}

PolicyConfig named_policy(std::string_view name) {
  PolicyConfig c;
  c.name = std::string(name);
  if (name == "ucbl-cpd" || name == "cpd-ucb") {
    c.kind = PolicyKind::CpdUcb;
  } else if (name == "ucb-cpd") {
    c.kind = PolicyKind::CpdUcb;
    c.radius = RadiusFamily::Union;
  } else if (name == "ucbp-cpd") {
    c.kind = PolicyKind::CpdUcb;
    c.radius = RadiusFamily::Peeling;
  } else if (name == "impcpd") {
    c.kind = PolicyKind::ImpCpd;
  } else if (name == "ucb1") {
    c.kind = PolicyKind::Ucb1;
  } else if (name == "ducb") {
    c.kind = PolicyKind::Ducb;
  } else if (name == "swucb") {
    c.kind = PolicyKind::Swucb;
  } else if (name == "dts") {
    c.kind = PolicyKind::Dts;
    c.discount = 0.75;
  } else if (name == "oracle-ucb1") {
    c.kind = PolicyKind::OracleUcb1;
  } else if (name == "oracle-ts") {
    c.kind = PolicyKind::OracleTs;
  } else {
    throw Error(Errc::InvalidConfig, "unknown policy '" + std::string(name) + "'");
  }
  return c;
}

std::unique_ptr<Policy> make_policy(const PolicyConfig& config, const PolicyContext& ctx) {
  switch (config.kind) {
    case PolicyKind::CpdUcb:
      return std::make_unique<CpdUcb>(ctx.arms, CpdUcbParams{config.radius, config.alpha, config.delta});
    case PolicyKind::ImpCpd:
      return std::make_unique<ImpCpd>(ctx.arms, ctx.horizon, ImpCpdParams{config.gamma, config.alpha});
    case PolicyKind::Ucb1:
      return std::make_unique<Ucb1>(ctx.arms);
    case PolicyKind::Ducb:
      return std::make_unique<DiscountedUcb>(ctx.arms, config.discount.value_or(default_ducb_discount(ctx.horizon)),
                                             config.xi);
    case PolicyKind::Swucb:
      return std::make_unique<SlidingWindowUcb>(ctx.arms, config.window.value_or(default_swucb_window(ctx.horizon)),
                                                config.xi);
    case PolicyKind::Dts:
      return std::make_unique<DiscountedTs>(ctx.arms, config.discount.value_or(0.75), ctx.rng_key);
    case PolicyKind::OracleUcb1:
      return std::make_unique<OracleRestart>(std::make_unique<Ucb1>(ctx.arms), ctx.changepoints);
    case PolicyKind::OracleTs:
      return std::make_unique<OracleRestart>(std::make_unique<DiscountedTs>(ctx.arms, 1.0, ctx.rng_key),
                                             ctx.changepoints);
  }
  throw Error(Errc::InvalidConfig, "unhandled policy kind");
}

}  // namespace pwb
