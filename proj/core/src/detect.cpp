#include "pwbandit/detect.hpp"

#include <algorithm>
#include <string>

#include "pwbandit/error.hpp"

namespace pwb {

ArmTracker::ArmTracker(std::size_t arms) : prefix_(arms, std::vector<long double>{0.0L}) {}

void ArmTracker::record(std::size_t arm, double value) {
  if (arm >= prefix_.size()) throw Error(Errc::ArmOutOfRange, "arm " + std::to_string(arm));
  if (!(value >= 0.0 && value <= 1.0)) {
    throw Error(Errc::ValueOutOfRange, "observation " + std::to_string(value) + " outside [0,1]");
  }
  auto& p = prefix_[arm];
  p.push_back(p.back() + static_cast<long double>(value));
  ++total_;
}

void ArmTracker::restart(Time epoch_start) {
  for (auto& p : prefix_) p.assign(1, 0.0L);
  epoch_start_ = epoch_start;
  total_ = 0;
}

double ArmTracker::sum(std::size_t arm, std::int64_t a, std::int64_t b) const {
  const auto& p = prefix_.at(arm);
  return static_cast<double>(p[static_cast<std::size_t>(b)] - p[static_cast<std::size_t>(a)]);
}

double ArmTracker::slice_mean(std::size_t arm, std::int64_t a, std::int64_t b) const {
  if (a < 0 || b <= a || b > count(arm)) throw Error(Errc::InvalidCount, "empty or out-of-range slice");
  return sum(arm, a, b) / static_cast<double>(b - a);
}

double ArmTracker::mean(std::size_t arm) const {
  const std::int64_t n = count(arm);
  if (n == 0) throw Error(Errc::NoObservations, "arm " + std::to_string(arm) + " has no observations");
  return sum(arm, 0, n) / static_cast<double>(n);
}

std::optional<Direction> split_disjoint(const ArmTracker& tracker, std::size_t arm, std::int64_t split,
                                        double left_radius, double right_radius) {
  const std::int64_t n = tracker.count(arm);
  const double left = tracker.sum(arm, 0, split) / static_cast<double>(split);
  const double right = tracker.sum(arm, split, n) / static_cast<double>(n - split);
  if (left + left_radius < right - right_radius) return Direction::Up;
  if (left - left_radius > right + right_radius) return Direction::Down;
  return std::nullopt;
}

std::optional<Detection> cpd_scan(const ArmTracker& tracker, double delta, const RadiusKind& kind,
                                  ScanStats* stats) {
  if (stats) ++stats->calls;
  std::int64_t longest = 0;
  for (std::size_t i = 0; i < tracker.arm_count(); ++i) longest = std::max(longest, tracker.count(i));
  if (longest < 2) return std::nullopt;

  // Radii depend only on the side's count within one scan.
  const std::int64_t t = tracker.elapsed();
  std::vector<double> r(static_cast<std::size_t>(longest));
  for (std::int64_t n = 1; n < longest; ++n) r[static_cast<std::size_t>(n)] = radius(kind, n, t, delta);

  for (std::size_t arm = 0; arm < tracker.arm_count(); ++arm) {
    const std::int64_t n = tracker.count(arm);
    for (std::int64_t k = 1; k < n; ++k) {
      if (stats) ++stats->splits;
      auto dir = split_disjoint(tracker, arm, k, r[static_cast<std::size_t>(k)], r[static_cast<std::size_t>(n - k)]);
      if (dir) return Detection{arm, k, tracker.latest_time(), *dir, kind.family};
    }
  }
  return std::nullopt;
}

std::optional<Detection> cpdi_scan(const ArmTracker& tracker, std::span<const std::vector<std::int64_t>> boundaries,
                                   double eps, double psi, double alpha, ScanStats* stats) {
  if (stats) ++stats->calls;
  if (!(psi * eps * eps > 1.0)) {
    throw Error(Errc::DegenerateLog, "psi*eps^2 = " + std::to_string(psi * eps * eps) + " <= 1");
  }
  const std::size_t arms = std::min(boundaries.size(), tracker.arm_count());
  for (std::size_t arm = 0; arm < arms; ++arm) {
    const std::int64_t n = tracker.count(arm);
    for (std::int64_t k : boundaries[arm]) {
      if (k < 1 || k >= n) continue;
      if (stats) ++stats->splits;
      auto dir = split_disjoint(tracker, arm, k, phase_radius(k, eps, psi, alpha), phase_radius(n - k, eps, psi, alpha));
      if (dir) return Detection{arm, k, tracker.latest_time(), *dir, RadiusFamily::Phase};
    }
  }
  return std::nullopt;
}

}  // namespace pwb
