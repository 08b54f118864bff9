#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pwbandit/confbounds.hpp"
#include "pwbandit/env.hpp"

namespace pwb {

// Per-arm observation logs since the last restart, with prefix sums so any
// slice mean costs O(1). Observation indices are per arm and 1-based: the
// slice (a, b] covers observations a+1..b of that arm.
class ArmTracker {
 public:
  explicit ArmTracker(std::size_t arms);

  std::size_t arm_count() const noexcept { return prefix_.size(); }

  // Appends `value` to `arm`'s log and advances the latest-observation time.
  void record(std::size_t arm, double value);

  // Drops every log. The new epoch's first timestep is `epoch_start`.
  void restart(Time epoch_start);

  std::int64_t count(std::size_t arm) const { return static_cast<std::int64_t>(prefix_.at(arm).size()) - 1; }
  std::int64_t total_count() const noexcept { return total_; }
  double sum(std::size_t arm, std::int64_t a, std::int64_t b) const;
  double slice_mean(std::size_t arm, std::int64_t a, std::int64_t b) const;
  double mean(std::size_t arm) const;

  Time epoch_start() const noexcept { return epoch_start_; }
  Time latest_time() const noexcept { return epoch_start_ + total_ - 1; }
  // t_p - t_s + 1: timesteps observed in the current epoch.
  std::int64_t elapsed() const noexcept { return total_; }

 private:
  std::vector<std::vector<long double>> prefix_;
  Time epoch_start_ = 1;
  std::int64_t total_ = 0;
};

enum class Direction {
  Up,    // post-split slice sits entirely above the pre-split slice
  Down,  // post-split slice sits entirely below
};

struct Detection {
  std::size_t arm = 0;
  std::int64_t split = 0;  // last observation index of the left slice
  Time time = 0;
  Direction direction = Direction::Up;
  RadiusFamily family = RadiusFamily::Laplace;

  bool operator==(const Detection&) const = default;
};

struct ScanStats {
  std::uint64_t calls = 0;
  std::uint64_t splits = 0;
};

// The UCB/LCB disjointness test at one split, given the two radii.
std::optional<Direction> split_disjoint(const ArmTracker& tracker, std::size_t arm, std::int64_t split,
                                        double left_radius, double right_radius);

// All-splits scan. For Union/Peeling the radius time argument is the
// tracker's elapsed time. First hit wins: lowest arm, then lowest split.
std::optional<Detection> cpd_scan(const ArmTracker& tracker, double delta, const RadiusKind& kind,
                                  ScanStats* stats = nullptr);

// Phase-boundary scan with the phase radius at tolerance `eps`.
// `boundaries[i]` lists split candidates for arm i in increasing order;
// entries outside [1, count(i) - 1] are skipped.
std::optional<Detection> cpdi_scan(const ArmTracker& tracker, std::span<const std::vector<std::int64_t>> boundaries,
                                   double eps, double psi, double alpha, ScanStats* stats = nullptr);

}  // namespace pwb
