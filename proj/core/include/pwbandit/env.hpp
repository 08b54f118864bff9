#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace pwb {

using Time = std::int64_t;

// One piece of a piecewise-constant schedule. `start_time` is the first
// timestep at which `means` are in force.
struct Segment {
  Time start_time = 1;
  std::vector<double> means;

  bool operator==(const Segment&) const = default;
};

struct RewardModel {
  enum class Kind { Bernoulli, GaussianClipped };

  Kind kind = Kind::Bernoulli;
  double sigma = 0.0;

  static RewardModel bernoulli() { return {}; }
  static RewardModel gaussian_clipped(double sigma) { return {Kind::GaussianClipped, sigma}; }

  bool operator==(const RewardModel&) const = default;
};

// Coordinates of the reward tape shared by every policy of a replication.
struct RewardKey {
  std::uint64_t seed = 0;
  std::uint64_t replication = 0;
};

struct SegmentInfo {
  std::size_t index = 0;
  std::span<const double> means;
  std::size_t best_arm = 0;  // 0-based, lowest index on ties
  double best_mean = 0.0;
};

// Restless piecewise-i.i.d. environment: arm means depend on wall-clock
// time only. Immutable once built.
class Environment {
 public:
  static Environment build(std::vector<Segment> segments, Time horizon, RewardModel model);

  std::size_t arm_count() const noexcept { return arms_; }
  std::size_t segment_count() const noexcept { return segments_.size(); }
  std::size_t changepoint_count() const noexcept { return segments_.size() - 1; }
  Time horizon() const noexcept { return horizon_; }
  const RewardModel& reward_model() const noexcept { return model_; }
  const std::vector<Segment>& segments() const noexcept { return segments_; }

  // Start times of segments 1..G, i.e. the true changepoints t_g.
  std::vector<Time> changepoints() const;

  // Last timestep of segment g (T for the final one).
  Time segment_end(std::size_t g) const;

  std::size_t segment_index(Time t) const;
  SegmentInfo lookup(Time t) const;
  double mean(std::size_t arm, Time t) const;

  // Pure function of (key, t, arm); never of which arms were pulled before.
  double reward(std::size_t arm, Time t, RewardKey key) const;

  // Keeps only the segments that start at or before `horizon`.
  Environment truncated(Time horizon) const;

  bool operator==(const Environment&) const = default;

 private:
  Environment() = default;
  void check_time(Time t) const;

  std::vector<Segment> segments_;
  Time horizon_ = 0;
  RewardModel model_;
  std::size_t arms_ = 0;
  std::vector<std::size_t> best_arm_;
};

Environment build_environment(std::vector<Segment> segments, Time horizon, RewardModel model);

// Rows of `start_time,mean_1,...,mean_K`. When `boundaries` is non-empty
// the rows carry means only and row r starts at boundaries[r]. A
// non-numeric first line is treated as a header; blank lines and lines
// starting with '#' are skipped.
std::vector<Segment> parse_segments_csv(std::istream& in, std::span<const Time> boundaries = {});

}  // namespace pwb
