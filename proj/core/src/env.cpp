#include "pwbandit/env.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numbers>
#include <sstream>
#include <string>

#include "pwbandit/error.hpp"
#include "pwbandit/rng.hpp"

namespace pwb {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::EmptySpec: return "EmptySpec";
    case Errc::UnsortedSegments: return "UnsortedSegments";
    case Errc::MeanOutOfRange: return "MeanOutOfRange";
    case Errc::RaggedRows: return "RaggedRows";
    case Errc::StartNotOne: return "StartNotOne";
    case Errc::InvalidHorizon: return "InvalidHorizon";
    case Errc::TimeOutOfRange: return "TimeOutOfRange";
    case Errc::ArmOutOfRange: return "ArmOutOfRange";
    case Errc::InvalidCount: return "InvalidCount";
    case Errc::InvalidDelta: return "InvalidDelta";
    case Errc::InvalidAlpha: return "InvalidAlpha";
    case Errc::DegenerateLog: return "DegenerateLog";
    case Errc::ValueOutOfRange: return "ValueOutOfRange";
    case Errc::InvalidGap: return "InvalidGap";
    case Errc::InvalidEta: return "InvalidEta";
    case Errc::LastChangepoint: return "LastChangepoint";
    case Errc::EtaTooSmall: return "EtaTooSmall";
    case Errc::GapTooSmall: return "GapTooSmall";
    case Errc::NoObservations: return "NoObservations";
    case Errc::ParseError: return "ParseError";
    case Errc::InconsistentTrace: return "InconsistentTrace";
    case Errc::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

Environment Environment::build(std::vector<Segment> segments, Time horizon, RewardModel model) {
  if (segments.empty()) throw Error(Errc::EmptySpec, "environment needs at least one segment");
  if (segments.front().start_time != 1) {
    throw Error(Errc::StartNotOne, "first segment starts at " + std::to_string(segments.front().start_time));
  }
  for (std::size_t g = 1; g < segments.size(); ++g) {
    if (segments[g].start_time <= segments[g - 1].start_time) {
      throw Error(Errc::UnsortedSegments, "segment " + std::to_string(g) + " does not start after its predecessor");
    }
  }
  const std::size_t arms = segments.front().means.size();
  if (arms == 0) throw Error(Errc::RaggedRows, "segment 0 has no arms");
  for (std::size_t g = 0; g < segments.size(); ++g) {
    if (segments[g].means.size() != arms) {
      throw Error(Errc::RaggedRows, "segment " + std::to_string(g) + " has " +
                                        std::to_string(segments[g].means.size()) + " means, expected " +
                                        std::to_string(arms));
    }
    for (double mu : segments[g].means) {
      if (!(mu >= 0.0 && mu <= 1.0)) {
        throw Error(Errc::MeanOutOfRange, "segment " + std::to_string(g) + " has mean " + std::to_string(mu));
      }
    }
  }
  if (horizon < 1 || segments.back().start_time > horizon) {
    throw Error(Errc::InvalidHorizon, "horizon " + std::to_string(horizon) + " does not cover every segment");
  }
  if (model.kind == RewardModel::Kind::GaussianClipped && !(model.sigma > 0.0)) {
    throw Error(Errc::InvalidConfig, "gaussian reward model needs sigma > 0");
  }

  Environment env;
  env.segments_ = std::move(segments);
  env.horizon_ = horizon;
  env.model_ = model;
  env.arms_ = arms;
  env.best_arm_.reserve(env.segments_.size());
  for (const auto& seg : env.segments_) {
    env.best_arm_.push_back(static_cast<std::size_t>(
        std::distance(seg.means.begin(), std::max_element(seg.means.begin(), seg.means.end()))));
  }
  return env;
}

Environment build_environment(std::vector<Segment> segments, Time horizon, RewardModel model) {
  return Environment::build(std::move(segments), horizon, model);
}

std::vector<Time> Environment::changepoints() const {
  std::vector<Time> out;
  for (std::size_t g = 1; g < segments_.size(); ++g) out.push_back(segments_[g].start_time);
  return out;
}

Time Environment::segment_end(std::size_t g) const {
  return g + 1 < segments_.size() ? segments_[g + 1].start_time - 1 : horizon_;
}

void Environment::check_time(Time t) const {
  if (t < 1 || t > horizon_) {
    throw Error(Errc::TimeOutOfRange, "t=" + std::to_string(t) + " outside [1, " + std::to_string(horizon_) + "]");
  }
}

std::size_t Environment::segment_index(Time t) const {
  check_time(t);
  auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                             [](Time v, const Segment& s) { return v < s.start_time; });
  return static_cast<std::size_t>(std::distance(segments_.begin(), it)) - 1;
}

SegmentInfo Environment::lookup(Time t) const {
  const std::size_t g = segment_index(t);
  const auto& means = segments_[g].means;
  return {g, means, best_arm_[g], means[best_arm_[g]]};
}

double Environment::mean(std::size_t arm, Time t) const {
  if (arm >= arms_) throw Error(Errc::ArmOutOfRange, "arm " + std::to_string(arm));
  return segments_[segment_index(t)].means[arm];
}

double Environment::reward(std::size_t arm, Time t, RewardKey key) const {
  const double mu = mean(arm, t);
  CounterEngine eng(hash_key({key.seed, key.replication, static_cast<std::uint64_t>(t), arm}));
  if (model_.kind == RewardModel::Kind::Bernoulli) return eng.uniform() < mu ? 1.0 : 0.0;

  // Box-Muller; u1 in (0, 1] keeps the log finite.
  const double u1 = 1.0 - eng.uniform();
  const double u2 = eng.uniform();
  const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  return std::clamp(mu + model_.sigma * z, 0.0, 1.0);
}

Environment Environment::truncated(Time horizon) const {
  std::vector<Segment> kept;
  for (const auto& s : segments_) {
    if (s.start_time <= horizon) kept.push_back(s);
  }
  return build(std::move(kept), horizon, model_);
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) {
    auto b = field.find_first_not_of(" \t\r");
    auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
  }
  return out;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

std::vector<Segment> parse_segments_csv(std::istream& in, std::span<const Time> boundaries) {
  std::vector<Segment> segments;
  std::string line;
  std::size_t row = 0;
  std::size_t width = 0;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[line.find_first_not_of(" \t")] == '#') {
      continue;
    }
    auto fields = split_fields(line);
    std::vector<double> values(fields.size());
    bool numeric = true;
    for (std::size_t i = 0; i < fields.size() && numeric; ++i) numeric = parse_double(fields[i], values[i]);
    if (!numeric) {
      if (first_content) {
        first_content = false;
        continue;  // header
      }
      throw Error(Errc::ParseError, "row " + std::to_string(row) + ": non-numeric field");
    }
    first_content = false;
    if (width == 0) width = values.size();
    if (values.size() != width) {
      throw Error(Errc::ParseError, "row " + std::to_string(row) + ": expected " + std::to_string(width) +
                                        " fields, got " + std::to_string(values.size()));
    }
    Segment seg;
    if (boundaries.empty()) {
      if (values.size() < 2) throw Error(Errc::ParseError, "row " + std::to_string(row) + ": no means");
      if (values[0] != std::floor(values[0])) {
        throw Error(Errc::ParseError, "row " + std::to_string(row) + ": start_time is not an integer");
      }
      seg.start_time = static_cast<Time>(values[0]);
      seg.means.assign(values.begin() + 1, values.end());
    } else {
      if (segments.size() >= boundaries.size()) {
        throw Error(Errc::ParseError, "row " + std::to_string(row) + ": more rows than segment boundaries");
      }
      seg.start_time = boundaries[segments.size()];
      seg.means = std::move(values);
    }
    for (double mu : seg.means) {
      if (!(mu >= 0.0 && mu <= 1.0)) {
        throw Error(Errc::MeanOutOfRange, "row " + std::to_string(row) + ": mean " + std::to_string(mu));
      }
    }
    segments.push_back(std::move(seg));
  }
  if (!boundaries.empty() && segments.size() != boundaries.size()) {
    throw Error(Errc::ParseError, "got " + std::to_string(segments.size()) + " rows for " +
                                      std::to_string(boundaries.size()) + " segment boundaries");
  }
  return segments;
}

}  // namespace pwb
