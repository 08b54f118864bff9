#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "pwbandit/error.hpp"
#include "pwbandit/harness.hpp"

namespace pwb {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& what) { throw Error(Errc::InvalidConfig, what); }

RewardModel parse_reward_model(const json& j) {
  if (j.is_null()) return RewardModel::bernoulli();
  std::string kind;
  double sigma = 0.0;
  if (j.is_string()) {
    kind = j.get<std::string>();
  } else if (j.is_object()) {
    kind = j.value("kind", "bernoulli");
    if (j.contains("sigma")) sigma = j.at("sigma").get<double>();
    if (j.contains("variance")) sigma = std::sqrt(j.at("variance").get<double>());
  } else {
    bad("reward_model must be a string or an object");
  }
  if (kind == "bernoulli") return RewardModel::bernoulli();
  if (kind == "gaussian_clipped" || kind == "gaussian") return RewardModel::gaussian_clipped(sigma);
  bad("unknown reward model '" + kind + "'");
}

std::vector<Segment> parse_segment_list(const json& j) {
  std::vector<Segment> segs;
  for (const auto& row : j) {
    Segment s;
    if (row.is_object()) {
      s.start_time = row.at("start").get<Time>();
      s.means = row.at("means").get<std::vector<double>>();
    } else if (row.is_array() && !row.empty()) {
      s.start_time = row.at(0).get<Time>();
      for (std::size_t i = 1; i < row.size(); ++i) s.means.push_back(row.at(i).get<double>());
    } else {
      bad("segment rows are {start, means} objects or [start, mean_1, ...] arrays");
    }
    segs.push_back(std::move(s));
  }
  return segs;
}

Environment parse_environment(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) bad("'environment' must be an object");
  const Time horizon = j.at("horizon").get<Time>();
  const RewardModel model = parse_reward_model(j.contains("reward_model") ? j.at("reward_model") : json());
  if (j.contains("csv")) {
    std::filesystem::path p = j.at("csv").get<std::string>();
    if (p.is_relative()) p = base_dir / p;
    std::vector<Time> bounds;
    if (j.contains("boundaries")) bounds = j.at("boundaries").get<std::vector<Time>>();
    return load_mean_matrix_csv(p, horizon, bounds, model);
  }
  if (!j.contains("segments")) bad("environment needs 'segments' or 'csv'");
  return build_environment(parse_segment_list(j.at("segments")), horizon, model);
}

PolicyConfig parse_policy(const json& j) {
  if (j.is_string()) return named_policy(j.get<std::string>());
  if (!j.is_object() || !j.contains("name")) bad("policy entries need a 'name'");
  PolicyConfig c = named_policy(j.at("name").get<std::string>());
  if (j.contains("label")) c.name = j.at("label").get<std::string>();
  const json params = j.value("params", json::object());
  for (const auto& [key, value] : params.items()) {
    if (key == "radius") {
      c.radius = parse_radius_family(value.get<std::string>());
    } else if (key == "alpha") {
      c.alpha = value.get<double>();
    } else if (key == "delta") {
      c.delta = value.get<double>();
    } else if (key == "gamma") {
      c.gamma = value.get<double>();
    } else if (key == "discount") {
      c.discount = value.get<double>();
    } else if (key == "window") {
      c.window = value.get<std::int64_t>();
    } else if (key == "xi") {
      c.xi = value.get<double>();
    } else {
      bad("unknown policy parameter '" + key + "' for " + c.name);
    }
  }
  return c;
}

}  // namespace

ExperimentConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, std::string("config: ") + e.what());
  }
  try {
    ExperimentConfig cfg;
    cfg.environment = parse_environment(j.at("environment"), base_dir);
    for (const auto& p : j.at("policies")) cfg.policies.push_back(parse_policy(p));
    cfg.replications = j.value("replications", std::size_t{1});
    if (cfg.replications < 1) bad("replications must be >= 1");
    cfg.seed = j.value("seed", std::uint64_t{0});
    cfg.output_dir = j.value("output_dir", std::string("out"));
    cfg.write_traces = j.value("write_traces", true);
    if (j.contains("bounds")) {
      const auto& b = j.at("bounds");
      cfg.bounds.delta = b.value("delta", cfg.bounds.delta);
      cfg.bounds.gamma = b.value("gamma", cfg.bounds.gamma);
      cfg.bounds.eta = b.value("eta", cfg.bounds.eta);
      if (b.contains("t")) cfg.bounds.t = b.at("t").get<double>();
    }
    if (j.contains("eta_sweep")) {
      const auto& e = j.at("eta_sweep");
      EtaSweepConfig sweep;
      sweep.etas = e.at("etas").get<std::vector<double>>();
      sweep.base_cost = e.value("base_cost", 1000.0);
      if (e.contains("base_means")) {
        sweep.base_means = e.at("base_means").get<std::vector<std::vector<double>>>();
      } else {
        for (const auto& s : cfg.environment.segments()) sweep.base_means.push_back(s.means);
      }
      cfg.eta_sweep = std::move(sweep);
    }
    if (j.contains("bench")) {
      const auto& b = j.at("bench");
      BenchConfig bench;
      bench.horizons = b.at("horizons").get<std::vector<Time>>();
      bench.repeats = b.value("repeats", std::size_t{5});
      if (bench.repeats < 1) bad("bench.repeats must be >= 1");
      cfg.bench = std::move(bench);
    }
    return cfg;
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidConfig, e.what());
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::ParseError, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

void apply_radius_override(ExperimentConfig& config, RadiusFamily family) {
  if (family == RadiusFamily::Phase) bad("the radius override accepts laplace, union or peeling");
  for (auto& p : config.policies) {
    if (p.kind == PolicyKind::CpdUcb) p.radius = family;
  }
}

Environment load_mean_matrix_csv(const std::filesystem::path& path, Time horizon, std::span<const Time> boundaries,
                                 RewardModel model) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::ParseError, "cannot open " + path.string());
  return build_environment(parse_segments_csv(in, boundaries), horizon, model);
}

ReplicationRange parse_replication_range(std::string_view text) {
  auto parse = [&](std::string_view s) {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
      throw Error(Errc::ParseError, "bad replication range '" + std::string(text) + "'");
    }
    return v;
  };
  const auto dots = text.find("..");
  ReplicationRange r;
  if (dots == std::string_view::npos) {
    r.first = r.last = parse(text);
  } else {
    r.first = parse(text.substr(0, dots));
    r.last = parse(text.substr(dots + 2));
  }
  if (r.last < r.first) throw Error(Errc::ParseError, "empty replication range '" + std::string(text) + "'");
  return r;
}

}  // namespace pwb
