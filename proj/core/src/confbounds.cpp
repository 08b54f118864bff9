#include "pwbandit/confbounds.hpp"

#include <cmath>
#include <string>

#include "pwbandit/error.hpp"

namespace pwb {

namespace {

void check_count(std::int64_t n) {
  if (n < 1) throw Error(Errc::InvalidCount, "observation count " + std::to_string(n) + " < 1");
}

void check_delta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw Error(Errc::InvalidDelta, "delta " + std::to_string(delta));
}

}  // namespace

std::string_view to_string(RadiusFamily family) noexcept {
  switch (family) {
    case RadiusFamily::Laplace: return "laplace";
    case RadiusFamily::Union: return "union";
    case RadiusFamily::Peeling: return "peeling";
    case RadiusFamily::Phase: return "phase";
  }
  return "unknown";
}

RadiusFamily parse_radius_family(std::string_view name) {
  if (name == "laplace") return RadiusFamily::Laplace;
  if (name == "union") return RadiusFamily::Union;
  if (name == "peeling") return RadiusFamily::Peeling;
  if (name == "phase") return RadiusFamily::Phase;
  throw Error(Errc::InvalidConfig, "unknown radius family '" + std::string(name) + "'");
}

RadiusKind RadiusKind::peeling(double alpha) {
  if (!(alpha > 1.0)) throw Error(Errc::InvalidAlpha, "peeling needs alpha > 1, got " + std::to_string(alpha));
  return {RadiusFamily::Peeling, alpha, 0.0};
}

RadiusKind RadiusKind::phase(double psi, double alpha) {
  if (!(psi > 0.0) || !(alpha > 0.0)) throw Error(Errc::InvalidAlpha, "phase radius needs psi > 0 and alpha > 0");
  return {RadiusFamily::Phase, alpha, psi};
}

double laplace_radius(std::int64_t n, double delta) {
  check_count(n);
  check_delta(delta);
  const double nn = static_cast<double>(n);
  return std::sqrt((1.0 + 1.0 / nn) * std::log(std::sqrt(nn + 1.0) / delta) / (2.0 * nn));
}

double union_radius(std::int64_t n, std::int64_t t, double delta) {
  check_count(n);
  check_delta(delta);
  if (t < 1) throw Error(Errc::TimeOutOfRange, "union radius needs t >= 1");
  const double tt = static_cast<double>(t);
  return std::sqrt(std::log(4.0 * tt * tt / delta) / (2.0 * static_cast<double>(n)));
}

double peeling_radius(std::int64_t n, std::int64_t t, double delta, double alpha) {
  if (!(alpha > 1.0)) throw Error(Errc::InvalidAlpha, "peeling needs alpha > 1, got " + std::to_string(alpha));
  check_count(n);
  check_delta(delta);
  if (t < 2) throw Error(Errc::TimeOutOfRange, "peeling radius needs t >= 2");
  const double slices = std::ceil(std::log(static_cast<double>(t)) / alpha);
  return std::sqrt(alpha / static_cast<double>(n) * std::log(slices / delta));
}

double phase_radius(std::int64_t n, double eps, double psi, double alpha) {
  check_count(n);
  const double arg = psi * eps * eps;
  if (!(arg > 1.0)) {
    throw Error(Errc::DegenerateLog, "psi*eps^2 = " + std::to_string(arg) + " <= 1 (horizon too small for K?)");
  }
  return std::sqrt(alpha * std::log(arg) / (2.0 * static_cast<double>(n)));
}

double radius(const RadiusKind& kind, std::int64_t n, std::int64_t t, double delta) {
  switch (kind.family) {
    case RadiusFamily::Laplace: return laplace_radius(n, delta);
    case RadiusFamily::Union: return union_radius(n, t, delta);
    case RadiusFamily::Peeling: return peeling_radius(n, t, delta, kind.alpha);
    case RadiusFamily::Phase: break;
  }
  throw Error(Errc::InvalidConfig, "phase radius is not a delta-indexed family");
}

}  // namespace pwb
