#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace pwb {

// Confidence-radius families for [0,1]-bounded rewards. All logs are natural.
enum class RadiusFamily { Laplace, Union, Peeling, Phase };

std::string_view to_string(RadiusFamily family) noexcept;
RadiusFamily parse_radius_family(std::string_view name);

// Family plus the parameters it needs. Union and Laplace take none; Peeling
// takes alpha > 1; Phase takes psi > 0 and alpha > 0.
struct RadiusKind {
  RadiusFamily family = RadiusFamily::Laplace;
  double alpha = 0.0;
  double psi = 0.0;

  static RadiusKind laplace() { return {RadiusFamily::Laplace}; }
  static RadiusKind union_bound() { return {RadiusFamily::Union}; }
  static RadiusKind peeling(double alpha);
  static RadiusKind phase(double psi, double alpha);

  bool operator==(const RadiusKind&) const = default;
};

// sqrt((1 + 1/n) * ln(sqrt(n + 1) / delta) / (2n)); time-uniform.
double laplace_radius(std::int64_t n, double delta);

// sqrt(ln(4 t^2 / delta) / (2n)).
double union_radius(std::int64_t n, std::int64_t t, double delta);

// sqrt((alpha / n) * ln(ceil(ln(t) / alpha) / delta)), t >= 2, alpha > 1.
double peeling_radius(std::int64_t n, std::int64_t t, double delta, double alpha);

// sqrt(alpha * ln(psi * eps^2) / (2n)); throws DegenerateLog if psi*eps^2 <= 1.
double phase_radius(std::int64_t n, double eps, double psi, double alpha);

// Dispatches on `kind` for the three anytime families (t, delta used as
// each family needs them). Phase is rejected here: it is parameterised by
// the phase tolerance, not by delta.
double radius(const RadiusKind& kind, std::int64_t n, std::int64_t t, double delta);

}  // namespace pwb
