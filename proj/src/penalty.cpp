#include "pqlwcr/penalty.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace pqlwcr {

namespace {

void validate(const PenaltySpec& spec) {
  if (!(spec.lambda >= 0.0) || !std::isfinite(spec.lambda)) {
    throw std::domain_error("penalty lambda must be finite and non-negative");
  }
  if (spec.kind == PenaltyKind::Scad && !(spec.a > 2.0)) {
    throw std::domain_error("SCAD shape parameter a must exceed 2");
  }
}

void check_argument(double t) {
  if (!(t >= 0.0)) throw std::domain_error("penalty argument must be non-negative");
}

}  // namespace

PenaltySpec PenaltySpec::scad(double lambda, double a) {
  PenaltySpec spec{PenaltyKind::Scad, lambda, a};
  validate(spec);
  return spec;
}

PenaltySpec PenaltySpec::l1(double lambda) {
  PenaltySpec spec{PenaltyKind::L1, lambda, 3.7};
  validate(spec);
  return spec;
}

double penalty_derivative(const PenaltySpec& spec, double t) {
  check_argument(t);
  const double lam = spec.lambda;
  if (spec.kind == PenaltyKind::L1) return lam;
  if (t <= lam) return lam;
  const double excess = spec.a * lam - t;
  return excess > 0.0 ? excess / (spec.a - 1.0) : 0.0;
}

double penalty_value(const PenaltySpec& spec, double t) {
  check_argument(t);
  const double lam = spec.lambda;
  if (spec.kind == PenaltyKind::L1) return lam * t;
  const double a = spec.a;
  if (t <= lam) return lam * t;
  if (t <= a * lam) return (2.0 * a * lam * t - t * t - lam * lam) / (2.0 * (a - 1.0));
  return 0.5 * (a + 1.0) * lam * lam;
}

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

PenaltyKind parse_penalty_kind(std::string_view name) {
  if (name == "scad") return PenaltyKind::Scad;
  if (name == "l1" || name == "lasso") return PenaltyKind::L1;
  throw std::invalid_argument("unknown penalty '" + std::string(name) + "'");
}

}  // namespace pqlwcr
