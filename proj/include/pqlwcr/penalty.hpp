#pragma once

#include <string_view>

namespace pqlwcr {

enum class PenaltyKind { Scad, L1 };

struct PenaltySpec {
  PenaltyKind kind = PenaltyKind::Scad;
  double lambda = 0.0;
  double a = 3.7;  // SCAD shape, must exceed 2

  static PenaltySpec scad(double lambda, double a = 3.7);
  static PenaltySpec l1(double lambda);
};

// p'_lambda(t) for t >= 0. SCAD: lambda{I(t<=lambda) + (a lambda - t)_+ / ((a-1) lambda) I(t>lambda)}.
double penalty_derivative(const PenaltySpec& spec, double t);

// p_lambda(t) = integral_0^t p'_lambda(s) ds.
double penalty_value(const PenaltySpec& spec, double t);

// sign(z) max(|z| - t, 0); the minimizer of (z - b)^2 / 2 + t |b|.
double soft_threshold(double z, double t);

PenaltyKind parse_penalty_kind(std::string_view name);

}  // namespace pqlwcr
