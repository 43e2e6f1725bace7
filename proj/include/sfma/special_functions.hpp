#pragma once

#include <cmath>
#include <limits>

#include "sfma/types.hpp"

namespace sfma {

// log(erfc(x)) and its first two derivatives, stable on the whole real line.
//
// Naive log(erfc(x)) dies for large x: erfc underflows to 0 near x ~ 26.6 and
// the log returns -inf, which breaks any optimizer that walks through large
// standardized residuals. Above SWITCH_POINT we evaluate the asymptotic
// expansion of erfc in the log domain instead:
//
//   erfc(x) ~ exp(-x^2) / (sqrt(pi) x) * (1 - 1/(2x^2) + 3/(4x^4) - ...)
//
// keeping the series through the 1/x^4 term, so the absolute error of the log
// at the crossover is ~15/(8 x^6) ~ 7.7e-9. Derivatives on that branch are the
// exact analytic derivatives of the truncated expansion, so optimizer
// curvature stays consistent with the objective.
inline constexpr double SWITCH_POINT = 25.0;

namespace detail {

template <class Scalar>
void require_finite(Scalar x, const char* who) {
  if (!std::isfinite(static_cast<double>(x)))
    throw DomainError(std::string(who) + ": input must be finite");
}

// Series factor q(x) = 1 - 1/(2x^2) + 3/(4x^4) and its derivatives.
template <class Scalar>
struct AsymptoticSeries {
  Scalar q, dq, d2q;
  explicit AsymptoticSeries(Scalar x) {
    const Scalar inv = Scalar(1) / x;
    const Scalar inv2 = inv * inv;
    q = Scalar(1) - Scalar(0.5) * inv2 + Scalar(0.75) * inv2 * inv2;
    dq = inv2 * inv - Scalar(3) * inv2 * inv2 * inv;
    d2q = Scalar(-3) * inv2 * inv2 + Scalar(15) * inv2 * inv2 * inv2;
  }
};

}  // namespace detail

template <class Scalar>
Scalar ln_erfc(Scalar x) {
  detail::require_finite(x, "ln_erfc");
  if (x < Scalar(SWITCH_POINT)) {
    return std::log(std::erfc(x));
  }
  const detail::AsymptoticSeries<Scalar> s(x);
  const Scalar log_sqrt_pi = Scalar(0.57236494292470008707L);
  return -x * x + std::log(s.q) - log_sqrt_pi - std::log(x);
}

// d/dx log(erfc(x)) = erfc'(x)/erfc(x); negative everywhere.
template <class Scalar>
Scalar ln_erfc_d1(Scalar x) {
  detail::require_finite(x, "ln_erfc_d1");
  if (x < Scalar(SWITCH_POINT)) {
    const Scalar two_over_sqrt_pi = Scalar(1.1283791670955125739L);
    return -two_over_sqrt_pi * std::exp(-x * x) / std::erfc(x);
  }
  const detail::AsymptoticSeries<Scalar> s(x);
  return Scalar(-2) * x - Scalar(1) / x + s.dq / s.q;
}

// d^2/dx^2 log(erfc(x)); non-positive everywhere (log-concavity of erfc).
template <class Scalar>
Scalar ln_erfc_d2(Scalar x) {
  detail::require_finite(x, "ln_erfc_d2");
  if (x < Scalar(SWITCH_POINT)) {
    // erfc''(x)/erfc(x) = -2x * h'(x), so h'' = -h' (2x + h').
    const Scalar h1 = ln_erfc_d1(x);
    return -h1 * (Scalar(2) * x + h1);
  }
  const detail::AsymptoticSeries<Scalar> s(x);
  return Scalar(-2) + Scalar(1) / (x * x) + (s.d2q * s.q - s.dq * s.dq) / (s.q * s.q);
}

}  // namespace sfma
