#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "sfma/solvers.hpp"
#include "sfma/types.hpp"

namespace sfma {

template <class Scalar>
struct TrimConfigT {
  // Number of inliers h. Values below 1 are read as a proportion of n and
  // rounded to the nearest count; h = n disables trimming.
  Scalar inlier_count = 1;
  int max_outer_iters = 100;
  Scalar w_tol = Scalar(1e-6);
  Scalar step_init = 0;  // 0: scale-free default n / max_i |l_i|

  Index resolve_count(Index n) const {
    if (!(inlier_count > 0) || !(inlier_count <= Scalar(n)))
      throw ConfigError("inlier count must lie in (0, n]");
    const double raw = double(inlier_count) < 1.0
                           ? double(inlier_count) * double(n)
                           : double(inlier_count);
    const Index h = Index(std::llround(raw));
    return std::clamp<Index>(h, 1, n);
  }
};

using TrimConfig = TrimConfigT<double>;

// Euclidean projection onto {w : 0 <= w_i <= 1, sum w = h}. Bisection on the
// shift mu with sum clip(v - mu, 0, 1) = h, tolerance 1e-12 on the sum, then
// an exact affine correction on the identified support.
template <class Derived>
VectorX<typename Derived::Scalar> project_capped_simplex(
    const Eigen::MatrixBase<Derived>& v_expr, double h) {
  using Scalar = typename Derived::Scalar;
  const VectorX<Scalar> v = v_expr;
  const Index n = v.size();
  if (!(h > 0) || h > double(n) + 1e-9)
    throw ConfigError("capped-simplex mass must lie in (0, n]");
  if (h >= double(n)) return VectorX<Scalar>::Ones(n);

  auto mass = [&](Scalar mu) {
    Scalar s = 0;
    for (Index i = 0; i < n; ++i)
      s += std::clamp(v(i) - mu, Scalar(0), Scalar(1));
    return s;
  };

  Scalar lo = v.minCoeff() - Scalar(1);
  Scalar hi = v.maxCoeff();
  Scalar mu = Scalar(0.5) * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    mu = Scalar(0.5) * (lo + hi);
    const Scalar m = mass(mu);
    if (std::abs(double(m - Scalar(h))) <= 1e-13) break;
    (m > Scalar(h) ? lo : hi) = mu;
  }

  // Exact shift for the support found by bisection.
  Scalar sum_free = 0;
  Index n_free = 0, n_one = 0;
  for (Index i = 0; i < n; ++i) {
    const Scalar t = v(i) - mu;
    if (t >= Scalar(1))
      ++n_one;
    else if (t > Scalar(0)) {
      ++n_free;
      sum_free += v(i);
    }
  }
  if (n_free > 0) {
    const Scalar mu_exact = (sum_free + Scalar(n_one) - Scalar(h)) / Scalar(n_free);
    if (std::abs(double(mass(mu_exact) - Scalar(h))) <= 1e-12) mu = mu_exact;
  }

  VectorX<Scalar> w(n);
  for (Index i = 0; i < n; ++i)
    w(i) = std::clamp(v(i) - mu, Scalar(0), Scalar(1));
  return w;
}

template <class Scalar>
struct TrimResultT {
  ParamsT<Scalar> params;
  VectorX<Scalar> weights;           // binary inlier weights after the refit
  std::vector<Scalar> value_trace;   // v(w) across accepted outer steps
  Scalar objective = 0;              // final objective on the binary weights
  int outer_iterations = 0;
};

using TrimResult = TrimResultT<double>;

// Outlier-robust fit: projected gradient on the inner solution's value
// function v(w), whose gradient is exactly the vector of per-point likelihood
// terms at the inner optimum. Each trial step re-solves the weighted fit,
// warm-started from the incumbent. Final weights are binarized (top-h kept)
// and the model refit once on the binary weights, so the excluded set is
// reproducible.
template <class Scalar>
TrimResultT<Scalar> trimmed_fit(const DatasetT<Scalar>& data,
                                const LikelihoodContextT<Scalar>& ctx,
                                const ConstraintSetT<Scalar>& constraints,
                                const FitOptionsT<Scalar>& opts,
                                const TrimConfigT<Scalar>& trim) {
  const Index n = data.n();
  const Index h = trim.resolve_count(n);
  if (trim.max_outer_iters < 1)
    throw ConfigError("max_outer_iters must be at least 1");

  LikelihoodContextT<Scalar> work = ctx;
  work.weights = VectorX<Scalar>::Constant(n, Scalar(h) / Scalar(n));

  BcdResultT<Scalar> inner;
  try {
    inner = bcd_fit(data, work, constraints, opts);
  } catch (const SolverError& err) {
    throw SolverError("trimming outer iteration 0: " + std::string(err.what()));
  }
  Scalar value = inner.objective;

  TrimResultT<Scalar> out;
  out.value_trace.push_back(value);

  VectorX<Scalar> terms = nll_terms_from_residuals(
      (data.y - work.design * inner.params.beta).eval(), data.se,
      inner.params.gamma, inner.params.eta);

  Scalar alpha = trim.step_init;
  if (!(alpha > 0)) {
    const Scalar scale = terms.cwiseAbs().maxCoeff();
    alpha = scale > Scalar(1e-12) ? Scalar(n) / scale : Scalar(1);
  }
  const Scalar alpha_floor = alpha * Scalar(1e-14);

  for (int outer = 1; outer <= trim.max_outer_iters; ++outer) {
    out.outer_iterations = outer;
    bool accepted = false;
    bool stationary = false;
    while (alpha > alpha_floor) {
      const VectorX<Scalar> w_trial =
          project_capped_simplex((work.weights - alpha * terms).eval(), double(h));
      if ((w_trial - work.weights).template lpNorm<Eigen::Infinity>() <
          trim.w_tol) {
        stationary = true;
        break;
      }
      LikelihoodContextT<Scalar> trial_ctx = work;
      trial_ctx.weights = w_trial;
      BcdResultT<Scalar> trial_fit;
      try {
        trial_fit = bcd_fit(data, trial_ctx, constraints, opts, &inner.params);
      } catch (const SolverError& err) {
        throw SolverError("trimming outer iteration " + std::to_string(outer) +
                          ": " + std::string(err.what()));
      }
      if (trial_fit.objective <= value) {
        work.weights = w_trial;
        inner = trial_fit;
        value = trial_fit.objective;
        out.value_trace.push_back(value);
        terms = nll_terms_from_residuals(
            (data.y - work.design * inner.params.beta).eval(), data.se,
            inner.params.gamma, inner.params.eta);
        accepted = true;
        break;
      }
      alpha /= 2;
    }
    if (stationary || !accepted) break;
  }

  // Binarize: keep the h best-weighted points (ties broken by likelihood
  // term, then index, for reproducibility), refit once on the binary set.
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index(0));
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    if (work.weights(a) != work.weights(b))
      return work.weights(a) > work.weights(b);
    if (terms(a) != terms(b)) return terms(a) < terms(b);
    return a < b;
  });
  VectorX<Scalar> binary = VectorX<Scalar>::Zero(n);
  for (Index k = 0; k < h; ++k) binary(order[std::size_t(k)]) = Scalar(1);

  // The variance-component profile is nonconvex, and the incumbent solved a
  // different (contaminated) weighting; refit both warm and cold and keep
  // the better optimum.
  work.weights = binary;
  BcdResultT<Scalar> final_fit;
  try {
    final_fit = bcd_fit(data, work, constraints, opts, &inner.params);
    const BcdResultT<Scalar> cold = bcd_fit(data, work, constraints, opts);
    if (cold.objective < final_fit.objective) final_fit = cold;
  } catch (const SolverError& err) {
    throw SolverError("trimming final refit: " + std::string(err.what()));
  }

  out.params = std::move(final_fit.params);
  out.weights = std::move(binary);
  out.objective = final_fit.objective;
  return out;
}

}  // namespace sfma
