#pragma once

#include <algorithm>
#include <cmath>
#include <utility>

#include "sfma/likelihood.hpp"
#include "sfma/spline.hpp"
#include "sfma/types.hpp"

namespace sfma {

// Per-firm estimates recovered from a completed fit.
template <class Scalar>
struct FitResultT {
  ParamsT<Scalar> params;
  VectorX<Scalar> weights;
  VectorX<Scalar> residuals;
  VectorX<Scalar> u_hat;  // random effects
  VectorX<Scalar> v_hat;  // inefficiencies, >= 0
  Scalar objective = 0;
};

using FitResult = FitResultT<double>;

// Closed-form posterior-mode estimates given residuals r_i = y_i - <x_i, b>:
//   v_hat = max(0, -eta r / (se^2 + eta + gamma)),
//   u_hat = gamma (r + v_hat) / (se^2 + gamma).
// eta = 0 forces v_hat = 0 and gamma = 0 forces u_hat = 0; both handled as
// exact branches rather than 0/0 limits.
template <class Scalar>
std::pair<VectorX<Scalar>, VectorX<Scalar>> estimate_inefficiencies(
    const DatasetT<Scalar>& data, const LikelihoodContextT<Scalar>& ctx,
    const ParamsT<Scalar>& params) {
  ctx.validate(data);
  params.validate();
  const VectorX<Scalar> r = residuals_of(ctx, data, params);
  const Index n = data.n();
  VectorX<Scalar> u = VectorX<Scalar>::Zero(n);
  VectorX<Scalar> v = VectorX<Scalar>::Zero(n);
  for (Index i = 0; i < n; ++i) {
    const Scalar s2 = data.se(i) * data.se(i);
    if (params.eta > Scalar(0)) {
      v(i) = std::max(Scalar(0),
                      -params.eta * r(i) / (s2 + params.eta + params.gamma));
    }
    if (params.gamma > Scalar(0)) {
      u(i) = params.gamma * (r(i) + v(i)) / (s2 + params.gamma);
    }
  }
  return {std::move(u), std::move(v)};
}

// Fitted frontier on an arbitrary grid.
template <class Scalar, class DerivedB, class DerivedG>
VectorX<Scalar> predict_frontier(const SplineSpecT<Scalar>& spec,
                                 const Eigen::MatrixBase<DerivedB>& beta_expr,
                                 const Eigen::MatrixBase<DerivedG>& grid_expr) {
  const VectorX<Scalar> beta = beta_expr;
  const VectorX<Scalar> grid = grid_expr;
  if (!grid.allFinite()) throw DomainError("prediction grid must be finite");
  if (beta.size() != spec.basis_dim())
    throw SpecError("coefficient length does not match the spline basis");
  return design_matrix(spec, grid, 0) * beta;
}

template <class Scalar>
FitResultT<Scalar> make_fit_result(const DatasetT<Scalar>& data,
                                   const LikelihoodContextT<Scalar>& ctx,
                                   const ParamsT<Scalar>& params,
                                   VectorX<Scalar> weights, Scalar objective) {
  FitResultT<Scalar> out;
  out.params = params;
  out.weights = std::move(weights);
  out.residuals = residuals_of(ctx, data, params);
  auto uv = estimate_inefficiencies(data, ctx, params);
  out.u_hat = std::move(uv.first);
  out.v_hat = std::move(uv.second);
  out.objective = objective;
  return out;
}

}  // namespace sfma
