#pragma once

#include <algorithm>
#include <cmath>

#include "sfma/special_functions.hpp"
#include "sfma/types.hpp"

namespace sfma {

// Marginal negative log likelihood of the frontier model
//   y_i = <x_i, beta> + u_i - v_i + eps_i,
//   eps ~ N(0, se_i^2), u ~ N(0, gamma), v ~ half-normal(eta),
// after integrating u and v out. Per observation, with
//   r = y - <x, beta>,  tau = se^2 + gamma,  V = tau + eta,
//   z = sqrt(eta / (2 tau V)),
// the contribution is r^2/(2V) + log(V)/2 - ln_erfc(z r), up to an additive
// constant that does not depend on (beta, gamma, eta) and is dropped.
template <class Scalar>
struct LikelihoodContextT {
  MatrixX<Scalar> design;   // n x m, spline columns plus any extra covariates
  VectorX<Scalar> weights;  // trim weights in [0, 1]; default all ones

  static LikelihoodContextT with_unit_weights(MatrixX<Scalar> design) {
    LikelihoodContextT ctx;
    ctx.weights = VectorX<Scalar>::Ones(design.rows());
    ctx.design = std::move(design);
    return ctx;
  }

  void validate(const DatasetT<Scalar>& data) const {
    data.validate();
    if (design.rows() != data.n())
      throw DataError("design matrix rows must match dataset size");
    if (weights.size() != data.n())
      throw DataError("weight vector must match dataset size");
    if (!design.allFinite() || !weights.allFinite())
      throw DataError("design/weights contain non-finite values");
    if ((weights.array() < Scalar(-1e-9)).any() ||
        (weights.array() > Scalar(1) + Scalar(1e-9)).any())
      throw DataError("trim weights must lie in [0, 1]");
  }
};

using LikelihoodContext = LikelihoodContextT<double>;

template <class Scalar>
struct GammaEtaPartialsT {
  Scalar d_gamma = 0;
  Scalar d_eta = 0;
  Scalar d2_gamma = 0;
  Scalar d2_eta = 0;
};

using GammaEtaPartials = GammaEtaPartialsT<double>;

namespace detail {

template <class Scalar>
inline constexpr Scalar kVarianceFloor = Scalar(1e-12);

// Transient extreme beta during line searches can push |z r| to absurd
// magnitudes; the asymptotic ln_erfc branch keeps the clamped value finite.
template <class Scalar>
inline constexpr Scalar kZrClamp = Scalar(1e8);

template <class Scalar>
struct PointTerms {
  Scalar tau, total_var, z, zr;
};

template <class Scalar>
PointTerms<Scalar> point_terms(Scalar se, Scalar gamma, Scalar eta, Scalar r) {
  PointTerms<Scalar> p;
  p.tau = std::max(se * se + gamma, kVarianceFloor<Scalar>);
  p.total_var = std::max(se * se + gamma + eta, kVarianceFloor<Scalar>);
  if (!std::isfinite(double(p.total_var)))
    throw IllPosedError("variance collapsed to a non-finite value");
  p.z = std::sqrt(eta / (Scalar(2) * p.tau * p.total_var));
  p.zr = std::clamp(p.z * r, -kZrClamp<Scalar>, kZrClamp<Scalar>);
  return p;
}

}  // namespace detail

// Per-observation terms from precomputed residuals; the core formula shared
// by every entry point below.
template <class Scalar>
VectorX<Scalar> nll_terms_from_residuals(const VectorX<Scalar>& residuals,
                                         const VectorX<Scalar>& se,
                                         Scalar gamma, Scalar eta) {
  VectorX<Scalar> terms(residuals.size());
  for (Index i = 0; i < residuals.size(); ++i) {
    const auto p = detail::point_terms(se(i), gamma, eta, residuals(i));
    terms(i) = residuals(i) * residuals(i) / (Scalar(2) * p.total_var) +
               Scalar(0.5) * std::log(p.total_var) - ln_erfc(p.zr);
  }
  return terms;
}

template <class Scalar>
VectorX<Scalar> residuals_of(const LikelihoodContextT<Scalar>& ctx,
                             const DatasetT<Scalar>& data,
                             const ParamsT<Scalar>& params) {
  return data.y - ctx.design * params.beta;
}

template <class Scalar>
VectorX<Scalar> nll_terms(const LikelihoodContextT<Scalar>& ctx,
                          const DatasetT<Scalar>& data,
                          const ParamsT<Scalar>& params) {
  ctx.validate(data);
  params.validate();
  return nll_terms_from_residuals(residuals_of(ctx, data, params), data.se,
                                  params.gamma, params.eta);
}

template <class Scalar>
Scalar nll_value(const LikelihoodContextT<Scalar>& ctx,
                 const DatasetT<Scalar>& data, const ParamsT<Scalar>& params) {
  return ctx.weights.dot(nll_terms(ctx, data, params));
}

// Weighted gradient of the objective with respect to beta.
template <class Scalar>
VectorX<Scalar> grad_beta(const LikelihoodContextT<Scalar>& ctx,
                          const DatasetT<Scalar>& data,
                          const ParamsT<Scalar>& params) {
  ctx.validate(data);
  params.validate();
  const VectorX<Scalar> r = residuals_of(ctx, data, params);
  VectorX<Scalar> g = VectorX<Scalar>::Zero(ctx.design.cols());
  for (Index i = 0; i < data.n(); ++i) {
    const auto p = detail::point_terms(data.se(i), params.gamma, params.eta, r(i));
    const Scalar coeff = -r(i) / p.total_var + ln_erfc_d1(p.zr) * p.z;
    g.noalias() += ctx.weights(i) * coeff * ctx.design.row(i).transpose();
  }
  return g;
}

// Weighted Hessian in beta; positive semidefinite because ln_erfc is concave.
template <class Scalar>
MatrixX<Scalar> hess_beta(const LikelihoodContextT<Scalar>& ctx,
                          const DatasetT<Scalar>& data,
                          const ParamsT<Scalar>& params) {
  ctx.validate(data);
  params.validate();
  const VectorX<Scalar> r = residuals_of(ctx, data, params);
  const Index m = ctx.design.cols();
  MatrixX<Scalar> H = MatrixX<Scalar>::Zero(m, m);
  for (Index i = 0; i < data.n(); ++i) {
    const auto p = detail::point_terms(data.se(i), params.gamma, params.eta, r(i));
    const Scalar coeff =
        Scalar(1) / p.total_var - ln_erfc_d2(p.zr) * p.z * p.z;
    H.template selfadjointView<Eigen::Lower>().rankUpdate(
        ctx.design.row(i).transpose(), ctx.weights(i) * coeff);
  }
  return H.template selfadjointView<Eigen::Lower>();
}

// First and second partials in the variance components. The z-derivative
// formulas divide by gamma, eta and tau, so both components must be strictly
// positive; the scalar solver owns the 0 boundary.
template <class Scalar>
GammaEtaPartialsT<Scalar> partials_gamma_eta(const LikelihoodContextT<Scalar>& ctx,
                                             const DatasetT<Scalar>& data,
                                             const ParamsT<Scalar>& params) {
  ctx.validate(data);
  params.validate();
  if (!(params.gamma > Scalar(0)) || !(params.eta > Scalar(0)))
    throw BoundaryError("partials_gamma_eta requires gamma > 0 and eta > 0");

  const VectorX<Scalar> r = residuals_of(ctx, data, params);
  GammaEtaPartialsT<Scalar> out;
  for (Index i = 0; i < data.n(); ++i) {
    const auto p = detail::point_terms(data.se(i), params.gamma, params.eta, r(i));
    const Scalar w = ctx.weights(i);
    const Scalar V = p.total_var;
    const Scalar h1 = ln_erfc_d1(p.zr);
    const Scalar h2 = ln_erfc_d2(p.zr);
    const Scalar r2 = r(i) * r(i);

    const Scalar dz_eta =
        Scalar(0.5) * p.z * (Scalar(1) / params.eta - Scalar(1) / V);
    const Scalar dz_gamma =
        Scalar(0.5) * p.z * (-Scalar(1) / p.tau - Scalar(1) / V);
    const Scalar d2z_eta =
        Scalar(0.25) * p.z * std::pow(Scalar(1) / params.eta - Scalar(1) / V, 2) +
        Scalar(0.5) * p.z *
            (-Scalar(1) / (params.eta * params.eta) + Scalar(1) / (V * V));
    const Scalar d2z_gamma =
        Scalar(0.25) * p.z * std::pow(Scalar(1) / p.tau + Scalar(1) / V, 2) +
        Scalar(0.5) * p.z *
            (Scalar(1) / (p.tau * p.tau) + Scalar(1) / (V * V));

    const Scalar common = -r2 / (Scalar(2) * V * V) + Scalar(1) / (Scalar(2) * V);
    const Scalar common2 = r2 / (V * V * V) - Scalar(1) / (Scalar(2) * V * V);

    out.d_eta += w * (common - h1 * r(i) * dz_eta);
    out.d_gamma += w * (common - h1 * r(i) * dz_gamma);
    out.d2_eta += w * (common2 - h2 * r2 * dz_eta * dz_eta - h1 * r(i) * d2z_eta);
    out.d2_gamma +=
        w * (common2 - h2 * r2 * dz_gamma * dz_gamma - h1 * r(i) * d2z_gamma);
  }
  return out;
}

}  // namespace sfma
