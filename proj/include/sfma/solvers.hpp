#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "sfma/ipm.hpp"
#include "sfma/likelihood.hpp"
#include "sfma/spline.hpp"
#include "sfma/types.hpp"

namespace sfma {

template <class Scalar>
struct FitOptionsT {
  Scalar obj_tol = Scalar(1e-8);   // relative objective change to stop BCD
  Scalar var_tol = Scalar(1e-9);   // interval tolerance of the scalar solver
  Scalar beta_tol = Scalar(1e-8);  // KKT tolerance of the beta subproblem
  int max_bcd_iters = 200;
  int max_ipm_iters = 100;
  // Upper search bounds for the variance components; 0 means "derive from
  // the data" (10x the variance of y).
  Scalar gamma_upper = 0;
  Scalar eta_upper = 0;

  void validate() const {
    if (!(obj_tol > 0) || !(var_tol > 0) || !(beta_tol > 0))
      throw ConfigError("solver tolerances must be positive");
    if (max_bcd_iters < 1 || max_ipm_iters < 1)
      throw ConfigError("iteration limits must be at least 1");
    if (!std::isfinite(double(gamma_upper)) || !std::isfinite(double(eta_upper)) ||
        gamma_upper < 0 || eta_upper < 0)
      throw ConfigError("variance bounds must be finite and non-negative");
  }
};

using FitOptions = FitOptionsT<double>;

// Bounded scalar minimization: coarse scan to bracket the best local basin
// (the profiled objective can be nonconvex), golden-section inside it, and
// the interval endpoints kept as candidates so boundary minima survive.
template <class Scalar, class F>
Scalar scalar_minimize(F&& f, Scalar lower, Scalar upper,
                       Scalar tol = Scalar(1e-9)) {
  if (!(lower <= upper)) throw SpecError("scalar_minimize: empty interval");
  if (lower == upper) return lower;

  constexpr int kScan = 33;
  Scalar best_x = lower;
  Scalar best_f = f(lower);
  Scalar xs[kScan];
  for (int i = 0; i < kScan; ++i) {
    xs[i] = lower + (upper - lower) * Scalar(i) / Scalar(kScan - 1);
    const Scalar fi = i == 0 ? best_f : f(xs[i]);
    if (fi < best_f) {
      best_f = fi;
      best_x = xs[i];
    }
    if (i > 0 && xs[i] <= xs[i - 1]) xs[i] = xs[i - 1];  // guard tiny spans
  }

  // Bracket around the scan winner.
  int win = 0;
  for (int i = 0; i < kScan; ++i)
    if (xs[i] == best_x) win = i;
  Scalar a = xs[win > 0 ? win - 1 : 0];
  Scalar b = xs[win < kScan - 1 ? win + 1 : kScan - 1];

  const Scalar invphi = Scalar(0.61803398874989484820L);
  Scalar c = b - invphi * (b - a);
  Scalar d = a + invphi * (b - a);
  Scalar fc = f(c);
  Scalar fd = f(d);
  for (int it = 0; it < 200 && (b - a) > tol; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  const Scalar golden_x = fc < fd ? c : d;
  const Scalar golden_f = fc < fd ? fc : fd;
  if (golden_f < best_f) {
    best_f = golden_f;
    best_x = golden_x;
  }
  return best_x;
}

template <class Scalar>
struct BcdResultT {
  ParamsT<Scalar> params;
  Scalar objective = 0;
  std::vector<Scalar> trace;  // objective after init and after every block
  int iterations = 0;
};

using BcdResult = BcdResultT<double>;

namespace detail {

template <class Scalar>
Scalar weighted_variance(const VectorX<Scalar>& v, const VectorX<Scalar>& w) {
  const Scalar total = w.sum();
  if (!(total > Scalar(1e-12)))
    throw IllPosedError("all trim weights are zero");
  const Scalar mean = w.dot(v) / total;
  return w.dot((v.array() - mean).square().matrix()) / total;
}

}  // namespace detail

// Block-coordinate descent: exact convex solve in beta (interior point),
// bounded scalar solves in gamma and eta, repeated until the objective
// stalls. The objective is convex in beta at fixed variances, so each sweep
// can only descend; gamma/eta blocks keep the incumbent as a candidate.
template <class Scalar>
BcdResultT<Scalar> bcd_fit(const DatasetT<Scalar>& data,
                           const LikelihoodContextT<Scalar>& ctx,
                           const ConstraintSetT<Scalar>& constraints,
                           const FitOptionsT<Scalar>& opts = {},
                           const ParamsT<Scalar>* warm_start = nullptr) {
  ctx.validate(data);
  opts.validate();
  const Index m = ctx.design.cols();
  if (constraints.rows() > 0 && constraints.cols() != m)
    throw SpecError("constraint matrix width must match the design");

  const Scalar y_var = detail::weighted_variance(
      data.y, VectorX<Scalar>::Ones(data.n()).eval());
  const Scalar gamma_up =
      opts.gamma_upper > 0 ? opts.gamma_upper : std::max(Scalar(10) * y_var, Scalar(1e-6));
  const Scalar eta_up =
      opts.eta_upper > 0 ? opts.eta_upper : std::max(Scalar(10) * y_var, Scalar(1e-6));

  IpmOptionsT<Scalar> ipm_opts;
  ipm_opts.tol = opts.beta_tol;
  ipm_opts.max_iters = opts.max_ipm_iters;

  ParamsT<Scalar> params;
  if (warm_start) {
    params = *warm_start;
    params.gamma = std::clamp(params.gamma, Scalar(0), gamma_up);
    params.eta = std::clamp(params.eta, Scalar(0), eta_up);
    if (params.beta.size() != m) throw SpecError("warm start dimension mismatch");
  } else {
    // Constrained weighted least squares with unit-inflated variances.
    const VectorX<Scalar> d =
        (ctx.weights.array() / (data.se.array().square() + Scalar(1))).matrix();
    MatrixX<Scalar> H = MatrixX<Scalar>::Zero(m, m);
    detail::add_weighted_normal(H, ctx.design, d);
    const VectorX<Scalar> g = -(ctx.design.transpose() * d.cwiseProduct(data.y));
    try {
      params.beta = detail::ipm_solve_impl<Scalar>(
                        quadratic_oracle<Scalar>(H, g), constraints.matrix,
                        constraints.bound, VectorX<Scalar>::Zero(m), ipm_opts)
                        .x;
    } catch (const ConvergenceError& err) {
      throw ConvergenceError("beta block (initialization): " +
                                 std::string(err.what()),
                             err.best_iterate, err.residual);
    }
    const VectorX<Scalar> r0 = data.y - ctx.design * params.beta;
    const Scalar half_var = Scalar(0.5) * detail::weighted_variance(r0, ctx.weights);
    params.gamma = std::clamp(half_var, Scalar(0), gamma_up);
    params.eta = std::clamp(half_var, Scalar(0), eta_up);
  }

  auto objective_at = [&](const ParamsT<Scalar>& p) {
    return ctx.weights.dot(nll_terms_from_residuals(
        (data.y - ctx.design * p.beta).eval(), data.se, p.gamma, p.eta));
  };

  BcdResultT<Scalar> result;
  Scalar obj = objective_at(params);
  result.trace.push_back(obj);

  for (int iter = 1; iter <= opts.max_bcd_iters; ++iter) {
    const Scalar obj_start = obj;

    // beta block
    auto beta_oracle = [&](const VectorX<Scalar>& beta, bool with_hessian) {
      ObjectiveEvalT<Scalar> out;
      ParamsT<Scalar> p = params;
      p.beta = beta;
      out.value = objective_at(p);
      out.gradient = grad_beta(ctx, data, p);
      if (with_hessian) out.hessian = hess_beta(ctx, data, p);
      return out;
    };
    try {
      const VectorX<Scalar> beta_new =
          detail::ipm_solve_impl<Scalar>(beta_oracle, constraints.matrix,
                                         constraints.bound, params.beta, ipm_opts)
              .x;
      ParamsT<Scalar> trial = params;
      trial.beta = beta_new;
      const Scalar obj_new = objective_at(trial);
      if (obj_new <= obj) {  // keep the incumbent on solver noise
        params.beta = beta_new;
        obj = obj_new;
      }
    } catch (const ConvergenceError& err) {
      throw ConvergenceError("beta block: " + std::string(err.what()),
                             err.best_iterate, err.residual);
    } catch (const SolverError& err) {
      throw SolverError("beta block: " + std::string(err.what()));
    }
    result.trace.push_back(obj);

    // gamma and eta blocks share the residuals fixed by the beta step.
    const VectorX<Scalar> r = data.y - ctx.design * params.beta;
    auto scalar_block = [&](bool is_gamma) {
      auto profile = [&](Scalar v) {
        const Scalar g = is_gamma ? v : params.gamma;
        const Scalar e = is_gamma ? params.eta : v;
        return ctx.weights.dot(nll_terms_from_residuals(r, data.se, g, e));
      };
      const Scalar upper = is_gamma ? gamma_up : eta_up;
      const Scalar current = is_gamma ? params.gamma : params.eta;
      Scalar cand;
      try {
        cand = scalar_minimize(profile, Scalar(0), upper, opts.var_tol);
      } catch (const SolverError& err) {
        throw SolverError(std::string(is_gamma ? "gamma" : "eta") +
                          " block: " + std::string(err.what()));
      }
      Scalar best_v = profile(cand) < profile(current) ? cand : current;

      // Safeguarded Newton polish off the boundary, using analytic partials.
      if (best_v > Scalar(0) && params.gamma > Scalar(0) &&
          params.eta > Scalar(0)) {
        ParamsT<Scalar> p = params;
        (is_gamma ? p.gamma : p.eta) = best_v;
        for (int polish = 0; polish < 3; ++polish) {
          if (!(p.gamma > 0) || !(p.eta > 0)) break;
          const auto parts = partials_gamma_eta(ctx, data, p);
          const Scalar d1 = is_gamma ? parts.d_gamma : parts.d_eta;
          const Scalar d2 = is_gamma ? parts.d2_gamma : parts.d2_eta;
          if (!(d2 > Scalar(1e-12))) break;
          const Scalar next =
              std::clamp((is_gamma ? p.gamma : p.eta) - d1 / d2, Scalar(0), upper);
          if (profile(next) < profile(best_v)) {
            best_v = next;
            (is_gamma ? p.gamma : p.eta) = next;
          } else {
            break;
          }
        }
      }
      (is_gamma ? params.gamma : params.eta) = best_v;
      obj = std::min(obj, profile(best_v));
      result.trace.push_back(obj);
    };
    scalar_block(true);
    scalar_block(false);

    result.iterations = iter;
    if (std::abs(double(obj_start - obj)) <=
        double(opts.obj_tol) * (1.0 + std::abs(double(obj))))
      break;
  }

  result.params = std::move(params);
  result.objective = obj;
  return result;
}

}  // namespace sfma
