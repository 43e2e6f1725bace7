#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <utility>

#include "sfma/types.hpp"

namespace sfma {

// Primal-dual interior-point solver for
//   min f(x)  s.t.  C x <= c,
// with f convex and twice differentiable. Slack variables s > 0 and duals
// lambda > 0 are driven along the perturbed KKT system
//   [ Cx + s - c, lambda .* s - mu, grad f + C' lambda ] = 0
// by damped Newton steps; the barrier parameter mu follows the average
// complementarity gap down to zero.

template <class Scalar>
struct ObjectiveEvalT {
  Scalar value = 0;
  VectorX<Scalar> gradient;
  MatrixX<Scalar> hessian;  // empty when not requested
};

using ObjectiveEval = ObjectiveEvalT<double>;

template <class Scalar>
struct IpmOptionsT {
  Scalar tol = Scalar(1e-8);
  int max_iters = 100;
  Scalar regularization = Scalar(1e-10);
  Scalar descent_fraction = Scalar(0.01);  // per-step contraction requirement
  int max_backtracks = 60;
};

using IpmOptions = IpmOptionsT<double>;

template <class Scalar>
struct IpmResultT {
  VectorX<Scalar> x;
  VectorX<Scalar> slack;
  VectorX<Scalar> dual;
  Scalar kkt_residual = 0;
  int iterations = 0;
};

using IpmResult = IpmResultT<double>;

namespace detail {

template <class Scalar>
void add_weighted_normal(MatrixX<Scalar>& M, const MatrixX<Scalar>& C,
                         const VectorX<Scalar>& d) {
  M.noalias() += C.transpose() * d.asDiagonal() * C;
}

// Constraint rows from pairwise programs are very sparse; accumulate the
// normal matrix row by row instead of forming dense products.
template <class Scalar>
void add_weighted_normal(MatrixX<Scalar>& M,
                         const Eigen::SparseMatrix<Scalar, Eigen::RowMajor>& C,
                         const VectorX<Scalar>& d) {
  using SpMat = Eigen::SparseMatrix<Scalar, Eigen::RowMajor>;
  for (Index r = 0; r < C.rows(); ++r) {
    for (typename SpMat::InnerIterator it1(C, r); it1; ++it1) {
      for (typename SpMat::InnerIterator it2(C, r); it2; ++it2) {
        M(it1.col(), it2.col()) += d(r) * it1.value() * it2.value();
      }
    }
  }
}

// Newton solve with the spec'd diagonal fallback for rank-deficient systems.
// Barrier terms make the system very ill-conditioned near convergence, so
// only genuine singularity (non-finite or grossly inconsistent solutions)
// triggers the fallback; step usefulness is judged by the line search.
template <class Scalar>
VectorX<Scalar> solve_regularized(MatrixX<Scalar> M, const VectorX<Scalar>& rhs,
                                  Scalar reg) {
  const Scalar scale = Scalar(1) + rhs.template lpNorm<Eigen::Infinity>();
  for (int attempt = 0; attempt < 4; ++attempt) {
    Eigen::LDLT<MatrixX<Scalar>> fact(M);
    if (fact.info() == Eigen::Success) {
      VectorX<Scalar> dx = fact.solve(rhs);
      if (dx.allFinite() &&
          (M * dx - rhs).template lpNorm<Eigen::Infinity>() <= Scalar(1e-2) * scale)
        return dx;
    }
    M.diagonal().array() += reg;
    reg *= Scalar(100);
  }
  throw ConditioningError("Newton system is singular even after regularization");
}

}  // namespace detail

namespace detail {

// Oracle: callable (const VectorX<Scalar>&, bool need_hessian) -> ObjectiveEvalT.
template <class Scalar, class Oracle, class ConstraintMatrix>
IpmResultT<Scalar> ipm_solve_impl(Oracle&& oracle, const ConstraintMatrix& C,
                                  const VectorX<Scalar>& c, VectorX<Scalar> x0,
                                  const IpmOptionsT<Scalar>& opts) {
  const Index n = x0.size();
  const Index m = C.rows();
  if (c.size() != m) throw SpecError("constraint bound length mismatch");
  if (m > 0 && C.cols() != n) throw SpecError("constraint column count mismatch");

  // Unconstrained: plain damped Newton on the gradient norm.
  if (m == 0) {
    VectorX<Scalar> x = std::move(x0);
    auto eval = oracle(x, true);
    IpmResultT<Scalar> best{x, {}, {}, eval.gradient.template lpNorm<Eigen::Infinity>(), 0};
    for (int iter = 0; iter < opts.max_iters; ++iter) {
      const Scalar gnorm = eval.gradient.template lpNorm<Eigen::Infinity>();
      if (gnorm < best.kkt_residual) best = {x, {}, {}, gnorm, iter};
      if (gnorm <= opts.tol) return {x, {}, {}, gnorm, iter};
      const VectorX<Scalar> dx = detail::solve_regularized<Scalar>(
          eval.hessian, -eval.gradient, opts.regularization);
      Scalar alpha = 1;
      bool accepted = false;
      for (int ls = 0; ls < opts.max_backtracks; ++ls) {
        const VectorX<Scalar> xt = x + alpha * dx;
        auto trial = oracle(xt, false);
        if (trial.gradient.template lpNorm<Eigen::Infinity>() <=
            (Scalar(1) - opts.descent_fraction * alpha) * gnorm) {
          x = xt;
          eval = oracle(x, true);
          accepted = true;
          break;
        }
        alpha /= 2;
      }
      if (!accepted) break;
    }
    throw ConvergenceError(
        "interior-point solve did not reach tolerance (unconstrained)",
        std::vector<double>(best.x.data(), best.x.data() + best.x.size()),
        double(best.kkt_residual));
  }

  VectorX<Scalar> x = std::move(x0);
  VectorX<Scalar> s =
      (c - C * x).cwiseMax(VectorX<Scalar>::Constant(m, Scalar(1)));
  VectorX<Scalar> lambda = VectorX<Scalar>::Ones(m);
  Scalar mu = Scalar(0.1) * s.dot(lambda) / Scalar(m);

  auto eval = oracle(x, true);
  IpmResultT<Scalar> best;
  best.kkt_residual = std::numeric_limits<Scalar>::infinity();

  for (int iter = 0; iter < opts.max_iters; ++iter) {
    const VectorX<Scalar> f1 = C * x + s - c;
    const VectorX<Scalar> comp = lambda.cwiseProduct(s);
    const VectorX<Scalar> f3 = eval.gradient + C.transpose() * lambda;

    const Scalar kkt = std::max({f1.template lpNorm<Eigen::Infinity>(),
                                 comp.template lpNorm<Eigen::Infinity>(),
                                 f3.template lpNorm<Eigen::Infinity>()});
    if (kkt < best.kkt_residual) best = {x, s, lambda, kkt, iter};
    if (kkt <= opts.tol) return {x, s, lambda, kkt, iter};

    const VectorX<Scalar> f2 = comp.array() - mu;
    const VectorX<Scalar> s_inv = s.cwiseInverse();

    MatrixX<Scalar> M = eval.hessian;
    detail::add_weighted_normal(M, C, (lambda.array() * s_inv.array()).matrix().eval());
    const VectorX<Scalar> rhs =
        -f3 + C.transpose() *
                  (s_inv.array() * (f2.array() - lambda.array() * f1.array()))
                      .matrix();
    const VectorX<Scalar> dx =
        detail::solve_regularized<Scalar>(std::move(M), rhs, opts.regularization);
    const VectorX<Scalar> ds = -f1 - C * dx;
    const VectorX<Scalar> dlambda =
        -(s_inv.array() * (f2.array() + lambda.array() * ds.array())).matrix();

    const Scalar f_mu_norm = std::max({f1.template lpNorm<Eigen::Infinity>(),
                                       f2.template lpNorm<Eigen::Infinity>(),
                                       f3.template lpNorm<Eigen::Infinity>()});

    Scalar alpha = 1;
    bool accepted = false;
    for (int ls = 0; ls < opts.max_backtracks; ++ls) {
      const VectorX<Scalar> st = s + alpha * ds;
      const VectorX<Scalar> lt = lambda + alpha * dlambda;
      if ((st.array() > Scalar(0)).all() && (lt.array() > Scalar(0)).all()) {
        const VectorX<Scalar> xt = x + alpha * dx;
        auto trial = oracle(xt, false);
        const Scalar trial_norm = std::max(
            {(C * xt + st - c).template lpNorm<Eigen::Infinity>(),
             (lt.cwiseProduct(st).array() - mu)
                 .matrix()
                 .template lpNorm<Eigen::Infinity>(),
             (trial.gradient + C.transpose() * lt)
                 .template lpNorm<Eigen::Infinity>()});
        if (trial_norm <= (Scalar(1) - opts.descent_fraction * alpha) * f_mu_norm) {
          x = xt;
          s = st;
          lambda = lt;
          accepted = true;
          break;
        }
      }
      alpha /= 2;
    }
    if (!accepted) break;

    mu = Scalar(0.1) * s.dot(lambda) / Scalar(m);
    eval = oracle(x, true);
  }

  throw ConvergenceError(
      "interior-point solve did not reach tolerance",
      std::vector<double>(best.x.data(), best.x.data() + best.x.size()),
      double(best.kkt_residual));
}

}  // namespace detail

template <class Oracle, class ConstraintMatrix, class DerivedC, class DerivedX>
auto ipm_solve(Oracle&& oracle, const ConstraintMatrix& C,
               const Eigen::MatrixBase<DerivedC>& c,
               const Eigen::MatrixBase<DerivedX>& x0,
               const IpmOptionsT<typename DerivedX::Scalar>& opts = {}) {
  using Scalar = typename DerivedX::Scalar;
  return detail::ipm_solve_impl<Scalar>(std::forward<Oracle>(oracle), C,
                                        VectorX<Scalar>(c), VectorX<Scalar>(x0),
                                        opts);
}

// Convenience oracle for quadratic objectives 1/2 x'Hx + g'x.
template <class Scalar>
auto quadratic_oracle(MatrixX<Scalar> H, VectorX<Scalar> g) {
  return [H = std::move(H), g = std::move(g)](const VectorX<Scalar>& x,
                                              bool with_hessian) {
    ObjectiveEvalT<Scalar> out;
    out.value = Scalar(0.5) * x.dot(H * x) + g.dot(x);
    out.gradient = H * x + g;
    if (with_hessian) out.hessian = H;
    return out;
  };
}

}  // namespace sfma
