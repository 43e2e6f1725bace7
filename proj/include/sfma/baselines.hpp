#pragma once

#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "sfma/ipm.hpp"
#include "sfma/solvers.hpp"
#include "sfma/special_functions.hpp"
#include "sfma/types.hpp"

namespace sfma {

// ---------------------------------------------------------------------------
// Deterministic envelopment: the nondecreasing concave upper envelope of the
// observations, i.e. the value function of
//   max sum(l_i y_i)  s.t.  sum(l_i x_i) <= q, sum l = 1, l >= 0.
// ---------------------------------------------------------------------------
template <class Scalar>
class DeaFrontierT {
public:
  static DeaFrontierT build(const DatasetT<Scalar>& data) {
    data.validate();
    std::vector<std::pair<Scalar, Scalar>> pts(std::size_t(data.n()));
    for (Index i = 0; i < data.n(); ++i) pts[std::size_t(i)] = {data.x(i), data.y(i)};
    std::sort(pts.begin(), pts.end());
    // Points sharing an x are dominated by the highest one.
    std::vector<std::pair<Scalar, Scalar>> uniq;
    for (const auto& p : pts) {
      if (!uniq.empty() && uniq.back().first == p.first)
        uniq.back().second = std::max(uniq.back().second, p.second);
      else
        uniq.push_back(p);
    }

    // Upper convex hull (no left turns), then truncate at the peak: past it
    // the envelope stays flat because the resource constraint is an
    // inequality.
    std::vector<std::pair<Scalar, Scalar>> hull;
    for (const auto& p : uniq) {
      while (hull.size() >= 2) {
        const auto& o = hull[hull.size() - 2];
        const auto& a = hull[hull.size() - 1];
        const Scalar cross = (a.first - o.first) * (p.second - o.second) -
                             (a.second - o.second) * (p.first - o.first);
        if (cross >= 0)
          hull.pop_back();
        else
          break;
      }
      hull.push_back(p);
    }
    std::size_t peak = 0;
    for (std::size_t i = 1; i < hull.size(); ++i)
      if (hull[i].second > hull[peak].second) peak = i;
    hull.resize(peak + 1);

    DeaFrontierT out;
    out.vx_.reserve(hull.size());
    out.vy_.reserve(hull.size());
    for (const auto& p : hull) {
      out.vx_.push_back(p.first);
      out.vy_.push_back(p.second);
    }
    return out;
  }

  // Queries left of the data range return the leftmost efficient point.
  Scalar operator()(Scalar q) const {
    if (q <= vx_.front()) return vy_.front();
    if (q >= vx_.back()) return vy_.back();
    const auto it = std::upper_bound(vx_.begin(), vx_.end(), q);
    const std::size_t j = std::size_t(it - vx_.begin());
    const Scalar t = (q - vx_[j - 1]) / (vx_[j] - vx_[j - 1]);
    return (Scalar(1) - t) * vy_[j - 1] + t * vy_[j];
  }

  const std::vector<Scalar>& vertex_x() const { return vx_; }
  const std::vector<Scalar>& vertex_y() const { return vy_; }

private:
  std::vector<Scalar> vx_, vy_;
};

using DeaFrontier = DeaFrontierT<double>;

template <class Scalar>
DeaFrontierT<Scalar> dea_frontier(const DatasetT<Scalar>& data) {
  return DeaFrontierT<Scalar>::build(data);
}

// ---------------------------------------------------------------------------
// Convex nonparametric least squares: per-point intercept/slope pairs with
// pairwise concavity rows and non-negative slopes, solved as a QP.
// ---------------------------------------------------------------------------
template <class Scalar>
struct CnlsFitT {
  VectorX<Scalar> alpha;
  VectorX<Scalar> slope;
  VectorX<Scalar> residuals;  // y - fitted
  Scalar objective = 0;       // residual sum of squares

  Scalar fitted(Scalar x) const {
    Scalar best = alpha(0) + slope(0) * x;
    for (Index i = 1; i < alpha.size(); ++i)
      best = std::min(best, alpha(i) + slope(i) * x);
    return best;
  }
};

using CnlsFit = CnlsFitT<double>;

template <class Scalar>
CnlsFitT<Scalar> cnls_fit(const DatasetT<Scalar>& data, int max_ipm_iters = 300,
                          Index size_cap = 250) {
  data.validate();
  const Index n = data.n();
  if (n < 2) throw DataError("CNLS needs at least 2 observations");
  if (n > size_cap)
    throw ConfigError("CNLS constraint count is quadratic; subsample above " +
                      std::to_string(size_cap) + " points");

  const Index nv = 2 * n;  // [alpha; slope]
  MatrixX<Scalar> H = MatrixX<Scalar>::Zero(nv, nv);
  VectorX<Scalar> g = VectorX<Scalar>::Zero(nv);
  for (Index i = 0; i < n; ++i) {
    const Scalar xi = data.x(i);
    H(i, i) += 2;
    H(i, n + i) += 2 * xi;
    H(n + i, i) += 2 * xi;
    H(n + i, n + i) += 2 * xi * xi;
    g(i) -= 2 * data.y(i);
    g(n + i) -= 2 * data.y(i) * xi;
  }

  using SpMat = Eigen::SparseMatrix<Scalar, Eigen::RowMajor>;
  std::vector<Eigen::Triplet<Scalar>> trips;
  trips.reserve(std::size_t(4 * n * (n - 1) + n));
  Index row = 0;
  for (Index i = 0; i < n; ++i) {
    for (Index h = 0; h < n; ++h) {
      if (i == h) continue;
      trips.emplace_back(row, i, Scalar(1));
      trips.emplace_back(row, n + i, data.x(i));
      trips.emplace_back(row, h, Scalar(-1));
      trips.emplace_back(row, n + h, -data.x(i));
      ++row;
    }
  }
  for (Index i = 0; i < n; ++i) {
    trips.emplace_back(row, n + i, Scalar(-1));
    ++row;
  }
  SpMat C(row, nv);
  C.setFromTriplets(trips.begin(), trips.end());
  const VectorX<Scalar> c = VectorX<Scalar>::Zero(row);

  VectorX<Scalar> x0 = VectorX<Scalar>::Zero(nv);
  x0.head(n).setConstant(data.y.mean());

  IpmOptionsT<Scalar> opts;
  opts.max_iters = max_ipm_iters;
  // KKT residuals are accumulated over O(n^2) pairwise rows, so the
  // attainable floor grows with n; keep 1e-8 for small systems.
  opts.tol = Scalar(1e-8) * std::max(Scalar(1), Scalar(double(n)) / Scalar(30));
  const auto sol = detail::ipm_solve_impl<Scalar>(
      quadratic_oracle<Scalar>(H, g), C, c, std::move(x0), opts);

  CnlsFitT<Scalar> fit;
  fit.alpha = sol.x.head(n);
  fit.slope = sol.x.tail(n).cwiseMax(Scalar(0));
  fit.residuals =
      data.y - (fit.alpha + fit.slope.cwiseProduct(data.x)).eval();
  fit.objective = fit.residuals.squaredNorm();
  return fit;
}

// ---------------------------------------------------------------------------
// Residual variance decomposition into inefficiency (sigma_u) and noise
// (sigma_v) components.
// ---------------------------------------------------------------------------
template <class Scalar>
struct VarianceSplitT {
  enum class Method { MoM, PSL };
  Scalar sigma_u = 0;
  Scalar sigma_v = 0;
  Method method = Method::MoM;
};

using VarianceSplit = VarianceSplitT<double>;

// Skewness-based method of moments. Central moments of the residuals are
// inverted through the half-normal relations; non-negative skew means no
// detectable inefficiency and maps to sigma_u = 0.
template <class Scalar>
VarianceSplitT<Scalar> stoned_mom_from_moments(Scalar m2, Scalar m3) {
  constexpr Scalar pi = Scalar(3.14159265358979323846L);
  VarianceSplitT<Scalar> split;
  split.method = VarianceSplitT<Scalar>::Method::MoM;
  if (m3 < Scalar(0)) {
    const Scalar denom =
        std::sqrt(Scalar(2) / pi) * (Scalar(1) - Scalar(4) / pi);
    split.sigma_u = std::cbrt(m3 / denom);
  }
  const Scalar noise_var =
      m2 - (pi - Scalar(2)) / pi * split.sigma_u * split.sigma_u;
  if (noise_var < Scalar(0))
    throw DataError("residual variance is below the implied inefficiency "
                    "variance (degenerate noise)");
  split.sigma_v = std::sqrt(noise_var);
  return split;
}

template <class Scalar>
VarianceSplitT<Scalar> stoned_mom(const VectorX<Scalar>& residuals) {
  if (residuals.size() < 2) throw DataError("need at least 2 residuals");
  const Scalar mean = residuals.mean();
  const auto centered = (residuals.array() - mean).eval();
  const Scalar m2 = centered.square().mean();
  const Scalar m3 = centered.cube().mean();
  return stoned_mom_from_moments(m2, m3);
}

// Pseudolikelihood profile in the signal-to-noise ratio lambda = su/sv.
// Exposed so tests can check single evaluations against the formula.
template <class Scalar>
Scalar psl_log_likelihood(const VectorX<Scalar>& residuals, Scalar lambda) {
  constexpr Scalar pi = Scalar(3.14159265358979323846L);
  const Index n = residuals.size();
  const Scalar mean_sq = residuals.squaredNorm() / Scalar(n);
  const Scalar shrink =
      Scalar(1) - Scalar(2) * lambda * lambda / (pi * (Scalar(1) + lambda * lambda));
  const Scalar sigma = std::sqrt(mean_sq / shrink);
  const Scalar mean_shift = std::sqrt(Scalar(2)) * lambda * sigma /
                            std::sqrt(pi * (Scalar(1) + lambda * lambda));
  Scalar loglik = -Scalar(n) * std::log(sigma);
  const Scalar log_half = std::log(Scalar(0.5));
  const Scalar inv_sqrt2 = Scalar(0.70710678118654752440L);
  for (Index i = 0; i < n; ++i) {
    const Scalar eps = residuals(i) - mean_shift;
    // log Phi(t) = log(erfc(-t/sqrt(2))/2), in the log domain throughout.
    const Scalar t = -eps * lambda / sigma;
    loglik += log_half + ln_erfc(-t * inv_sqrt2);
    loglik -= eps * eps / (Scalar(2) * sigma * sigma);
  }
  return loglik;
}

template <class Scalar>
VarianceSplitT<Scalar> stoned_psl(const VectorX<Scalar>& residuals,
                                  Scalar lambda_max = Scalar(100)) {
  if (residuals.size() < 3) throw DataError("need at least 3 residuals");
  const Scalar lambda_hat = scalar_minimize(
      [&](Scalar l) { return -psl_log_likelihood(residuals, l); }, Scalar(0),
      lambda_max, Scalar(1e-9));
  constexpr Scalar pi = Scalar(3.14159265358979323846L);
  const Scalar mean_sq = residuals.squaredNorm() / Scalar(residuals.size());
  const Scalar shrink = Scalar(1) - Scalar(2) * lambda_hat * lambda_hat /
                                        (pi * (Scalar(1) + lambda_hat * lambda_hat));
  const Scalar sigma = std::sqrt(mean_sq / shrink);
  VarianceSplitT<Scalar> split;
  split.method = VarianceSplitT<Scalar>::Method::PSL;
  split.sigma_u = sigma * lambda_hat / std::sqrt(Scalar(1) + lambda_hat * lambda_hat);
  split.sigma_v = sigma / std::sqrt(Scalar(1) + lambda_hat * lambda_hat);
  return split;
}

// Conditional expected inefficiency given the composite residual, computed
// as the mean of the truncated normal u | eps with the survival factor kept
// in the log domain. eps_hat centers the CNLS residuals on the composite
// error scale. sigma_u = 0 means no inefficiency anywhere.
template <class Scalar>
VectorX<Scalar> stoned_expected_inefficiency(const VectorX<Scalar>& residuals,
                                             const VarianceSplitT<Scalar>& split) {
  constexpr Scalar pi = Scalar(3.14159265358979323846L);
  const Index n = residuals.size();
  if (split.sigma_u == Scalar(0)) return VectorX<Scalar>::Zero(n);
  if (!(split.sigma_u > 0) || !(split.sigma_v > 0))
    throw DomainError("conditional inefficiency needs positive sigma_u, sigma_v");

  const Scalar su2 = split.sigma_u * split.sigma_u;
  const Scalar sv2 = split.sigma_v * split.sigma_v;
  const Scalar star = split.sigma_u * split.sigma_v / std::sqrt(su2 + sv2);
  const Scalar shift = split.sigma_u * std::sqrt(Scalar(2) / pi);
  const Scalar log_norm = Scalar(-0.5) * std::log(Scalar(2) * pi);
  const Scalar log_half = std::log(Scalar(0.5));
  const Scalar inv_sqrt2 = Scalar(0.70710678118654752440L);

  VectorX<Scalar> expected(n);
  for (Index i = 0; i < n; ++i) {
    const Scalar eps = residuals(i) - shift;
    const Scalar mu_star = -eps * su2 / (su2 + sv2);
    const Scalar d = -mu_star / star;
    const Scalar log_pdf = log_norm - Scalar(0.5) * d * d;
    const Scalar log_survival = log_half + ln_erfc(d * inv_sqrt2);
    expected(i) = mu_star + star * std::exp(log_pdf - log_survival);
  }
  return expected;
}

// Frontier implied by a CNLS fit and a variance split: the concave fit
// shifted up by the mean inefficiency.
template <class Scalar>
Scalar stoned_frontier_shift(const VarianceSplitT<Scalar>& split) {
  constexpr Scalar pi = Scalar(3.14159265358979323846L);
  return split.sigma_u * std::sqrt(Scalar(2) / pi);
}

// ---------------------------------------------------------------------------
// Classic parametric frontier baseline: an affine frontier fit with the same
// marginal likelihood, zero reported sampling error, and both variance
// components free.
// ---------------------------------------------------------------------------
template <class Scalar>
struct SfaFitT {
  SplineSpecT<Scalar> spec;
  ParamsT<Scalar> params;
  Scalar objective = 0;

  Scalar frontier(Scalar x) const {
    return eval_basis(spec, x, 0).dot(params.beta);
  }
};

using SfaFit = SfaFitT<double>;

template <class Scalar>
SfaFitT<Scalar> sfa_fit(const DatasetT<Scalar>& data,
                        const FitOptionsT<Scalar>& opts = {}) {
  data.validate();
  SfaFitT<Scalar> out;
  out.spec.knots = VectorX<Scalar>(2);
  out.spec.knots << data.x.minCoeff(), data.x.maxCoeff();
  if (!(out.spec.knots(0) < out.spec.knots(1)))
    throw DataError("degenerate x range");
  out.spec.degree = 1;

  DatasetT<Scalar> zeroed = data;
  zeroed.se.setZero();
  auto ctx = LikelihoodContextT<Scalar>::with_unit_weights(
      design_matrix(out.spec, zeroed.x, 0));
  const auto fit = bcd_fit(zeroed, ctx,
                           ConstraintSetT<Scalar>::empty(out.spec.basis_dim()),
                           opts);
  out.params = fit.params;
  out.objective = fit.objective;
  return out;
}

}  // namespace sfma
