#pragma once

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <vector>

#include "sfma/types.hpp"

namespace sfma {

// B-spline basis over knots t_0 < ... < t_k, degree p, built by the interval
// recursion: order-0 elements are interval indicators and each higher order
// blends two children with the affine ramps of their supports. The basis has
// p + k elements (k = number of knot intervals).
//
// Optional linear head/tail segments swap the first/last knot interval for
// the tangent extension of the interior spline, which drops one basis
// element per tail and makes extrapolation first-order.
template <class Scalar>
struct SplineSpecT {
  VectorX<Scalar> knots;
  int degree = 3;
  bool left_linear = false;
  bool right_linear = false;

  Index intervals() const { return knots.size() - 1; }

  Index basis_dim() const {
    return degree + intervals() - (left_linear ? 1 : 0) - (right_linear ? 1 : 0);
  }

  void validate() const {
    if (knots.size() < 2) throw SpecError("spline needs at least 2 knots");
    if (degree < 0) throw SpecError("spline degree must be non-negative");
    for (Index i = 0; i + 1 < knots.size(); ++i)
      if (!(knots(i) < knots(i + 1)))
        throw SpecError("spline knots must be strictly increasing");
    if (!knots.allFinite()) throw SpecError("spline knots must be finite");
    if (left_linear || right_linear) {
      if (intervals() < 3)
        throw SpecError("linear tails need at least 3 knot intervals");
      if (degree < 1) throw SpecError("linear tails need degree >= 1");
    }
  }

  // Knots of the interior polynomial piece (tail intervals excluded).
  VectorX<Scalar> core_knots() const {
    const Index lo = left_linear ? 1 : 0;
    const Index hi = knots.size() - (right_linear ? 1 : 0);
    return knots.segment(lo, hi - lo);
  }
};

using SplineSpec = SplineSpecT<double>;

// Linear inequalities C * theta <= bound.
template <class Scalar>
struct ConstraintSetT {
  MatrixX<Scalar> matrix;
  VectorX<Scalar> bound;

  Index rows() const { return matrix.rows(); }
  Index cols() const { return matrix.cols(); }

  static ConstraintSetT empty(Index cols) {
    return {MatrixX<Scalar>::Zero(0, cols), VectorX<Scalar>::Zero(0)};
  }

  // Same constraints acting on a longer coefficient vector (extra covariate
  // columns are unconstrained).
  ConstraintSetT padded(Index total_cols) const {
    if (total_cols < cols()) throw SpecError("cannot shrink constraint matrix");
    ConstraintSetT out;
    out.matrix = MatrixX<Scalar>::Zero(rows(), total_cols);
    out.matrix.leftCols(cols()) = matrix;
    out.bound = bound;
    return out;
  }
};

using ConstraintSet = ConstraintSetT<double>;

enum class Shape { Increasing, Decreasing, Convex, Concave };

namespace detail {

// Basis values and derivatives 0..max_order at a point inside the core
// domain, via the blending recursion. K holds core knots, q intervals.
template <class Scalar>
MatrixX<Scalar> basis_recursion(const VectorX<Scalar>& K, int degree, Scalar t,
                                int max_order) {
  const Index q = K.size() - 1;
  const int orders = max_order + 1;

  // level i table: (i + q) x orders, element (j-1, o) = d^o/dt^o s_j^i(t)
  MatrixX<Scalar> cur = MatrixX<Scalar>::Zero(q, orders);
  Index cell = q - 1;
  while (cell > 0 && t < K(cell)) --cell;  // last interval right-closed
  cur(cell, 0) = Scalar(1);

  for (int i = 1; i <= degree; ++i) {
    MatrixX<Scalar> next = MatrixX<Scalar>::Zero(i + q, orders);
    for (Index j = 1; j <= i + q; ++j) {
      // left child support [K_lo, K_hi) of s_{j-1}^{i-1}
      {
        const Index lo = std::max<Index>(j - 1 - i, 0);
        const Index hi = std::min<Index>(j - 1, q);
        if (lo < hi && j - 1 >= 1) {
          const Scalar width = K(hi) - K(lo);
          const Scalar ramp = (t - K(lo)) / width;
          const Scalar slope = Scalar(1) / width;
          for (int o = 0; o < orders; ++o) {
            Scalar v = cur(j - 2, o) * ramp;
            if (o > 0) v += Scalar(o) * cur(j - 2, o - 1) * slope;
            next(j - 1, o) += v;
          }
        }
      }
      // right child support of s_j^{i-1}
      {
        const Index lo = std::max<Index>(j - i, 0);
        const Index hi = std::min<Index>(j, q);
        if (lo < hi && j <= i - 1 + q) {
          const Scalar width = K(lo) - K(hi);
          const Scalar ramp = (t - K(hi)) / width;
          const Scalar slope = Scalar(1) / width;
          for (int o = 0; o < orders; ++o) {
            Scalar v = cur(j - 1, o) * ramp;
            if (o > 0) v += Scalar(o) * cur(j - 1, o - 1) * slope;
            next(j - 1, o) += v;
          }
        }
      }
    }
    cur.swap(next);
  }
  return cur;  // (degree + q) x orders
}

}  // namespace detail

// Derivative of given order of every basis element at t. Outside the core
// domain the basis continues as its first-order Taylor extension from the
// nearer boundary, which covers both linear tails and extrapolation.
template <class Scalar>
VectorX<Scalar> eval_basis(const SplineSpecT<Scalar>& spec, Scalar t,
                           int deriv_order = 0) {
  spec.validate();
  if (!std::isfinite(static_cast<double>(t)))
    throw DomainError("eval_basis: point must be finite");
  if (deriv_order < 0) throw SpecError("derivative order must be >= 0");
  if (deriv_order > spec.degree)
    throw SpecError("derivative order exceeds spline degree");

  const VectorX<Scalar> K = spec.core_knots();
  const Scalar lo = K(0);
  const Scalar hi = K(K.size() - 1);
  const Scalar t_core = std::clamp(t, lo, hi);
  const bool outside = t != t_core;

  const int table_order = outside ? std::max(deriv_order, 1) : deriv_order;
  const MatrixX<Scalar> table =
      detail::basis_recursion(K, spec.degree, t_core, table_order);

  if (!outside) return table.col(deriv_order);
  if (deriv_order >= 2) return VectorX<Scalar>::Zero(spec.basis_dim());
  if (deriv_order == 1) return table.col(1);
  return table.col(0) + (t - t_core) * table.col(1);
}

// n x basis_dim matrix of basis derivatives, one row per evaluation point.
template <class Scalar>
MatrixX<Scalar> design_matrix(const SplineSpecT<Scalar>& spec,
                              const VectorX<Scalar>& xs, int deriv_order = 0) {
  spec.validate();
  MatrixX<Scalar> X(xs.size(), spec.basis_dim());
  for (Index i = 0; i < xs.size(); ++i)
    X.row(i) = eval_basis(spec, xs(i), deriv_order).transpose();
  return X;
}

// Shape constraints sampled on a uniform grid over the full knot range.
// Rows are arranged so that C * beta <= 0 enforces every requested shape:
// increasing/decreasing bound the first derivative, convex/concave the second.
template <class Scalar>
ConstraintSetT<Scalar> shape_constraints(const SplineSpecT<Scalar>& spec,
                                         const std::vector<Shape>& shapes,
                                         Index grid_size = 20) {
  spec.validate();
  if (shapes.empty()) return ConstraintSetT<Scalar>::empty(spec.basis_dim());
  if (grid_size < 2) throw SpecError("constraint grid needs at least 2 points");

  bool want[4] = {false, false, false, false};
  for (Shape s : shapes) want[static_cast<int>(s)] = true;
  if ((want[int(Shape::Increasing)] || want[int(Shape::Decreasing)]) &&
      spec.degree < 1)
    throw SpecError("monotone constraints need degree >= 1");
  if ((want[int(Shape::Convex)] || want[int(Shape::Concave)]) && spec.degree < 2)
    throw SpecError("curvature constraints need degree >= 2");

  VectorX<Scalar> grid = VectorX<Scalar>::LinSpaced(
      grid_size, spec.knots(0), spec.knots(spec.knots.size() - 1));

  std::vector<std::pair<int, Scalar>> blocks;  // (derivative order, sign)
  if (want[int(Shape::Increasing)]) blocks.push_back({1, Scalar(-1)});
  if (want[int(Shape::Decreasing)]) blocks.push_back({1, Scalar(1)});
  if (want[int(Shape::Convex)]) blocks.push_back({2, Scalar(-1)});
  if (want[int(Shape::Concave)]) blocks.push_back({2, Scalar(1)});

  ConstraintSetT<Scalar> out;
  out.matrix.resize(Index(blocks.size()) * grid_size, spec.basis_dim());
  Index row = 0;
  for (const auto& [order, sign] : blocks) {
    out.matrix.middleRows(row, grid_size) =
        sign * design_matrix(spec, grid, order);
    row += grid_size;
  }
  out.bound = VectorX<Scalar>::Zero(out.matrix.rows());
  return out;
}

// Knot builders used by the CLI and the simulation harness. Quantile knots
// (including min/max) keep basis columns populated when data clump.
template <class Scalar>
VectorX<Scalar> quantile_knots(const VectorX<Scalar>& x, Index count) {
  if (count < 2) throw SpecError("need at least 2 knots");
  if (x.size() < 2) throw SpecError("need at least 2 data points to place knots");
  std::vector<Scalar> sorted(x.data(), x.data() + x.size());
  std::sort(sorted.begin(), sorted.end());
  VectorX<Scalar> knots(count);
  const Index n = Index(sorted.size());
  for (Index j = 0; j < count; ++j) {
    const double pos = double(j) / double(count - 1) * double(n - 1);
    const Index i0 = Index(std::floor(pos));
    const Index i1 = std::min(i0 + 1, n - 1);
    const double frac = pos - double(i0);
    knots(j) = Scalar((1.0 - frac) * sorted[std::size_t(i0)] +
                      frac * sorted[std::size_t(i1)]);
  }
  // Clumped data can collapse quantiles; fall back to uniform spacing.
  for (Index j = 0; j + 1 < count; ++j)
    if (!(knots(j) < knots(j + 1)))
      return VectorX<Scalar>::LinSpaced(count, sorted.front(), sorted.back());
  return knots;
}

template <class Scalar>
VectorX<Scalar> uniform_knots(const VectorX<Scalar>& x, Index count) {
  if (count < 2) throw SpecError("need at least 2 knots");
  const Scalar lo = x.minCoeff();
  const Scalar hi = x.maxCoeff();
  if (!(lo < hi)) throw SpecError("data range is degenerate");
  return VectorX<Scalar>::LinSpaced(count, lo, hi);
}

}  // namespace sfma
