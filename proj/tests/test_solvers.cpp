#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "sfma/rng.hpp"
#include "sfma/solvers.hpp"
#include "support/instances.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;
using sfma::bcd_fit;
using sfma::ConstraintSet;
using sfma::Dataset;
using sfma::FitOptions;
using sfma::LikelihoodContext;
using sfma::scalar_minimize;

TEST_CASE("scalar_minimize basics") {
  CHECK(scalar_minimize([](double x) { return (x - 3.0) * (x - 3.0); }, 0.0,
                        10.0) == doctest::Approx(3.0).epsilon(1e-6));
  CHECK(scalar_minimize([](double x) { return x; }, 0.0, 10.0) == 0.0);
  CHECK(scalar_minimize([](double x) { return -x; }, 0.0, 10.0) == 10.0);
  CHECK_THROWS_AS(scalar_minimize([](double x) { return x; }, 1.0, 0.0),
                  sfma::SpecError);
}

TEST_CASE("scalar_minimize matches a dense grid on the profiled objective") {
  sfma::Rng rng(808);
  auto inst = instances::random_likelihood(rng, 40, 3);
  const VectorXd r = sfma::residuals_of(inst.ctx, inst.data, inst.params);
  auto profile = [&](double gamma) {
    return inst.ctx.weights.dot(sfma::nll_terms_from_residuals(
        r, inst.data.se, gamma, inst.params.eta));
  };
  const double upper = 4.0;
  const double found = scalar_minimize(profile, 0.0, upper, 1e-10);

  const int grid_n = 10000;
  double best_x = 0.0, best_f = profile(0.0);
  for (int i = 1; i < grid_n; ++i) {
    const double x = upper * double(i) / (grid_n - 1);
    const double f = profile(x);
    if (f < best_f) {
      best_f = f;
      best_x = x;
    }
  }
  CHECK(std::abs(found - best_x) <= upper / (grid_n - 1));
  CHECK(profile(found) <= best_f + 1e-12);
}

namespace {

struct FitFixture {
  Dataset data;
  LikelihoodContext ctx;
  ConstraintSet constraints;
  sfma::SplineSpec spec;
};

// Noisy concave-frontier sample with a linear spline fit.
FitFixture linear_fixture(int n, sfma::Rng& rng, bool noiseless = false) {
  FitFixture fx;
  fx.data.y.resize(n);
  fx.data.x.resize(n);
  fx.data.se = VectorXd::Constant(n, 0.1);
  for (int i = 0; i < n; ++i) {
    fx.data.x(i) = rng.uniform();
    fx.data.y(i) = 1.0 + 2.0 * fx.data.x(i) +
                   (noiseless ? 0.0 : 0.1 * rng.normal());
  }
  fx.spec.knots = VectorXd::LinSpaced(2, 0.0, 1.0);
  fx.spec.degree = 1;
  fx.ctx = LikelihoodContext::with_unit_weights(
      sfma::design_matrix(fx.spec, fx.data.x, 0));
  fx.constraints =
      sfma::shape_constraints(fx.spec, {sfma::Shape::Increasing}, 8);
  return fx;
}

}  // namespace

TEST_CASE("noiseless linear frontier is recovered with near-zero variances") {
  sfma::Rng rng(99);
  auto fx = linear_fixture(60, rng, /*noiseless=*/true);
  const auto fit = bcd_fit(fx.data, fx.ctx, fx.constraints);

  const VectorXd grid = VectorXd::LinSpaced(50, 0.0, 1.0);
  const VectorXd curve = sfma::design_matrix(fx.spec, grid, 0) * fit.params.beta;
  double rms = 0;
  for (int i = 0; i < grid.size(); ++i) {
    const double truth = 1.0 + 2.0 * grid(i);
    rms += (curve(i) - truth) * (curve(i) - truth);
  }
  rms = std::sqrt(rms / grid.size());
  CHECK(rms < 0.05);
  CHECK(fit.params.eta < 1e-3);
}

TEST_CASE("objective trace is monotone and the fit is a fixed point") {
  sfma::Rng rng(123);
  auto fx = linear_fixture(80, rng);
  // Inject one-sided gaps so the variance components are genuinely active.
  for (int i = 0; i < fx.data.n(); ++i) fx.data.y(i) -= rng.half_normal(0.5);

  const auto fit = bcd_fit(fx.data, fx.ctx, fx.constraints);
  REQUIRE(fit.trace.size() >= 4);
  for (std::size_t k = 1; k < fit.trace.size(); ++k)
    CHECK(fit.trace[k] <= fit.trace[k - 1] + 1e-10);

  FitOptions opts;
  const auto again =
      bcd_fit(fx.data, fx.ctx, fx.constraints, opts, &fit.params);
  CHECK(std::abs(again.objective - fit.objective) <=
        opts.obj_tol * (1.0 + std::abs(fit.objective)));
}

TEST_CASE("sub-solver failures carry the block identity") {
  sfma::Rng rng(5);
  auto fx = linear_fixture(50, rng);
  for (int i = 0; i < fx.data.n(); ++i) fx.data.y(i) -= rng.half_normal(0.5);
  FitOptions opts;
  opts.max_ipm_iters = 1;  // starve the beta subproblem
  try {
    bcd_fit(fx.data, fx.ctx, fx.constraints, opts);
    FAIL("expected ConvergenceError");
  } catch (const sfma::ConvergenceError& err) {
    CHECK(std::string(err.what()).find("beta block") != std::string::npos);
  }
}

TEST_CASE("constraint width mismatches are rejected") {
  sfma::Rng rng(6);
  auto fx = linear_fixture(30, rng);
  ConstraintSet bad = fx.constraints;
  bad.matrix = MatrixXd::Ones(2, fx.ctx.design.cols() + 1);
  bad.bound = VectorXd::Zero(2);
  CHECK_THROWS_AS(bcd_fit(fx.data, fx.ctx, bad), sfma::SpecError);
}
