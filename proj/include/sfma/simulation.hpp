#pragma once

#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "sfma/baselines.hpp"
#include "sfma/inefficiency.hpp"
#include "sfma/rng.hpp"
#include "sfma/trimming.hpp"

namespace sfma {

inline double true_frontier(double x) { return 3.0 + std::log(x + 0.2); }
inline double shifted_outlier_frontier(double x) { return 10.0 + std::log(x + 0.2); }

// Synthetic study designs. The four standard rows:
//   1: sigma_u^2 = 1,   eps variance 0.2,                n = 200
//   2: sigma_u^2 = 1,   eps variance sqrt(0.2 x),        n = 200
//   3: sigma_u^2 = 0.5, eps variance 0.05 / 1.0 mixture, n = 210
//   4: row 3 plus 12.5% outliers drawn from a frontier shifted up by 7.
struct SimSpec {
  int sim_id = 1;
  Index n = 200;
  double sigma_u2 = 1.0;
  double outlier_fraction = 0.0;
  std::uint64_t seed = 0;
  // The mixed-noise rows put the high-variance noise on a random third of
  // the points. The sim-2 rule reads "variance = sqrt(0.2 x)" as written;
  // set sd_reading to interpret it as the standard deviation instead.
  bool sim2_sd_reading = false;

  static SimSpec table_row(int sim_id, std::uint64_t seed) {
    SimSpec s;
    s.sim_id = sim_id;
    s.seed = seed;
    switch (sim_id) {
      case 1: s.n = 200; s.sigma_u2 = 1.0; s.outlier_fraction = 0.0; break;
      case 2: s.n = 200; s.sigma_u2 = 1.0; s.outlier_fraction = 0.0; break;
      case 3: s.n = 210; s.sigma_u2 = 0.5; s.outlier_fraction = 0.0; break;
      case 4: s.n = 210; s.sigma_u2 = 0.5; s.outlier_fraction = 0.125; break;
      default: throw ConfigError("sim_id must be 1, 2, 3 or 4");
    }
    return s;
  }

  void validate() const {
    if (sim_id < 1 || sim_id > 4) throw ConfigError("sim_id must be 1..4");
    if (n < 1) throw ConfigError("simulation size must be positive");
    if (!(sigma_u2 >= 0)) throw ConfigError("sigma_u^2 must be non-negative");
    if (outlier_fraction < 0 || outlier_fraction >= 1)
      throw ConfigError("outlier fraction must lie in [0, 1)");
  }
};

struct SimDraw {
  Dataset dataset;  // se holds the true per-point noise standard deviation
  std::vector<bool> outlier_mask;
};

// Fixed draw order (x block, noise-level assignment, eps block, u block,
// outlier indices) so a seed pins the dataset bit-for-bit.
inline SimDraw generate_sim(const SimSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const Index n = spec.n;

  SimDraw draw;
  draw.dataset.y.resize(n);
  draw.dataset.x.resize(n);
  draw.dataset.se.resize(n);
  draw.outlier_mask.assign(std::size_t(n), false);

  for (Index i = 0; i < n; ++i) draw.dataset.x(i) = rng.uniform();

  switch (spec.sim_id) {
    case 1:
      draw.dataset.se.setConstant(std::sqrt(0.2));
      break;
    case 2:
      for (Index i = 0; i < n; ++i) {
        const double variance = spec.sim2_sd_reading
                                    ? 0.2 * draw.dataset.x(i)
                                    : std::sqrt(0.2 * draw.dataset.x(i));
        draw.dataset.se(i) = std::sqrt(variance);
      }
      break;
    case 3:
    case 4: {
      draw.dataset.se.setConstant(std::sqrt(0.05));
      const int high = int(std::llround(double(n) / 3.0));
      for (int idx : rng.sample_indices(int(n), high))
        draw.dataset.se(idx) = 1.0;
      break;
    }
  }

  VectorX<double> eps(n), ineff(n);
  for (Index i = 0; i < n; ++i) eps(i) = rng.normal(0.0, draw.dataset.se(i));
  for (Index i = 0; i < n; ++i) ineff(i) = rng.half_normal(spec.sigma_u2);

  if (spec.outlier_fraction > 0) {
    const int k = int(std::llround(spec.outlier_fraction * double(n)));
    for (int idx : rng.sample_indices(int(n), k))
      draw.outlier_mask[std::size_t(idx)] = true;
  }

  for (Index i = 0; i < n; ++i) {
    const double base = draw.outlier_mask[std::size_t(i)]
                            ? shifted_outlier_frontier(draw.dataset.x(i))
                            : true_frontier(draw.dataset.x(i));
    draw.dataset.y(i) = base + eps(i) - ineff(i);
  }
  return draw;
}

// ---------------------------------------------------------------------------
// Frontier accuracy metric and the replication harness.
// ---------------------------------------------------------------------------

inline double frontier_rmse(const std::function<double(double)>& estimate,
                            const std::function<double(double)>& truth,
                            const VectorX<double>& grid) {
  if (grid.size() == 0) throw ConfigError("RMSE grid is empty");
  double acc = 0;
  for (Index i = 0; i < grid.size(); ++i) {
    const double d = estimate(grid(i)) - truth(grid(i));
    acc += d * d;
  }
  return std::sqrt(acc / double(grid.size()));
}

// 100 uniform points inside the x support, away from extrapolation edges.
inline VectorX<double> default_rmse_grid() {
  return VectorX<double>::LinSpaced(100, 0.01, 0.99);
}

enum class Method { Dea, Sfa, StonedMom, StonedQle, Sfma, RSfma };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::Dea: return "DEA";
    case Method::Sfa: return "SFA";
    case Method::StonedMom: return "StoNED-MoM";
    case Method::StonedQle: return "StoNED-QLE";
    case Method::Sfma: return "SFMA";
    case Method::RSfma: return "R-SFMA";
  }
  return "?";
}

inline bool parse_method(const std::string& name, Method& out) {
  for (Method m : {Method::Dea, Method::Sfa, Method::StonedMom,
                   Method::StonedQle, Method::Sfma, Method::RSfma}) {
    if (name == method_name(m)) {
      out = m;
      return true;
    }
  }
  return false;
}

struct BenchOptions {
  VectorX<double> rmse_grid;  // empty: default_rmse_grid()
  double trim_proportion = 0.125;
  Index knot_count = 7;
  int spline_degree = 3;
  Index constraint_grid = 20;
  bool quantile_knots = true;
  FitOptions fit;
  int threads = 1;
};

struct SfmaInputs {
  SplineSpec spec;
  LikelihoodContext ctx;
  ConstraintSet constraints;
};

// Shared construction for the spline estimator: knots over the observed
// exposures, monotone-increasing and concave shape rows.
inline SfmaInputs build_sfma_inputs(const Dataset& data,
                                    const BenchOptions& opts) {
  SfmaInputs in;
  in.spec.knots = opts.quantile_knots
                      ? quantile_knots(data.x, opts.knot_count)
                      : uniform_knots(data.x, opts.knot_count);
  in.spec.degree = opts.spline_degree;
  in.ctx = LikelihoodContext::with_unit_weights(design_matrix(in.spec, data.x, 0));
  in.constraints = shape_constraints(
      in.spec, {Shape::Increasing, Shape::Concave}, opts.constraint_grid);
  return in;
}

// Fit one method on one draw and return its frontier as a callable. The
// StoNED variants share a CNLS fit through the optional cache.
inline std::function<double(double)> fit_frontier(
    Method method, const SimDraw& draw, const BenchOptions& opts,
    std::optional<CnlsFit>* cnls_cache = nullptr) {
  const Dataset& data = draw.dataset;
  switch (method) {
    case Method::Dea: {
      auto env = dea_frontier(data);
      return [env](double q) { return env(q); };
    }
    case Method::Sfa: {
      auto fit = sfa_fit(data, opts.fit);
      return [fit](double q) { return fit.frontier(q); };
    }
    case Method::StonedMom:
    case Method::StonedQle: {
      std::optional<CnlsFit> local;
      std::optional<CnlsFit>& cache = cnls_cache ? *cnls_cache : local;
      if (!cache) cache = cnls_fit(data);
      const VarianceSplit split = method == Method::StonedMom
                                      ? stoned_mom(cache->residuals)
                                      : stoned_psl(cache->residuals);
      const double shift = stoned_frontier_shift(split);
      const CnlsFit fit = *cache;
      return [fit, shift](double q) { return fit.fitted(q) + shift; };
    }
    case Method::Sfma: {
      auto in = build_sfma_inputs(data, opts);
      const auto fit = bcd_fit(data, in.ctx, in.constraints, opts.fit);
      const SplineSpec spec = in.spec;
      const VectorX<double> beta = fit.params.beta;
      return [spec, beta](double q) { return eval_basis(spec, q, 0).dot(beta); };
    }
    case Method::RSfma: {
      auto in = build_sfma_inputs(data, opts);
      TrimConfig trim;
      trim.inlier_count = 1.0 - opts.trim_proportion;
      const auto fit = trimmed_fit(data, in.ctx, in.constraints, opts.fit, trim);
      const SplineSpec spec = in.spec;
      const VectorX<double> beta = fit.params.beta;
      return [spec, beta](double q) { return eval_basis(spec, q, 0).dot(beta); };
    }
  }
  throw ConfigError("unknown method");
}

struct BenchRow {
  Method method;
  std::vector<double> rmse_per_rep;  // NaN marks a failed cell
  double mean_rmse = std::numeric_limits<double>::quiet_NaN();
  double median_rmse = std::numeric_limits<double>::quiet_NaN();
  int failures = 0;
};

struct BenchResult {
  SimSpec spec;
  int replications = 0;
  VectorX<double> grid;
  std::vector<BenchRow> rows;
  // Plot-ready frontier samples from the first replication, aligned with
  // `rows`; empty when that replication failed.
  std::vector<VectorX<double>> first_rep_frontier;
};

// Monte-Carlo comparison over independent replications with per-replication
// seeds spec.seed + rep. Method failures are recorded as missing cells.
// Replications are independent, so they can run on several threads; results
// are keyed by replication index and identical for any thread count.
inline BenchResult run_monte_carlo(const SimSpec& spec,
                                   const std::vector<Method>& methods,
                                   int replications,
                                   const BenchOptions& opts = {}) {
  if (replications < 1) throw ConfigError("need at least one replication");
  spec.validate();

  BenchResult result;
  result.spec = spec;
  result.replications = replications;
  result.grid = opts.rmse_grid.size() > 0 ? opts.rmse_grid : default_rmse_grid();
  result.rows.resize(methods.size());
  result.first_rep_frontier.resize(methods.size());
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    result.rows[mi].method = methods[mi];
    result.rows[mi].rmse_per_rep.assign(
        std::size_t(replications), std::numeric_limits<double>::quiet_NaN());
  }

  auto run_rep = [&](int rep) {
    SimSpec rep_spec = spec;
    rep_spec.seed = spec.seed + std::uint64_t(rep);
    const SimDraw draw = generate_sim(rep_spec);
    std::optional<CnlsFit> cnls_cache;
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      try {
        const auto frontier = fit_frontier(methods[mi], draw, opts, &cnls_cache);
        result.rows[mi].rmse_per_rep[std::size_t(rep)] =
            frontier_rmse(frontier, true_frontier, result.grid);
        if (rep == 0) {
          VectorX<double> samples(result.grid.size());
          for (Index i = 0; i < result.grid.size(); ++i)
            samples(i) = frontier(result.grid(i));
          result.first_rep_frontier[mi] = std::move(samples);
        }
      } catch (const Error&) {
        // missing cell
      }
    }
  };

  const int threads = std::max(1, std::min(opts.threads, replications));
  if (threads == 1) {
    for (int rep = 0; rep < replications; ++rep) run_rep(rep);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(std::size_t(threads));
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (int rep = next.fetch_add(1); rep < replications;
             rep = next.fetch_add(1))
          run_rep(rep);
      });
    }
    for (auto& th : pool) th.join();
  }

  for (auto& row : result.rows) {
    std::vector<double> ok;
    for (double v : row.rmse_per_rep) {
      if (std::isnan(v))
        ++row.failures;
      else
        ok.push_back(v);
    }
    if (!ok.empty()) {
      double sum = 0;
      for (double v : ok) sum += v;
      row.mean_rmse = sum / double(ok.size());
      std::sort(ok.begin(), ok.end());
      const std::size_t mid = ok.size() / 2;
      row.median_rmse = ok.size() % 2 ? ok[mid]
                                      : 0.5 * (ok[mid - 1] + ok[mid]);
    }
  }
  return result;
}

}  // namespace sfma
