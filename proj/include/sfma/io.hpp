#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sfma/inefficiency.hpp"
#include "sfma/simulation.hpp"
#include "sfma/trimming.hpp"

namespace sfma {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Formatting and atomic file output. Numeric cells use 17 significant digits
// so every double round-trips exactly.
// ---------------------------------------------------------------------------

inline std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_file_atomic(const std::filesystem::path& path,
                              const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + tmp.string() + " for writing");
    out << content;
    if (!out.good()) throw DataError("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// Delimiter-separated input with a header row. Cells are not quoted; the
// data are numeric columns.
// ---------------------------------------------------------------------------

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  Index column(const std::string& name) const {
    for (std::size_t j = 0; j < header.size(); ++j)
      if (header[j] == name) return Index(j);
    return -1;
  }
};

namespace detail {
inline std::string trim_ws(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}
}  // namespace detail

inline CsvTable read_csv(const std::string& path, char delimiter = ',') {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open input file: " + path);
  CsvTable table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (first && line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, delimiter)) cells.push_back(detail::trim_ws(cell));
    if (!line.empty() && line.back() == delimiter) cells.push_back("");
    if (first) {
      table.header = cells;
      first = false;
    } else {
      table.rows.push_back(cells);
    }
  }
  if (table.header.empty()) throw DataError("input file has no header row: " + path);
  return table;
}

// ---------------------------------------------------------------------------
// Dataset ingestion.
// ---------------------------------------------------------------------------

struct ColumnSpec {
  std::string y = "y";
  std::string x = "x";
  std::string se = "se";
};

struct LoadReport {
  std::vector<Index> dropped_rows;  // 1-based data row numbers missing y or x
};

namespace detail {

inline double parse_cell(const std::string& cell, Index row,
                         const std::string& column) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw DataError("cannot parse row " + std::to_string(row) + ", column '" +
                    column + "': '" + cell + "'");
  }
}

inline double apply_transform(double v, const std::string& transform,
                              const std::string& column) {
  if (transform == "none") return v;
  if (transform == "log") {
    if (!(v > 0))
      throw DataError("log transform needs positive values in column '" +
                      column + "'");
    return std::log(v);
  }
  throw ConfigError("unknown transform '" + transform + "'");
}

}  // namespace detail

// Rows with a missing y or x cell are dropped and reported by 1-based row
// number; a missing se cell (or a missing se column) reads as zero. An se
// cell that is present must be positive.
inline Dataset load_dataset(const std::string& path, const ColumnSpec& columns,
                            char delimiter = ',', LoadReport* report = nullptr,
                            const std::string& x_transform = "none",
                            const std::string& y_transform = "none") {
  const CsvTable table = read_csv(path, delimiter);
  const Index jy = table.column(columns.y);
  const Index jx = table.column(columns.x);
  const Index jse = columns.se.empty() ? -1 : table.column(columns.se);
  if (jy < 0) throw DataError("missing column '" + columns.y + "' in " + path);
  if (jx < 0) throw DataError("missing column '" + columns.x + "' in " + path);

  std::vector<double> ys, xs, ses;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const Index row_number = Index(r) + 1;
    const auto& cells = table.rows[r];
    auto cell_at = [&](Index j) -> std::string {
      return j >= 0 && std::size_t(j) < cells.size() ? cells[std::size_t(j)] : "";
    };
    const std::string cy = cell_at(jy);
    const std::string cx = cell_at(jx);
    if (cy.empty() || cx.empty()) {
      if (report) report->dropped_rows.push_back(row_number);
      continue;
    }
    const double y = detail::apply_transform(
        detail::parse_cell(cy, row_number, columns.y), y_transform, columns.y);
    const double x = detail::apply_transform(
        detail::parse_cell(cx, row_number, columns.x), x_transform, columns.x);
    double se = 0;
    const std::string cse = cell_at(jse);
    if (jse >= 0 && !cse.empty()) {
      se = detail::parse_cell(cse, row_number, columns.se);
      if (!(se > 0))
        throw DataError("non-positive standard error at row " +
                        std::to_string(row_number));
    }
    ys.push_back(y);
    xs.push_back(x);
    ses.push_back(se);
  }
  if (ys.empty()) throw DataError("no usable rows in " + path);

  Dataset data;
  data.y = Eigen::Map<const VectorX<double>>(ys.data(), Index(ys.size()));
  data.x = Eigen::Map<const VectorX<double>>(xs.data(), Index(xs.size()));
  data.se = Eigen::Map<const VectorX<double>>(ses.data(), Index(ses.size()));
  data.validate();
  return data;
}

// ---------------------------------------------------------------------------
// Run configuration: one JSON document per run, every default materialized
// into the echoed copy so runs are self-describing.
// ---------------------------------------------------------------------------

struct RunConfig {
  std::string input_path;
  std::string delimiter = ",";
  ColumnSpec columns;
  std::string x_transform = "none";
  std::string y_transform = "none";

  Index knot_count = 7;
  std::string knot_rule = "quantile";  // or "uniform"
  int degree = 3;
  bool left_linear = false;
  bool right_linear = false;
  std::vector<std::string> shapes = {"increasing", "concave"};
  Index constraint_grid = 20;

  double trim_proportion = 0.0;
  FitOptions solver;
  std::string output_dir = "sfma_output";
  std::uint64_t seed = 0;

  void validate() const;
};

inline Shape parse_shape(const std::string& name) {
  if (name == "increasing") return Shape::Increasing;
  if (name == "decreasing") return Shape::Decreasing;
  if (name == "convex") return Shape::Convex;
  if (name == "concave") return Shape::Concave;
  throw ConfigError("unknown shape constraint '" + name + "'");
}

inline void RunConfig::validate() const {
  if (input_path.empty()) throw ConfigError("config needs input.path");
  if (delimiter.size() != 1) throw ConfigError("delimiter must be one character");
  if (knot_count < 2) throw ConfigError("need at least 2 knots");
  if (degree < 0) throw ConfigError("degree must be non-negative");
  if (knot_rule != "quantile" && knot_rule != "uniform")
    throw ConfigError("knot rule must be 'quantile' or 'uniform'");
  if (trim_proportion < 0 || trim_proportion >= 1)
    throw ConfigError("trim proportion must lie in [0, 1)");
  if (constraint_grid < 2) throw ConfigError("constraint grid needs >= 2 points");
  for (const auto& s : shapes) parse_shape(s);
  solver.validate();
}

namespace detail {

template <class T>
void maybe_get(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace detail

inline RunConfig parse_run_config(const json& j) {
  if (!j.is_object()) throw ConfigError("run config must be a JSON object");
  RunConfig cfg;
  if (j.contains("input")) {
    const json& in = j.at("input");
    detail::maybe_get(in, "path", cfg.input_path);
    detail::maybe_get(in, "delimiter", cfg.delimiter);
    if (in.contains("columns")) {
      const json& cols = in.at("columns");
      detail::maybe_get(cols, "y", cfg.columns.y);
      detail::maybe_get(cols, "x", cfg.columns.x);
      detail::maybe_get(cols, "se", cfg.columns.se);
    }
    if (in.contains("transform")) {
      const json& tr = in.at("transform");
      detail::maybe_get(tr, "x", cfg.x_transform);
      detail::maybe_get(tr, "y", cfg.y_transform);
    }
  }
  if (j.contains("spline")) {
    const json& sp = j.at("spline");
    long long knots = cfg.knot_count;
    detail::maybe_get(sp, "knots", knots);
    cfg.knot_count = Index(knots);
    detail::maybe_get(sp, "knot_rule", cfg.knot_rule);
    detail::maybe_get(sp, "degree", cfg.degree);
    detail::maybe_get(sp, "left_linear", cfg.left_linear);
    detail::maybe_get(sp, "right_linear", cfg.right_linear);
  }
  detail::maybe_get(j, "shapes", cfg.shapes);
  if (j.contains("constraint_grid"))
    cfg.constraint_grid = Index(j.at("constraint_grid").get<long long>());
  detail::maybe_get(j, "trim_proportion", cfg.trim_proportion);
  if (j.contains("solver")) {
    const json& s = j.at("solver");
    detail::maybe_get(s, "obj_tol", cfg.solver.obj_tol);
    detail::maybe_get(s, "var_tol", cfg.solver.var_tol);
    detail::maybe_get(s, "beta_tol", cfg.solver.beta_tol);
    detail::maybe_get(s, "max_bcd_iters", cfg.solver.max_bcd_iters);
    detail::maybe_get(s, "max_ipm_iters", cfg.solver.max_ipm_iters);
    detail::maybe_get(s, "gamma_upper", cfg.solver.gamma_upper);
    detail::maybe_get(s, "eta_upper", cfg.solver.eta_upper);
  }
  detail::maybe_get(j, "output_dir", cfg.output_dir);
  detail::maybe_get(j, "seed", cfg.seed);
  cfg.validate();
  return cfg;
}

inline json run_config_to_json(const RunConfig& cfg) {
  json j;
  j["input"] = {{"path", cfg.input_path},
                {"delimiter", cfg.delimiter},
                {"columns", {{"y", cfg.columns.y}, {"x", cfg.columns.x}, {"se", cfg.columns.se}}},
                {"transform", {{"x", cfg.x_transform}, {"y", cfg.y_transform}}}};
  j["spline"] = {{"knots", cfg.knot_count},
                 {"knot_rule", cfg.knot_rule},
                 {"degree", cfg.degree},
                 {"left_linear", cfg.left_linear},
                 {"right_linear", cfg.right_linear}};
  j["shapes"] = cfg.shapes;
  j["constraint_grid"] = cfg.constraint_grid;
  j["trim_proportion"] = cfg.trim_proportion;
  j["solver"] = {{"obj_tol", cfg.solver.obj_tol},
                 {"var_tol", cfg.solver.var_tol},
                 {"beta_tol", cfg.solver.beta_tol},
                 {"max_bcd_iters", cfg.solver.max_bcd_iters},
                 {"max_ipm_iters", cfg.solver.max_ipm_iters},
                 {"gamma_upper", cfg.solver.gamma_upper},
                 {"eta_upper", cfg.solver.eta_upper}};
  j["output_dir"] = cfg.output_dir;
  j["seed"] = cfg.seed;
  return j;
}

// ---------------------------------------------------------------------------
// fit: load -> spline -> constraints -> (trimmed) fit -> artifacts.
// All outputs are computed before any file is written, and each file is
// written atomically, so failures leave no partial outputs.
// ---------------------------------------------------------------------------

struct FitArtifacts {
  Dataset data;
  FitResult result;
  SplineSpec spec;
  LoadReport load_report;
  int bcd_iterations = 0;
  std::vector<Index> excluded;  // indices with zero trim weight
};

inline FitArtifacts run_fit(const RunConfig& cfg) {
  cfg.validate();
  LoadReport report;
  const Dataset data =
      load_dataset(cfg.input_path, cfg.columns, cfg.delimiter[0], &report,
                   cfg.x_transform, cfg.y_transform);

  SplineSpec spec;
  spec.knots = cfg.knot_rule == "quantile"
                   ? quantile_knots(data.x, cfg.knot_count)
                   : uniform_knots(data.x, cfg.knot_count);
  spec.degree = cfg.degree;
  spec.left_linear = cfg.left_linear;
  spec.right_linear = cfg.right_linear;

  std::vector<Shape> shapes;
  for (const auto& s : cfg.shapes) shapes.push_back(parse_shape(s));
  const ConstraintSet constraints =
      shape_constraints(spec, shapes, cfg.constraint_grid);

  auto ctx = LikelihoodContext::with_unit_weights(design_matrix(spec, data.x, 0));

  FitArtifacts out;
  out.data = data;
  out.spec = spec;
  out.load_report = report;
  if (cfg.trim_proportion > 0) {
    TrimConfig trim;
    trim.inlier_count = 1.0 - cfg.trim_proportion;
    const auto fit = trimmed_fit(data, ctx, constraints, cfg.solver, trim);
    ctx.weights = fit.weights;
    out.result = make_fit_result(data, ctx, fit.params, fit.weights, fit.objective);
    out.bcd_iterations = fit.outer_iterations;
    for (Index i = 0; i < fit.weights.size(); ++i)
      if (fit.weights(i) == 0.0) out.excluded.push_back(i);
  } else {
    const auto fit = bcd_fit(data, ctx, constraints, cfg.solver);
    out.result =
        make_fit_result(data, ctx, fit.params, ctx.weights, fit.objective);
    out.bcd_iterations = fit.iterations;
  }
  return out;
}

inline void write_fit_artifacts(const RunConfig& cfg, const FitArtifacts& art) {
  namespace fs = std::filesystem;
  const fs::path dir = cfg.output_dir;
  const Dataset& data = art.data;

  // frontier.csv: fitted curve on a 200-point grid over the observed range.
  {
    const VectorX<double> grid =
        VectorX<double>::LinSpaced(200, data.x.minCoeff(), data.x.maxCoeff());
    const VectorX<double> curve =
        predict_frontier(art.spec, art.result.params.beta, grid);
    std::string text = "x,frontier\n";
    for (Index i = 0; i < grid.size(); ++i)
      text += format_full(grid(i)) + "," + format_full(curve(i)) + "\n";
    write_file_atomic(dir / "frontier.csv", text);
  }

  // points.csv: per-row table.
  {
    std::string text = "y,x,se,r,u_hat,v_hat,weight,outlier\n";
    for (Index i = 0; i < data.n(); ++i) {
      const bool outlier = art.result.weights(i) == 0.0;
      text += format_full(data.y(i)) + "," + format_full(data.x(i)) + "," +
              format_full(data.se(i)) + "," + format_full(art.result.residuals(i)) +
              "," + format_full(art.result.u_hat(i)) + "," +
              format_full(art.result.v_hat(i)) + "," +
              format_full(art.result.weights(i)) + "," + (outlier ? "1" : "0") +
              "\n";
    }
    write_file_atomic(dir / "points.csv", text);
  }

  // params.json
  {
    json j;
    j["beta"] = std::vector<double>(art.result.params.beta.data(),
                                    art.result.params.beta.data() +
                                        art.result.params.beta.size());
    j["gamma"] = art.result.params.gamma;
    j["eta"] = art.result.params.eta;
    j["objective"] = art.result.objective;
    j["iterations"] = art.bcd_iterations;
    j["knots"] = std::vector<double>(art.spec.knots.data(),
                                     art.spec.knots.data() + art.spec.knots.size());
    j["excluded_rows"] = art.excluded;
    j["dropped_input_rows"] = art.load_report.dropped_rows;
    write_file_atomic(dir / "params.json", j.dump(2) + "\n");
  }

  // resolved_config.json: the fully materialized configuration.
  write_file_atomic(dir / "resolved_config.json",
                    run_config_to_json(cfg).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// simulate: write a generated draw as a dataset file.
// ---------------------------------------------------------------------------

inline void write_sim_draw(const std::filesystem::path& path, const SimDraw& draw) {
  std::string text = "y,x,se,outlier,truth\n";
  for (Index i = 0; i < draw.dataset.n(); ++i) {
    text += format_full(draw.dataset.y(i)) + "," + format_full(draw.dataset.x(i)) +
            "," + format_full(draw.dataset.se(i)) + "," +
            (draw.outlier_mask[std::size_t(i)] ? "1" : "0") + "," +
            format_full(true_frontier(draw.dataset.x(i))) + "\n";
  }
  write_file_atomic(path, text);
}

// ---------------------------------------------------------------------------
// benchmark: spec file selects sims, methods, replications, seed.
// ---------------------------------------------------------------------------

struct BenchConfig {
  std::vector<int> sims = {1, 2, 3, 4};
  std::vector<Method> methods = {Method::Dea,       Method::Sfa,
                                 Method::StonedMom, Method::StonedQle,
                                 Method::Sfma,      Method::RSfma};
  int replications = 20;
  std::uint64_t seed = 0;
  bool sim2_sd_reading = false;
  BenchOptions options;
  std::string output_dir = "sfma_bench";
};

inline BenchConfig parse_bench_config(const json& j) {
  if (!j.is_object()) throw ConfigError("benchmark config must be a JSON object");
  BenchConfig cfg;
  if (j.contains("sims")) cfg.sims = j.at("sims").get<std::vector<int>>();
  if (j.contains("methods")) {
    cfg.methods.clear();
    for (const auto& name : j.at("methods").get<std::vector<std::string>>()) {
      Method m;
      if (!parse_method(name, m)) throw ConfigError("unknown method '" + name + "'");
      cfg.methods.push_back(m);
    }
  }
  detail::maybe_get(j, "replications", cfg.replications);
  detail::maybe_get(j, "seed", cfg.seed);
  detail::maybe_get(j, "sim2_sd_reading", cfg.sim2_sd_reading);
  detail::maybe_get(j, "trim_proportion", cfg.options.trim_proportion);
  detail::maybe_get(j, "output_dir", cfg.output_dir);
  if (j.contains("spline")) {
    const json& sp = j.at("spline");
    long long knots = cfg.options.knot_count;
    detail::maybe_get(sp, "knots", knots);
    cfg.options.knot_count = Index(knots);
    detail::maybe_get(sp, "degree", cfg.options.spline_degree);
  }
  if (cfg.replications < 1) throw ConfigError("replications must be >= 1");
  if (cfg.sims.empty()) throw ConfigError("select at least one simulation");
  if (cfg.methods.empty()) throw ConfigError("select at least one method");
  for (int s : cfg.sims)
    if (s < 1 || s > 4) throw ConfigError("sims must be within 1..4");
  return cfg;
}

inline json bench_config_to_json(const BenchConfig& cfg) {
  json j;
  j["sims"] = cfg.sims;
  std::vector<std::string> names;
  for (Method m : cfg.methods) names.push_back(method_name(m));
  j["methods"] = names;
  j["replications"] = cfg.replications;
  j["seed"] = cfg.seed;
  j["sim2_sd_reading"] = cfg.sim2_sd_reading;
  j["trim_proportion"] = cfg.options.trim_proportion;
  j["spline"] = {{"knots", cfg.options.knot_count},
                 {"degree", cfg.options.spline_degree}};
  j["output_dir"] = cfg.output_dir;
  return j;
}

inline void run_benchmark(const BenchConfig& cfg) {
  namespace fs = std::filesystem;
  const fs::path dir = cfg.output_dir;

  std::string table = "sim,method,mean_rmse,median_rmse,failures\n";
  std::vector<std::pair<std::string, std::string>> frontier_files;

  for (int sim : cfg.sims) {
    SimSpec spec = SimSpec::table_row(sim, cfg.seed);
    spec.sim2_sd_reading = cfg.sim2_sd_reading;
    const BenchResult res =
        run_monte_carlo(spec, cfg.methods, cfg.replications, cfg.options);
    for (std::size_t mi = 0; mi < res.rows.size(); ++mi) {
      const BenchRow& row = res.rows[mi];
      const bool have = row.failures < cfg.replications;
      table += std::to_string(sim);
      table += ",";
      table += method_name(row.method);
      table += ",";
      table += have ? format_full(row.mean_rmse) : std::string();
      table += ",";
      table += have ? format_full(row.median_rmse) : std::string();
      table += "," + std::to_string(row.failures) + "\n";

      if (res.first_rep_frontier[mi].size() > 0) {
        std::string text = "x,frontier\n";
        for (Index i = 0; i < res.grid.size(); ++i)
          text += format_full(res.grid(i)) + "," +
                  format_full(res.first_rep_frontier[mi](i)) + "\n";
        frontier_files.emplace_back("frontier_sim" + std::to_string(sim) + "_" +
                                        method_name(row.method) + ".csv",
                                    std::move(text));
      }
    }
  }

  // Everything computed; now write.
  write_file_atomic(dir / "bench.csv", table);
  for (const auto& [name, text] : frontier_files)
    write_file_atomic(dir / name, text);
  write_file_atomic(dir / "resolved_config.json",
                    bench_config_to_json(cfg).dump(2) + "\n");
}

}  // namespace sfma
