#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace sfma {

template <class Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <class Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using ArrayX = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

using Index = Eigen::Index;

// Error taxonomy. The CLI maps these onto distinct exit codes:
// config/spec -> 2, data -> 3, solver -> 4.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ConfigError : public Error {
public:
  using Error::Error;
};

// Invalid model specification (knots, degrees, shape/degree mismatches, ...).
class SpecError : public ConfigError {
public:
  using ConfigError::ConfigError;
};

class DomainError : public Error {
public:
  using Error::Error;
};

class DataError : public Error {
public:
  using Error::Error;
};

class SolverError : public Error {
public:
  using Error::Error;
};

class ConditioningError : public SolverError {
public:
  using SolverError::SolverError;
};

// Iteration budget exhausted; carries the best iterate seen so far.
class ConvergenceError : public SolverError {
public:
  ConvergenceError(const std::string& msg, std::vector<double> best, double residual)
      : SolverError(msg), best_iterate(std::move(best)), residual(residual) {}
  std::vector<double> best_iterate;
  double residual = 0;
};

// Variance-component partials requested at the gamma/eta = 0 boundary.
class BoundaryError : public Error {
public:
  using Error::Error;
};

class IllPosedError : public SolverError {
public:
  using SolverError::SolverError;
};

// Per-firm observations: output y, exposure x, reported sampling error se.
template <class Scalar>
struct DatasetT {
  VectorX<Scalar> y;
  VectorX<Scalar> x;
  VectorX<Scalar> se;

  Index n() const { return y.size(); }

  void validate() const {
    if (y.size() < 1) throw DataError("dataset must contain at least one observation");
    if (x.size() != y.size() || se.size() != y.size())
      throw DataError("dataset columns y, x, se must have equal length");
    if (!y.allFinite() || !x.allFinite() || !se.allFinite())
      throw DataError("dataset contains non-finite values");
    if ((se.array() < Scalar(0)).any())
      throw DataError("reported standard errors must be non-negative");
  }
};

// Frontier coefficients plus the two variance components: gamma is the
// symmetric random-effect variance, eta the half-normal inefficiency variance.
template <class Scalar>
struct ParamsT {
  VectorX<Scalar> beta;
  Scalar gamma = 0;
  Scalar eta = 0;

  void validate() const {
    if (!beta.allFinite()) throw DomainError("beta contains non-finite values");
    if (!(gamma >= Scalar(0)) || !std::isfinite(double(gamma)))
      throw DomainError("gamma must be finite and non-negative");
    if (!(eta >= Scalar(0)) || !std::isfinite(double(eta)))
      throw DomainError("eta must be finite and non-negative");
  }
};

using Dataset = DatasetT<double>;
using Params = ParamsT<double>;

}  // namespace sfma
