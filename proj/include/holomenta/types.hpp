#pragma once

#include <Eigen/Dense>

#include <functional>
#include <stdexcept>
#include <string>

namespace holomenta {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Scalar-, vector- and matrix-valued functions of a chart point q.
using ScalarField = std::function<double(const Vec&)>;
using VectorField = std::function<Vec(const Vec&)>;
using MatrixField = std::function<Mat(const Vec&)>;

/// Scalar function of a constraint-manifold point in (q, v) coordinates.
using PhaseFunction = std::function<double(const Vec& q, const Vec& v)>;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Expression source could not be parsed; `offset` is the byte position.
struct ParseError : Error {
  std::size_t offset;
  ParseError(const std::string& msg, std::size_t at)
      : Error(msg + " at offset " + std::to_string(at)), offset(at) {}
};

/// Evaluation failure: unbound variable or a domain error (sqrt of a
/// negative, log of a non-positive, fractional power of a negative base).
struct EvalError : Error {
  using Error::Error;
};

/// decompose() was asked for a splitting that is not a direct sum, or the
/// vector lies outside the combined span.
struct DirectSumViolation : Error {
  using Error::Error;
};

/// The restriction of the canonical two-form to C is numerically singular.
struct DegenerateForm : Error {
  using Error::Error;
};

/// g_S and g_W do not span the Lie algebra at some point (W not vertical,
/// or the action is not free there).
struct SplitFailure : Error {
  using Error::Error;
};

/// rank(D_q + V_q) < dim Q at some sampled point.
struct DimensionAssumptionFailure : Error {
  using Error::Error;
};

/// Adaptive integration could not proceed (step underflow or a non-finite
/// state).
struct StepFailure : Error {
  using Error::Error;
};

struct UnknownBuiltin : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

}  // namespace holomenta
