#ifndef EVOLAB_CORE_HPP
#define EVOLAB_CORE_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace evolab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// ---------------------------------------------------------------------------
// Errors. Every failure surfaced by the library derives from Error so callers
// (the CLI in particular) can map families of errors onto exit codes.
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: configuration, expressions, precondition violations.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class SyntaxError : public ConfigError {
 public:
  SyntaxError(const std::string& what, std::size_t offset)
      : ConfigError(what + " at byte " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class ArityError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class UnknownIdentifier : public ConfigError {
 public:
  UnknownIdentifier(const std::string& name, std::size_t offset)
      : ConfigError("unknown identifier '" + name + "' at byte " + std::to_string(offset)),
        name_(name) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

class PreconditionError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class RegimeMismatch : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

class DimensionTooHigh : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

class SymmetryViolation : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

class DegenerateExponents : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

class NotConvex : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

class TailNotIntegrable : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

class NotConstantCoefficient : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

class UnsupportedFunction : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

/// Runtime numerical failures of estimators.
class RuntimeError : public Error {
 public:
  using Error::Error;
};

class DomainError : public RuntimeError {
 public:
  using RuntimeError::RuntimeError;
};

class BlowupError : public RuntimeError {
 public:
  using RuntimeError::RuntimeError;
};

class ExpMomentDiverged : public RuntimeError {
 public:
  using RuntimeError::RuntimeError;
};

class FitIllConditioned : public RuntimeError {
 public:
  using RuntimeError::RuntimeError;
};

class QuadratureFailure : public RuntimeError {
 public:
  using RuntimeError::RuntimeError;
};

// ---------------------------------------------------------------------------
// Compensated summation (Neumaier). Reductions over path values go through
// this so that merging shards reorders rounding only at the 1e-16 level.
// ---------------------------------------------------------------------------

class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  void merge(const CompensatedSum& other) {
    add(other.sum_);
    add(other.comp_);
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Monte Carlo estimate: value, standard error, sample count.
struct McEstimate {
  double value = 0.0;
  double stderr = 0.0;
  std::int64_t n = 0;

  /// Exact (zero-variance) quantity such as a closed-form constant.
  static McEstimate exact(double v, std::int64_t count = 2) { return {v, 0.0, count}; }
};

/// Sample mean and standard error (sample sd / sqrt(n)).
///
/// The mean is computed as v0 + sum(v_i - v0)/n so that a constant sample
/// returns its value bit-for-bit.
McEstimate estimate_mean(std::span<const double> values);

/// Merge two independent estimates of the same mean (Chan et al. update).
McEstimate combine(const McEstimate& a, const McEstimate& b);

/// Mean of a sample with log-weights, normalized by the largest weight.
/// When all weights are equal the result is exactly exp(w)*mean(values).
McEstimate estimate_weighted_mean(std::span<const double> values,
                                  std::span<const double> log_weights);

}  // namespace evolab

#endif  // EVOLAB_CORE_HPP
