#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace casimir {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation (negative
/// frequency, nonpositive length, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Evaluation at a point where the model is singular (Drude at xi = 0).
class SingularInputError : public Error {
 public:
  using Error::Error;
};

/// Tabulated model queried outside its range without clamp-ends enabled.
class ExtrapolationError : public Error {
 public:
  using Error::Error;
};

/// find_crossing found no sign change in its bracket.
class NoCrossingError : public Error {
 public:
  using Error::Error;
};

/// Inner body touches or overlaps the outer boundary.
class ContactError : public Error {
 public:
  using Error::Error;
};

/// A physical invariant that passive media cannot violate was violated.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

/// Integrand returned NaN or infinity at a quadrature node.
class IntegrandError : public Error {
 public:
  IntegrandError(const std::string& what, double xi, double k)
      : Error(what), xi_(xi), k_(k) {}
  double xi() const { return xi_; }
  double k() const { return k_; }

 private:
  double xi_;
  double k_;
};

/// Sparse operator failed its positive-definiteness probe.
class AssemblyError : public Error {
 public:
  using Error::Error;
};

/// Linear solve did not reach the requested residual.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, std::vector<double> residuals)
      : Error(what), residuals_(std::move(residuals)) {}
  const std::vector<double>& residual_history() const { return residuals_; }

 private:
  std::vector<double> residuals_;
};

/// Geometry query that cannot fail for a valid scene did fail.
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Configuration rejected before dispatch; carries every violation found.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> problems)
      : Error(join(problems)), problems_(std::move(problems)) {}
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& p) {
    std::string out = "invalid configuration:";
    for (const auto& s : p) out += "\n  - " + s;
    return out;
  }
  std::vector<std::string> problems_;
};

}  // namespace casimir
