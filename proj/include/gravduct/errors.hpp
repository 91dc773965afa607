#pragma once

#include <stdexcept>
#include <string>

namespace gravduct {

/// Coarse error classes; the CLI maps each one to a distinct exit status.
enum class ErrorClass {
  config,        // bad input or violated precondition
  sonic,         // 1D lifespan exceeded or subsonic margin lost
  iteration,     // nonlinear iteration left its admissible set
  verification,  // a verification check failed
  numerical,     // linear algebra breakdown
};

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), class_(cls) {}
  ErrorClass error_class() const noexcept { return class_; }

 private:
  ErrorClass class_;
};

class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what)
      : Error(ErrorClass::config, key.empty() ? what : key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ErrorClass::config, what) {}
};

/// The 1D integration hit the sonic guard before reaching the duct exit.
class SonicApproach : public Error {
 public:
  explicit SonicApproach(double x1_reached)
      : Error(ErrorClass::sonic, "sonic approach at x1 = " + std::to_string(x1_reached)),
        x1_reached_(x1_reached) {}
  double x1_reached() const noexcept { return x1_reached_; }

 private:
  double x1_reached_;
};

class NoSubsonicRoot : public Error {
 public:
  explicit NoSubsonicRoot(const std::string& what) : Error(ErrorClass::iteration, what) {}
};

class DegenerateVerticalFlux : public Error {
 public:
  explicit DegenerateVerticalFlux(const std::string& what) : Error(ErrorClass::iteration, what) {}
};

class MonotonicityLost : public Error {
 public:
  explicit MonotonicityLost(const std::string& what) : Error(ErrorClass::iteration, what) {}
};

class AssemblyError : public Error {
 public:
  explicit AssemblyError(const std::string& what) : Error(ErrorClass::numerical, what) {}
};

class SolverFailure : public Error {
 public:
  SolverFailure(const std::string& what, double coercivity_estimate)
      : Error(ErrorClass::numerical, what), coercivity_(coercivity_estimate) {}
  /// Smallest eigenvalue of the discrete symmetric form, NaN when not computed.
  double coercivity_estimate() const noexcept { return coercivity_; }

 private:
  double coercivity_;
};

class VerificationFailure : public Error {
 public:
  explicit VerificationFailure(const std::string& what) : Error(ErrorClass::verification, what) {}
};

}  // namespace gravduct
