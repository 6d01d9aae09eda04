#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mcls {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of the evaluated function.
class DomainError : public Error {
public:
  using Error::Error;
};

/// A requested size cannot be represented (e.g. basis cardinality overflow).
class CapacityError : public Error {
public:
  using Error::Error;
};

/// The moment Gram matrix is not positive definite at working precision.
class IllConditionedMoments : public Error {
public:
  IllConditionedMoments(std::size_t pivot, double pivot_value)
      : Error("Gram matrix not positive definite at pivot " + std::to_string(pivot) +
              " (residual norm^2 = " + std::to_string(pivot_value) + ")"),
        pivot_(pivot) {}
  std::size_t pivot() const noexcept { return pivot_; }

private:
  std::size_t pivot_;
};

/// Rejection sampling exhausted its attempt budget.
class SamplerStuck : public Error {
public:
  SamplerStuck(std::size_t attempts, std::size_t accepted)
      : Error("rejection sampler stuck after " + std::to_string(attempts) +
              " attempts (acceptance rate " +
              std::to_string(attempts ? static_cast<double>(accepted) / attempts : 0.0) + ")") {}
};

/// Not enough samples for the requested number of fitted coefficients.
class DegreesOfFreedomError : public Error {
public:
  using Error::Error;
  DegreesOfFreedomError(std::size_t n_samples, std::size_t n)
      : Error("need N > n+1 samples, got N=" + std::to_string(n_samples) + " with n=" + std::to_string(n)) {}
};

/// The integrand produced a non-finite value.
class DataError : public Error {
public:
  DataError(std::size_t index, double value)
      : Error("non-finite integrand value " + std::to_string(value) + " at sample " +
              std::to_string(index)),
        index_(index) {}
  std::size_t index() const noexcept { return index_; }

private:
  std::size_t index_;
};

/// A time-stepping scheme produced a non-finite state.
class BlowUpError : public Error {
public:
  explicit BlowUpError(std::size_t step)
      : Error("non-finite state at time step " + std::to_string(step)), step_(step) {}
  std::size_t step() const noexcept { return step_; }

private:
  std::size_t step_;
};

/// An inversion problem has no solution (e.g. price outside the no-arbitrage band).
class NoSolutionError : public Error {
public:
  using Error::Error;
};

/// Invalid user configuration.
class ConfigError : public Error {
public:
  using Error::Error;
};

}  // namespace mcls
