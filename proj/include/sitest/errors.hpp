#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sitest {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or invariant-violating input data (CSV contents, dimensions, labels).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Some class has no observation in some cell; the partition is too fine.
class EmptyCellError : public Error {
 public:
  EmptyCellError(int label, std::size_t cell)
      : Error("empty cell: class " + std::to_string(label) + " has no observation in cell " +
              std::to_string(cell) + "; reduce m (or pass --auto-shrink-m)"),
        label_(label),
        cell_(cell) {}

  /// Aggregate form used when many replications failed; label() is -1 and cell() is 0.
  explicit EmptyCellError(const std::string& message) : Error(message), label_(-1), cell_(0) {}

  int label() const noexcept { return label_; }
  /// 1-based cell index.
  std::size_t cell() const noexcept { return cell_; }

 private:
  int label_;
  std::size_t cell_;
};

/// The variance correction under the square root of the process normalizer is not positive.
class NonPositiveNormalizerError : public Error {
 public:
  explicit NonPositiveNormalizerError(double bracket)
      : Error("non-positive normalizer: 1 - (n0 n1 / n) * sum_k(...) = " + std::to_string(bracket) +
              "; the partition is degenerate"),
        bracket_(bracket) {}

  double bracket() const noexcept { return bracket_; }

 private:
  double bracket_;
};

/// The average-derivative estimate is the zero vector, so no index direction can be formed.
class UnidentifiedDirectionError : public Error {
 public:
  using Error::Error;
};

/// Bad configuration file contents or command-line arguments.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace sitest
