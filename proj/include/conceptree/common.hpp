#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace conceptree {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (bad rows, unknown ids, broken JSON).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// An input file that a stage depends on does not exist.
class MissingInputError : public Error {
 public:
  using Error::Error;
};

/// Optimisation produced a non-finite value.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<const double> data() const noexcept { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

using Rng = std::mt19937_64;

/// Mixes a global seed with a string key (concept id, stage name) into an
/// independent stream seed. Stable across platforms and runs.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view key);

double dot(std::span<const double> a, std::span<const double> b);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

/// Runs `body(i)` for i in [0, count) on up to `workers` threads. Work items
/// must write only to their own slot. If any items throw, the exception of
/// the lowest index is rethrown after all threads join.
template <typename Body>
void parallel_for(std::size_t count, std::size_t workers, Body&& body);

}  // namespace conceptree

#include "conceptree/detail/parallel.hpp"
