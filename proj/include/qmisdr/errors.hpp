#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qmisdr {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class NonFiniteInput : public Error {
 public:
  using Error::Error;
};

class ZeroVarianceColumn : public Error {
 public:
  explicit ZeroVarianceColumn(std::size_t index)
      : Error("column " + std::to_string(index) + " has zero variance"), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

class RankDeficient : public Error {
 public:
  using Error::Error;
};

class TooManyCenters : public Error {
 public:
  using Error::Error;
};

class SolveFailure : public Error {
 public:
  using Error::Error;
};

class UnsupportedDimension : public Error {
 public:
  using Error::Error;
};

class EmptyGrid : public Error {
 public:
  using Error::Error;
};

class FoldTooSmall : public Error {
 public:
  using Error::Error;
};

class AllRestartsFailed : public Error {
 public:
  using Error::Error;
};

class LengthMismatch : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace qmisdr
