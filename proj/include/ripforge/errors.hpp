#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ripforge {

enum class ErrorKind {
  dimension,
  symmetry,
  rank,
  singular,
  precondition,
  conditioning,
  numerical,
  config,
  io,
  parse,
};

/// Base of every exception thrown by the library. The kind lets callers
/// (the CLI in particular) map failures onto exit codes without RTTI games.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// True for failures that come from the numbers rather than the inputs.
  bool is_numerical() const noexcept {
    return kind_ == ErrorKind::singular || kind_ == ErrorKind::conditioning ||
           kind_ == ErrorKind::numerical || kind_ == ErrorKind::rank;
  }

 private:
  ErrorKind kind_;
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what)
      : Error(ErrorKind::dimension, what) {}
};

class SymmetryError : public Error {
 public:
  explicit SymmetryError(const std::string& what)
      : Error(ErrorKind::symmetry, what) {}
};

class RankError : public Error {
 public:
  RankError(const std::string& what, std::size_t rank_a, std::size_t rank_b)
      : Error(ErrorKind::rank, what), rank_a_(rank_a), rank_b_(rank_b) {}

  std::size_t rank_a() const noexcept { return rank_a_; }
  std::size_t rank_b() const noexcept { return rank_b_; }

 private:
  std::size_t rank_a_;
  std::size_t rank_b_;
};

class SingularityError : public Error {
 public:
  explicit SingularityError(const std::string& what)
      : Error(ErrorKind::singular, what) {}
};

class PreconditionError : public Error {
 public:
  PreconditionError(const std::string& what, double measured = 0.0)
      : Error(ErrorKind::precondition, what), measured_(measured) {}

  /// The offending quantity, e.g. ||D D^T - I||_F for a non-tight frame.
  double measured() const noexcept { return measured_; }

 private:
  double measured_;
};

class ConditioningError : public Error {
 public:
  ConditioningError(const std::string& what, double cond)
      : Error(ErrorKind::conditioning, what), cond_(cond) {}

  double condition_number() const noexcept { return cond_; }

 private:
  double cond_;
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what)
      : Error(ErrorKind::numerical, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error(ErrorKind::config, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(ErrorKind::parse,
              what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace ripforge
