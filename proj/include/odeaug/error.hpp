#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace odeaug {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Integration produced a non-finite or runaway state.
class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t step, const std::string& what)
      : Error(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// Regression design is rank-deficient; parameters cannot be recovered.
class UnidentifiableError : public Error {
 public:
  using Error::Error;
};

/// Every particle evaluation diverged during swarm refinement.
class RefinementFailed : public Error {
 public:
  RefinementFailed(std::vector<double> best_candidate, const std::string& what)
      : Error(what), best_(std::move(best_candidate)) {}
  const std::vector<double>& best_candidate() const noexcept { return best_; }

 private:
  std::vector<double> best_;
};

class PlacementError : public Error {
 public:
  using Error::Error;
};

class TrainingDiverged : public Error {
 public:
  TrainingDiverged(std::size_t epoch, const std::string& what)
      : Error(what), epoch_(epoch) {}
  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

class DegenerateLabels : public Error {
 public:
  using Error::Error;
};

class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

class GenerationError : public Error {
 public:
  GenerationError(std::size_t donor, std::uint64_t seed, const std::string& what)
      : Error(what), donor_(donor), seed_(seed) {}
  std::size_t donor() const noexcept { return donor_; }
  std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::size_t donor_;
  std::uint64_t seed_;
};

/// Malformed input file; the message carries the offending line number.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace odeaug
