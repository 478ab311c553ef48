#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace moscolab {

/// Problems with user-supplied configuration, arguments or file contents.
/// The CLI maps these to exit code 2.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// An argument is outside the operation's contract (negative radius, p <= 1, ...).
class ParameterError : public ConfigError {
public:
  using ConfigError::ConfigError;
};

/// Input violates a mathematical hypothesis (e.g. snowflake requires d <= 1).
class DomainError : public ConfigError {
public:
  using ConfigError::ConfigError;
};

/// Unknown point id / index out of range.
class LookupError : public ConfigError {
public:
  using ConfigError::ConfigError;
};

/// Structurally broken input: non-square matrix, non-finite entries, bad CSV cell.
class MalformedInputError : public ConfigError {
public:
  using ConfigError::ConfigError;
};

/// A mathematical invariant that should hold by theorem was violated at runtime.
/// Carries the module name and the measured margin. CLI exit code 3.
class InvariantError : public std::runtime_error {
public:
  InvariantError(std::string module, const std::string& message, double margin = 0.0)
      : std::runtime_error("[" + module + "] " + message),
        module_(std::move(module)),
        margin_(margin) {}

  const std::string& module() const { return module_; }
  double margin() const { return margin_; }

private:
  std::string module_;
  double margin_;
};

/// A finite search space was exhausted before a guaranteed-by-limit bound was met.
/// Carries the best candidate found so the caller can report it.
class ExhaustionError : public InvariantError {
public:
  ExhaustionError(std::string module, const std::string& message,
                  std::size_t best_level, double best_gap)
      : InvariantError(std::move(module), message, best_gap),
        best_level_(best_level),
        best_gap_(best_gap) {}

  std::size_t best_level() const { return best_level_; }
  double best_gap() const { return best_gap_; }

private:
  std::size_t best_level_;
  double best_gap_;
};

/// Generator-level failures: non-positive-definite tensors, non-monotone
/// edge weights across a penalty schedule. CLI exit code 3.
class GeneratorError : public InvariantError {
public:
  using InvariantError::InvariantError;
};

/// Filesystem-level failures. CLI exit code 4.
class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace moscolab
