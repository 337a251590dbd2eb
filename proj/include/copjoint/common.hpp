#pragma once

#include <stdexcept>
#include <string>

namespace copjoint {

// Input outside a documented precondition (bad theta, bad config, bad CSV).
class DomainError : public std::runtime_error {
public:
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

// Arithmetic failure: non-finite intermediate, quadrature/bisection breakdown,
// internal consistency violation (e.g. rectangle mass < -1e-10).
class NumericalError : public std::runtime_error {
public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Training diverged; carries the epoch at which the last finite state was seen.
class TrainingError : public std::runtime_error {
public:
  TrainingError(const std::string& what, int last_finite_epoch)
      : std::runtime_error(what), last_finite_epoch(last_finite_epoch) {}
  int last_finite_epoch;
};

// Malformed config file or inconsistent settings.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Wrong command-line invocation (unknown subcommand, unknown family name).
class UsageError : public std::runtime_error {
public:
  explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace copjoint
