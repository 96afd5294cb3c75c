#ifndef TANNIN_ERROR_HPP
#define TANNIN_ERROR_HPP

#include <stdexcept>
#include <string>

namespace tannin {

/// Bad experiment configuration (unknown variant, missing seed, ...).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Unreadable or malformed input data.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Failure during model fitting (non-finite loss, bad preconditions).
class TrainError : public std::runtime_error {
 public:
  explicit TrainError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace tannin

#endif  // TANNIN_ERROR_HPP
