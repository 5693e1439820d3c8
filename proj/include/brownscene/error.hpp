#pragma once

#include <stdexcept>
#include <string>

namespace brownscene {

/// Raised when an argument violates an operation's precondition.
class ParameterError : public std::invalid_argument {
 public:
  explicit ParameterError(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised when a sampler cannot produce a path (e.g. an indefinite embedding).
class GenerationError : public std::runtime_error {
 public:
  explicit GenerationError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when a fit or estimate has too little usable data.
class EstimationError : public std::runtime_error {
 public:
  explicit EstimationError(const std::string& what) : std::runtime_error(what) {}
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace brownscene
