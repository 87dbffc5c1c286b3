#pragma once

#include <stdexcept>
#include <string>

namespace refit {

// Exit-code categories surfaced by the CLI.
enum class ErrorCategory {
  internal = 1,
  no_match = 2,
  empty_model = 3,
  timeout = 4,
  io = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}
  ErrorCategory category() const { return category_; }

 private:
  ErrorCategory category_;
};

struct DegenerateInput : Error {
  explicit DegenerateInput(const std::string& what)
      : Error(ErrorCategory::internal, what) {}
};

struct ParseError : Error {
  explicit ParseError(const std::string& what)
      : Error(ErrorCategory::io, what) {}
};

struct IoError : Error {
  explicit IoError(const std::string& what) : Error(ErrorCategory::io, what) {}
};

struct EmptyCloud : Error {
  explicit EmptyCloud(const std::string& what)
      : Error(ErrorCategory::io, what) {}
};

struct NonPlanarFace : Error {
  explicit NonPlanarFace(const std::string& what)
      : Error(ErrorCategory::io, what) {}
};

struct NoMatchFound : Error {
  explicit NoMatchFound(const std::string& what)
      : Error(ErrorCategory::no_match, what) {}
};

struct AllFacesRemoved : Error {
  explicit AllFacesRemoved(const std::string& what)
      : Error(ErrorCategory::empty_model, what) {}
};

struct EmptyProblem : Error {
  explicit EmptyProblem(const std::string& what)
      : Error(ErrorCategory::empty_model, what) {}
};

struct EmptyModelError : Error {
  explicit EmptyModelError(const std::string& what)
      : Error(ErrorCategory::empty_model, what) {}
};

struct EmptyMesh : Error {
  explicit EmptyMesh(const std::string& what)
      : Error(ErrorCategory::empty_model, what) {}
};

struct TopologyViolation : Error {
  explicit TopologyViolation(const std::string& what)
      : Error(ErrorCategory::internal, what) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& what)
      : Error(ErrorCategory::io, what) {}
};

}  // namespace refit
