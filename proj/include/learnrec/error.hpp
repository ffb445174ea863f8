#pragma once

#include <stdexcept>
#include <string>

namespace learnrec {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& message) : std::runtime_error(message) {}
};

/// Input violates a documented invariant (bad id, negative timestamp, lambda out of range, ...).
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& message) : Error(message) {}
};

/// A referenced user, resource, profile or evaluation run does not exist.
class NotFoundError : public Error {
 public:
  explicit NotFoundError(const std::string& message) : Error(message) {}
};

/// File could not be opened, read or written.
class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error(message) {}
};

}  // namespace learnrec
