#pragma once

#include <stdexcept>
#include <string>

namespace promptsim {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (bad spacing, sigma <= 0, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Two grids that must share dims/spacing do not.
class GeometryMismatch : public Error {
 public:
  using Error::Error;
};

/// An operation that needs a nonempty mask received an empty one.
class EmptyMaskError : public Error {
 public:
  using Error::Error;
};

/// A file or stream could not be decoded. `field()` names the offending
/// header field or record ("magic", "datatype", "payload", ...).
class ParseError : public Error {
 public:
  ParseError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace promptsim
