#pragma once

#include <stdexcept>
#include <string>

namespace cribcoord {

/// Bad variable names, overlapping sets, shape mismatches, malformed tables.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Conditioning on an event of probability zero.
class ConditioningOnNull : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A table or enumeration would exceed its configured size cap.
class ResourceLimit : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// A structural precondition on a distribution does not hold. `measured`
/// carries the offending quantity (e.g. a conditional mutual information).
class PreconditionError : public std::logic_error {
 public:
  PreconditionError(const std::string& what, double measured)
      : std::logic_error(what), measured_(measured) {}

  double measured() const noexcept { return measured_; }

 private:
  double measured_;
};

}  // namespace cribcoord
