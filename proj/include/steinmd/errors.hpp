#pragma once

#include <stdexcept>
#include <string>

namespace steinmd {

// Non-finite input, or an argument outside the mathematical domain of an operation.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// Malformed structural input: patterns, structures, tables, configs.
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Argument outside the validity range of a bound (e.g. t > A).
struct RangeError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

// A configured enumeration or pair-term cap would be exceeded.
struct ResourceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A generator asked to do something it does not support.
struct CapabilityError : std::logic_error {
  using std::logic_error::logic_error;
};

// Model parameters with zero variance or similar degeneracy.
struct DegenerateError : std::domain_error {
  using std::domain_error::domain_error;
};

}  // namespace steinmd
