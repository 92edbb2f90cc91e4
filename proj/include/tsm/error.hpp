#pragma once

#include <stdexcept>
#include <string>

namespace tsm {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input data (empty buyer lists, values outside [0,1], ...).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// A caller broke an API contract (wrong phase, price out of range, ...).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

// Rejected at construction time; samplers never throw this.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Asked for the value of an arm the played action does not reveal.
class FeedbackUnavailable : public Error {
 public:
  using Error::Error;
};

// Learner asked to act past its horizon.
class HorizonExhausted : public Error {
 public:
  using Error::Error;
};

// Every arm of the constrained bandit has been removed from the safe set.
class AllArmsEliminated : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace tsm
