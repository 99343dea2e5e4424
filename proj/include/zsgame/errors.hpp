#pragma once

#include <stdexcept>
#include <string>

namespace zsg {

/// Invalid parameters: rule bounds, population size, config documents.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Pre-asset inversion requested for a stochastic payment rule.
class NotInvertibleError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the region where an analytic check is defined.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Conservation or positivity violated during a run.
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace zsg
