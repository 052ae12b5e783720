#pragma once

#include <stdexcept>
#include <string>

namespace cpt {

// Malformed configuration or input file. `field` names the offending key or
// JSON pointer when known.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what, std::string field = {})
      : std::runtime_error(what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A sampled perturbation pushed a width (or length) to a non-physical value.
class PerturbationOutOfRange : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Result computed but not trustworthy (rejected-sample overflow, contaminated
// regression). Raised only where the caller asked for strict behaviour.
class NumericalFlag : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cpt
