#ifndef RRM_ERRORS_HPP
#define RRM_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rrm {

/// Invalid user-supplied configuration. The message names the offending field.
class ConfigError : public std::runtime_error {
public:
  ConfigError(const std::string &field, const std::string &what)
      : std::runtime_error("invalid config field '" + field + "': " + what), field_(field) {}
  const std::string &field() const noexcept { return field_; }

private:
  std::string field_;
};

/// A caller broke a precondition (shape mismatch, incomplete assignment, ...).
class ContractViolation : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

/// Argument outside the mathematical domain of a function.
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// Problem too large for an exact method.
class SizeLimitError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
public:
  ParseError(const std::string &what, std::size_t byte)
      : std::runtime_error(what + " (at byte " + std::to_string(byte) + ")"), byte_(byte) {}
  std::size_t byte() const noexcept { return byte_; }

private:
  std::size_t byte_;
};

class ValidationError : public std::runtime_error {
public:
  ValidationError(const std::string &field, const std::string &what)
      : std::runtime_error("validation failed for '" + field + "': " + what), field_(field) {}
  const std::string &field() const noexcept { return field_; }

private:
  std::string field_;
};

class TrainingError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace rrm

#endif // RRM_ERRORS_HPP
