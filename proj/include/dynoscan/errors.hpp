#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dynoscan {

/// Base of every error raised by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Binary or text input that does not follow its declared layout.
class FormatError : public Error
{
public:
  FormatError(const std::string& what, std::uint64_t byte_offset)
    : Error(what + " (at byte " + std::to_string(byte_offset) + ")"), offset_(byte_offset)
  {
  }
  explicit FormatError(const std::string& what) : Error(what) {}

  std::uint64_t offset() const { return offset_; }

private:
  std::uint64_t offset_ = 0;
};

class IoError : public Error
{
public:
  using Error::Error;
};

/// Invalid tunable or parameter combination.
class ConfigError : public Error
{
public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error
{
public:
  using Error::Error;
};

class EmptyInputError : public Error
{
public:
  using Error::Error;
};

// Ego-motion failures. The pipeline treats these as per-frame degradations.
class InsufficientFeaturesError : public Error
{
public:
  using Error::Error;
};

class InsufficientMatchesError : public Error
{
public:
  using Error::Error;
};

class DegenerateGeometryError : public Error
{
public:
  using Error::Error;
};

class UnreliableMotionError : public Error
{
public:
  using Error::Error;
};

}  // namespace dynoscan
