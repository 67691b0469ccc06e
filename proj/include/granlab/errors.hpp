#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace granlab {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration: bad sizes, incompatible options, unknown names.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Matrix/vector dimension mismatch.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Input outside the domain of an operation (empty batch, n > P, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// Non-finite loss during training.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, int epoch)
      : Error(what + " (epoch " + std::to_string(epoch) + ")"), message_(what), epoch_(epoch) {}

  int epoch() const noexcept { return epoch_; }
  // The message without the epoch suffix.
  const std::string& message() const noexcept { return message_; }

 private:
  std::string message_;
  int epoch_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace granlab
