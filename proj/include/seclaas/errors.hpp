#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace seclaas {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text. `line` is 1-based when known (0 otherwise); `column` is 1-based.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::string text, std::size_t line, std::size_t column)
      : Error(what + " at " + std::to_string(line) + ":" + std::to_string(column)),
        text_(std::move(text)),
        line_(line),
        column_(column) {}

  const std::string& text() const noexcept { return text_; }
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::string text_;
  std::size_t line_;
  std::size_t column_;
};

/// Canonical byte decoding hit truncated or malformed input.
class DecodeError : public Error {
 public:
  using Error::Error;
};

class CryptoError : public Error {
 public:
  using Error::Error;
};

/// Raised when authenticated decryption fails; no plaintext is released.
class DecryptionError : public CryptoError {
 public:
  using CryptoError::CryptoError;
};

class StorageError : public Error {
 public:
  using Error::Error;
};

class ParamError : public Error {
 public:
  using Error::Error;
};

class MappingError : public Error {
 public:
  using Error::Error;
};

class UnresolvedUserError : public Error {
 public:
  using Error::Error;
};

/// A mutation was attempted on a chain whose day is already sealed.
class SealedChainError : public Error {
 public:
  using Error::Error;
};

}  // namespace seclaas
