#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace dpr {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class EncodingError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}

  // 1-based line of the offending record, 0 when not line oriented.
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class DuplicateId : public Error {
 public:
  explicit DuplicateId(const std::string& id) : Error("duplicate id: " + id), id_(id) {}
  const std::string& id() const noexcept { return id_; }

 private:
  std::string id_;
};

class EmptyDocument : public Error {
 public:
  explicit EmptyDocument(const std::string& doc_id)
      : Error("document '" + doc_id + "' is empty after cleaning") {}
};

class EmptyCorpus : public Error {
 public:
  EmptyCorpus() : Error("corpus is empty") {}
};

class DimensionError : public Error {
 public:
  DimensionError(std::size_t expected, std::size_t got)
      : Error("dimension mismatch: expected " + std::to_string(expected) + ", got " +
              std::to_string(got)) {}
};

class CorruptIndex : public Error {
 public:
  using Error::Error;
};

class UnsupportedVersion : public Error {
 public:
  UnsupportedVersion(std::uint32_t supported, std::uint32_t found)
      : Error("unsupported format version " + std::to_string(found) + " (this build reads version " +
              std::to_string(supported) + ")") {}
};

class EmptyEvaluation : public Error {
 public:
  EmptyEvaluation() : Error("no questions to evaluate") {}
};

}  // namespace dpr
