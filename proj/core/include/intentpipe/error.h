#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace intentpipe {

// Bad configuration: unreadable config file, invalid pattern, unmapped tag,
// missing prerequisite artifact. The CLI maps these to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input data: malformed corpus, key mismatch in a join, split leakage.
// The CLI maps these to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Fatal corpus parse failure; carries the byte offset reported by the parser.
class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t byte_offset)
      : DataError(what + " (at byte " + std::to_string(byte_offset) + ")"),
        byte_offset_(byte_offset) {}

  std::size_t byte_offset() const { return byte_offset_; }

 private:
  std::size_t byte_offset_;
};

}  // namespace intentpipe
