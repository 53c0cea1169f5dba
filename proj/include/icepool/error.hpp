#pragma once

#include <stdexcept>
#include <string>

namespace icepool {

// Invalid argument passed to a public operation (out-of-range k, count, ...).
struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A mandatory dataset file is missing or unreadable.
struct IngestionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed file contents. `line` is 1-based, 0 when not tied to a line.
struct FormatError : std::runtime_error {
  FormatError(const std::string& file, std::size_t line, const std::string& what)
      : std::runtime_error(file + (line ? ":" + std::to_string(line) : std::string{}) + ": " + what),
        file_{file},
        line_{line} {}

  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

// Non-finite input or a numeric failure (diverged loss, NaN in a matrix).
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Requested P_ij for a cluster pair with no connecting edge.
struct UndefinedDistributionError : std::domain_error {
  using std::domain_error::domain_error;
};

// Pipeline configuration that cannot be honoured (e.g. combine=sum with mismatched dims).
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace icepool
