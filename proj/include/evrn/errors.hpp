#ifndef EVRN_ERRORS_HPP
#define EVRN_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace evrn {

// Malformed or unsupported file / bitstream contents.
struct FormatError : std::runtime_error {
  explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bit budget too small to encode anything.
struct BudgetError : std::runtime_error {
  explicit BudgetError(const std::string& msg) : std::runtime_error(msg) {}
};

// Checkpoint does not describe the expected network architecture.
struct ArchitectureError : std::runtime_error {
  explicit ArchitectureError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace evrn

#endif  // EVRN_ERRORS_HPP
