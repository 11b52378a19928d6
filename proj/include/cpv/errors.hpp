#pragma once
#include <stdexcept>
#include <string>

namespace cpv {

/// Bad caller input: dimension mismatches, out-of-range parameters,
/// malformed files. Maps to process exit code 2.
class InputError : public std::invalid_argument {
 public:
  explicit InputError(const std::string& msg) : std::invalid_argument(msg) {}
};

/// Flux beyond the measurable range (zero accumulated exposure with
/// detections present, or a fully saturated binary stream). Maps to
/// process exit code 3.
class SaturationError : public std::runtime_error {
 public:
  explicit SaturationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Registration cannot proceed (zero intensity variance, no overlap).
/// Non-convergence is *not* an error; it returns a flagged result.
class AlignmentError : public std::runtime_error {
 public:
  explicit AlignmentError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace cpv
