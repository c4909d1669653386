#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace hjreach {

using StateVec = Eigen::VectorXd;
using ControlVec = Eigen::VectorXd;

// Avoid: the sub-zero set of l is a failure set, controls maximize the value.
// Reach: the sub-zero set of l is a target set, controls minimize it.
enum class Mode { Avoid, Reach };

enum class Variant { Vanilla, Diff, Exact };

enum class Precision { Double, Single };

/// Thrown when a caller breaks an operation's preconditions (shapes, ranges).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a numerical procedure cannot continue (non-finite loss, CFL).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when a persisted file fails integrity or version checks.
class ChecksumError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string_view to_string(Mode mode);
std::string_view to_string(Variant variant);
std::string_view to_string(Precision precision);
Mode parse_mode(std::string_view text);
Variant parse_variant(std::string_view text);
Precision parse_precision(std::string_view text);

/// 64-bit FNV-1a; `basis` allows chaining over several buffers.
std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t basis = 14695981039346656037ull);

// +1 for Avoid, -1 for Reach.
inline double mode_sign(Mode mode) { return mode == Mode::Avoid ? 1.0 : -1.0; }

}  // namespace hjreach
