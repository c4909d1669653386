#include "hjreach/common.hpp"

namespace hjreach {

std::string_view to_string(Mode mode) {
  return mode == Mode::Avoid ? "avoid" : "reach";
}

std::string_view to_string(Variant variant) {
  switch (variant) {
    case Variant::Vanilla:
      return "vanilla";
    case Variant::Diff:
      return "diff";
    case Variant::Exact:
      return "exact";
  }
  return "unknown";
}

std::string_view to_string(Precision precision) {
  return precision == Precision::Double ? "double" : "single";
}

Mode parse_mode(std::string_view text) {
  if (text == "avoid") return Mode::Avoid;
  if (text == "reach") return Mode::Reach;
  throw ContractError("unknown mode '" + std::string(text) + "' (expected avoid|reach)");
}

Variant parse_variant(std::string_view text) {
  if (text == "vanilla") return Variant::Vanilla;
  if (text == "diff") return Variant::Diff;
  if (text == "exact") return Variant::Exact;
  throw ContractError("unknown variant '" + std::string(text) + "' (expected vanilla|diff|exact)");
}

Precision parse_precision(std::string_view text) {
  if (text == "double") return Precision::Double;
  if (text == "single") return Precision::Single;
  throw ContractError("unknown precision '" + std::string(text) + "' (expected double|single)");
}

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t basis) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t h = basis;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= bytes[i];
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace hjreach
