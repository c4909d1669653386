#pragma once

#include "hjreach/common.hpp"
#include "hjreach/grid.hpp"
#include "hjreach/siren.hpp"
#include "hjreach/systems.hpp"
#include "hjreach/trainer.hpp"
#include "hjreach/value_model.hpp"
#include "hjreach/verify.hpp"

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace hjreach {

inline constexpr int kConfigSchemaVersion = 1;

struct GridConfig {
  int nodes = 201;
  double cfl = 0.5;
  int snapshot_every = 0;  // 0 keeps only V(., 0)
  bool operator==(const GridConfig&) const = default;
};

/// Two free dimensions over a uniform resolution x resolution sub-grid of
/// the domain; the other coordinates come from `fixed` (full state length,
/// free entries ignored).
struct SliceSpec {
  int dim_a = 0;
  int dim_b = 1;
  std::vector<double> fixed;
  int resolution = 201;
  double time = 0.0;
  double delta = 0.0;
  bool operator==(const SliceSpec&) const = default;
};

struct RunConfig {
  int schema_version = kConfigSchemaVersion;
  SystemSpec system = default_spec("rimless_wheel");
  TrainConfig train;
  VerifyConfig verify;
  GridConfig grid;
  SliceSpec slice;
  std::string out_dir = "runs";
  std::string log_file = "train.jsonl";  // relative paths resolve under out_dir

  bool operator==(const RunConfig& other) const;
};

/// JSON text. Unknown keys anywhere are rejected; `schema_version` and
/// `system.name` are required, everything else falls back to defaults.
RunConfig parse_config(const std::string& text);
std::string serialize_config(const RunConfig& cfg);
RunConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const RunConfig& cfg);

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::string system;
  std::uint64_t system_hash = 0;
  Variant variant = Variant::Exact;
  Precision precision = Precision::Double;
  std::int64_t iteration = 0;
  NetParams params;
};

/// Binary layout, little-endian: "HJRC", u32 version, u32 name length, name,
/// u64 system hash, u8 variant, u8 precision, f64 omega0, i64 iteration,
/// u32 layer-size count, u32 sizes, u64 value count, f64 values (weights
/// then biases, layer order, row-major), u64 FNV-1a of all preceding bytes.
std::string encode_checkpoint(const Checkpoint& ckpt);
/// Throws ChecksumError on a bad magic, version, checksum or length.
Checkpoint decode_checkpoint(const std::string& bytes);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// "HJRG" field files with the same framing as checkpoints.
std::string encode_field(const GridField& field);
GridField decode_field(const std::string& bytes);
void save_field(const std::filesystem::path& path, const GridField& field);
GridField load_field(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

/// CSV header "<name_a>,<name_b>,V,l,safe" then one row per sub-grid point,
/// row-major with dim_b fastest. safe is brt_membership at slice.delta.
void export_slice(std::ostream& out, const ValueFunction& model, const SliceSpec& slice);
/// Field slices use the field's own nodes along the free dimensions (the
/// resolution is ignored) and interpolate any fixed dimensions.
void export_slice(std::ostream& out, const System& sys, const GridField& field, const SliceSpec& slice);

}  // namespace hjreach
