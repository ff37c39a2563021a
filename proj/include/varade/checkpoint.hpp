#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <variant>

#include "varade/baselines.hpp"
#include "varade/data.hpp"
#include "varade/model.hpp"

// Self-describing little-endian checkpoint container. Every payload starts
// with a 4-byte magic tag naming the model kind and a u32 format version.
//
// VARADE ("VRDE"): u32 T, u32 C, u32 base_maps, f64 lambda, f64 logvar_min,
//   f64 logvar_max, f32[C] normalizer min, f32[C] normalizer max, then every
//   parameter as f32 in build order.
// kNN ("VKNN"): u32 C, u32 k, normalizer, u64 n, f32[n*C] points.
// Isolation forest ("VIFO"): u32 C, u32 subsample, f64 contamination,
//   f64 threshold, normalizer, u32 trees, then per tree u32 nodes and per node
//   i32 feature, f32 split, i32 left, i32 right, i32 size, i32 depth.
namespace varade {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct VaradeCheckpoint {
  ModelF model;
  Normalizer normalizer;
};

struct KnnCheckpoint {
  KnnIndex index;
  Normalizer normalizer;
};

struct IForestCheckpoint {
  IsoForest forest;
  Normalizer normalizer;
};

using Checkpoint = std::variant<VaradeCheckpoint, KnnCheckpoint, IForestCheckpoint>;

void write_checkpoint(std::ostream& out, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

const Normalizer& normalizer_of(const Checkpoint& checkpoint);
Index channels_of(const Checkpoint& checkpoint);

}  // namespace varade
