#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dan/tensor.hpp"

namespace dan {

// Binary container, little-endian:
//   "DANCKPT\0" | u32 version | u64 payload bytes | u32 crc32(payload) | payload
// payload:
//   u32 meta bytes, meta (JSON text)
//   u32 store count, then per store:
//     u32 tag bytes, tag, i64 optimizer step, u32 parameter count, then per
//     parameter: u32 name bytes, name, u32 rank (2), u32 rows, u32 cols,
//     f32 values[rows*cols], u8 has_moments, [f64 moment1[], f64 moment2[]]
// A text manifest (<path>.manifest.txt) lists names, shapes and the checksum.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointData {
  std::string meta;
  std::vector<std::pair<std::string, ParameterStore>> stores;

  const ParameterStore& store(const std::string& tag) const;
};

struct StoreRef {
  std::string tag;
  const ParameterStore* store = nullptr;
  bool with_moments = true;
};

void write_checkpoint(const std::string& path, const std::string& meta, const std::vector<StoreRef>& stores);

// Throws CheckpointError on bad magic, version mismatch, truncation or a
// checksum failure.
CheckpointData read_checkpoint(const std::string& path);

// Copies values, moments and step from `loaded` into `target`. Throws
// ShapeError when names or shapes disagree.
void assign_store(const ParameterStore& loaded, ParameterStore& target, bool with_moments = true);

std::string manifest_path(const std::string& checkpoint_path);

}  // namespace dan
