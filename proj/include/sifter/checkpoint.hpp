#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sifter/numerics.hpp"
#include "sifter/optim.hpp"

namespace sifter {

struct NamedTensor {
  std::string name;
  Tensor tensor;
  friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

/// Named parameter snapshot.
///
/// Binary layout, all integers little-endian:
///   "SIFT" | u32 version | u32 count |
///   count x { u32 name_len | name | u32 rank | u64 dims[rank] | f64 payload[] } |
///   u64 FNV-1a checksum over every payload byte in file order
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  std::uint32_t version = kVersion;
  std::vector<NamedTensor> tensors;

  static Checkpoint capture(const TensorRefs& refs);
  /// Copies tensors into `refs`; names and shapes must match exactly.
  void restore(const TensorRefs& refs) const;
  const Tensor* find(const std::string& name) const;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

std::string encode_checkpoint(const Checkpoint& checkpoint);
Checkpoint decode_checkpoint(const std::string& bytes);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace sifter
