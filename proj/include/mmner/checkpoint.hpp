#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mmner/optim.hpp"
#include "mmner/tensor.hpp"

namespace mmner {

// Binary parameter container, little-endian. Layout (see README for the
// byte-exact description):
//   magic "MMNERCKP" | u32 version | u32 model_kind | u64 config_hash |
//   u32 count | count x { u32 name_len | name | u32 ndim | i64 dims[] |
//   f64 values[] }
inline constexpr uint32_t kCheckpointVersion = 1;

struct CheckpointHeader {
  uint32_t version = kCheckpointVersion;
  uint32_t model_kind = 0;
  uint64_t config_hash = 0;
};

void save_checkpoint(const std::string& path, const CheckpointHeader& header,
                     const std::vector<NamedParam>& params);

/// Reads header and parameter tensors (all requires_grad).
CheckpointHeader load_checkpoint(const std::string& path, std::vector<NamedParam>& params);

/// Header only, for hash/kind validation before a full load.
CheckpointHeader peek_checkpoint(const std::string& path);

/// Copies values from `loaded` into matching entries of `target` by name.
/// Throws on missing names or shape disagreements.
void assign_params(const std::vector<NamedParam>& loaded, std::vector<NamedParam>& target);

}  // namespace mmner
