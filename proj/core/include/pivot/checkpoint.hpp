#pragma once

#include <map>
#include <string>
#include <vector>

#include "pivot/layers.hpp"

namespace pivot::nn {

// Checkpoint file: ASCII header line "pivot-checkpoint v1\n", u64 block
// count, then per block: u64 name length, name bytes, u64 rank, u64 dims,
// f64 little-endian payload. Round trips must be bit exact.

struct NamedBlock {
  std::string name;
  Tensor tensor;
};

void save_checkpoint(const std::string& path, const std::vector<NamedBlock>& blocks);
std::vector<NamedBlock> load_checkpoint(const std::string& path);

// Convenience: registry parameters as blocks, in registration order.
std::vector<NamedBlock> registry_blocks(const ParamRegistry& reg);
// Restores registry values from blocks by name; throws on missing or
// shape-mismatched blocks.
void restore_registry(ParamRegistry& reg, const std::vector<NamedBlock>& blocks);

}  // namespace pivot::nn
