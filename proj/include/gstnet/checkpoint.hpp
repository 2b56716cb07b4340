#pragma once

#include <filesystem>

#include "gstnet/network.hpp"

namespace gstnet {

// Checkpoint directory format: manifest.json (network spec + tensor table
// with name, kind, shape, byte offset, path tag) and weights.bin (all
// tensors concatenated in manifest order, 64-bit little-endian floats).
// Parameters and BN running statistics round-trip bit-exactly.
void save_checkpoint(const Network& net, const std::filesystem::path& dir);
Network load_checkpoint(const std::filesystem::path& dir);

}  // namespace gstnet
