#pragma once

// Named-tensor dump for trained parameters, little-endian like LFF:
//   "LAYAPD01", u32 count, then per tensor:
//   u32 name length, name bytes, u32 rank, rank x u32 extents, f64 payload.

#include <string>
#include <utility>
#include <vector>

#include "laya/tensor.hpp"

namespace laya::io {

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

std::vector<std::uint8_t> encode_parameters(const NamedTensors& tensors);
NamedTensors decode_parameters(const std::vector<std::uint8_t>& bytes, const std::string& source);
void write_parameters(const std::string& path, const NamedTensors& tensors);
NamedTensors read_parameters(const std::string& path);

}  // namespace laya::io
