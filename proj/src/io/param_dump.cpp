#include "laya/io/param_dump.hpp"

#include <cstring>

#include "laya/io/binary.hpp"

namespace laya::io {

namespace {
constexpr char kMagic[8] = {'L', 'A', 'Y', 'A', 'P', 'D', '0', '1'};
}

std::vector<std::uint8_t> encode_parameters(const NamedTensors& tensors) {
  ByteWriter w;
  w.raw(kMagic, 8);
  w.u32_le(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    w.u32_le(static_cast<std::uint32_t>(name.size()));
    w.raw(name.data(), name.size());
    w.u32_le(static_cast<std::uint32_t>(t.rank()));
    for (std::size_t e : t.shape()) w.u32_le(static_cast<std::uint32_t>(e));
    for (double v : t.values()) w.f64_le(v);
  }
  return std::move(w.bytes());
}

NamedTensors decode_parameters(const std::vector<std::uint8_t>& bytes, const std::string& source) {
  ByteReader r(bytes, source);
  if (std::memcmp(r.take(8, "magic"), kMagic, 8) != 0) {
    throw FormatError(source + ": not a parameter dump (magic at offset 0)");
  }
  NamedTensors out;
  const std::uint32_t count = r.u32_le("tensor count");
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t len = r.u32_le("name length");
    const auto* name = reinterpret_cast<const char*>(r.take(len, "name"));
    const std::uint32_t rank = r.u32_le("rank");
    Shape shape;
    for (std::uint32_t d = 0; d < rank; ++d) shape.push_back(r.u32_le("extent"));
    Tensor t(shape);
    r.need(t.size() * 8, "payload");
    for (double& v : t.values()) v = r.f64_le("payload");
    out.emplace_back(std::string(name, len), std::move(t));
  }
  if (!r.at_end()) throw FormatError(source + ": trailing bytes after " + std::to_string(count) + " tensors");
  return out;
}

void write_parameters(const std::string& path, const NamedTensors& tensors) {
  write_file(path, encode_parameters(tensors));
}

NamedTensors read_parameters(const std::string& path) { return decode_parameters(read_file(path), path); }

}  // namespace laya::io
