#pragma once

#include <string>

#include <json.hpp>

namespace laya::io {

using Json = nlohmann::ordered_json;

// Serialises with every float printed as %.17g so values round-trip exactly
// and output is byte-stable across runs. Keys keep insertion order.
std::string dump_json(const Json& value, int indent = 2);

// %.17g, with non-finite values as "nan"/"inf"/"-inf".
std::string format_double(double v);

Json parse_json_file(const std::string& path);

// SHA-256 of `text` as lowercase hex.
std::string sha256_hex(const std::string& text);

}  // namespace laya::io
