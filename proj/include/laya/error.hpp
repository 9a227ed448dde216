#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace laya {

// Every failure raised by the library carries a short machine-readable
// category so the CLI can emit a single-line "error: <category>: ..." message.
class Error : public std::runtime_error {
 public:
  Error(std::string_view category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  std::string_view category() const noexcept { return category_; }

 private:
  std::string_view category_;
};

#define LAYA_DEFINE_ERROR(Name, tag)                                         \
  class Name : public Error {                                                \
   public:                                                                   \
    explicit Name(const std::string& message) : Error(tag, message) {}       \
  };

LAYA_DEFINE_ERROR(DimensionError, "dimension")
LAYA_DEFINE_ERROR(ParameterError, "parameter")
LAYA_DEFINE_ERROR(ContractError, "contract")
LAYA_DEFINE_ERROR(ConfigError, "config")
LAYA_DEFINE_ERROR(DataError, "data")
LAYA_DEFINE_ERROR(FormatError, "format")
LAYA_DEFINE_ERROR(UsageError, "usage")
LAYA_DEFINE_ERROR(IoError, "io")

#undef LAYA_DEFINE_ERROR

// Rethrows `e` as the same concrete type with `prefix` prepended.
[[noreturn]] inline void rethrow_with_prefix(const Error& e, const std::string& prefix) {
  const std::string msg = prefix + e.what();
  if (dynamic_cast<const DimensionError*>(&e)) throw DimensionError(msg);
  if (dynamic_cast<const ParameterError*>(&e)) throw ParameterError(msg);
  if (dynamic_cast<const ContractError*>(&e)) throw ContractError(msg);
  if (dynamic_cast<const ConfigError*>(&e)) throw ConfigError(msg);
  if (dynamic_cast<const DataError*>(&e)) throw DataError(msg);
  if (dynamic_cast<const FormatError*>(&e)) throw FormatError(msg);
  if (dynamic_cast<const UsageError*>(&e)) throw UsageError(msg);
  if (dynamic_cast<const IoError*>(&e)) throw IoError(msg);
  throw Error(e.category(), msg);
}

}  // namespace laya
