#include "laya/cli/config.hpp"

#include <cstdlib>
#include <filesystem>

#include "laya/error.hpp"

namespace laya::cli {

using io::Json;

namespace {

const Json& at_path(const Json& doc, const std::string& path) {
  const Json* cur = &doc;
  std::size_t start = 0;
  while (start <= path.size()) {
    const std::size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    cur = &cur->at(key);
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  return *cur;
}

const Json& field(const Json& doc, const std::string& path) {
  try {
    return at_path(doc, path);
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(path + ": missing");
  }
}

std::size_t get_size(const Json& doc, const std::string& path) {
  const Json& v = field(doc, path);
  if (!v.is_number_integer() || v.get<long long>() < 0) throw ConfigError(path + ": expected a non-negative integer");
  return v.get<std::size_t>();
}

double get_double(const Json& doc, const std::string& path) {
  const Json& v = field(doc, path);
  if (!v.is_number()) throw ConfigError(path + ": expected a number");
  return v.get<double>();
}

std::string get_string(const Json& doc, const std::string& path) {
  const Json& v = field(doc, path);
  if (!v.is_string()) throw ConfigError(path + ": expected a string");
  return v.get<std::string>();
}

bool get_bool(const Json& doc, const std::string& path) {
  const Json& v = field(doc, path);
  if (!v.is_boolean()) throw ConfigError(path + ": expected true or false");
  return v.get<bool>();
}

template <typename T, typename Get>
std::vector<T> get_list(const Json& doc, const std::string& path, Get get) {
  const Json& v = field(doc, path);
  if (!v.is_array()) throw ConfigError(path + ": expected an array");
  std::vector<T> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(get(v, std::to_string(i), path + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<std::size_t> size_list(const Json& doc, const std::string& path) {
  return get_list<std::size_t>(doc, path, [](const Json& arr, const std::string& idx, const std::string& where) {
    const Json& e = arr[std::stoul(idx)];
    if (!e.is_number_integer() || e.get<long long>() < 0) throw ConfigError(where + ": expected a non-negative integer");
    return e.get<std::size_t>();
  });
}

std::vector<double> double_list(const Json& doc, const std::string& path) {
  return get_list<double>(doc, path, [](const Json& arr, const std::string& idx, const std::string& where) {
    const Json& e = arr[std::stoul(idx)];
    if (!e.is_number()) throw ConfigError(where + ": expected a number");
    return e.get<double>();
  });
}

template <typename Fn>
auto in_field(const std::string& path, Fn fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    throw ConfigError(msg.rfind(path, 0) == 0 ? msg : path + ": " + msg);
  }
}

}  // namespace

Json default_config() {
  Json j;
  j["dataset"] = {{"kind", "idx"},          {"path", ""},           {"manifest", ""},
                  {"train_path", ""},       {"test_path", ""},      {"vocab_size", 20000},
                  {"seq_len", 256},         {"synthetic_train", 8000}, {"synthetic_test", 2000},
                  {"synthetic_seed", 0},    {"split_seed", 0}};
  j["backbone"] = {{"kind", "mlp"},       {"widths", {512, 256, 128}}, {"input_dim", 784},
                   {"image_height", 32},  {"image_width", 32},         {"image_channels", 3},
                   {"kernel_size", 3},    {"embedding_dim", 128}};
  j["head"] = {{"kind", "laya"}, {"d_star", 96},         {"tau", 1.0},
               {"psi", "identity"}, {"scorer_width", 192}, {"num_classes", 0}};
  j["train"] = {{"learning_rate", nullptr}, {"batch_size", 128}, {"max_epochs", 50},
                {"patience", 5},            {"val_fraction", 0.1}, {"seeds", {1, 2, 3, 4, 5}},
                {"beta1", 0.9},             {"beta2", 0.999},    {"eps", 1e-8},
                {"eval_batch_size", 500}};
  j["grid"] = {{"d_star", {64, 96, 128}},
               {"tau", {0.5, 1.0, 1.5}},
               {"psi", {"identity", "mlp"}},
               {"scorer_width_factor", {1, 2}},
               {"seeds", {101, 102, 103}}};
  j["analysis"] = {{"dump_samples", false}};
  j["output"] = "";
  return j;
}

void merge_config(Json& base, const Json& overlay, const std::string& path) {
  if (!overlay.is_object()) throw ConfigError((path.empty() ? "config" : path) + ": expected an object");
  for (auto it = overlay.begin(); it != overlay.end(); ++it) {
    const std::string key = path.empty() ? it.key() : path + "." + it.key();
    if (!base.contains(it.key())) throw ConfigError(key + ": unknown config key");
    Json& target = base[it.key()];
    if (target.is_object()) {
      merge_config(target, it.value(), key);
    } else {
      target = it.value();
    }
  }
}

void apply_override(Json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw UsageError("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  Json* cur = &doc;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!cur->is_object() || !cur->contains(part)) throw UsageError("unknown override key '" + key + "'");
    cur = &(*cur)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  if (cur->is_object()) throw UsageError("override '" + key + "' names a section, not a value");
  Json value;
  try {
    value = Json::parse(text);
  } catch (const nlohmann::json::parse_error&) {
    value = text;
  }
  *cur = value;
}

std::string expand_env(const std::string& value) {
  std::string out;
  std::size_t i = 0;
  while (i < value.size()) {
    if (value.compare(i, 2, "${") == 0) {
      const std::size_t close = value.find('}', i);
      if (close == std::string::npos) throw ConfigError("unterminated ${...} in '" + value + "'");
      std::string name = value.substr(i + 2, close - i - 2);
      std::optional<std::string> fallback;
      if (const auto sep = name.find(":-"); sep != std::string::npos) {
        fallback = name.substr(sep + 2);
        name = name.substr(0, sep);
      }
      const char* env = std::getenv(name.c_str());
      if (env != nullptr && *env != '\0') {
        out += env;
      } else if (fallback) {
        out += *fallback;
      } else {
        throw ConfigError("environment variable " + name + " is not set (in '" + value + "')");
      }
      i = close + 1;
    } else {
      out += value[i++];
    }
  }
  return out;
}

// Round-tripping through the file writer first makes the text identical for a
// document and its reloaded config.json (1.0 is written as 1).
std::string RunConfig::canonical_text() const { return nlohmann::json::parse(io::dump_json(resolved)).dump(); }

void check_dataset_paths(const DatasetConfig& d) {
  const auto must_exist = [](const std::string& p, const char* key) {
    if (p.empty()) throw ConfigError(std::string(key) + ": required for this dataset kind");
    if (!std::filesystem::exists(p)) throw ConfigError(std::string(key) + ": '" + p + "' does not exist");
  };
  if (d.kind == "idx" || d.kind == "cifar10" || d.kind == "frozen") must_exist(d.path, "dataset.path");
  if (d.kind == "frozen" && !d.manifest.empty()) must_exist(d.manifest, "dataset.manifest");
  if (d.kind == "text") {
    must_exist(d.train_path, "dataset.train_path");
    must_exist(d.test_path, "dataset.test_path");
  }
}

std::string RunConfig::hash() const { return io::sha256_hex(canonical_text()); }

RunConfig parse_run_config(const Json& merged) {
  RunConfig c;
  c.resolved = merged;
  const Json& j = merged;

  auto& d = c.dataset;
  d.kind = get_string(j, "dataset.kind");
  if (d.kind != "idx" && d.kind != "cifar10" && d.kind != "text" && d.kind != "synthetic_text" && d.kind != "frozen") {
    throw ConfigError("dataset.kind: unknown dataset kind '" + d.kind + "'");
  }
  d.path = expand_env(get_string(j, "dataset.path"));
  d.manifest = expand_env(get_string(j, "dataset.manifest"));
  d.train_path = expand_env(get_string(j, "dataset.train_path"));
  d.test_path = expand_env(get_string(j, "dataset.test_path"));
  d.vocab_size = get_size(j, "dataset.vocab_size");
  d.seq_len = get_size(j, "dataset.seq_len");
  d.synthetic_train = get_size(j, "dataset.synthetic_train");
  d.synthetic_test = get_size(j, "dataset.synthetic_test");
  d.synthetic_seed = get_size(j, "dataset.synthetic_seed");
  d.split_seed = get_size(j, "dataset.split_seed");
  auto& b = c.model.backbone;
  b.kind = in_field("backbone.kind", [&] { return nn::parse_backbone_kind(get_string(j, "backbone.kind")); });
  b.widths = size_list(j, "backbone.widths");
  b.input_dim = get_size(j, "backbone.input_dim");
  b.image_height = get_size(j, "backbone.image_height");
  b.image_width = get_size(j, "backbone.image_width");
  b.image_channels = get_size(j, "backbone.image_channels");
  b.kernel_size = get_size(j, "backbone.kernel_size");
  b.embedding_dim = get_size(j, "backbone.embedding_dim");
  b.vocab_size = d.vocab_size;
  b.seq_len = d.seq_len;
  const bool text_data = d.kind == "text" || d.kind == "synthetic_text";
  if (text_data != (b.kind == nn::BackboneKind::text)) {
    throw ConfigError("backbone.kind: text datasets need the text backbone and vice versa");
  }
  if ((d.kind == "frozen") != (b.kind == nn::BackboneKind::frozen)) {
    throw ConfigError("backbone.kind: frozen feature files need the frozen backbone and vice versa");
  }
  if (b.kind == nn::BackboneKind::cnn && d.kind != "cifar10") {
    throw ConfigError("backbone.kind: the cnn backbone needs image data (cifar10)");
  }
  if (b.kind != nn::BackboneKind::frozen) in_field("backbone", [&] { b.validate(); return 0; });

  auto& h = c.model.head;
  h.kind = in_field("head.kind", [&] { return nn::parse_head_kind(get_string(j, "head.kind")); });
  h.d_star = get_size(j, "head.d_star");
  h.tau = get_double(j, "head.tau");
  h.psi = in_field("head.psi", [&] { return nn::parse_psi_kind(get_string(j, "head.psi")); });
  h.scorer_width = get_size(j, "head.scorer_width");
  h.num_classes = get_size(j, "head.num_classes");
  if (h.num_classes != 0) {
    try {
      h.validate();
    } catch (const Error& e) {
      throw ConfigError(std::string("head: ") + e.what());
    }
  } else if (!(h.tau > 0.0)) {
    throw ConfigError("head.tau: must be positive");
  }

  auto& t = c.train;
  const Json& lr = field(j, "train.learning_rate");
  if (lr.is_null()) {
    t.learning_rate = b.kind == nn::BackboneKind::cnn ? 3e-4 : 1e-3;
  } else {
    t.learning_rate = get_double(j, "train.learning_rate");
  }
  t.batch_size = get_size(j, "train.batch_size");
  t.max_epochs = get_size(j, "train.max_epochs");
  t.patience = get_size(j, "train.patience");
  t.val_fraction = get_double(j, "train.val_fraction");
  t.seeds.clear();
  for (std::size_t s : size_list(j, "train.seeds")) t.seeds.push_back(s);
  t.beta1 = get_double(j, "train.beta1");
  t.beta2 = get_double(j, "train.beta2");
  t.eps = get_double(j, "train.eps");
  t.eval_batch_size = get_size(j, "train.eval_batch_size");
  t.validate();

  c.grid.d_star = size_list(j, "grid.d_star");
  c.grid.tau = double_list(j, "grid.tau");
  c.grid.psi.clear();
  const Json& psi = field(j, "grid.psi");
  if (!psi.is_array()) throw ConfigError("grid.psi: expected an array");
  for (const auto& p : psi) {
    if (!p.is_string()) throw ConfigError("grid.psi: expected strings");
    c.grid.psi.push_back(in_field("grid.psi", [&] { return nn::parse_psi_kind(p.get<std::string>()); }));
  }
  c.grid.scorer_width_factor = size_list(j, "grid.scorer_width_factor");
  for (std::size_t s : size_list(j, "grid.seeds")) c.grid_seeds.push_back(s);

  c.dump_samples = get_bool(j, "analysis.dump_samples");
  c.output = expand_env(get_string(j, "output"));
  return c;
}

RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides) {
  Json doc = default_config();
  if (!path.empty()) merge_config(doc, io::parse_json_file(path));
  for (const auto& o : overrides) apply_override(doc, o);
  return parse_run_config(doc);
}

}  // namespace laya::cli
