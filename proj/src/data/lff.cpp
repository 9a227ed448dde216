#include "laya/data/lff.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <json.hpp>

#include "laya/error.hpp"
#include "laya/io/binary.hpp"
#include "laya/random.hpp"

namespace laya::data {

namespace {
constexpr char kMagic[8] = {'L', 'A', 'Y', 'A', 'F', 'F', '0', '1'};
}

std::size_t FrozenFeatureSet::row_width() const {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{0});
}

void FrozenFeatureSet::validate() const {
  if (dims.empty()) throw FormatError("LFF field L: must be at least 1");
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (dims[i] == 0) throw FormatError("LFF field dims[" + std::to_string(i) + "]: must be positive");
  }
  if (num_classes == 0) throw FormatError("LFF field num_classes: must be positive");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes) {
      throw FormatError("LFF field label of sample " + std::to_string(i) + ": " + std::to_string(labels[i]) +
                        " outside [0, " + std::to_string(num_classes) + ")");
    }
  }
  if (features.size() != labels.size() * row_width()) throw FormatError("LFF features do not match n x sum(dims)");
}

std::vector<std::uint8_t> encode_lff(const FrozenFeatureSet& set) {
  set.validate();
  io::ByteWriter w;
  w.raw(kMagic, 8);
  w.u32_le(static_cast<std::uint32_t>(set.size()));
  w.u32_le(static_cast<std::uint32_t>(set.dims.size()));
  for (std::size_t d : set.dims) w.u32_le(static_cast<std::uint32_t>(d));
  w.u32_le(static_cast<std::uint32_t>(set.num_classes));
  const std::size_t width = set.row_width();
  for (std::size_t i = 0; i < set.size(); ++i) {
    w.u32_le(static_cast<std::uint32_t>(set.labels[i]));
    for (std::size_t k = 0; k < width; ++k) w.f32_le(set.features[i * width + k]);
  }
  return std::move(w.bytes());
}

FrozenFeatureSet decode_lff(const std::vector<std::uint8_t>& bytes, const std::string& source) {
  io::ByteReader r(bytes, source);
  if (std::memcmp(r.take(8, "magic"), kMagic, 8) != 0) {
    throw FormatError(source + ": LFF field magic: expected \"LAYAFF01\"");
  }
  FrozenFeatureSet set;
  const std::uint32_t n = r.u32_le("n_samples");
  const std::uint32_t L = r.u32_le("L");
  if (L == 0) throw FormatError(source + ": LFF field L: must be at least 1");
  for (std::uint32_t i = 0; i < L; ++i) {
    const std::uint32_t d = r.u32_le("dims");
    if (d == 0) throw FormatError(source + ": LFF field dims[" + std::to_string(i) + "]: must be positive");
    set.dims.push_back(d);
  }
  set.num_classes = r.u32_le("num_classes");
  const std::size_t width = set.row_width();
  const std::size_t record = 4 + 4 * width;
  if (r.remaining() != static_cast<std::size_t>(n) * record) {
    throw FormatError(source + ": LFF field n_samples: header declares " + std::to_string(n) + " samples of " +
                      std::to_string(record) + " bytes but " + std::to_string(r.remaining()) + " bytes follow");
  }
  set.labels.reserve(n);
  set.features.reserve(static_cast<std::size_t>(n) * width);
  for (std::uint32_t i = 0; i < n; ++i) {
    set.labels.push_back(static_cast<int>(r.u32_le("label")));
    for (std::size_t k = 0; k < width; ++k) set.features.push_back(r.f32_le("features"));
  }
  try {
    set.validate();
  } catch (const FormatError& e) {
    throw FormatError(source + ": " + e.what());
  }
  return set;
}

FrozenFeatureSet load_frozen_features(const std::string& path) { return decode_lff(io::read_file(path), path); }

void write_frozen_features(const std::string& path, const FrozenFeatureSet& set) {
  io::write_file(path, encode_lff(set));
}

Dataset to_dataset(const FrozenFeatureSet& set, std::string split) {
  Dataset ds;
  ds.name = "frozen";
  ds.split = std::move(split);
  ds.sample_shape = {set.row_width()};
  ds.features = set.features;
  ds.labels = set.labels;
  ds.num_classes = set.num_classes;
  ds.layer_dims = set.dims;
  return ds;
}

FrozenFeatureSet generate_synthetic_lff(const SyntheticLffSpec& spec) {
  if (spec.dims.empty() || spec.informative_layer < 1 || spec.informative_layer > spec.dims.size()) {
    throw ParameterError("synthetic LFF: informative_layer must lie in [1, L]");
  }
  if (spec.num_classes == 0) throw ParameterError("synthetic LFF: num_classes must be positive");
  Rng rng(spec.seed, Stream::data);
  const std::size_t k = spec.informative_layer - 1;
  const std::size_t dk = spec.dims[k];

  // Class means: scaled basis vectors when C <= d_k (pairwise distance exactly
  // `separation`), random directions otherwise.
  const double radius = spec.separation * spec.noise / std::sqrt(2.0);
  std::vector<std::vector<double>> means(spec.num_classes, std::vector<double>(dk, 0.0));
  for (std::size_t c = 0; c < spec.num_classes; ++c) {
    if (spec.num_classes <= dk) {
      means[c][c] = radius;
    } else {
      double norm = 0.0;
      for (double& v : means[c]) {
        v = rng.normal();
        norm += v * v;
      }
      for (double& v : means[c]) v *= radius / std::sqrt(norm);
    }
  }

  FrozenFeatureSet set;
  set.dims = spec.dims;
  set.num_classes = spec.num_classes;
  std::vector<std::size_t> order(spec.n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(order));
  for (std::size_t i = 0; i < spec.n; ++i) set.labels.push_back(static_cast<int>(order[i] % spec.num_classes));
  for (std::size_t i = 0; i < spec.n; ++i) {
    for (std::size_t l = 0; l < spec.dims.size(); ++l) {
      for (std::size_t j = 0; j < spec.dims[l]; ++j) {
        double v = spec.noise * rng.normal();
        if (l == k) v += means[static_cast<std::size_t>(set.labels[i])][j];
        set.features.push_back(static_cast<float>(v));
      }
    }
  }
  return set;
}

SplitManifest load_split_manifest(const std::string& path, std::size_t n_samples) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path + ": " + e.what());
  }
  SplitManifest m;
  const auto field = [&](const char* name, std::vector<std::size_t>& out) {
    if (!j.contains(name) || !j[name].is_array()) throw FormatError(path + ": missing array \"" + name + "\"");
    for (const auto& v : j[name]) {
      if (!v.is_number_unsigned() || v.get<std::size_t>() >= n_samples) {
        throw FormatError(path + ": \"" + name + "\" holds an index outside [0, " + std::to_string(n_samples) + ")");
      }
      out.push_back(v.get<std::size_t>());
    }
  };
  field("train", m.train);
  field("val", m.val);
  field("test", m.test);
  return m;
}

void write_split_manifest(const std::string& path, const SplitManifest& m) {
  nlohmann::json j{{"train", m.train}, {"val", m.val}, {"test", m.test}};
  io::write_text(path, j.dump() + "\n");
}

SplitManifest stratified_split(const std::vector<int>& labels, std::size_t num_classes, double train_fraction,
                               double val_fraction, std::uint64_t seed) {
  std::vector<std::vector<std::size_t>> by_class(num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) by_class.at(static_cast<std::size_t>(labels[i])).push_back(i);
  Rng rng(seed, Stream::split);
  SplitManifest m;
  for (auto& members : by_class) {
    rng.shuffle(std::span<std::size_t>(members));
    const auto n = static_cast<double>(members.size());
    const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * n));
    const auto n_val = std::min(members.size() - n_train, static_cast<std::size_t>(std::llround(val_fraction * n)));
    m.train.insert(m.train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_train));
    m.val.insert(m.val.end(), members.begin() + static_cast<std::ptrdiff_t>(n_train),
                 members.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    m.test.insert(m.test.end(), members.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), members.end());
  }
  std::sort(m.train.begin(), m.train.end());
  std::sort(m.val.begin(), m.val.end());
  std::sort(m.test.begin(), m.test.end());
  return m;
}

}  // namespace laya::data
