#pragma once

// LFF: per-layer feature files for head-only training on a frozen backbone.
//
//   "LAYAFF01"                     8 bytes
//   u32 n_samples, u32 L, L x u32 dims, u32 num_classes
//   per sample: u32 label, then sum(dims) f32 in layer order
//
// All integers and floats little-endian.

#include <cstdint>
#include <string>
#include <vector>

#include "laya/data/dataset.hpp"

namespace laya::data {

struct FrozenFeatureSet {
  std::vector<std::size_t> dims;
  std::size_t num_classes = 0;
  std::vector<int> labels;
  std::vector<float> features;  // n x sum(dims), row-major

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t row_width() const;
  void validate() const;
  bool operator==(const FrozenFeatureSet&) const = default;
};

std::vector<std::uint8_t> encode_lff(const FrozenFeatureSet& set);
FrozenFeatureSet decode_lff(const std::vector<std::uint8_t>& bytes, const std::string& source);
FrozenFeatureSet load_frozen_features(const std::string& path);
void write_frozen_features(const std::string& path, const FrozenFeatureSet& set);

Dataset to_dataset(const FrozenFeatureSet& set, std::string split);

struct SyntheticLffSpec {
  std::size_t n = 1000;
  std::vector<std::size_t> dims{16, 16, 16};
  std::size_t num_classes = 2;
  std::size_t informative_layer = 1;  // 1-based
  double separation = 5.0;            // distance between class means, in noise sigmas
  double noise = 1.0;
  std::uint64_t seed = 0;
};

// Layer k carries class-conditional Gaussians whose means sit `separation`
// sigmas apart; all other layers are pure noise. Labels cycle through the
// classes and samples are shuffled.
FrozenFeatureSet generate_synthetic_lff(const SyntheticLffSpec& spec);

// {"train": [...], "val": [...], "test": [...]} sample indices.
struct SplitManifest {
  std::vector<std::size_t> train, val, test;
};
SplitManifest load_split_manifest(const std::string& path, std::size_t n_samples);
void write_split_manifest(const std::string& path, const SplitManifest& manifest);

// Stratified split with per-class proportions train/val/test (remainder to
// test), using the seed's split stream.
SplitManifest stratified_split(const std::vector<int>& labels, std::size_t num_classes, double train_fraction,
                               double val_fraction, std::uint64_t seed);

}  // namespace laya::data
