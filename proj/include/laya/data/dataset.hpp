#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "laya/nn/backbones.hpp"

namespace laya::data {

// Per-channel affine statistics applied as (x - mean) / std.
struct Normalization {
  std::vector<double> mean;
  std::vector<double> std;
};

// Labelled samples, immutable once built. Dense samples (pixels in [0, 1] or
// normalised, frozen features) live in `features`, one row of
// product(sample_shape) floats per sample; token samples live in `tokens`.
struct Dataset {
  std::string name;
  std::string split;
  Shape sample_shape;
  std::vector<float> features;
  std::vector<std::int32_t> tokens;
  std::vector<int> labels;
  std::size_t num_classes = 0;
  Normalization normalization;
  std::vector<std::size_t> layer_dims;  // frozen feature sets only

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t sample_size() const { return shape_size(sample_shape); }
  bool has_tokens() const noexcept { return !tokens.empty(); }
  void validate() const;
};

struct DatasetPair {
  Dataset train;
  Dataset test;
};

// Rows `indices` as one backbone batch; dense samples keep their sample shape
// behind the leading batch extent.
nn::BatchInput gather(const Dataset& ds, std::span<const std::size_t> indices);

Dataset subset(const Dataset& ds, std::span<const std::size_t> indices, std::string split);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
};

// Seeded permutation of [0, n); the last ceil(fraction * n) indices validate.
Split validation_split(std::size_t n, double fraction, std::uint64_t seed);

std::vector<std::size_t> class_counts(const Dataset& ds);

}  // namespace laya::data
