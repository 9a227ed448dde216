#include "laya/data/dataset.hpp"

#include <cmath>
#include <numeric>

#include "laya/error.hpp"
#include "laya/random.hpp"

namespace laya::data {

void Dataset::validate() const {
  if (num_classes == 0 && !labels.empty()) throw DataError(name + ": num_classes is zero");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes) {
      throw DataError(name + ": label " + std::to_string(labels[i]) + " of sample " + std::to_string(i) +
                      " outside [0, " + std::to_string(num_classes) + ")");
    }
  }
  const std::size_t expected = size() * sample_size();
  if (has_tokens() ? tokens.size() != expected : features.size() != expected) {
    throw DataError(name + ": " + std::to_string(size()) + " labels but input storage does not match " +
                    shape_str(sample_shape) + " per sample");
  }
}

nn::BatchInput gather(const Dataset& ds, std::span<const std::size_t> indices) {
  nn::BatchInput batch;
  batch.rows = indices.size();
  const std::size_t width = ds.sample_size();
  batch.labels.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= ds.size()) throw ContractError("gather: index " + std::to_string(i) + " out of range");
    batch.labels.push_back(ds.labels[i]);
  }
  if (ds.has_tokens()) {
    batch.seq_len = width;
    batch.tokens.resize(indices.size() * width);
    for (std::size_t r = 0; r < indices.size(); ++r) {
      std::copy_n(ds.tokens.begin() + indices[r] * width, width, batch.tokens.begin() + r * width);
    }
    return batch;
  }
  Shape shape{indices.size()};
  shape.insert(shape.end(), ds.sample_shape.begin(), ds.sample_shape.end());
  batch.features = Tensor(shape);
  double* out = batch.features.data();
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const float* src = ds.features.data() + indices[r] * width;
    for (std::size_t k = 0; k < width; ++k) out[r * width + k] = src[k];
  }
  return batch;
}

Dataset subset(const Dataset& ds, std::span<const std::size_t> indices, std::string split) {
  Dataset out;
  out.name = ds.name;
  out.split = std::move(split);
  out.sample_shape = ds.sample_shape;
  out.num_classes = ds.num_classes;
  out.normalization = ds.normalization;
  out.layer_dims = ds.layer_dims;
  const std::size_t width = ds.sample_size();
  for (std::size_t i : indices) {
    if (i >= ds.size()) throw ContractError("subset: index " + std::to_string(i) + " out of range");
    out.labels.push_back(ds.labels[i]);
    if (ds.has_tokens()) {
      out.tokens.insert(out.tokens.end(), ds.tokens.begin() + i * width, ds.tokens.begin() + (i + 1) * width);
    } else {
      out.features.insert(out.features.end(), ds.features.begin() + i * width,
                          ds.features.begin() + (i + 1) * width);
    }
  }
  return out;
}

Split validation_split(std::size_t n, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ParameterError("val_fraction must lie in (0, 1)");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed, Stream::split);
  rng.shuffle(std::span<std::size_t>(order));
  const auto n_val = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
  Split s;
  s.train.assign(order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_val));
  s.val.assign(order.end() - static_cast<std::ptrdiff_t>(n_val), order.end());
  return s;
}

std::vector<std::size_t> class_counts(const Dataset& ds) {
  std::vector<std::size_t> counts(ds.num_classes, 0);
  for (int y : ds.labels) ++counts[static_cast<std::size_t>(y)];
  return counts;
}

}  // namespace laya::data
