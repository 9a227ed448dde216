#include "laya/data/images.hpp"

#include <cmath>
#include <filesystem>
#include <sstream>

#include "laya/error.hpp"
#include "laya/io/binary.hpp"

namespace laya::data {

namespace {

constexpr std::uint32_t kIdxImages = 0x00000803;
constexpr std::uint32_t kIdxLabels = 0x00000801;
constexpr std::size_t kCifarRecord = 3073;

std::string hex(std::uint32_t v) {
  std::ostringstream os;
  os << "0x" << std::hex << v;
  return os.str();
}

std::string existing(const std::string& base) {
  if (std::filesystem::exists(base)) return base;
  if (std::filesystem::exists(base + ".gz")) return base + ".gz";
  throw IoError("missing dataset file " + base + "[.gz]");
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path, std::size_t num_classes) {
  const auto image_bytes = io::read_file(images_path);
  const auto label_bytes = io::read_file(labels_path);
  io::ByteReader images(image_bytes, images_path);
  io::ByteReader labels(label_bytes, labels_path);

  const std::uint32_t magic_i = images.u32_be("magic");
  if (magic_i != kIdxImages) {
    throw FormatError(images_path + ": bad magic " + hex(magic_i) + " at offset 0, expected " + hex(kIdxImages));
  }
  const std::uint32_t magic_l = labels.u32_be("magic");
  if (magic_l != kIdxLabels) {
    throw FormatError(labels_path + ": bad magic " + hex(magic_l) + " at offset 0, expected " + hex(kIdxLabels));
  }
  const std::uint32_t n = images.u32_be("image count");
  const std::uint32_t rows = images.u32_be("row count");
  const std::uint32_t cols = images.u32_be("column count");
  const std::uint32_t n_labels = labels.u32_be("label count");
  if (n != n_labels) {
    throw FormatError(images_path + ": " + std::to_string(n) + " images but " + std::to_string(n_labels) +
                      " labels in " + labels_path);
  }
  const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
  const std::uint8_t* img = images.take(static_cast<std::size_t>(n) * pixels, "pixel data");
  const std::uint8_t* lab = labels.take(n, "label data");

  Dataset ds;
  ds.name = "idx";
  ds.sample_shape = {pixels};
  ds.num_classes = num_classes;
  ds.features.resize(static_cast<std::size_t>(n) * pixels);
  for (std::size_t i = 0; i < ds.features.size(); ++i) ds.features[i] = static_cast<float>(img[i] / 255.0);
  ds.labels.assign(lab, lab + n);
  ds.validate();
  return ds;
}

DatasetPair load_idx_dir(const std::string& dir) {
  DatasetPair out;
  out.train = load_idx(existing(dir + "/train-images-idx3-ubyte"), existing(dir + "/train-labels-idx1-ubyte"));
  out.test = load_idx(existing(dir + "/t10k-images-idx3-ubyte"), existing(dir + "/t10k-labels-idx1-ubyte"));
  out.train.split = "train";
  out.test.split = "test";
  return out;
}

std::vector<CifarRecord> read_cifar_records(const std::string& path) {
  const auto bytes = io::read_file(path);
  if (bytes.size() % kCifarRecord != 0) {
    throw FormatError(path + ": length " + std::to_string(bytes.size()) + " is not a multiple of 3073");
  }
  std::vector<CifarRecord> out(bytes.size() / kCifarRecord);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].label = bytes[i * kCifarRecord];
    std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(i * kCifarRecord + 1), 3072, out[i].pixels);
  }
  return out;
}

void write_cifar_records(const std::string& path, const std::vector<CifarRecord>& records) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(records.size() * kCifarRecord);
  for (const auto& r : records) {
    bytes.push_back(r.label);
    bytes.insert(bytes.end(), r.pixels, r.pixels + 3072);
  }
  io::write_file(path, bytes);
}

Dataset cifar_to_dataset(const std::vector<CifarRecord>& records, std::string split) {
  Dataset ds;
  ds.name = "cifar10";
  ds.split = std::move(split);
  ds.sample_shape = {32, 32, 3};
  ds.num_classes = 10;
  ds.features.resize(records.size() * 3072);
  for (std::size_t i = 0; i < records.size(); ++i) {
    ds.labels.push_back(records[i].label);
    float* out = ds.features.data() + i * 3072;
    for (std::size_t c = 0; c < 3; ++c) {
      for (std::size_t p = 0; p < 1024; ++p) out[p * 3 + c] = static_cast<float>(records[i].pixels[c * 1024 + p] / 255.0);
    }
  }
  ds.validate();
  return ds;
}

Normalization channel_statistics(const Dataset& images) {
  const std::size_t channels = images.sample_shape.back();
  std::vector<double> sum(channels, 0.0), sq(channels, 0.0);
  const std::size_t count = images.features.size() / channels;
  if (count == 0) throw DataError("channel statistics of an empty image set");
  for (std::size_t i = 0; i < images.features.size(); ++i) sum[i % channels] += images.features[i];
  Normalization norm;
  for (std::size_t c = 0; c < channels; ++c) norm.mean.push_back(sum[c] / static_cast<double>(count));
  for (std::size_t i = 0; i < images.features.size(); ++i) {
    const double d = images.features[i] - norm.mean[i % channels];
    sq[i % channels] += d * d;
  }
  for (std::size_t c = 0; c < channels; ++c) {
    const double sd = std::sqrt(sq[c] / static_cast<double>(count));
    if (!(sd > 0.0)) throw DataError("channel " + std::to_string(c) + " has zero variance");
    norm.std.push_back(sd);
  }
  return norm;
}

void apply_normalization(Dataset& images, const Normalization& norm) {
  const std::size_t channels = norm.mean.size();
  if (channels == 0 || images.sample_shape.back() != channels) {
    throw DimensionError("normalization has " + std::to_string(channels) + " channels, images have " +
                         std::to_string(images.sample_shape.back()));
  }
  for (std::size_t i = 0; i < images.features.size(); ++i) {
    const std::size_t c = i % channels;
    images.features[i] = static_cast<float>((images.features[i] - norm.mean[c]) / norm.std[c]);
  }
  images.normalization = norm;
}

DatasetPair load_cifar10_dir(const std::string& dir) {
  std::vector<CifarRecord> train;
  for (int b = 1; b <= 5; ++b) {
    auto part = read_cifar_records(existing(dir + "/data_batch_" + std::to_string(b) + ".bin"));
    train.insert(train.end(), part.begin(), part.end());
  }
  const auto test = read_cifar_records(existing(dir + "/test_batch.bin"));
  DatasetPair out{cifar_to_dataset(train, "train"), cifar_to_dataset(test, "test")};
  const Normalization norm = channel_statistics(out.train);
  apply_normalization(out.train, norm);
  apply_normalization(out.test, norm);
  return out;
}

}  // namespace laya::data
