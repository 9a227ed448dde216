#pragma once

// IDX (MNIST-family) and CIFAR-10 binary decoders.

#include <cstdint>
#include <string>
#include <vector>

#include "laya/data/dataset.hpp"

namespace laya::data {

// Images (magic 0x00000803) and labels (0x00000801), optionally gzipped.
// Pixels are scaled to [0, 1]; each sample is a flat row of rows*cols values.
Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                 std::size_t num_classes = 10);

// Loads <dir>/{train,t10k}-{images-idx3,labels-idx1}-ubyte[.gz].
DatasetPair load_idx_dir(const std::string& dir);

struct CifarRecord {
  std::uint8_t label = 0;
  std::uint8_t pixels[3072];  // channel-major on disk: 1024 R, 1024 G, 1024 B
};

// One CIFAR-10 binary batch file; length must be a multiple of 3073.
std::vector<CifarRecord> read_cifar_records(const std::string& path);
void write_cifar_records(const std::string& path, const std::vector<CifarRecord>& records);

// Decodes records to HWC floats in [0, 1], unnormalised.
Dataset cifar_to_dataset(const std::vector<CifarRecord>& records, std::string split);

// Per-channel mean/std over an HWC image set.
Normalization channel_statistics(const Dataset& images);
void apply_normalization(Dataset& images, const Normalization& norm);

// data_batch_1..5 + test_batch from <dir>; statistics from the training split
// are applied to both splits.
DatasetPair load_cifar10_dir(const std::string& dir);

}  // namespace laya::data
