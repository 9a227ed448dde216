#pragma once

// Statistics over per-sample layer attention: global depth profiles and
// class-wise profiles stratified by prediction correctness.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "laya/tensor.hpp"

namespace laya::analysis {

struct AttentionStats {
  std::vector<double> mean;
  std::vector<double> std;  // n - 1 denominator; 0 for a single sample
  std::size_t count = 0;
};

// alpha is [n x L]; n == 0 raises ParameterError.
AttentionStats global_stats(const Tensor& alpha);

enum class Stratum { all = 0, correct = 1, incorrect = 2 };
constexpr std::array<Stratum, 3> kStrata{Stratum::all, Stratum::correct, Stratum::incorrect};
std::string to_string(Stratum s);

struct ClasswiseProfile {
  std::size_t num_classes = 0;
  std::size_t layers = 0;
  // [stratum][class] -> mean alpha row, absent when the count is zero
  std::array<std::vector<std::optional<std::vector<double>>>, 3> mean;
  std::array<std::vector<std::size_t>, 3> count;

  const std::optional<std::vector<double>>& row(Stratum s, std::size_t c) const {
    return mean[static_cast<std::size_t>(s)].at(c);
  }
  std::size_t count_of(Stratum s, std::size_t c) const { return count[static_cast<std::size_t>(s)].at(c); }
};

ClasswiseProfile classwise_profiles(const Tensor& alpha, const std::vector<int>& labels,
                                    const std::vector<int>& predictions, std::size_t num_classes);

// Worst |count_c * mean_c + count_i * mean_i - count_a * mean_a| over classes
// and layers.
double recombination_error(const ClasswiseProfile& p);
// True when count_all == count_correct + count_incorrect for every class and
// the all-stratum counts sum to `total`.
bool strata_partition(const ClasswiseProfile& p, std::size_t total);

// CSV: layer,mean,std (layers 1-based).
std::string global_csv(const AttentionStats& stats);
AttentionStats parse_global_csv(const std::string& text);

// CSV: stratum,class,layer,mean,count with empty mean for zero counts.
std::string classwise_csv(const ClasswiseProfile& p);
ClasswiseProfile parse_classwise_csv(const std::string& text);

// CSV: sample,label,prediction,alpha_1..alpha_L.
std::string samples_csv(const Tensor& alpha, const std::vector<int>& labels, const std::vector<int>& predictions);

struct AttentionExport {
  Tensor alpha;
  std::vector<int> labels;
  std::vector<int> predictions;
  std::size_t num_classes = 0;
  bool include_samples = false;
};

// Writes attn_global.csv, attn_classwise.csv, optionally attn_samples.csv and
// attn_manifest.json (file list plus SHA-256 of the canonical config text)
// into `dir`. Returns the written file names.
std::vector<std::string> export_report(const std::string& dir, const AttentionExport& data,
                                       const std::string& canonical_config);

}  // namespace laya::analysis
