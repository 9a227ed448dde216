#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "laya/tensor.hpp"

namespace laya::train {

struct Metrics {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::vector<double> per_class_f1;
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
};

// Row-wise argmax; ties go to the lowest index.
std::vector<int> argmax_rows(const Tensor& scores);

Metrics metrics_from_confusion(std::vector<std::vector<std::size_t>> confusion);
Metrics compute_metrics(const std::vector<int>& labels, const std::vector<int>& predictions,
                        std::size_t num_classes);

// mean +- t(1 - (1 - level)/2, n - 1) * s / sqrt(n), s with n - 1 denominator.
std::pair<double, double> confidence_interval(const std::vector<double>& values, double level = 0.95);

struct Summary {
  std::size_t n = 0;
  double mean = 0.0;
  double std = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

// A single value has std 0 and a degenerate interval at the mean.
Summary summarize(const std::vector<double>& values, double level = 0.95);

double sample_std(const std::vector<double>& values);

}  // namespace laya::train
