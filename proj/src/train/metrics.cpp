#include "laya/train/metrics.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numeric>

#include "laya/error.hpp"

namespace laya::train {

std::vector<int> argmax_rows(const Tensor& scores) {
  std::vector<int> out(scores.rows());
  const std::size_t C = scores.cols();
  for (std::size_t r = 0; r < scores.rows(); ++r) {
    const double* row = scores.data() + r * C;
    std::size_t best = 0;
    for (std::size_t c = 1; c < C; ++c) {
      if (row[c] > row[best]) best = c;
    }
    out[r] = static_cast<int>(best);
  }
  return out;
}

Metrics metrics_from_confusion(std::vector<std::vector<std::size_t>> confusion) {
  Metrics m;
  const std::size_t C = confusion.size();
  std::size_t total = 0, correct = 0;
  std::vector<std::size_t> predicted(C, 0);
  for (std::size_t t = 0; t < C; ++t) {
    if (confusion[t].size() != C) throw DimensionError("confusion matrix is not square");
    for (std::size_t p = 0; p < C; ++p) {
      total += confusion[t][p];
      predicted[p] += confusion[t][p];
    }
    correct += confusion[t][t];
  }
  m.accuracy = total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
  for (std::size_t c = 0; c < C; ++c) {
    const std::size_t actual = std::accumulate(confusion[c].begin(), confusion[c].end(), std::size_t{0});
    const std::size_t denom = actual + predicted[c];
    // F1 = 2TP / (2TP + FP + FN); zero when the class never occurs nor is predicted
    m.per_class_f1.push_back(denom == 0 ? 0.0 : 2.0 * static_cast<double>(confusion[c][c]) / static_cast<double>(denom));
  }
  m.macro_f1 = C == 0 ? 0.0 : std::accumulate(m.per_class_f1.begin(), m.per_class_f1.end(), 0.0) / static_cast<double>(C);
  m.confusion = std::move(confusion);
  return m;
}

Metrics compute_metrics(const std::vector<int>& labels, const std::vector<int>& predictions,
                        std::size_t num_classes) {
  if (labels.size() != predictions.size()) throw ContractError("labels and predictions differ in length");
  std::vector<std::vector<std::size_t>> confusion(num_classes, std::vector<std::size_t>(num_classes, 0));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto t = static_cast<std::size_t>(labels[i]);
    const auto p = static_cast<std::size_t>(predictions[i]);
    if (t >= num_classes || p >= num_classes) throw DataError("class index outside [0, num_classes)");
    ++confusion[t][p];
  }
  return metrics_from_confusion(std::move(confusion));
}

double sample_std(const std::vector<double>& values) {
  if (values.size() < 2) return 0.0;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

std::pair<double, double> confidence_interval(const std::vector<double>& values, double level) {
  if (values.size() < 2) throw ParameterError("confidence interval needs at least 2 values");
  if (!(level > 0.0 && level < 1.0)) throw ParameterError("confidence level must lie in (0, 1)");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  const boost::math::students_t dist(n - 1.0);
  const double t = boost::math::quantile(dist, 1.0 - (1.0 - level) / 2.0);
  const double half = t * sample_std(values) / std::sqrt(n);
  return {mean - half, mean + half};
}

Summary summarize(const std::vector<double>& values, double level) {
  Summary s;
  s.n = values.size();
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(s.n);
  s.std = sample_std(values);
  if (s.n >= 2) {
    std::tie(s.ci_low, s.ci_high) = confidence_interval(values, level);
  } else {
    s.ci_low = s.ci_high = s.mean;
  }
  return s;
}

}  // namespace laya::train
