#include "laya/analysis/attention.hpp"

#include <cmath>
#include <filesystem>
#include <sstream>

#include "laya/error.hpp"
#include "laya/io/binary.hpp"
#include "laya/io/json.hpp"

namespace laya::analysis {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_number(const std::string& field, const char* what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(field, &used);
    if (used != field.size()) throw std::invalid_argument(field);
    return v;
  } catch (const std::exception&) {
    throw FormatError(std::string("attention CSV: bad ") + what + " '" + field + "'");
  }
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text, const std::string& header) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != header) throw FormatError("attention CSV: expected header '" + header + "'");
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (!line.empty()) rows.push_back(split_csv_line(line));
  }
  return rows;
}

}  // namespace

AttentionStats global_stats(const Tensor& alpha) {
  if (alpha.rank() != 2 || alpha.rows() == 0) throw ParameterError("global attention statistics need at least one sample");
  const std::size_t n = alpha.rows(), L = alpha.cols();
  AttentionStats s;
  s.count = n;
  s.mean.assign(L, 0.0);
  s.std.assign(L, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t i = 0; i < L; ++i) s.mean[i] += alpha.at(r, i);
  }
  for (double& m : s.mean) m /= static_cast<double>(n);
  if (n > 1) {
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t i = 0; i < L; ++i) {
        const double d = alpha.at(r, i) - s.mean[i];
        s.std[i] += d * d;
      }
    }
    for (double& v : s.std) v = std::sqrt(v / static_cast<double>(n - 1));
  }
  return s;
}

std::string to_string(Stratum s) {
  switch (s) {
    case Stratum::all:
      return "all";
    case Stratum::correct:
      return "correct";
    case Stratum::incorrect:
      return "incorrect";
  }
  return "unknown";
}

ClasswiseProfile classwise_profiles(const Tensor& alpha, const std::vector<int>& labels,
                                    const std::vector<int>& predictions, std::size_t num_classes) {
  if (labels.size() != predictions.size() || alpha.rows() != labels.size()) {
    throw ContractError("class-wise profiles: alpha, labels and predictions differ in length");
  }
  ClasswiseProfile p;
  p.num_classes = num_classes;
  p.layers = alpha.cols();
  std::array<std::vector<std::vector<double>>, 3> sums;
  for (std::size_t s = 0; s < 3; ++s) {
    sums[s].assign(num_classes, std::vector<double>(p.layers, 0.0));
    p.count[s].assign(num_classes, 0);
  }
  for (std::size_t r = 0; r < labels.size(); ++r) {
    const auto c = static_cast<std::size_t>(labels[r]);
    if (labels[r] < 0 || c >= num_classes || predictions[r] < 0 ||
        static_cast<std::size_t>(predictions[r]) >= num_classes) {
      throw ContractError("class-wise profiles: class index outside [0, " + std::to_string(num_classes) + ")");
    }
    const std::size_t stratum = labels[r] == predictions[r] ? 1 : 2;
    for (std::size_t s : {std::size_t{0}, stratum}) {
      ++p.count[s][c];
      for (std::size_t i = 0; i < p.layers; ++i) sums[s][c][i] += alpha.at(r, i);
    }
  }
  for (std::size_t s = 0; s < 3; ++s) {
    p.mean[s].resize(num_classes);
    for (std::size_t c = 0; c < num_classes; ++c) {
      if (p.count[s][c] == 0) continue;
      std::vector<double> row = sums[s][c];
      for (double& v : row) v /= static_cast<double>(p.count[s][c]);
      p.mean[s][c] = std::move(row);
    }
  }
  return p;
}

double recombination_error(const ClasswiseProfile& p) {
  double worst = 0.0;
  for (std::size_t c = 0; c < p.num_classes; ++c) {
    for (std::size_t i = 0; i < p.layers; ++i) {
      double lhs = 0.0, rhs = 0.0;
      for (Stratum s : {Stratum::correct, Stratum::incorrect}) {
        if (p.row(s, c)) lhs += static_cast<double>(p.count_of(s, c)) * (*p.row(s, c))[i];
      }
      if (p.row(Stratum::all, c)) rhs = static_cast<double>(p.count_of(Stratum::all, c)) * (*p.row(Stratum::all, c))[i];
      worst = std::max(worst, std::abs(lhs - rhs));
    }
  }
  return worst;
}

bool strata_partition(const ClasswiseProfile& p, std::size_t total) {
  std::size_t sum = 0;
  for (std::size_t c = 0; c < p.num_classes; ++c) {
    if (p.count_of(Stratum::all, c) != p.count_of(Stratum::correct, c) + p.count_of(Stratum::incorrect, c)) {
      return false;
    }
    sum += p.count_of(Stratum::all, c);
  }
  return sum == total;
}

std::string global_csv(const AttentionStats& stats) {
  std::string out = "layer,mean,std\n";
  for (std::size_t i = 0; i < stats.mean.size(); ++i) {
    out += std::to_string(i + 1) + "," + io::format_double(stats.mean[i]) + "," + io::format_double(stats.std[i]) + "\n";
  }
  return out;
}

AttentionStats parse_global_csv(const std::string& text) {
  AttentionStats s;
  for (const auto& row : csv_rows(text, "layer,mean,std")) {
    if (row.size() != 3) throw FormatError("attention CSV: global rows need 3 fields");
    if (parse_number(row[0], "layer") != static_cast<double>(s.mean.size() + 1)) {
      throw FormatError("attention CSV: layers must be listed in order from 1");
    }
    s.mean.push_back(parse_number(row[1], "mean"));
    s.std.push_back(parse_number(row[2], "std"));
  }
  return s;
}

std::string classwise_csv(const ClasswiseProfile& p) {
  std::string out = "stratum,class,layer,mean,count\n";
  for (Stratum s : kStrata) {
    for (std::size_t c = 0; c < p.num_classes; ++c) {
      const auto& row = p.row(s, c);
      for (std::size_t i = 0; i < p.layers; ++i) {
        out += to_string(s) + "," + std::to_string(c) + "," + std::to_string(i + 1) + "," +
               (row ? io::format_double((*row)[i]) : std::string()) + "," + std::to_string(p.count_of(s, c)) + "\n";
      }
    }
  }
  return out;
}

ClasswiseProfile parse_classwise_csv(const std::string& text) {
  const auto rows = csv_rows(text, "stratum,class,layer,mean,count");
  ClasswiseProfile p;
  for (const auto& row : rows) {
    if (row.size() != 5) throw FormatError("attention CSV: class-wise rows need 5 fields");
    p.num_classes = std::max(p.num_classes, static_cast<std::size_t>(parse_number(row[1], "class")) + 1);
    p.layers = std::max(p.layers, static_cast<std::size_t>(parse_number(row[2], "layer")));
  }
  for (std::size_t s = 0; s < 3; ++s) {
    p.mean[s].assign(p.num_classes, std::nullopt);
    p.count[s].assign(p.num_classes, 0);
  }
  for (const auto& row : rows) {
    std::size_t s = 0;
    while (s < 3 && to_string(kStrata[s]) != row[0]) ++s;
    if (s == 3) throw FormatError("attention CSV: unknown stratum '" + row[0] + "'");
    const auto c = static_cast<std::size_t>(parse_number(row[1], "class"));
    const auto i = static_cast<std::size_t>(parse_number(row[2], "layer")) - 1;
    p.count[s][c] = static_cast<std::size_t>(parse_number(row[4], "count"));
    if (row[3].empty()) continue;
    if (!p.mean[s][c]) p.mean[s][c] = std::vector<double>(p.layers, 0.0);
    (*p.mean[s][c])[i] = parse_number(row[3], "mean");
  }
  return p;
}

std::string samples_csv(const Tensor& alpha, const std::vector<int>& labels, const std::vector<int>& predictions) {
  std::string out = "sample,label,prediction";
  for (std::size_t i = 0; i < alpha.cols(); ++i) out += ",alpha_" + std::to_string(i + 1);
  out += "\n";
  for (std::size_t r = 0; r < alpha.rows(); ++r) {
    out += std::to_string(r) + "," + std::to_string(labels.at(r)) + "," + std::to_string(predictions.at(r));
    for (std::size_t i = 0; i < alpha.cols(); ++i) out += "," + io::format_double(alpha.at(r, i));
    out += "\n";
  }
  return out;
}

std::vector<std::string> export_report(const std::string& dir, const AttentionExport& data,
                                       const std::string& canonical_config) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
  const AttentionStats stats = global_stats(data.alpha);
  const ClasswiseProfile profile = classwise_profiles(data.alpha, data.labels, data.predictions, data.num_classes);

  std::vector<std::string> files{"attn_global.csv", "attn_classwise.csv"};
  io::write_text(dir + "/attn_global.csv", global_csv(stats));
  io::write_text(dir + "/attn_classwise.csv", classwise_csv(profile));
  if (data.include_samples) {
    io::write_text(dir + "/attn_samples.csv", samples_csv(data.alpha, data.labels, data.predictions));
    files.push_back("attn_samples.csv");
  }
  io::Json manifest;
  manifest["config_sha256"] = io::sha256_hex(canonical_config);
  manifest["files"] = files;
  manifest["samples"] = data.alpha.rows();
  manifest["layers"] = data.alpha.cols();
  manifest["num_classes"] = data.num_classes;
  io::write_text(dir + "/attn_manifest.json", io::dump_json(manifest));
  files.push_back("attn_manifest.json");
  return files;
}

}  // namespace laya::analysis
