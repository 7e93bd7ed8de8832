#pragma once

#include <map>
#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

#include "sgvqa/models/train.hpp"
#include "sgvqa/models/types.hpp"

namespace sgvqa::eval {

struct MetricsReport {
  double overall_accuracy = 0.0;
  std::map<std::string, double> per_semantic_type;  // type name -> accuracy
  std::map<std::string, int> counts_per_type;
  std::string regime;
  uint64_t seed = 0;

  nlohmann::json to_json() const;
  static MetricsReport from_json(const nlohmann::json& j);
};

// Exact-string accuracy after lowercasing and trimming, broken down over the
// five semantic types. Every gold question must have a prediction.
MetricsReport accuracy(const std::vector<models::Prediction>& predictions,
                       const std::vector<models::QuestionSample>& gold,
                       const std::string& regime = "", uint64_t seed = 0);

MetricsReport accuracy_from_file(const std::string& predictions_path,
                                 const std::vector<models::QuestionSample>& gold,
                                 const std::string& regime = "", uint64_t seed = 0);

void write_report(const MetricsReport& report, const std::string& path);
MetricsReport read_report(const std::string& path);

struct Comparison {
  std::vector<MetricsReport> reports;  // sorted by regime label
  std::string table_text;
  std::string table_csv;
};

// Side-by-side table over regimes (duplicate labels rejected) with deltas
// against the first row, plus a grouped per-type bar chart.
Comparison compare_regimes(std::vector<MetricsReport> reports);

void write_comparison(const Comparison& cmp, const std::string& out_dir,
                      const std::string& stem = "comparison");

// Grouped bar chart over semantic types, one bar per regime.
std::string render_bar_chart_svg(const std::vector<MetricsReport>& reports);

}  // namespace sgvqa::eval
