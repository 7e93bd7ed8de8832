#include "sgvqa/eval/metrics.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "sgvqa/core/graph_io.hpp"
#include "sgvqa/util.hpp"

namespace sgvqa::eval {

using Json = nlohmann::json;

// Reference baseline accuracies quoted in report footers for context.
namespace {
constexpr double kReferenceAttn = 0.48;
constexpr double kReferenceConcat = 0.435;

std::string footer_line() {
  std::ostringstream out;
  out << "reference baselines: attn " << kReferenceAttn << ", concat " << kReferenceConcat;
  return out.str();
}
}  // namespace

Json MetricsReport::to_json() const {
  return Json{{"overall_accuracy", overall_accuracy},
              {"per_semantic_type", per_semantic_type},
              {"counts_per_type", counts_per_type},
              {"regime", regime},
              {"seed", seed},
              {"footer", footer_line()}};
}

MetricsReport MetricsReport::from_json(const Json& j) {
  MetricsReport r;
  r.overall_accuracy = j.at("overall_accuracy").get<double>();
  r.per_semantic_type = j.at("per_semantic_type").get<std::map<std::string, double>>();
  r.counts_per_type = j.at("counts_per_type").get<std::map<std::string, int>>();
  r.regime = j.at("regime").get<std::string>();
  r.seed = j.at("seed").get<uint64_t>();
  return r;
}

MetricsReport accuracy(const std::vector<models::Prediction>& predictions,
                       const std::vector<models::QuestionSample>& gold,
                       const std::string& regime, uint64_t seed) {
  std::map<std::string, const models::Prediction*> by_id;
  for (const models::Prediction& p : predictions) by_id[p.question_id] = &p;

  std::vector<std::string> missing;
  for (const models::QuestionSample& s : gold)
    if (!by_id.count(s.question_id)) missing.push_back(s.question_id);
  if (!missing.empty()) {
    std::string joined;
    for (size_t i = 0; i < missing.size() && i < 10; ++i) joined += " " + missing[i];
    fail("accuracy: ", missing.size(), " gold questions without predictions:", joined);
  }

  MetricsReport rep;
  rep.regime = regime;
  rep.seed = seed;
  std::map<std::string, int> correct_per_type;
  for (models::SemanticType t : models::all_semantic_types()) {
    rep.counts_per_type[models::to_string(t)] = 0;
    correct_per_type[models::to_string(t)] = 0;
  }
  int correct = 0;
  for (const models::QuestionSample& s : gold) {
    const std::string type = models::to_string(s.semantic_type);
    rep.counts_per_type[type]++;
    const bool hit =
        to_lower(trim(by_id.at(s.question_id)->answer)) == to_lower(trim(s.answer_text));
    if (hit) {
      ++correct;
      correct_per_type[type]++;
    }
  }
  for (auto& [type, n] : rep.counts_per_type)
    rep.per_semantic_type[type] =
        n == 0 ? 0.0 : static_cast<double>(correct_per_type[type]) / static_cast<double>(n);
  rep.overall_accuracy =
      gold.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(gold.size());
  return rep;
}

MetricsReport accuracy_from_file(const std::string& predictions_path,
                                 const std::vector<models::QuestionSample>& gold,
                                 const std::string& regime, uint64_t seed) {
  return accuracy(models::read_predictions(predictions_path), gold, regime, seed);
}

void write_report(const MetricsReport& report, const std::string& path) {
  core::write_json_file(report.to_json(), path);
}

MetricsReport read_report(const std::string& path) {
  return MetricsReport::from_json(core::parse_json_file(path));
}

Comparison compare_regimes(std::vector<MetricsReport> reports) {
  if (reports.size() < 2) fail("compare_regimes: need at least two reports");
  std::set<std::string> labels;
  for (const MetricsReport& r : reports)
    if (!labels.insert(r.regime).second)
      fail("compare_regimes: duplicate regime label '", r.regime, "'");
  std::sort(reports.begin(), reports.end(),
            [](const MetricsReport& a, const MetricsReport& b) { return a.regime < b.regime; });

  std::vector<std::string> types;
  for (models::SemanticType t : models::all_semantic_types())
    types.push_back(models::to_string(t));

  std::ostringstream text, csv;
  text << std::fixed << std::setprecision(3);
  csv << std::fixed << std::setprecision(6);
  text << std::left << std::setw(28) << "regime" << std::right << std::setw(9) << "overall"
       << std::setw(9) << "delta";
  csv << "regime,overall,delta";
  for (const std::string& t : types) {
    text << std::setw(11) << t;
    csv << ',' << t;
  }
  text << '\n';
  csv << '\n';
  const double base = reports.front().overall_accuracy;
  for (const MetricsReport& r : reports) {
    text << std::left << std::setw(28) << r.regime << std::right << std::setw(9)
         << r.overall_accuracy << std::setw(9) << (r.overall_accuracy - base);
    csv << r.regime << ',' << r.overall_accuracy << ',' << (r.overall_accuracy - base);
    for (const std::string& t : types) {
      const auto it = r.per_semantic_type.find(t);
      const double v = it == r.per_semantic_type.end() ? 0.0 : it->second;
      text << std::setw(11) << v;
      csv << ',' << v;
    }
    text << '\n';
    csv << '\n';
  }
  text << footer_line() << '\n';
  csv << "# " << footer_line() << '\n';

  Comparison cmp;
  cmp.reports = std::move(reports);
  cmp.table_text = text.str();
  cmp.table_csv = csv.str();
  return cmp;
}

std::string render_bar_chart_svg(const std::vector<MetricsReport>& reports) {
  std::vector<std::string> types;
  for (models::SemanticType t : models::all_semantic_types())
    types.push_back(models::to_string(t));

  const int bar_w = 18, group_gap = 30;
  const int group_w = static_cast<int>(reports.size()) * bar_w + group_gap;
  const int width = 80 + group_w * static_cast<int>(types.size());
  const int height = 320, plot_h = 240, base_y = 280;
  static const char* palette[] = {"#4C78A8", "#F58518", "#54A24B", "#E45756",
                                  "#72B7B2", "#B279A2", "#9D755D", "#EECA3B"};

  std::ostringstream svg;
  svg << std::fixed << std::setprecision(2);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const double frac = tick / 4.0;
    const double y = base_y - frac * plot_h;
    svg << "<line x1=\"50\" y1=\"" << y << "\" x2=\"" << width - 10 << "\" y2=\"" << y
        << "\" stroke=\"#ddd\"/>\n";
    svg << "<text x=\"44\" y=\"" << y + 4 << "\" font-size=\"11\" text-anchor=\"end\">" << frac
        << "</text>\n";
  }
  for (size_t ti = 0; ti < types.size(); ++ti) {
    const int gx = 60 + static_cast<int>(ti) * group_w;
    for (size_t ri = 0; ri < reports.size(); ++ri) {
      const auto it = reports[ri].per_semantic_type.find(types[ti]);
      const double v = it == reports[ri].per_semantic_type.end() ? 0.0 : it->second;
      const double h = v * plot_h;
      svg << "<rect x=\"" << gx + static_cast<int>(ri) * bar_w << "\" y=\"" << base_y - h
          << "\" width=\"" << bar_w - 2 << "\" height=\"" << h << "\" fill=\""
          << palette[ri % 8] << "\"/>\n";
    }
    svg << "<text x=\"" << gx + group_w / 2 - group_gap / 2 << "\" y=\"" << base_y + 16
        << "\" font-size=\"12\" text-anchor=\"middle\">" << types[ti] << "</text>\n";
  }
  for (size_t ri = 0; ri < reports.size(); ++ri) {
    const int ly = 20 + static_cast<int>(ri) * 16;
    svg << "<rect x=\"" << width - 190 << "\" y=\"" << ly - 10
        << "\" width=\"12\" height=\"12\" fill=\"" << palette[ri % 8] << "\"/>\n";
    svg << "<text x=\"" << width - 172 << "\" y=\"" << ly << "\" font-size=\"12\">"
        << reports[ri].regime << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void write_comparison(const Comparison& cmp, const std::string& out_dir,
                      const std::string& stem) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  {
    std::ofstream out(fs::path(out_dir) / (stem + ".txt"));
    out << cmp.table_text;
  }
  {
    std::ofstream out(fs::path(out_dir) / (stem + ".csv"));
    out << cmp.table_csv;
  }
  {
    std::ofstream out(fs::path(out_dir) / (stem + ".svg"));
    out << render_bar_chart_svg(cmp.reports);
  }
}

}  // namespace sgvqa::eval
