#pragma once

// Report pieces shared by the command-line tools: summary statistics of a
// metric sample, JSON views of results, and dependency-free SVG line charts.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "skillfuse/assess.hpp"
#include "skillfuse/stats.hpp"
#include "skillfuse/trust.hpp"

namespace skillfuse {

// Mean and spread of a sample before and after Tukey outlier removal.
inline nlohmann::json sample_summary(std::span<const double> values) {
  nlohmann::json j;
  auto describe = [](std::span<const double> v) {
    return nlohmann::json{{"n", v.size()},
                          {"mean", mean(v)},
                          {"std", v.size() > 1 ? stddev(v) : 0.0},
                          {"mean_pm_std", mean_pm_std(v)}};
  };
  j["all"] = describe(values);
  if (values.size() >= 4) j["post_tukey"] = describe(tukey_fences(values));
  else j["post_tukey"] = nullptr;
  return j;
}

inline nlohmann::json stat_report_json(const StatReport& r) {
  return {{"n_a", r.n_a},
          {"n_b", r.n_b},
          {"normal_a", r.normal_a},
          {"normal_b", r.normal_b},
          {"shapiro_p_a", r.shapiro_p_a},
          {"shapiro_p_b", r.shapiro_p_b},
          {"test_used", std::string(to_string(r.test_used))},
          {"statistic", r.statistic},
          {"p_value", r.p_value},
          {"significant", r.significant},
          {"direction", std::string(to_string(r.direction))},
          {"alpha", kAlpha}};
}

inline nlohmann::json predictions_json(std::span<const PooledPrediction> preds, HeadKind head) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& p : preds) {
    nlohmann::json r{{"trial_id", p.trial_id}, {"subject_id", p.subject_id}};
    if (head == HeadKind::classify) {
      r["true_label"] = p.true_label;
      r["predicted_class"] = p.predicted_class;
      r["confidence"] = p.confidence;
      r["probabilities"] = p.probabilities;
    } else {
      r["true_score"] = p.true_score;
      r["predicted_score"] = p.predicted_score;
    }
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<PredictionRecord> prediction_records_from_json(const nlohmann::json& preds) {
  std::vector<PredictionRecord> out;
  for (const auto& p : preds)
    out.push_back({p.at("trial_id").get<std::string>(), p.at("true_label").get<int>(), p.at("predicted_class").get<int>(),
                   p.at("confidence").get<double>()});
  return out;
}

struct ChartSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

namespace detail {

inline std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string fixed(double v, int digits = 2) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace detail

// 640 x 400 line chart with min/max axis labels and a legend.
inline std::string svg_line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                                  std::span<const ChartSeries> series) {
  constexpr double W = 640, H = 400, L = 70, R = 150, T = 40, B = 50;
  constexpr double inf = std::numeric_limits<double>::infinity();
  double x0 = inf, x1 = -inf, y0 = inf, y1 = -inf;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw std::invalid_argument("svg_line_chart: x and y differ in length");
    for (double v : s.x) x0 = std::min(x0, v), x1 = std::max(x1, v);
    for (double v : s.y) y0 = std::min(y0, v), y1 = std::max(y1, v);
  }
  if (!(x0 <= x1)) x0 = 0, x1 = 1;
  if (!(y0 <= y1)) y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  const auto px = [&](double v) { return L + (v - x0) / (x1 - x0) * (W - L - R); };
  const auto py = [&](double v) { return H - B - (v - y0) / (y1 - y0) * (H - T - B); };
  static constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

  using detail::fixed;
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" font-family=\"sans-serif\" "
                  "font-size=\"12\">\n<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
  s += "<text x=\"" + fixed(W / 2 - R / 2, 1) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" +
       detail::xml_escape(title) + "</text>\n";
  s += "<line x1=\"" + fixed(L, 1) + "\" y1=\"" + fixed(H - B, 1) + "\" x2=\"" + fixed(W - R, 1) + "\" y2=\"" +
       fixed(H - B, 1) + "\" stroke=\"black\"/>\n";
  s += "<line x1=\"" + fixed(L, 1) + "\" y1=\"" + fixed(T, 1) + "\" x2=\"" + fixed(L, 1) + "\" y2=\"" + fixed(H - B, 1) +
       "\" stroke=\"black\"/>\n";
  s += "<text x=\"" + fixed(L, 1) + "\" y=\"" + fixed(H - B + 16, 1) + "\" text-anchor=\"middle\">" + fixed(x0, 3) +
       "</text>\n";
  s += "<text x=\"" + fixed(W - R, 1) + "\" y=\"" + fixed(H - B + 16, 1) + "\" text-anchor=\"middle\">" + fixed(x1, 3) +
       "</text>\n";
  s += "<text x=\"" + fixed(L - 6, 1) + "\" y=\"" + fixed(H - B, 1) + "\" text-anchor=\"end\">" + fixed(y0, 3) + "</text>\n";
  s += "<text x=\"" + fixed(L - 6, 1) + "\" y=\"" + fixed(T + 4, 1) + "\" text-anchor=\"end\">" + fixed(y1, 3) + "</text>\n";
  s += "<text x=\"" + fixed((L + W - R) / 2, 1) + "\" y=\"" + fixed(H - 12, 1) + "\" text-anchor=\"middle\">" +
       detail::xml_escape(x_label) + "</text>\n";
  s += "<text x=\"16\" y=\"" + fixed((T + H - B) / 2, 1) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
       fixed((T + H - B) / 2, 1) + ")\">" + detail::xml_escape(y_label) + "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& sr = series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    s += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < sr.x.size(); ++i) s += (i ? " " : "") + fixed(px(sr.x[i])) + "," + fixed(py(sr.y[i]));
    s += "\"/>\n";
    const double ly = T + 14 + 18 * static_cast<double>(k);
    s += "<line x1=\"" + fixed(W - R + 10, 1) + "\" y1=\"" + fixed(ly - 4, 1) + "\" x2=\"" + fixed(W - R + 30, 1) +
         "\" y2=\"" + fixed(ly - 4, 1) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    s += "<text x=\"" + fixed(W - R + 36, 1) + "\" y=\"" + fixed(ly, 1) + "\">" + detail::xml_escape(sr.name) + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

}  // namespace skillfuse
