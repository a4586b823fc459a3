#include "egcm/metrics.hpp"

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "egcm/error.hpp"
#include "egcm/log.hpp"

namespace egcm {

using nlohmann::json;

Confusion confusion_matrix(std::span<const int> labels, std::span<const int> predictions) {
  if (labels.size() != predictions.size()) throw ShapeError("labels and predictions differ in length");
  Confusion c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if ((labels[i] != 0 && labels[i] != 1) || (predictions[i] != 0 && predictions[i] != 1))
      throw InputError("class ids must be 0 or 1");
    ++c.counts[labels[i]][predictions[i]];
  }
  return c;
}

MetricsReport compute_metrics(const Confusion& c) {
  MetricsReport r;
  r.confusion = c;
  for (int k = 0; k < 2; ++k) {
    const double tp = static_cast<double>(c.counts[k][k]);
    const double predicted = static_cast<double>(c.counts[0][k] + c.counts[1][k]);
    const double actual = static_cast<double>(c.counts[k][0] + c.counts[k][1]);
    auto& m = r.per_class[k];
    m.support = c.counts[k][0] + c.counts[k][1];
    if (m.support == 0) warn("class " + std::to_string(k) + " is absent from the evaluated labels; its F1 is 0");
    m.precision = predicted > 0 ? tp / predicted : 0.0;
    m.recall = actual > 0 ? tp / actual : 0.0;
    m.f1 = (m.precision + m.recall) > 0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  }
  r.macro_f1 = (r.per_class[0].f1 + r.per_class[1].f1) / 2.0;
  r.seed_macro_f1 = {r.macro_f1};
  return r;
}

MetricsReport compute_metrics(std::span<const int> labels, std::span<const int> predictions) {
  return compute_metrics(confusion_matrix(labels, predictions));
}

MetricsReport aggregate_reports(std::span<const MetricsReport> runs) {
  if (runs.empty()) throw std::invalid_argument("no runs to aggregate");
  MetricsReport out;
  const double n = static_cast<double>(runs.size());
  for (const auto& r : runs) {
    out.seed_macro_f1.push_back(r.macro_f1);
    out.macro_f1 += r.macro_f1;
    out.wall_seconds += r.wall_seconds;
    for (int k = 0; k < 2; ++k) {
      out.per_class[k].precision += r.per_class[k].precision / n;
      out.per_class[k].recall += r.per_class[k].recall / n;
      out.per_class[k].f1 += r.per_class[k].f1 / n;
      out.per_class[k].support += r.per_class[k].support;
      for (int p = 0; p < 2; ++p) out.confusion.counts[k][p] += r.confusion.counts[k][p];
    }
  }
  out.macro_f1 /= n;
  double var = 0.0;
  for (double f : out.seed_macro_f1) var += (f - out.macro_f1) * (f - out.macro_f1);
  out.macro_f1_std = std::sqrt(var / n);
  out.config_fingerprint = runs.front().config_fingerprint;
  out.variant = runs.front().variant;
  return out;
}

std::string report_to_json(const MetricsReport& r) {
  json j;
  j["macro_f1"] = r.macro_f1;
  j["macro_f1_std"] = r.macro_f1_std;
  j["seed_macro_f1"] = r.seed_macro_f1;
  j["variant"] = r.variant;
  j["config_fingerprint"] = r.config_fingerprint;
  j["wall_seconds"] = r.wall_seconds;
  for (int k = 0; k < 2; ++k) {
    const auto& m = r.per_class[k];
    j["per_class"].push_back(
        {{"class", k}, {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"support", m.support}});
  }
  j["confusion"] = r.confusion.counts;
  return j.dump(2);
}

MetricsReport report_from_json(const std::string& text) {
  MetricsReport r;
  try {
    const json j = json::parse(text);
    r.macro_f1 = j.at("macro_f1").get<double>();
    r.macro_f1_std = j.at("macro_f1_std").get<double>();
    r.seed_macro_f1 = j.at("seed_macro_f1").get<std::vector<double>>();
    r.variant = j.at("variant").get<std::string>();
    r.config_fingerprint = j.at("config_fingerprint").get<std::string>();
    r.wall_seconds = j.at("wall_seconds").get<double>();
    for (int k = 0; k < 2; ++k) {
      const auto& m = j.at("per_class").at(k);
      r.per_class[k] = {m.at("precision").get<double>(), m.at("recall").get<double>(), m.at("f1").get<double>(),
                        m.at("support").get<std::size_t>()};
    }
    r.confusion.counts = j.at("confusion").get<std::array<std::array<std::size_t, 2>, 2>>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("metrics json: ") + e.what());
  }
  return r;
}

std::string report_to_csv(const MetricsReport& r) {
  std::ostringstream os;
  os.precision(17);
  os << "variant,macro_f1,macro_f1_std,seed_count,benign_precision,benign_recall,benign_f1,attack_precision,"
        "attack_recall,attack_f1,tn,fp,fn,tp,wall_seconds\n";
  os << r.variant << ',' << r.macro_f1 << ',' << r.macro_f1_std << ',' << r.seed_macro_f1.size();
  for (const auto& m : r.per_class) os << ',' << m.precision << ',' << m.recall << ',' << m.f1;
  os << ',' << r.confusion.counts[0][0] << ',' << r.confusion.counts[0][1] << ',' << r.confusion.counts[1][0] << ','
     << r.confusion.counts[1][1] << ',' << r.wall_seconds << '\n';
  return os.str();
}

}  // namespace egcm
