/// Classification metrics: accuracy, per-class precision/recall/F1
/// from the confusion matrix, and macro F1 as their unweighted mean.
#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "hfn/core.hpp"

namespace hfn {

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int support = 0;
};

struct MetricsReport {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::vector<std::string> class_order;
  std::map<std::string, ClassMetrics> per_class;
  int n = 0;
  // provenance
  int fold = -1;
  int repetition = -1;
  std::string config_hash;
};

// Per-class precision/recall/F1 over the expected class list. A class
// with zero predicted positives has precision 0; F1 is 0 when both
// precision and recall are 0. Classes absent from preds and truth still
// contribute F1 = 0 to the macro average.
inline MetricsReport compute_metrics(const std::vector<int>& preds, const std::vector<int>& truth,
                                     const std::vector<std::string>& classes) {
  check_contract(preds.size() == truth.size(), "compute_metrics: length mismatch");
  check_contract(!preds.empty(), "compute_metrics: empty input");
  const int c = static_cast<int>(classes.size());
  for (size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] < 0 || preds[i] >= c)
      fail_validation("compute_metrics: prediction value " + std::to_string(preds[i]) +
                      " outside class range");
    if (truth[i] < 0 || truth[i] >= c)
      fail_validation("compute_metrics: truth value " + std::to_string(truth[i]) +
                      " outside class range");
  }
  std::vector<std::vector<int>> confusion(static_cast<size_t>(c),
                                          std::vector<int>(static_cast<size_t>(c), 0));
  int correct = 0;
  for (size_t i = 0; i < preds.size(); ++i) {
    confusion[static_cast<size_t>(truth[i])][static_cast<size_t>(preds[i])]++;
    if (preds[i] == truth[i]) ++correct;
  }
  MetricsReport r;
  r.n = static_cast<int>(preds.size());
  r.accuracy = static_cast<double>(correct) / r.n;
  r.class_order = classes;
  double f1_sum = 0.0;
  for (int k = 0; k < c; ++k) {
    int tp = confusion[static_cast<size_t>(k)][static_cast<size_t>(k)];
    int pred_pos = 0, actual_pos = 0;
    for (int j = 0; j < c; ++j) {
      pred_pos += confusion[static_cast<size_t>(j)][static_cast<size_t>(k)];
      actual_pos += confusion[static_cast<size_t>(k)][static_cast<size_t>(j)];
    }
    ClassMetrics m;
    m.support = actual_pos;
    m.precision = pred_pos > 0 ? static_cast<double>(tp) / pred_pos : 0.0;
    m.recall = actual_pos > 0 ? static_cast<double>(tp) / actual_pos : 0.0;
    m.f1 = (m.precision + m.recall) > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                                          : 0.0;
    f1_sum += m.f1;
    r.per_class[classes[static_cast<size_t>(k)]] = m;
  }
  r.macro_f1 = f1_sum / c;
  return r;
}

inline nlohmann::json metrics_to_json(const MetricsReport& r) {
  nlohmann::json j;
  j["accuracy"] = r.accuracy;
  j["macro_f1"] = r.macro_f1;
  j["n"] = r.n;
  if (r.fold >= 0) j["fold"] = r.fold;
  if (r.repetition >= 0) j["repetition"] = r.repetition;
  if (!r.config_hash.empty()) j["config_hash"] = r.config_hash;
  j["classes"] = nlohmann::json::object();
  for (const auto& name : r.class_order) {
    const ClassMetrics& m = r.per_class.at(name);
    j["classes"][name] = {{"precision", m.precision},
                          {"recall", m.recall},
                          {"f1", m.f1},
                          {"support", m.support}};
  }
  return j;
}

// CSV row layout mirroring the headline results table: accuracy, macro
// F1, then per-class precision/recall/F1 in class order.
inline std::string metrics_csv_header(const std::vector<std::string>& classes,
                                      const std::string& key_column = "name") {
  std::string h = key_column + ",accuracy,macro_f1";
  for (const auto& c : classes) h += "," + c + "_precision," + c + "_recall," + c + "_f1";
  return h;
}

inline std::string metrics_csv_row(const std::string& key, const MetricsReport& r) {
  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return std::string(buf);
  };
  std::string row = key + "," + fmt(r.accuracy) + "," + fmt(r.macro_f1);
  for (const auto& c : r.class_order) {
    const ClassMetrics& m = r.per_class.at(c);
    row += "," + fmt(m.precision) + "," + fmt(m.recall) + "," + fmt(m.f1);
  }
  return row;
}

}  // namespace hfn
