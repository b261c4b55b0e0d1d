#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "rfekit/attackdetect.hpp"
#include "rfekit/corpusgen.hpp"
#include "rfekit/ensemble.hpp"

namespace rfekit::evalharness {

struct ConfusionCounts {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::uint64_t total() const { return tp + fp + fn + tn; }
  bool operator==(const ConfusionCounts&) const = default;
};

struct Metrics {
  double accuracy = 0, precision = 0, recall = 0, f1 = 0;
};

// Zero denominators give 0. Throws empty_input when all counts are zero.
Metrics metrics(const ConfusionCounts& c);

// Percent with two decimals, trailing zeros trimmed: 1.0 -> "100",
// 102/104 -> "98.08".
std::string format_percent(double fraction);

struct ClassRow {
  std::string label;
  std::size_t count = 0;
  std::size_t correct = 0;
  double accuracy() const { return count ? static_cast<double>(correct) / static_cast<double>(count) : 0.0; }
};

// Overall row first ("All"), then one row per class in class order.
struct AccuracyTable {
  ClassRow overall;
  std::vector<ClassRow> classes;
};

// (truth, predicted) pairs; labels outside classes are rejected.
AccuracyTable tabulate(const std::vector<std::string>& classes,
                       const std::vector<std::pair<std::string, std::string>>& outcomes);

// Aligned plain text: Document type / Count / Correct / Accuracy (%).
std::string format_table(const AccuracyTable& table);
nlohmann::json to_json(const AccuracyTable& table);

struct DocumentPrediction {
  std::string id;
  std::string truth;
  std::string ensemble;
  std::string image_only;  // empty when the branch had no input
  std::string text_only;
};

struct DocumentEvaluation {
  AccuracyTable ensemble;
  double image_only_accuracy = 0;
  double text_only_accuracy = 0;
  std::vector<DocumentPrediction> predictions;
};

// Evaluates the given documents; class-set mismatch is invalid_argument.
DocumentEvaluation evaluate_documents(const ensemble::DocumentClassifier& classifier,
                                      const std::vector<std::string>& corpus_classes,
                                      std::span<const corpusgen::CorpusDocument> docs);

nlohmann::json to_json(const DocumentEvaluation& eval);

struct RfeOutcome {
  std::string id;
  bool planted = false;
  bool detected = false;
  std::vector<std::string> detected_attacks;
};

struct AttackEvaluation {
  std::string target;
  double tau = 0;
  ConfusionCounts counts;
  Metrics metrics;
  std::vector<RfeOutcome> rfes;
};

// One binary decision per RFE: target attack present or absent.
AttackEvaluation evaluate_attacks(const attackdetect::ExampleBank& bank, double tau,
                                  std::span<const corpusgen::RfeGroundTruth> rfes,
                                  const std::string& target);

std::string format_attack_metrics(const AttackEvaluation& eval);
nlohmann::json to_json(const AttackEvaluation& eval);

}  // namespace rfekit::evalharness
