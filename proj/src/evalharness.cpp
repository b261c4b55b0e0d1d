#include "rfekit/evalharness.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

#include "rfekit/error.hpp"
#include "rfekit/io.hpp"

namespace rfekit::evalharness {

using nlohmann::json;

namespace {

double ratio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::string pad_right(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string pad_left(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

}  // namespace

Metrics metrics(const ConfusionCounts& c) {
  if (c.total() == 0) throw Error(Errc::empty_input, "metrics need at least one counted outcome");
  Metrics m;
  m.accuracy = ratio(c.tp + c.tn, c.total());
  m.precision = ratio(c.tp, c.tp + c.fp);
  m.recall = ratio(c.tp, c.tp + c.fn);
  m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

std::string format_percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", fraction * 100.0);
  std::string s = buf;
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

AccuracyTable tabulate(const std::vector<std::string>& classes,
                       const std::vector<std::pair<std::string, std::string>>& outcomes) {
  AccuracyTable table;
  table.overall.label = "All";
  std::map<std::string, std::size_t> row_of;
  for (const auto& c : classes) {
    row_of.emplace(c, table.classes.size());
    table.classes.push_back(ClassRow{c, 0, 0});
  }
  for (const auto& [truth, predicted] : outcomes) {
    auto it = row_of.find(truth);
    if (it == row_of.end()) throw Error(Errc::invalid_argument, "unknown ground-truth label '" + truth + "'");
    if (!row_of.count(predicted)) {
      throw Error(Errc::invalid_argument, "unknown predicted label '" + predicted + "'");
    }
    auto& row = table.classes[it->second];
    ++row.count;
    ++table.overall.count;
    if (truth == predicted) {
      ++row.correct;
      ++table.overall.correct;
    }
  }
  return table;
}

std::string format_table(const AccuracyTable& table) {
  std::vector<const ClassRow*> rows = {&table.overall};
  for (const auto& r : table.classes) rows.push_back(&r);
  const std::string h0 = "Document type", h1 = "Count", h2 = "Correct", h3 = "Accuracy (%)";
  std::size_t w0 = h0.size();
  for (const auto* r : rows) w0 = std::max(w0, r->label.size());
  std::string out = pad_right(h0, w0) + "  " + h1 + "  " + h2 + "  " + h3 + "\n";
  for (const auto* r : rows) {
    out += pad_right(r->label, w0) + "  " + pad_left(std::to_string(r->count), h1.size()) + "  " +
           pad_left(std::to_string(r->correct), h2.size()) + "  " +
           pad_left(r->count ? format_percent(r->accuracy()) : "-", h3.size()) + "\n";
  }
  return out;
}

json to_json(const AccuracyTable& table) {
  auto row = [](const ClassRow& r) {
    return json{{"label", r.label},
                {"count", r.count},
                {"correct", r.correct},
                {"accuracy", r.accuracy()},
                {"accuracy_percent", format_percent(r.accuracy())}};
  };
  json classes = json::array();
  for (const auto& r : table.classes) classes.push_back(row(r));
  return {{"overall", row(table.overall)}, {"classes", classes}};
}

DocumentEvaluation evaluate_documents(const ensemble::DocumentClassifier& classifier,
                                      const std::vector<std::string>& corpus_classes,
                                      std::span<const corpusgen::CorpusDocument> docs) {
  if (classifier.image_model.classes.labels() != corpus_classes) {
    throw Error(Errc::invalid_argument, "corpus classes do not match the trained model's class set");
  }
  DocumentEvaluation eval;
  std::vector<std::pair<std::string, std::string>> outcomes;
  std::size_t image_correct = 0, text_correct = 0;
  for (const auto& cd : docs) {
    DocumentPrediction p;
    p.id = cd.doc.id;
    p.truth = cd.label;
    p.ensemble = classifier.classify(cd.doc).predicted;
    p.image_only = classifier.predict_image_only(cd.doc).value_or("");
    p.text_only = classifier.predict_text_only(cd.doc).value_or("");
    if (p.image_only == p.truth) ++image_correct;
    if (p.text_only == p.truth) ++text_correct;
    outcomes.emplace_back(p.truth, p.ensemble);
    eval.predictions.push_back(std::move(p));
  }
  eval.ensemble = tabulate(corpus_classes, outcomes);
  eval.image_only_accuracy = ratio(image_correct, docs.size());
  eval.text_only_accuracy = ratio(text_correct, docs.size());
  return eval;
}

json to_json(const DocumentEvaluation& eval) {
  json preds = json::array();
  for (const auto& p : eval.predictions) {
    preds.push_back({{"id", p.id},
                     {"truth", p.truth},
                     {"ensemble", p.ensemble},
                     {"image_only", p.image_only},
                     {"text_only", p.text_only}});
  }
  return {{"ensemble", to_json(eval.ensemble)},
          {"image_only_accuracy", eval.image_only_accuracy},
          {"text_only_accuracy", eval.text_only_accuracy},
          {"predictions", preds}};
}

AttackEvaluation evaluate_attacks(const attackdetect::ExampleBank& bank, double tau,
                                  std::span<const corpusgen::RfeGroundTruth> rfes,
                                  const std::string& target) {
  if (!bank.attack_index(target)) throw Error(Errc::not_found, "unknown attack id '" + target + "'");
  AttackEvaluation eval;
  eval.target = target;
  eval.tau = tau;
  for (const auto& r : rfes) {
    const auto report = attackdetect::detect_in_text(read_file(r.text_path), bank, tau);
    RfeOutcome o;
    o.id = r.id;
    o.planted = std::find(r.planted_attacks.begin(), r.planted_attacks.end(), target) != r.planted_attacks.end();
    o.detected = report.contains(target);
    o.detected_attacks = report.detected;
    if (o.planted && o.detected) ++eval.counts.tp;
    else if (!o.planted && o.detected) ++eval.counts.fp;
    else if (o.planted) ++eval.counts.fn;
    else ++eval.counts.tn;
    eval.rfes.push_back(std::move(o));
  }
  eval.metrics = metrics(eval.counts);
  return eval;
}

std::string format_attack_metrics(const AttackEvaluation& eval) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "Attack: %s (tau %.3g)\n"
                "TP %llu  FP %llu  FN %llu  TN %llu\n"
                "Prediction accuracy (%%)  %s\n"
                "Precision  %.4f\n"
                "Recall     %.4f\n"
                "F1-score   %.4f\n",
                eval.target.c_str(), eval.tau, static_cast<unsigned long long>(eval.counts.tp),
                static_cast<unsigned long long>(eval.counts.fp), static_cast<unsigned long long>(eval.counts.fn),
                static_cast<unsigned long long>(eval.counts.tn), format_percent(eval.metrics.accuracy).c_str(),
                eval.metrics.precision, eval.metrics.recall, eval.metrics.f1);
  return buf;
}

json to_json(const AttackEvaluation& eval) {
  json rows = json::array();
  for (const auto& r : eval.rfes) {
    rows.push_back({{"id", r.id}, {"planted", r.planted}, {"detected", r.detected}, {"detected_attacks", r.detected_attacks}});
  }
  return {{"target", eval.target},
          {"tau", eval.tau},
          {"counts", {{"tp", eval.counts.tp}, {"fp", eval.counts.fp}, {"fn", eval.counts.fn}, {"tn", eval.counts.tn}}},
          {"metrics",
           {{"accuracy", eval.metrics.accuracy},
            {"precision", eval.metrics.precision},
            {"recall", eval.metrics.recall},
            {"f1", eval.metrics.f1}}},
          {"rfes", rows}};
}

}  // namespace rfekit::evalharness
