// Acceptance suite: one PASS/FAIL line per criterion, with wall time against
// the criterion's ceiling. `acceptance --write-golden` regenerates the frozen
// draft (only for deliberate format changes).
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "detect_oracle.hpp"
#include "rfekit/attackdetect.hpp"
#include "rfekit/corpusgen.hpp"
#include "rfekit/drafting.hpp"
#include "rfekit/ensemble.hpp"
#include "rfekit/error.hpp"
#include "rfekit/evalharness.hpp"
#include "rfekit/io.hpp"
#include "rfekit/linclass.hpp"

using namespace rfekit;
namespace fs = std::filesystem;

namespace {

const fs::path kTmp = fs::path(RFEKIT_TEST_TMP) / "acceptance";
const fs::path kGolden = fs::path(RFEKIT_GOLDEN_DIR) / "rfe_0003_draft.txt";
const std::string kGoldenToday = "2022-01-15";
bool g_write_golden = false;

struct Outcome {
  bool pass;
  std::string detail;
};

int g_failures = 0;

void criterion(int id, const std::string& title, double ceiling_s, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (secs > ceiling_s) {
    o.pass = false;
    o.detail += "; exceeded runtime ceiling";
  }
  if (!o.pass) ++g_failures;
  std::printf("%s criterion %d: %s | %s | %.2fs (ceiling %.0fs)\n", o.pass ? "PASS" : "FAIL", id, title.c_str(),
              o.detail.c_str(), secs, ceiling_s);
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

double round_to(double x, int places) {
  const double k = std::pow(10.0, places);
  return std::round(x * k) / k;
}

Outcome metric_arithmetic() {
  // Every confusion matrix with total 49 whose rounded metrics match the
  // reported accuracy 73.47 %, precision 0.7097 and recall 0.8462.
  std::vector<evalharness::ConfusionCounts> hits;
  for (std::uint64_t tp = 0; tp <= 49; ++tp) {
    for (std::uint64_t fp = 0; tp + fp <= 49; ++fp) {
      for (std::uint64_t fn = 0; tp + fp + fn <= 49; ++fn) {
        const evalharness::ConfusionCounts c{tp, fp, fn, 49 - tp - fp - fn};
        const auto m = evalharness::metrics(c);
        if (round_to(m.accuracy * 100, 2) == 73.47 && round_to(m.precision, 4) == 0.7097 &&
            round_to(m.recall, 4) == 0.8462) {
          hits.push_back(c);
        }
      }
    }
  }
  const evalharness::ConfusionCounts expected{22, 9, 4, 14};
  const bool unique = hits.size() == 1 && hits[0] == expected;
  const auto m = evalharness::metrics(expected);
  const bool close = std::abs(m.accuracy - 0.7347) <= 1e-4 && std::abs(m.precision - 0.7097) <= 1e-4 &&
                     std::abs(m.recall - 0.8462) <= 1e-4 && std::abs(m.f1 - 0.7719) <= 1e-4;
  return {unique && close, fmt("%.0f solution(s); acc %.4f prec %.4f rec %.4f", static_cast<double>(hits.size()),
                               m.accuracy, m.precision, m.recall) +
                               fmt(" f1 %.4f", m.f1)};
}

Outcome table_arithmetic() {
  std::vector<std::pair<std::string, std::string>> outcomes;
  for (int i = 0; i < 33; ++i) outcomes.emplace_back("I-797 Approval", "I-797 Approval");
  for (int i = 0; i < 69; ++i) outcomes.emplace_back("I-797 Receipt", "I-797 Receipt");
  for (int i = 0; i < 2; ++i) outcomes.emplace_back("I-797 Receipt", "I-797 Approval");
  const auto t = evalharness::tabulate({"I-797 Approval", "I-797 Receipt"}, outcomes);
  auto row_ok = [](const evalharness::ClassRow& r, std::size_t n, std::size_t c, const char* pct) {
    return r.count == n && r.correct == c && evalharness::format_percent(r.accuracy()) == pct;
  };
  const bool ok = row_ok(t.overall, 104, 102, "98.08") && row_ok(t.classes[0], 33, 33, "100") &&
                  row_ok(t.classes[1], 71, 69, "97.18");
  std::string rendered = evalharness::format_table(t);
  for (auto& ch : rendered) {
    if (ch == '\n') ch = ';';
  }
  return {ok, rendered};
}

linclass::ClassDistribution dist(std::vector<double> p) {
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < p.size(); ++i) labels.push_back("c" + std::to_string(i));
  return linclass::ClassDistribution(linclass::ClassSet(labels), std::move(p));
}

Outcome ensemble_suite() {
  int failures = 0;
  auto expect = [&](bool cond) { failures += cond ? 0 : 1; };
  std::mt19937 gen(123);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = 2 + gen() % 4;
    std::vector<double> a(n), b(n);
    double sa = 0, sb = 0;
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = u(gen);
      b[i] = u(gen);
      sa += a[i];
      sb += b[i];
    }
    for (std::size_t i = 0; i < n; ++i) {
      a[i] /= sa;
      b[i] /= sb;
    }
    const auto p = dist(a), q = dist(b);
    const auto t = ensemble::fuse(p, q);
    double sum = 0;
    for (double v : t.fused.probs()) {
      expect(v >= 0.0 && v <= 1.0);
      sum += v;
    }
    expect(std::abs(sum - 1.0) <= 1e-9);
    const double h = ensemble::entropy(p);
    expect(h >= 0.0 && h <= std::log2(static_cast<double>(n)) + 1e-12);
    if (p.argmax() == q.argmax()) expect(t.fused.argmax() == p.argmax());
    const auto same = ensemble::fuse(p, p);
    expect(same.fused.probs() == p.probs());
  }
  expect(ensemble::confidence(0.0) == 1000.0);
  const auto d = ensemble::fuse(dist({0.9, 0.1}), dist({0.5, 0.5}));
  // Independent scalar oracle for the weighted fusion.
  const double h_img = -(0.9 * std::log2(0.9) + 0.1 * std::log2(0.1));
  const double w_img = 1.0 / h_img, w_txt = 1.0;
  const double oracle0 = (w_img * 0.9 + w_txt * 0.5) / (w_img + w_txt);
  expect(std::abs(d.fused[0] - oracle0) <= 1e-12);
  expect(std::abs(d.fused[0] - 0.7723) <= 1e-4 && std::abs(d.fused[1] - 0.2277) <= 1e-4);
  return {failures == 0, fmt("fused (%.4f, %.4f); %.0f property violations", d.fused[0], d.fused[1],
                             static_cast<double>(failures))};
}

Outcome gradient_check() {
  std::mt19937 gen(2718);
  std::normal_distribution<double> nd;
  double worst = 0.0;
  const int instances = 150;
  for (int trial = 0; trial < instances; ++trial) {
    const std::size_t n_classes = 2 + gen() % 2, dim = 1 + gen() % 5;
    std::vector<std::string> labels;
    for (std::size_t c = 0; c < n_classes; ++c) labels.push_back("k" + std::to_string(c));
    auto m = linclass::LinearModel::zeros(linclass::ClassSet(labels), dim, linclass::FeatureKind::dense, "");
    for (auto& w : m.weights) w = nd(gen);
    std::vector<linclass::LabeledExample> batch(1 + gen() % 6);
    for (auto& ex : batch) {
      std::vector<double> x(dim);
      for (auto& v : x) v = nd(gen);
      ex = {x, labels[gen() % n_classes]};
    }
    const double l2 = 0.01 * static_cast<double>(gen() % 3);
    const auto g = linclass::loss_and_gradient(m, batch, l2).gradient;
    for (std::size_t i = 0; i < m.weights.size(); ++i) {
      auto plus = m, minus = m;
      plus.weights[i] += 1e-5;
      minus.weights[i] -= 1e-5;
      const double num = (linclass::loss_and_gradient(plus, batch, l2).loss -
                          linclass::loss_and_gradient(minus, batch, l2).loss) / 2e-5;
      worst = std::max(worst, std::abs(num - g[i]) / std::max(1.0, std::abs(num) + std::abs(g[i])));
    }
  }
  return {worst < 1e-4, fmt("%.0f instances, max relative error %.2e", instances, worst)};
}

const fs::path& seed42_corpus() {
  static const fs::path dir = [] {
    const fs::path d = kTmp / "seed42";
    fs::remove_all(d);
    corpusgen::generate_corpus(corpusgen::CorpusConfig{}, d);
    return d;
  }();
  return dir;
}

Outcome document_classification() {
  const auto corpus = corpusgen::load_documents(seed42_corpus(), corpusgen::TextChannel::degraded);
  std::vector<ensemble::TrainingDocument> train;
  std::vector<corpusgen::CorpusDocument> test;
  for (const auto& d : corpus.documents) {
    if (d.train) train.push_back({&d.doc, d.label});
    else test.push_back(d);
  }
  const auto clf = ensemble::train_document_classifier(train, linclass::ClassSet(corpus.classes), {});
  const auto eval = evalharness::evaluate_documents(clf, corpus.classes, test);
  const double acc = eval.ensemble.overall.accuracy();
  const double best_single = std::max(eval.image_only_accuracy, eval.text_only_accuracy);
  const auto& doc0 = corpus.documents.front();
  const bool doc0_ok = clf.classify(doc0.doc).predicted == doc0.label;
  const bool ok = acc >= 0.95 && acc >= best_single - 0.02 && doc0_ok && train.size() == 160 && test.size() == 40;
  return {ok, fmt("test n=%.0f ensemble %.4f image-only %.4f text-only %.4f", static_cast<double>(test.size()), acc,
                  eval.image_only_accuracy, eval.text_only_accuracy) +
                  (doc0_ok ? "; doc_0000 correct" : "; doc_0000 WRONG")};
}

Outcome attack_detection() {
  const auto& dir = seed42_corpus();
  const auto bank = attackdetect::ExampleBank::parse(read_file(dir / "bank.json"));
  const auto rfes = corpusgen::load_rfes(dir);
  const auto e = evalharness::evaluate_attacks(bank, 0.6, rfes, "specialty_occupation");
  const bool ok = rfes.size() == 49 && e.metrics.recall >= 0.85 && e.metrics.precision >= 0.70;
  return {ok, fmt("TP %.0f FP %.0f FN %.0f TN %.0f", static_cast<double>(e.counts.tp), static_cast<double>(e.counts.fp),
                  static_cast<double>(e.counts.fn), static_cast<double>(e.counts.tn)) +
                  fmt("; precision %.4f recall %.4f", e.metrics.precision, e.metrics.recall)};
}

Outcome detection_oracle() {
  std::mt19937 gen(4096);
  int mismatches = 0, boundary = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto inst = oracle::random_instance(gen);
    if (inst.tau == 0.0 || inst.tau == 1.0) ++boundary;
    const auto expected = oracle::run(inst.sentences, inst.bank, inst.tau);
    const auto m = attackdetect::similarity_matrix(inst.sentences, inst.bank);
    const auto r = attackdetect::detect_attacks(m, inst.bank, inst.tau);
    std::vector<std::pair<std::size_t, std::size_t>> got;
    for (const auto& e : r.evidence) got.emplace_back(e.sentence, e.example);
    std::sort(got.begin(), got.end());
    if (r.detected != expected.detected || got != expected.evidence) ++mismatches;
  }
  // A 3-sentence RFE against the seed-42 bank, dense matrix to 1e-9.
  const auto bank = attackdetect::ExampleBank::parse(read_file(seed42_corpus() / "bank.json"));
  const auto rfe = textprep::split_sentences(read_file(seed42_corpus() / "rfes" / "rfe_0003.txt"), bank.stopwords());
  const textprep::SentenceList three(rfe.begin() + 5, rfe.begin() + 8);
  const auto dense = oracle::run(three, bank, 0.6);
  const auto m = attackdetect::similarity_matrix(three, bank);
  double worst = 0;
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t j = 0; j < m.cols; ++j) worst = std::max(worst, std::abs(m.at(i, j) - dense.sims[i][j]));
  }
  return {mismatches == 0 && worst < 1e-9,
          fmt("200 instances (%.0f at tau 0 or 1), %.0f mismatches; bank matrix max diff %.1e", boundary, mismatches,
              worst)};
}

Outcome drafting_determinism() {
  const auto& dir = seed42_corpus();
  const auto manifest = corpusgen::read_manifest(dir);
  const auto& truth = manifest.at("rfes").at(3);
  const std::string rfe_text = read_file(dir / truth.at("text").get<std::string>());
  const auto bank = attackdetect::ExampleBank::parse(read_file(dir / "bank.json"));
  const auto store = drafting::BeneficiaryStore::parse(read_file(dir / "beneficiaries.json"));
  const auto library = drafting::TemplateLibrary::load(dir / "templates");
  drafting::DraftInputs in{&bank, &store, &library, &drafting::PatternSet::builtin(), 0.6,
                           drafting::parse_iso_date(kGoldenToday)};

  // Extraction equals the generator's ground truth.
  const auto f = drafting::extract_fields(rfe_text);
  const auto& gt = truth.at("fields");
  const bool fields_ok = f.case_number == gt.at("case_number").get<std::string>() &&
                         f.employee_name == gt.at("employee_name").get<std::string>() &&
                         f.employer_name == gt.at("employer_name").get<std::string>() &&
                         f.attorney_name == gt.at("attorney_name").get<std::string>() && f.rfe_date &&
                         drafting::iso_date(*f.rfe_date) == gt.at("rfe_date").get<std::string>() &&
                         f.response_due_date &&
                         drafting::iso_date(*f.response_due_date) == gt.at("response_due_date").get<std::string>();

  const auto outcome = drafting::draft_response(rfe_text, in);
  const std::string text = outcome.draft.text();
  if (g_write_golden) write_file_atomic(kGolden, text);
  const bool golden_ok = fs::exists(kGolden) && read_file(kGolden) == text && outcome.draft.complete();
  const bool repeat_ok = drafting::draft_response(rfe_text, in).draft.text() == text;

  // Same run against a store without this case number.
  auto records = store.to_json();
  auto& list = records.at("records");
  for (auto it = list.begin(); it != list.end(); ++it) {
    if ((*it).at("case_number") == gt.at("case_number")) {
      list.erase(it);
      break;
    }
  }
  const auto mutated = drafting::BeneficiaryStore::parse(records.dump());
  in.store = &mutated;
  const auto broken = drafting::draft_response(rfe_text, in);
  const std::vector<std::string> expected_missing = {"degree", "field_of_study", "institution", "soc_code"};
  const bool missing_ok = !broken.draft.complete() && broken.draft.missing == expected_missing &&
                          drafting::manifest_json(broken, bank).at("status") == "incomplete";

  std::string missing;
  for (const auto& m : broken.draft.missing) missing += (missing.empty() ? "" : ",") + m;
  return {fields_ok && golden_ok && repeat_ok && missing_ok,
          std::string("fields ") + (fields_ok ? "match" : "DIFFER") + "; golden " + (golden_ok ? "identical" : "DIFFERS") +
              "; mutated store missing [" + missing + "]"};
}

}  // namespace

int main(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--write-golden") == 0) g_write_golden = true;
  }
  fs::create_directories(kTmp);
  criterion(1, "attack metrics recovered from unique confusion counts", 1, metric_arithmetic);
  criterion(2, "document accuracy table formatting", 1, table_arithmetic);
  criterion(3, "ensemble formula suite", 5, ensemble_suite);
  criterion(4, "gradient check vs central differences", 10, gradient_check);
  criterion(5, "seed-42 document classification (2x100, noise 0.15)", 60, document_classification);
  criterion(6, "seed-42 specialty-occupation detection at tau 0.6", 30, attack_detection);
  criterion(7, "detection matches exhaustive dense oracle", 10, detection_oracle);
  criterion(8, "drafting determinism vs golden file", 5, drafting_determinism);
  std::printf("NOTE criterion 9: human timing studies are out of scope; runtime ceilings above stand in\n");
  std::printf("%s: %d criterion failure(s)\n", g_failures ? "FAILED" : "OK", g_failures);
  return g_failures ? 1 : 0;
}
