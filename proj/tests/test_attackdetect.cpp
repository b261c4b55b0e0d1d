#include <doctest.h>

#include <algorithm>
#include <functional>
#include <numeric>
#include <random>

#include "detect_oracle.hpp"
#include "rfekit/attackdetect.hpp"
#include "rfekit/error.hpp"

using namespace rfekit;
using namespace rfekit::attackdetect;
using textprep::SentenceList;
using textprep::StopwordSet;

namespace {

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected rfekit::Error");
  return Errc::invalid_argument;
}

const char* kBankJson = R"({
  "format": "rfekit-bank", "version": 1,
  "attacks": [
    {"id": "specialty_occupation", "description": "Specialty occupation",
     "sentences": ["The position does not qualify as a specialty occupation.",
                   "A bachelor's degree in a specific specialty is not normally required.",
                   "The duties are not so specialized and complex."]},
    {"id": "maintenance_of_status", "description": "Maintenance of status",
     "sentences": ["Submit evidence of lawful nonimmigrant status.",
                   "Provide recent pay statements and Form W-2.",
                   "Provide the Form I-94 arrival record."]}
  ]})";

ExampleBank sample_bank() { return ExampleBank::parse(kBankJson); }

SimilarityMatrix matrix_of(std::size_t rows, std::size_t cols, std::vector<double> v) {
  return SimilarityMatrix{rows, cols, std::move(v)};
}

}  // namespace

TEST_CASE("bank loading") {
  const auto bank = sample_bank();
  CHECK(bank.attacks().size() == 2);
  CHECK(bank.examples().size() == 6);
  CHECK(bank.vectors().size() == 6);
  CHECK(bank.warnings().empty());
  CHECK(bank.attack_index("maintenance_of_status") == 1u);
}

TEST_CASE("bank errors and warnings") {
  CHECK(code_of([] { ExampleBank::parse(""); }) == Errc::empty_input);
  CHECK(code_of([] { ExampleBank::parse("{"); }) == Errc::parse_error);
  CHECK(code_of([] { ExampleBank::parse(R"({"format":"rfekit-bank","version":2,"attacks":[]})"); }) ==
        Errc::version_mismatch);
  CHECK(code_of([] { ExampleBank::parse(R"({"format":"rfekit-bank","version":1,"attacks":[]})"); }) ==
        Errc::empty_input);
  CHECK(code_of([] {
          ExampleBank::parse(R"({"format":"rfekit-bank","version":1,"attacks":[
            {"id":"a","description":"","sentences":["x y"]},
            {"id":"a","description":"","sentences":["z"]}]})");
        }) == Errc::duplicate_key);

  const auto bank = ExampleBank::parse(R"({"format":"rfekit-bank","version":1,"attacks":[
      {"id":"a","description":"","sentences":["the of and", "real words here"]}]})");
  CHECK(bank.examples().size() == 1);
  CHECK(bank.warnings().size() == 1);
  CHECK(code_of([] {
          ExampleBank::parse(R"({"format":"rfekit-bank","version":1,"attacks":[
            {"id":"a","description":"","sentences":["real"]},
            {"id":"b","description":"","sentences":["the", "!!!"]}]})");
        }) == Errc::invalid_argument);
  CHECK(code_of([] {
          ExampleBank::build({{"a", ""}}, {{"b", "words"}}, StopwordSet::builtin());
        }) == Errc::not_found);
}

TEST_CASE("similarity matrix examples") {
  const auto bank = sample_bank();
  const auto& sw = bank.stopwords();
  const auto sentences =
      textprep::split_sentences("The position does not qualify as a specialty occupation.\nzebra quantum", sw);
  const auto m = similarity_matrix(sentences, bank);
  CHECK(m.rows == 2);
  CHECK(m.cols == 6);
  CHECK(std::abs(m.at(0, 0) - 1.0) < 1e-9);
  for (std::size_t j = 0; j < 6; ++j) CHECK(m.at(1, j) == 0.0);
  const auto empty = similarity_matrix({}, bank);
  CHECK(empty.rows == 0);
  CHECK(empty.cols == 6);
  CHECK(empty.values.empty());
}

TEST_CASE("detect_attacks examples") {
  const auto bank = sample_bank();
  // Examples 0..2 belong to specialty_occupation, 3..5 to maintenance_of_status.
  SUBCASE("a 1.0 entry detects") {
    const auto r = detect_attacks(matrix_of(1, 6, {0.1, 1.0, 0.0, 0.2, 0.0, 0.0}), bank, 0.6);
    CHECK(r.detected == std::vector<std::string>{"specialty_occupation"});
    CHECK(r.contains("specialty_occupation"));
  }
  SUBCASE("strict inequality at the threshold") {
    const auto r = detect_attacks(matrix_of(1, 6, {0.6, 0.5, 0.6, 0.6, 0.0, 0.3}), bank, 0.6);
    CHECK(r.detected.empty());
    CHECK(r.evidence.empty());
  }
  SUBCASE("an attack hit twice appears once with both evidence pairs") {
    const auto r = detect_attacks(matrix_of(2, 6, {0.7, 0, 0, 0, 0, 0, 0, 0, 0.9, 0, 0, 0.65}), bank, 0.6);
    CHECK(r.detected == std::vector<std::string>{"specialty_occupation", "maintenance_of_status"});
    REQUIRE(r.evidence.size() == 3);
    CHECK(r.evidence[0] == Evidence{1, 2, 0.9});
    CHECK(r.evidence[1] == Evidence{0, 0, 0.7});
    CHECK(r.evidence[2] == Evidence{1, 5, 0.65});
  }
  SUBCASE("threshold out of range") {
    CHECK(code_of([&] { detect_attacks(matrix_of(0, 6, {}), bank, 1.5); }) == Errc::invalid_argument);
    CHECK(code_of([&] { detect_attacks(matrix_of(0, 6, {}), bank, -0.1); }) == Errc::invalid_argument);
  }
  SUBCASE("matrix shape mismatch") {
    CHECK(code_of([&] { detect_attacks(matrix_of(1, 2, {0.0, 0.0}), bank, 0.5); }) == Errc::dimension_mismatch);
  }
}

TEST_CASE("detection matches the dense oracle on random instances") {
  std::mt19937 gen(77);
  for (int trial = 0; trial < 300; ++trial) {
    const auto inst = oracle::random_instance(gen);
    const auto expected = oracle::run(inst.sentences, inst.bank, inst.tau);
    const auto m = similarity_matrix(inst.sentences, inst.bank);
    for (std::size_t i = 0; i < m.rows; ++i) {
      for (std::size_t j = 0; j < m.cols; ++j) CHECK(std::abs(m.at(i, j) - expected.sims[i][j]) < 1e-9);
    }
    const auto report = detect_attacks(m, inst.bank, inst.tau);
    CHECK(report.detected == expected.detected);
    std::vector<std::pair<std::size_t, std::size_t>> got;
    for (const auto& e : report.evidence) got.emplace_back(e.sentence, e.example);
    std::sort(got.begin(), got.end());
    CHECK(got == expected.evidence);
  }
}

TEST_CASE("detected set shrinks as tau grows") {
  std::mt19937 gen(12);
  for (int trial = 0; trial < 100; ++trial) {
    const auto inst = oracle::random_instance(gen);
    const auto m = similarity_matrix(inst.sentences, inst.bank);
    std::vector<std::string> previous;
    bool first = true;
    for (double tau = 0.0; tau <= 1.0; tau += 0.05) {
      const auto r = detect_attacks(m, inst.bank, tau);
      if (!first) {
        for (const auto& id : r.detected) {
          CHECK(std::find(previous.begin(), previous.end(), id) != previous.end());
        }
      }
      previous = r.detected;
      first = false;
    }
  }
}

TEST_CASE("permuting RFE sentences leaves the detected set unchanged") {
  std::mt19937 gen(13);
  for (int trial = 0; trial < 100; ++trial) {
    auto inst = oracle::random_instance(gen);
    const auto base = detect_attacks(similarity_matrix(inst.sentences, inst.bank), inst.bank, inst.tau);
    std::vector<std::size_t> perm(inst.sentences.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), gen);
    SentenceList shuffled;
    for (std::size_t p : perm) shuffled.push_back(inst.sentences[p]);
    const auto r = detect_attacks(similarity_matrix(shuffled, inst.bank), inst.bank, inst.tau);
    CHECK(r.detected == base.detected);
    REQUIRE(r.evidence.size() == base.evidence.size());
    std::vector<std::pair<std::size_t, std::size_t>> mapped, orig;
    for (const auto& e : r.evidence) mapped.emplace_back(perm[e.sentence], e.example);
    for (const auto& e : base.evidence) orig.emplace_back(e.sentence, e.example);
    std::sort(mapped.begin(), mapped.end());
    std::sort(orig.begin(), orig.end());
    CHECK(mapped == orig);
  }
}

TEST_CASE("adding examples under a fixed vocabulary never removes a detection") {
  std::mt19937 gen(14);
  const StopwordSet none;
  for (int trial = 0; trial < 100; ++trial) {
    auto inst = oracle::random_instance(gen);
    std::vector<AttackType> attacks = inst.bank.attacks();
    std::vector<ExampleBank::Entry> entries;
    for (const auto& e : inst.bank.examples()) entries.push_back({attacks[e.attack].id, e.sentence});
    const auto small = ExampleBank::build(attacks, entries, none, inst.bank.vocab());
    for (int k = 0; k < 3; ++k) {
      entries.push_back({attacks[gen() % attacks.size()].id, oracle::join(oracle::random_tokens(gen, 1))});
    }
    const auto large = ExampleBank::build(attacks, entries, none, inst.bank.vocab());
    const auto a = detect_attacks(similarity_matrix(inst.sentences, small), small, inst.tau);
    const auto b = detect_attacks(similarity_matrix(inst.sentences, large), large, inst.tau);
    for (const auto& id : a.detected) CHECK(b.contains(id));
  }
}

TEST_CASE("detect_in_text and report json") {
  const auto bank = sample_bank();
  const auto r = detect_in_text("Header\nProvide the Form I-94 arrival record.\n", bank, 0.6);
  CHECK(r.detected == std::vector<std::string>{"maintenance_of_status"});
  CHECK(r.threshold == 0.6);
  const auto j = to_json(r, bank);
  CHECK(j.at("detected").size() == 1);
  CHECK(detect_in_text("", bank, 0.6).detected.empty());
  CHECK(detect_in_text("Provide the Form I-94 arrival record.", bank, 1.0).detected.empty());
}
