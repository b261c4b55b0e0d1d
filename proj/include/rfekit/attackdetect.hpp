#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rfekit/textprep.hpp"
#include "rfekit/vectorspace.hpp"

namespace rfekit::attackdetect {

inline constexpr double kDefaultThreshold = 0.6;

inline const vectorspace::NgramOrders& bank_orders() {
  static const vectorspace::NgramOrders orders{1, 2, 3};
  return orders;
}

struct AttackType {
  std::string id;
  std::string description;
};

struct BankExample {
  std::string sentence;  // as written in the bank file
  textprep::TokenStream tokens;
  std::size_t attack;  // index into ExampleBank::attacks()
};

// Labeled historical sentences in their own TF-IDF space. Immutable after
// construction.
class ExampleBank {
 public:
  struct Entry {
    std::string attack_id;
    std::string sentence;
  };

  // Cleans every sentence with the stopword set, drops sentences that clean
  // to nothing (recorded in warnings()), and fits a 1..3-gram vocabulary on
  // the survivors unless fixed_vocab is supplied.
  static ExampleBank build(std::vector<AttackType> attacks, const std::vector<Entry>& entries,
                           textprep::StopwordSet stopwords = textprep::StopwordSet::builtin(),
                           std::optional<vectorspace::Vocabulary> fixed_vocab = std::nullopt);

  // Bank file format described in docs/FORMATS.md.
  static ExampleBank parse(std::string_view json_text,
                           textprep::StopwordSet stopwords = textprep::StopwordSet::builtin());

  const std::vector<AttackType>& attacks() const { return attacks_; }
  const std::vector<BankExample>& examples() const { return examples_; }
  const std::vector<vectorspace::SparseVector>& vectors() const { return vectors_; }
  const vectorspace::Vocabulary& vocab() const { return vocab_; }
  const textprep::StopwordSet& stopwords() const { return stopwords_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  std::optional<std::size_t> attack_index(std::string_view id) const;

 private:
  ExampleBank(std::vector<AttackType> attacks, std::vector<BankExample> examples,
              vectorspace::Vocabulary vocab, textprep::StopwordSet stopwords,
              std::vector<std::string> warnings);

  std::vector<AttackType> attacks_;
  std::vector<BankExample> examples_;
  vectorspace::Vocabulary vocab_;
  std::vector<vectorspace::SparseVector> vectors_;
  textprep::StopwordSet stopwords_;
  std::vector<std::string> warnings_;
};

// Row i holds cosine similarities of RFE sentence i against every example.
struct SimilarityMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  double at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
};

SimilarityMatrix similarity_matrix(const textprep::SentenceList& rfe_sentences,
                                   const ExampleBank& bank);

struct Evidence {
  std::size_t sentence;
  std::size_t example;
  double similarity;
  bool operator==(const Evidence&) const = default;
};

struct AttackReport {
  std::vector<std::string> detected;  // attack ids in bank declaration order
  std::vector<Evidence> evidence;     // similarity descending, then (sentence, example)
  double threshold = kDefaultThreshold;

  bool contains(std::string_view attack_id) const;
};

// An attack is detected when some matrix entry strictly exceeds tau for one of
// its examples. Every qualifying pair is kept as evidence.
AttackReport detect_attacks(const SimilarityMatrix& matrix, const ExampleBank& bank, double tau);

// Sentence split with the bank's stopwords, then similarity_matrix and
// detect_attacks.
AttackReport detect_in_text(std::string_view rfe_text, const ExampleBank& bank, double tau);

nlohmann::json to_json(const AttackReport& report, const ExampleBank& bank);

}  // namespace rfekit::attackdetect
