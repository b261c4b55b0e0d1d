#include "rfekit/attackdetect.hpp"

#include <algorithm>
#include <set>

#include "rfekit/error.hpp"

namespace rfekit::attackdetect {

ExampleBank::ExampleBank(std::vector<AttackType> attacks, std::vector<BankExample> examples,
                         vectorspace::Vocabulary vocab, textprep::StopwordSet stopwords,
                         std::vector<std::string> warnings)
    : attacks_(std::move(attacks)),
      examples_(std::move(examples)),
      vocab_(std::move(vocab)),
      stopwords_(std::move(stopwords)),
      warnings_(std::move(warnings)) {
  vectors_.reserve(examples_.size());
  for (const auto& ex : examples_) vectors_.push_back(vectorspace::tfidf_vector(ex.tokens, vocab_));
}

ExampleBank ExampleBank::build(std::vector<AttackType> attacks, const std::vector<Entry>& entries,
                               textprep::StopwordSet stopwords,
                               std::optional<vectorspace::Vocabulary> fixed_vocab) {
  if (attacks.empty() || entries.empty()) {
    throw Error(Errc::empty_input, "example bank is empty");
  }
  std::set<std::string> ids;
  for (const auto& a : attacks) {
    if (a.id.empty()) throw Error(Errc::invalid_argument, "attack id must be non-empty");
    if (!ids.insert(a.id).second) throw Error(Errc::duplicate_key, "duplicate attack id '" + a.id + "'");
  }
  auto index_of = [&](const std::string& id) -> std::size_t {
    for (std::size_t i = 0; i < attacks.size(); ++i) {
      if (attacks[i].id == id) return i;
    }
    throw Error(Errc::not_found, "example references undeclared attack '" + id + "'");
  };

  std::vector<BankExample> examples;
  std::vector<std::string> warnings;
  std::vector<std::size_t> survivors(attacks.size(), 0);
  for (const auto& e : entries) {
    const std::size_t attack = index_of(e.attack_id);
    auto tokens = textprep::clean_tokens(textprep::tokenize(textprep::normalize(e.sentence)), stopwords);
    if (tokens.empty()) {
      warnings.push_back("dropped example for '" + e.attack_id + "' with no content tokens: \"" +
                         e.sentence + "\"");
      continue;
    }
    ++survivors[attack];
    examples.push_back({e.sentence, std::move(tokens), attack});
  }
  for (std::size_t i = 0; i < attacks.size(); ++i) {
    if (survivors[i] == 0) {
      throw Error(Errc::invalid_argument, "attack '" + attacks[i].id + "' has no usable example sentences");
    }
  }

  vectorspace::Vocabulary vocab = [&] {
    if (fixed_vocab) return std::move(*fixed_vocab);
    std::vector<textprep::TokenStream> corpus;
    corpus.reserve(examples.size());
    for (const auto& ex : examples) corpus.push_back(ex.tokens);
    return vectorspace::Vocabulary::fit(corpus, bank_orders());
  }();
  return ExampleBank(std::move(attacks), std::move(examples), std::move(vocab), std::move(stopwords),
                     std::move(warnings));
}

ExampleBank ExampleBank::parse(std::string_view json_text, textprep::StopwordSet stopwords) {
  if (json_text.find_first_not_of(" \t\r\n") == std::string_view::npos) {
    throw Error(Errc::empty_input, "example bank file is empty");
  }
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, std::string("example bank: ") + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != "rfekit-bank") {
      throw Error(Errc::parse_error, "example bank: wrong format tag");
    }
    if (doc.at("version").get<int>() != 1) {
      throw Error(Errc::version_mismatch, "example bank: unsupported version");
    }
    std::vector<AttackType> attacks;
    std::vector<Entry> entries;
    for (const auto& a : doc.at("attacks")) {
      attacks.push_back({a.at("id").get<std::string>(), a.value("description", std::string())});
      for (const auto& s : a.at("sentences")) entries.push_back({attacks.back().id, s.get<std::string>()});
    }
    return build(std::move(attacks), entries, std::move(stopwords));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, std::string("example bank: ") + e.what());
  }
}

std::optional<std::size_t> ExampleBank::attack_index(std::string_view id) const {
  for (std::size_t i = 0; i < attacks_.size(); ++i) {
    if (attacks_[i].id == id) return i;
  }
  return std::nullopt;
}

SimilarityMatrix similarity_matrix(const textprep::SentenceList& rfe_sentences,
                                   const ExampleBank& bank) {
  SimilarityMatrix m;
  m.rows = rfe_sentences.size();
  m.cols = bank.vectors().size();
  m.values.reserve(m.rows * m.cols);
  for (const auto& sentence : rfe_sentences) {
    const auto v = vectorspace::tfidf_vector(sentence, bank.vocab());
    for (const auto& ex : bank.vectors()) m.values.push_back(vectorspace::cosine(v, ex));
  }
  return m;
}

bool AttackReport::contains(std::string_view attack_id) const {
  return std::find(detected.begin(), detected.end(), attack_id) != detected.end();
}

AttackReport detect_attacks(const SimilarityMatrix& matrix, const ExampleBank& bank, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) {
    throw Error(Errc::invalid_argument, "threshold must lie in [0, 1]");
  }
  if (matrix.cols != bank.examples().size() || matrix.values.size() != matrix.rows * matrix.cols) {
    throw Error(Errc::dimension_mismatch, "similarity matrix does not match the example bank");
  }
  AttackReport report;
  report.threshold = tau;
  std::vector<bool> hit(bank.attacks().size(), false);
  for (std::size_t i = 0; i < matrix.rows; ++i) {
    for (std::size_t j = 0; j < matrix.cols; ++j) {
      const double s = matrix.at(i, j);
      if (s > tau) {
        report.evidence.push_back({i, j, s});
        hit[bank.examples()[j].attack] = true;
      }
    }
  }
  std::stable_sort(report.evidence.begin(), report.evidence.end(),
                   [](const Evidence& a, const Evidence& b) { return a.similarity > b.similarity; });
  for (std::size_t a = 0; a < hit.size(); ++a) {
    if (hit[a]) report.detected.push_back(bank.attacks()[a].id);
  }
  return report;
}

AttackReport detect_in_text(std::string_view rfe_text, const ExampleBank& bank, double tau) {
  return detect_attacks(similarity_matrix(textprep::split_sentences(rfe_text, bank.stopwords()), bank),
                        bank, tau);
}

nlohmann::json to_json(const AttackReport& report, const ExampleBank& bank) {
  nlohmann::json evidence = nlohmann::json::array();
  for (const auto& e : report.evidence) {
    evidence.push_back({{"sentence", e.sentence},
                        {"example", e.example},
                        {"attack", bank.attacks()[bank.examples()[e.example].attack].id},
                        {"similarity", e.similarity}});
  }
  return {{"detected", report.detected}, {"evidence", evidence}, {"threshold", report.threshold}};
}

}  // namespace rfekit::attackdetect
