#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "rfekit/ensemble.hpp"

namespace rfekit::corpusgen {

// Portable draws on top of mt19937_64 (the std distributions differ between
// standard library implementations).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform in [0, n), n > 0.
  std::size_t below(std::size_t n);
  // Uniform in [lo, hi].
  int between(int lo, int hi);
  // Uniform in [0, 1).
  double unit();
  bool chance(double p) { return unit() < p; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }
  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[below(v.size())];
  }

 private:
  std::mt19937_64 engine_;
};

enum class Layout { approval, receipt };

struct ClassSpec {
  std::string label;
  Layout layout;
  int count;
};

struct AttackShare {
  std::string attack_id;
  double proportion;
};

struct CorpusConfig {
  std::uint64_t seed = 42;
  std::vector<ClassSpec> classes = {{"i797_approval", Layout::approval, 100},
                                    {"i797_receipt", Layout::receipt, 100}};
  double train_fraction = 0.8;
  int n_rfes = 49;
  // Share of RFEs whose primary attack is each type; apportioned to exact
  // counts by largest remainder.
  std::vector<AttackShare> attack_mix = {{"specialty_occupation", 0.55},
                                         {"beneficiary_qualifications", 0.15},
                                         {"employer_employee", 0.15},
                                         {"maintenance_of_status", 0.10},
                                         {"available_work", 0.05}};
  // Chance that an RFE carries a second, different attack.
  double second_attack_rate = 0.35;
  double ocr_noise_rate = 0.15;

  void validate() const;
  nlohmann::json to_json() const;
};

// Largest-remainder apportionment of total into integer counts.
std::vector<int> apportion(const std::vector<double>& proportions, int total);

// Character-level corruption (substitute / delete / insert) applied to each
// non-newline character with probability rate.
std::string degrade_text(const std::string& clean, double rate, Rng& rng);

// Bounded paraphrase edits; each index refers to the token list at the time
// the edit is applied (drop, then swap, then substitution).
struct ParaphraseEdits {
  std::optional<std::size_t> drop;
  std::optional<std::size_t> swap;  // swaps [i] and [i+1]
  std::optional<std::pair<std::size_t, std::string>> substitute;
};

// Multiset overlap |original ∩ paraphrase| / |original|.
double token_overlap(const std::vector<std::string>& original,
                     const std::vector<std::string>& paraphrase);

std::vector<std::string> apply_edits(std::vector<std::string> tokens, const ParaphraseEdits& edits);

// Draws at most one drop, one adjacent swap and one synonym substitution,
// skipping any edit that would push overlap below 0.6.
ParaphraseEdits draw_edits(const std::vector<std::string>& tokens, Rng& rng);

std::vector<std::string> paraphrase_sentence(const std::vector<std::string>& tokens, Rng& rng);

inline constexpr double kMinParaphraseOverlap = 0.6;

// Writes the full corpus tree under out_dir and returns the manifest that
// was written to out_dir/manifest.json.
nlohmann::json generate_corpus(const CorpusConfig& config, const std::filesystem::path& out_dir);

// Read side of the manifest.
struct CorpusDocument {
  ensemble::Document doc;
  std::string label;
  bool train = false;
};

enum class TextChannel { clean, degraded };

struct LoadedCorpus {
  std::vector<std::string> classes;
  std::vector<CorpusDocument> documents;
};

LoadedCorpus load_documents(const std::filesystem::path& corpus_dir, TextChannel channel);

struct RfeGroundTruth {
  std::string id;
  std::filesystem::path text_path;
  std::vector<std::string> planted_attacks;
};

std::vector<RfeGroundTruth> load_rfes(const std::filesystem::path& corpus_dir);

nlohmann::json read_manifest(const std::filesystem::path& corpus_dir);

}  // namespace rfekit::corpusgen
