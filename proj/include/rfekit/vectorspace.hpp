#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rfekit/textprep.hpp"

namespace rfekit::vectorspace {

using textprep::TokenStream;

// Sorted, duplicate-free set of n-gram orders, each >= 1.
class NgramOrders {
 public:
  NgramOrders(std::initializer_list<int> orders);
  explicit NgramOrders(std::vector<int> orders);

  const std::vector<int>& values() const { return values_; }
  bool operator==(const NgramOrders&) const = default;

 private:
  std::vector<int> values_;
};

// Every contiguous n-gram for each order, grouped by order then position.
// N-grams are space-joined; duplicates are kept.
std::vector<std::string> ngrams(const TokenStream& tokens, const NgramOrders& orders);

// Column space for TF-IDF vectors. Immutable once fitted.
class Vocabulary {
 public:
  static Vocabulary fit(std::span<const TokenStream> corpus, NgramOrders orders);

  // Flat-file form documented in docs/FORMATS.md.
  std::string serialize() const;
  static Vocabulary parse(std::string_view text);

  std::optional<std::uint32_t> index_of(std::string_view ngram) const;
  std::size_t size() const { return ngrams_.size(); }
  const std::string& ngram(std::size_t index) const { return ngrams_[index]; }
  std::uint32_t doc_freq(std::size_t index) const { return doc_freq_[index]; }
  std::size_t corpus_size() const { return corpus_size_; }
  const NgramOrders& orders() const { return orders_; }

  // Smoothed inverse document frequency ln((1+N)/(1+df)) + 1.
  double idf(std::size_t index) const { return idf_[index]; }

  // SHA-256 of serialize(); models trained in this space record it.
  const std::string& content_hash() const { return hash_; }

 private:
  Vocabulary(std::vector<std::string> ngrams, std::vector<std::uint32_t> doc_freq,
             std::size_t corpus_size, NgramOrders orders);

  std::vector<std::string> ngrams_;
  std::vector<std::uint32_t> doc_freq_;
  std::vector<double> idf_;
  std::unordered_map<std::string, std::uint32_t> index_;
  std::size_t corpus_size_;
  NgramOrders orders_;
  std::string hash_;
};

struct SparseEntry {
  std::uint32_t index;
  double weight;
  bool operator==(const SparseEntry&) const = default;
};

// Entries sorted by strictly increasing index, all weights > 0.
struct SparseVector {
  std::vector<SparseEntry> entries;
  std::size_t dim = 0;

  bool is_zero() const { return entries.empty(); }
  double norm() const;
  double dot(const SparseVector& other) const;
};

// Raw-count TF times smoothed IDF, L2-normalized. N-grams unknown to the
// vocabulary are ignored; nothing known yields the zero vector.
SparseVector tfidf_vector(const TokenStream& tokens, const Vocabulary& vocab);

// u.v / (|u| |v|), clamped to at most 1; zero if either side is all-zero.
double cosine(const SparseVector& u, const SparseVector& v);

}  // namespace rfekit::vectorspace
