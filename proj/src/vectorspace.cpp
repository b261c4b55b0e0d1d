#include "rfekit/vectorspace.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "rfekit/error.hpp"
#include "rfekit/io.hpp"

namespace rfekit::vectorspace {

namespace {

constexpr std::string_view kVocabMagic = "rfekit-vocab v1";

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return lines;
}

template <typename T>
T parse_number(std::string_view s, std::string_view what) {
  T value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(Errc::parse_error, "vocabulary: bad " + std::string(what) + " '" + std::string(s) + "'");
  }
  return value;
}

std::string_view expect_prefix(std::string_view line, std::string_view key) {
  if (line.size() <= key.size() || line.substr(0, key.size()) != key || line[key.size()] != ' ') {
    throw Error(Errc::parse_error, "vocabulary: expected '" + std::string(key) + "' header");
  }
  return line.substr(key.size() + 1);
}

}  // namespace

NgramOrders::NgramOrders(std::initializer_list<int> orders)
    : NgramOrders(std::vector<int>(orders)) {}

NgramOrders::NgramOrders(std::vector<int> orders) : values_(std::move(orders)) {
  std::sort(values_.begin(), values_.end());
  values_.erase(std::unique(values_.begin(), values_.end()), values_.end());
  if (values_.empty() || values_.front() < 1) {
    throw Error(Errc::invalid_argument, "n-gram orders must be a non-empty set of integers >= 1");
  }
}

std::vector<std::string> ngrams(const TokenStream& tokens, const NgramOrders& orders) {
  std::vector<std::string> out;
  for (int n : orders.values()) {
    const auto len = static_cast<std::size_t>(n);
    if (tokens.size() < len) continue;
    for (std::size_t i = 0; i + len <= tokens.size(); ++i) {
      std::string gram = tokens[i];
      for (std::size_t k = 1; k < len; ++k) {
        gram += ' ';
        gram += tokens[i + k];
      }
      out.push_back(std::move(gram));
    }
  }
  return out;
}

Vocabulary::Vocabulary(std::vector<std::string> ngrams, std::vector<std::uint32_t> doc_freq,
                       std::size_t corpus_size, NgramOrders orders)
    : ngrams_(std::move(ngrams)),
      doc_freq_(std::move(doc_freq)),
      corpus_size_(corpus_size),
      orders_(std::move(orders)) {
  idf_.reserve(ngrams_.size());
  index_.reserve(ngrams_.size());
  const double n = static_cast<double>(corpus_size_);
  for (std::size_t i = 0; i < ngrams_.size(); ++i) {
    idf_.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(doc_freq_[i]))) + 1.0);
    index_.emplace(ngrams_[i], static_cast<std::uint32_t>(i));
  }
  hash_ = sha256_hex(serialize());
}

Vocabulary Vocabulary::fit(std::span<const TokenStream> corpus, NgramOrders orders) {
  if (corpus.empty()) {
    throw Error(Errc::empty_input, "cannot fit a vocabulary on an empty corpus");
  }
  std::map<std::string, std::uint32_t> df;
  for (const auto& doc : corpus) {
    std::set<std::string> seen;
    for (auto& g : vectorspace::ngrams(doc, orders)) seen.insert(std::move(g));
    for (const auto& g : seen) ++df[g];
  }
  std::vector<std::string> grams;
  std::vector<std::uint32_t> counts;
  grams.reserve(df.size());
  counts.reserve(df.size());
  for (auto& [g, c] : df) {
    grams.push_back(g);
    counts.push_back(c);
  }
  return Vocabulary(std::move(grams), std::move(counts), corpus.size(), std::move(orders));
}

std::string Vocabulary::serialize() const {
  std::ostringstream out;
  out << kVocabMagic << '\n';
  out << "orders";
  for (int n : orders_.values()) out << ' ' << n;
  out << '\n';
  out << "corpus_size " << corpus_size_ << '\n';
  out << "entries " << ngrams_.size() << '\n';
  for (std::size_t i = 0; i < ngrams_.size(); ++i) {
    out << i << '\t' << doc_freq_[i] << '\t' << ngrams_[i] << '\n';
  }
  return std::move(out).str();
}

Vocabulary Vocabulary::parse(std::string_view text) {
  const auto lines = split_lines(text);
  if (lines.empty() || lines[0] != kVocabMagic) {
    if (!lines.empty() && lines[0].substr(0, 13) == "rfekit-vocab ") {
      throw Error(Errc::version_mismatch, "vocabulary: unsupported version '" + std::string(lines[0]) + "'");
    }
    throw Error(Errc::parse_error, "vocabulary: missing 'rfekit-vocab v1' header");
  }
  if (lines.size() < 4) throw Error(Errc::truncated, "vocabulary: truncated header");

  std::vector<int> orders;
  std::istringstream order_stream{std::string(expect_prefix(lines[1], "orders"))};
  std::string tok;
  while (order_stream >> tok) orders.push_back(parse_number<int>(tok, "order"));
  const auto corpus_size = parse_number<std::size_t>(expect_prefix(lines[2], "corpus_size"), "corpus_size");
  const auto entries = parse_number<std::size_t>(expect_prefix(lines[3], "entries"), "entries");
  if (corpus_size < 1) throw Error(Errc::parse_error, "vocabulary: corpus_size must be >= 1");
  if (lines.size() - 4 < entries) throw Error(Errc::truncated, "vocabulary: fewer entries than declared");
  if (lines.size() - 4 > entries) throw Error(Errc::parse_error, "vocabulary: trailing data after entries");

  std::vector<std::string> grams;
  std::vector<std::uint32_t> df;
  grams.reserve(entries);
  df.reserve(entries);
  for (std::size_t i = 0; i < entries; ++i) {
    const auto line = lines[4 + i];
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string_view::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string_view::npos) throw Error(Errc::parse_error, "vocabulary: malformed entry line");
    if (parse_number<std::size_t>(line.substr(0, t1), "index") != i) {
      throw Error(Errc::parse_error, "vocabulary: indices must be dense and ordered");
    }
    const auto count = parse_number<std::uint32_t>(line.substr(t1 + 1, t2 - t1 - 1), "doc_freq");
    if (count < 1 || count > corpus_size) throw Error(Errc::parse_error, "vocabulary: doc_freq out of range");
    std::string gram(line.substr(t2 + 1));
    if (gram.empty() || (!grams.empty() && !(grams.back() < gram))) {
      throw Error(Errc::parse_error, "vocabulary: n-grams must be non-empty and strictly sorted");
    }
    grams.push_back(std::move(gram));
    df.push_back(count);
  }
  return Vocabulary(std::move(grams), std::move(df), corpus_size, NgramOrders(std::move(orders)));
}

std::optional<std::uint32_t> Vocabulary::index_of(std::string_view ngram) const {
  auto it = index_.find(std::string(ngram));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

double SparseVector::norm() const {
  double s = 0.0;
  for (const auto& e : entries) s += e.weight * e.weight;
  return std::sqrt(s);
}

double SparseVector::dot(const SparseVector& other) const {
  if (dim != other.dim) {
    throw Error(Errc::dimension_mismatch, "sparse vectors of dimension " + std::to_string(dim) +
                                              " and " + std::to_string(other.dim));
  }
  double s = 0.0;
  auto a = entries.begin();
  auto b = other.entries.begin();
  while (a != entries.end() && b != other.entries.end()) {
    if (a->index < b->index) {
      ++a;
    } else if (b->index < a->index) {
      ++b;
    } else {
      s += a->weight * b->weight;
      ++a;
      ++b;
    }
  }
  return s;
}

SparseVector tfidf_vector(const TokenStream& tokens, const Vocabulary& vocab) {
  std::map<std::uint32_t, std::uint32_t> counts;
  for (const auto& g : ngrams(tokens, vocab.orders())) {
    if (auto idx = vocab.index_of(g)) ++counts[*idx];
  }
  SparseVector v;
  v.dim = vocab.size();
  v.entries.reserve(counts.size());
  for (const auto& [idx, tf] : counts) {
    v.entries.push_back({idx, static_cast<double>(tf) * vocab.idf(idx)});
  }
  const double n = v.norm();
  if (n > 0.0) {
    for (auto& e : v.entries) e.weight /= n;
  }
  return v;
}

double cosine(const SparseVector& u, const SparseVector& v) {
  const double d = u.dot(v);
  if (u.is_zero() || v.is_zero()) return 0.0;
  return std::min(1.0, d / (u.norm() * v.norm()));
}

}  // namespace rfekit::vectorspace
