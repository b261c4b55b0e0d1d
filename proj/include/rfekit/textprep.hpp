#pragma once

#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace rfekit::textprep {

// Lowercase a–z tokens in document order.
using TokenStream = std::vector<std::string>;
// One cleaned token list per newline-separated block.
using SentenceList = std::vector<TokenStream>;

class StopwordSet {
 public:
  StopwordSet() = default;

  // Parses the one-word-per-line stopword file format. Blank lines are
  // ignored; words are lowercased.
  static StopwordSet parse(std::string_view file_contents);

  // The 127-word English list shipped in data/stopwords.txt.
  static const StopwordSet& builtin();

  bool contains(std::string_view word) const;
  std::size_t size() const { return words_.size(); }
  // SHA-256 of the canonical (sorted, newline-terminated) serialization.
  const std::string& content_hash() const { return hash_; }
  std::string serialize() const;

 private:
  std::unordered_set<std::string> words_;
  std::string hash_;
};

// Lowercases ASCII letters and maps every other code point except space,
// tab and newline to one space. UTF-8 multibyte sequences count as one
// code point; stray bytes each count as one.
std::string normalize(std::string_view text);

// Maximal runs of non-whitespace characters.
TokenStream tokenize(std::string_view text);

TokenStream clean_tokens(const TokenStream& tokens, const StopwordSet& stopwords);

// normalize + tokenize + clean_tokens applied to each block of non-newline
// content; blocks that clean to nothing are dropped.
SentenceList split_sentences(std::string_view text, const StopwordSet& stopwords);

}  // namespace rfekit::textprep
