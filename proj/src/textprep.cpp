#include "rfekit/textprep.hpp"

#include <algorithm>

#include "rfekit/io.hpp"

namespace rfekit::textprep {

extern const char kBuiltinStopwords[];  // generated from data/stopwords.txt

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

// Length of the UTF-8 sequence starting at text[i], or 1 when malformed.
std::size_t utf8_length(std::string_view text, std::size_t i) {
  const auto lead = static_cast<unsigned char>(text[i]);
  std::size_t len = 1;
  if (lead >= 0xC2 && lead <= 0xDF) {
    len = 2;
  } else if (lead >= 0xE0 && lead <= 0xEF) {
    len = 3;
  } else if (lead >= 0xF0 && lead <= 0xF4) {
    len = 4;
  }
  if (i + len > text.size()) return 1;
  for (std::size_t k = 1; k < len; ++k) {
    const auto cont = static_cast<unsigned char>(text[i + k]);
    if ((cont & 0xC0) != 0x80) return 1;
  }
  return len;
}

}  // namespace

StopwordSet StopwordSet::parse(std::string_view file_contents) {
  StopwordSet set;
  for (const auto& word : tokenize(file_contents)) {
    std::string lowered = word;
    std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    set.words_.insert(std::move(lowered));
  }
  set.hash_ = sha256_hex(set.serialize());
  return set;
}

const StopwordSet& StopwordSet::builtin() {
  static const StopwordSet set = parse(kBuiltinStopwords);
  return set;
}

bool StopwordSet::contains(std::string_view word) const {
  return words_.find(std::string(word)) != words_.end();
}

std::string StopwordSet::serialize() const {
  std::vector<std::string> sorted(words_.begin(), words_.end());
  std::sort(sorted.begin(), sorted.end());
  std::string out;
  for (const auto& w : sorted) {
    out += w;
    out += '\n';
  }
  return out;
}

std::string normalize(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (c >= 'A' && c <= 'Z') {
      out.push_back(static_cast<char>(c - 'A' + 'a'));
      ++i;
    } else if ((c >= 'a' && c <= 'z') || c == ' ' || c == '\t' || c == '\n') {
      out.push_back(c);
      ++i;
    } else {
      out.push_back(' ');
      i += utf8_length(text, i);
    }
  }
  return out;
}

TokenStream tokenize(std::string_view text) {
  TokenStream tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) tokens.emplace_back(text.substr(start, i - start));
  }
  return tokens;
}

TokenStream clean_tokens(const TokenStream& tokens, const StopwordSet& stopwords) {
  TokenStream out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (!stopwords.contains(t)) out.push_back(t);
  }
  return out;
}

SentenceList split_sentences(std::string_view text, const StopwordSet& stopwords) {
  SentenceList sentences;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    if (end > start) {
      auto cleaned = clean_tokens(tokenize(normalize(text.substr(start, end - start))), stopwords);
      if (!cleaned.empty()) sentences.push_back(std::move(cleaned));
    }
    start = end + 1;
  }
  return sentences;
}

}  // namespace rfekit::textprep
