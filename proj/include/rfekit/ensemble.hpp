#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rfekit/imagefeat.hpp"
#include "rfekit/linclass.hpp"
#include "rfekit/vectorspace.hpp"

namespace rfekit::ensemble {

using linclass::ClassDistribution;

// Floor applied to entropies before taking the reciprocal.
inline constexpr double kEntropyFloor = 0.001;

// Shannon entropy in bits, with 0 lg 0 = 0.
double entropy(const ClassDistribution& p);

// 1 / max(h, kEntropyFloor).
double confidence(double entropy_bits);

struct BranchTrace {
  ClassDistribution probs;
  double entropy_bits;
  double weight;
};

// Everything that went into one fused decision.
struct FusionTrace {
  std::optional<BranchTrace> image;
  std::optional<BranchTrace> text;
  ClassDistribution fused;
  std::string predicted;
  std::size_t page_count = 0;
};

// Confidence-weighted average (w_img p_img + w_txt p_txt) / (w_img + w_txt).
FusionTrace fuse(const ClassDistribution& p_image, const ClassDistribution& p_text);

struct Document {
  std::string id;
  std::vector<imagefeat::PageImage> pages;
  std::string text;
};

// Text-branch tokenization: normalize then split on whitespace. Stopwords are
// kept for document classification.
textprep::TokenStream document_tokens(std::string_view text);

inline const vectorspace::NgramOrders& text_orders() {
  static const vectorspace::NgramOrders orders{2, 3};
  return orders;
}

// Mean of per-page distributions; p_text from the whole-document TF-IDF
// vector. A document without pages or without any tokens is classified by
// the remaining branch alone.
FusionTrace classify_document(const Document& doc, const linclass::LinearModel& image_model,
                              const linclass::LinearModel& text_model,
                              const vectorspace::Vocabulary& vocab);

// Vocabulary plus both trained heads, persisted as a directory.
struct DocumentClassifier {
  vectorspace::Vocabulary vocab;
  linclass::LinearModel image_model;
  linclass::LinearModel text_model;

  FusionTrace classify(const Document& doc) const {
    return classify_document(doc, image_model, text_model, vocab);
  }
  // Single-branch predictions, used to compare the heads against the fusion.
  std::optional<std::string> predict_image_only(const Document& doc) const;
  std::optional<std::string> predict_text_only(const Document& doc) const;

  void save(const std::filesystem::path& dir) const;
  static DocumentClassifier load(const std::filesystem::path& dir);
};

struct TrainingDocument {
  const Document* doc;
  std::string label;
};

// Fits the n-gram vocabulary on the training text, then trains the image
// head on every page and the text head on every document with tokens.
DocumentClassifier train_document_classifier(std::span<const TrainingDocument> docs,
                                             const linclass::ClassSet& classes,
                                             const linclass::TrainConfig& config);

nlohmann::json to_json(const FusionTrace& trace);

}  // namespace rfekit::ensemble
