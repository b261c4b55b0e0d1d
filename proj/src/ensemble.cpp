#include "rfekit/ensemble.hpp"

#include <algorithm>
#include <cmath>

#include "rfekit/error.hpp"
#include "rfekit/io.hpp"
#include "rfekit/textprep.hpp"

namespace rfekit::ensemble {

double entropy(const ClassDistribution& p) {
  double h = 0.0;
  for (double v : p.probs()) {
    if (v > 0.0) h -= v * std::log2(v);
  }
  return std::max(0.0, h);
}

double confidence(double entropy_bits) {
  return 1.0 / std::max(entropy_bits, kEntropyFloor);
}

namespace {

BranchTrace branch(ClassDistribution p) {
  const double h = entropy(p);
  return BranchTrace{std::move(p), h, confidence(h)};
}

FusionTrace single_branch(std::optional<BranchTrace> image, std::optional<BranchTrace> text) {
  ClassDistribution only = image ? image->probs : text->probs;
  std::string predicted = only.predicted_label();
  return FusionTrace{std::move(image), std::move(text), std::move(only), std::move(predicted)};
}

ClassDistribution mean_pages(const linclass::LinearModel& model,
                             const std::vector<imagefeat::PageImage>& pages) {
  std::vector<double> acc(model.classes.size(), 0.0);
  for (const auto& page : pages) {
    const auto f = imagefeat::image_features(page);
    const auto p = linclass::predict_proba(model, std::vector<double>(f.begin(), f.end()));
    for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += p[c];
  }
  double sum = 0.0;
  for (double v : acc) sum += v;
  for (double& v : acc) v /= sum;
  return ClassDistribution(model.classes, std::move(acc));
}

}  // namespace

FusionTrace fuse(const ClassDistribution& p_image, const ClassDistribution& p_text) {
  if (!(p_image.classes() == p_text.classes())) {
    throw Error(Errc::invalid_argument, "cannot fuse distributions over different class sets");
  }
  auto image = branch(p_image);
  auto text = branch(p_text);
  // (w_i p_i + w_t p_t) / (w_i + w_t) written as p_i + a (p_t - p_i), which
  // returns p exactly when both inputs are p.
  const double text_share = text.weight / (image.weight + text.weight);
  std::vector<double> fused(p_image.probs().size());
  for (std::size_t c = 0; c < fused.size(); ++c) {
    fused[c] = std::clamp(p_image[c] + text_share * (p_text[c] - p_image[c]), 0.0, 1.0);
  }
  ClassDistribution dist(p_image.classes(), std::move(fused));
  std::string predicted = dist.predicted_label();
  return FusionTrace{std::move(image), std::move(text), std::move(dist), std::move(predicted)};
}

textprep::TokenStream document_tokens(std::string_view text) {
  return textprep::tokenize(textprep::normalize(text));
}

FusionTrace classify_document(const Document& doc, const linclass::LinearModel& image_model,
                              const linclass::LinearModel& text_model,
                              const vectorspace::Vocabulary& vocab) {
  if (!(image_model.classes == text_model.classes)) {
    throw Error(Errc::invalid_argument, "image and text models disagree on the class set");
  }
  const auto tokens = document_tokens(doc.text);
  const bool has_pages = !doc.pages.empty();
  const bool has_text = !tokens.empty();
  if (!has_pages && !has_text) {
    throw Error(Errc::empty_input, "document '" + doc.id + "' has neither pages nor text");
  }

  std::optional<ClassDistribution> p_image;
  std::optional<ClassDistribution> p_text;
  if (has_pages) p_image = mean_pages(image_model, doc.pages);
  if (has_text) p_text = linclass::predict_proba(text_model, vectorspace::tfidf_vector(tokens, vocab));

  FusionTrace trace = (p_image && p_text) ? fuse(*p_image, *p_text)
                      : p_image           ? single_branch(branch(*p_image), std::nullopt)
                                          : single_branch(std::nullopt, branch(*p_text));
  trace.page_count = doc.pages.size();
  return trace;
}

std::optional<std::string> DocumentClassifier::predict_image_only(const Document& doc) const {
  if (doc.pages.empty()) return std::nullopt;
  return mean_pages(image_model, doc.pages).predicted_label();
}

std::optional<std::string> DocumentClassifier::predict_text_only(const Document& doc) const {
  const auto tokens = document_tokens(doc.text);
  if (tokens.empty()) return std::nullopt;
  return linclass::predict_proba(text_model, vectorspace::tfidf_vector(tokens, vocab)).predicted_label();
}

void DocumentClassifier::save(const std::filesystem::path& dir) const {
  write_file_atomic(dir / "text.vocab", vocab.serialize());
  write_file_atomic(dir / "image.model", linclass::save_model(image_model));
  write_file_atomic(dir / "text.model", linclass::save_model(text_model));
}

DocumentClassifier DocumentClassifier::load(const std::filesystem::path& dir) {
  auto vocab = vectorspace::Vocabulary::parse(read_file(dir / "text.vocab"));
  auto image = linclass::load_model(read_file(dir / "image.model"), imagefeat::kFeaturizerId);
  auto text = linclass::load_model(read_file(dir / "text.model"), vocab.content_hash());
  if (image.feature_kind != linclass::FeatureKind::dense ||
      image.feature_dim != imagefeat::kFeatureCount) {
    throw Error(Errc::dimension_mismatch, "image model does not match the page featurizer");
  }
  if (text.feature_kind != linclass::FeatureKind::sparse || text.feature_dim != vocab.size()) {
    throw Error(Errc::dimension_mismatch, "text model does not match the vocabulary");
  }
  if (!(image.classes == text.classes)) {
    throw Error(Errc::invalid_argument, "image and text models disagree on the class set");
  }
  return DocumentClassifier{std::move(vocab), std::move(image), std::move(text)};
}

DocumentClassifier train_document_classifier(std::span<const TrainingDocument> docs,
                                             const linclass::ClassSet& classes,
                                             const linclass::TrainConfig& config) {
  std::vector<textprep::TokenStream> token_lists;
  std::vector<std::string> text_labels;
  std::vector<linclass::LabeledExample> image_data;
  for (const auto& td : docs) {
    for (const auto& page : td.doc->pages) {
      const auto f = imagefeat::image_features(page);
      image_data.push_back({std::vector<double>(f.begin(), f.end()), td.label});
    }
    auto tokens = document_tokens(td.doc->text);
    if (!tokens.empty()) {
      token_lists.push_back(std::move(tokens));
      text_labels.push_back(td.label);
    }
  }
  auto vocab = vectorspace::Vocabulary::fit(token_lists, text_orders());
  std::vector<linclass::LabeledExample> text_data;
  text_data.reserve(token_lists.size());
  for (std::size_t i = 0; i < token_lists.size(); ++i) {
    text_data.push_back({vectorspace::tfidf_vector(token_lists[i], vocab), text_labels[i]});
  }
  auto image_model = linclass::train(image_data, classes, config, std::string(imagefeat::kFeaturizerId));
  auto text_model = linclass::train(text_data, classes, config, vocab.content_hash());
  return DocumentClassifier{std::move(vocab), std::move(image_model), std::move(text_model)};
}

namespace {

nlohmann::json branch_json(const std::optional<BranchTrace>& b) {
  if (!b) return nullptr;
  nlohmann::json probs = nlohmann::json::object();
  for (std::size_t c = 0; c < b->probs.classes().size(); ++c) {
    probs[b->probs.classes().label(c)] = b->probs[c];
  }
  return {{"probs", probs}, {"entropy_bits", b->entropy_bits}, {"weight", b->weight}};
}

}  // namespace

nlohmann::json to_json(const FusionTrace& trace) {
  nlohmann::json fused = nlohmann::json::object();
  for (std::size_t c = 0; c < trace.fused.classes().size(); ++c) {
    fused[trace.fused.classes().label(c)] = trace.fused[c];
  }
  return {{"label", trace.predicted},
          {"fused", fused},
          {"image", branch_json(trace.image)},
          {"text", branch_json(trace.text)},
          {"pages", trace.page_count}};
}

}  // namespace rfekit::ensemble
