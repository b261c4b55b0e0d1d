#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rfekit/vectorspace.hpp"

namespace rfekit::linclass {

// Ordered, distinct class labels (at least two). Cheap to copy.
class ClassSet {
 public:
  explicit ClassSet(std::vector<std::string> labels);

  std::size_t size() const { return labels_->size(); }
  const std::string& label(std::size_t i) const { return (*labels_)[i]; }
  const std::vector<std::string>& labels() const { return *labels_; }
  std::optional<std::size_t> index_of(std::string_view label) const;

  bool operator==(const ClassSet& other) const { return labels() == other.labels(); }

 private:
  std::shared_ptr<const std::vector<std::string>> labels_;
};

// Probability vector over a ClassSet; entries in [0,1] summing to 1.
class ClassDistribution {
 public:
  ClassDistribution(ClassSet classes, std::vector<double> probs);

  const ClassSet& classes() const { return classes_; }
  const std::vector<double>& probs() const { return probs_; }
  double operator[](std::size_t i) const { return probs_[i]; }
  double prob(std::string_view label) const;
  // First maximal entry in ClassSet order.
  std::size_t argmax() const;
  const std::string& predicted_label() const { return classes_.label(argmax()); }

 private:
  ClassSet classes_;
  std::vector<double> probs_;
};

enum class FeatureKind : std::uint8_t { dense = 0, sparse = 1 };

using FeatureVector = std::variant<std::vector<double>, vectorspace::SparseVector>;

FeatureKind kind_of(const FeatureVector& x);
std::size_t dim_of(const FeatureVector& x);

struct LabeledExample {
  FeatureVector features;
  std::string label;
};

// Multinomial logistic model; weights are |C| rows of (dim + 1) with the bias
// in the last column.
struct LinearModel {
  ClassSet classes;
  std::size_t feature_dim = 0;
  FeatureKind feature_kind = FeatureKind::dense;
  std::string vocab_hash;
  std::vector<double> weights;

  static LinearModel zeros(ClassSet classes, std::size_t feature_dim, FeatureKind kind,
                           std::string vocab_hash);

  std::size_t row_stride() const { return feature_dim + 1; }
  double& weight(std::size_t c, std::size_t j) { return weights[c * row_stride() + j]; }
  double weight(std::size_t c, std::size_t j) const { return weights[c * row_stride() + j]; }
  double& bias(std::size_t c) { return weight(c, feature_dim); }
  double bias(std::size_t c) const { return weight(c, feature_dim); }
};

// Raw per-class scores w_c . x + b_c.
std::vector<double> scores(const LinearModel& model, const FeatureVector& x);

// Softmax of scores, shifted by the max score.
ClassDistribution predict_proba(const LinearModel& model, const FeatureVector& x);

struct LossAndGradient {
  double loss = 0.0;
  // Same layout as LinearModel::weights.
  std::vector<double> gradient;
};

// Mean cross-entropy over the batch plus (l2/2)*||W||^2, bias excluded.
LossAndGradient loss_and_gradient(const LinearModel& model, std::span<const LabeledExample> batch,
                                  double l2);

struct TrainConfig {
  double l2 = 1e-3;
  double learning_rate = 0.5;
  int max_iters = 2000;
  double grad_tol = 1e-6;
};

struct TrainStats {
  int iterations = 0;
  int rejected_steps = 0;
  double final_loss = 0.0;
  double final_grad_norm = 0.0;  // infinity norm
  std::vector<double> loss_history;  // loss after each accepted step, starting at the zero model
};

// Deterministic full-batch gradient descent from zero weights. A step that
// would raise the loss is rejected and the learning rate halved.
LinearModel train(std::span<const LabeledExample> data, const ClassSet& classes,
                  const TrainConfig& config, std::string vocab_hash,
                  TrainStats* stats = nullptr);

// Binary container, layout in docs/FORMATS.md.
std::string save_model(const LinearModel& model);
// Rejects payloads whose recorded vocab_hash differs from expected_hash.
LinearModel load_model(std::string_view bytes, std::string_view expected_hash);

}  // namespace rfekit::linclass
