#include "rfekit/linclass.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <set>

#include "rfekit/error.hpp"

namespace rfekit::linclass {

ClassSet::ClassSet(std::vector<std::string> labels)
    : labels_(std::make_shared<const std::vector<std::string>>(std::move(labels))) {
  if (labels_->size() < 2) {
    throw Error(Errc::invalid_argument, "a class set needs at least two labels");
  }
  std::set<std::string> seen;
  for (const auto& l : *labels_) {
    if (l.empty()) throw Error(Errc::invalid_argument, "class labels must be non-empty");
    if (!seen.insert(l).second) throw Error(Errc::duplicate_key, "duplicate class label '" + l + "'");
  }
}

std::optional<std::size_t> ClassSet::index_of(std::string_view label) const {
  for (std::size_t i = 0; i < labels_->size(); ++i) {
    if ((*labels_)[i] == label) return i;
  }
  return std::nullopt;
}

ClassDistribution::ClassDistribution(ClassSet classes, std::vector<double> probs)
    : classes_(std::move(classes)), probs_(std::move(probs)) {
  if (probs_.size() != classes_.size()) {
    throw Error(Errc::dimension_mismatch, "distribution size does not match class set");
  }
  double sum = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error(Errc::invalid_argument, "probability outside [0,1]");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw Error(Errc::invalid_argument, "probabilities sum to " + std::to_string(sum));
  }
}

double ClassDistribution::prob(std::string_view label) const {
  auto idx = classes_.index_of(label);
  if (!idx) throw Error(Errc::not_found, "unknown class '" + std::string(label) + "'");
  return probs_[*idx];
}

std::size_t ClassDistribution::argmax() const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs_.size(); ++i) {
    if (probs_[i] > probs_[best]) best = i;
  }
  return best;
}

FeatureKind kind_of(const FeatureVector& x) {
  return std::holds_alternative<std::vector<double>>(x) ? FeatureKind::dense : FeatureKind::sparse;
}

std::size_t dim_of(const FeatureVector& x) {
  if (const auto* d = std::get_if<std::vector<double>>(&x)) return d->size();
  return std::get<vectorspace::SparseVector>(x).dim;
}

LinearModel LinearModel::zeros(ClassSet classes, std::size_t feature_dim, FeatureKind kind,
                               std::string vocab_hash) {
  LinearModel m{std::move(classes), feature_dim, kind, std::move(vocab_hash), {}};
  m.weights.assign(m.classes.size() * m.row_stride(), 0.0);
  return m;
}

namespace {

void check_features(const LinearModel& model, const FeatureVector& x) {
  if (kind_of(x) != model.feature_kind) {
    throw Error(Errc::dimension_mismatch, "feature kind does not match the model");
  }
  if (dim_of(x) != model.feature_dim) {
    throw Error(Errc::dimension_mismatch, "feature dimension " + std::to_string(dim_of(x)) +
                                              " does not match model dimension " +
                                              std::to_string(model.feature_dim));
  }
}

// Applies fn(feature_index, value) to every non-zero feature.
template <typename Fn>
void for_each_feature(const FeatureVector& x, Fn&& fn) {
  if (const auto* d = std::get_if<std::vector<double>>(&x)) {
    for (std::size_t j = 0; j < d->size(); ++j) {
      if ((*d)[j] != 0.0) fn(j, (*d)[j]);
    }
  } else {
    for (const auto& e : std::get<vectorspace::SparseVector>(x).entries) fn(e.index, e.weight);
  }
}

std::vector<double> softmax(std::vector<double> s) {
  const double top = *std::max_element(s.begin(), s.end());
  double z = 0.0;
  for (double& v : s) {
    v = std::exp(v - top);
    z += v;
  }
  for (double& v : s) v /= z;
  return s;
}

double inf_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

std::vector<double> scores(const LinearModel& model, const FeatureVector& x) {
  check_features(model, x);
  std::vector<double> s(model.classes.size());
  for (std::size_t c = 0; c < s.size(); ++c) s[c] = model.bias(c);
  for_each_feature(x, [&](std::size_t j, double v) {
    for (std::size_t c = 0; c < s.size(); ++c) s[c] += model.weight(c, j) * v;
  });
  return s;
}

ClassDistribution predict_proba(const LinearModel& model, const FeatureVector& x) {
  auto p = softmax(scores(model, x));
  // Rounding can leave the sum a few ulps from 1.
  double sum = 0.0;
  for (double v : p) sum += v;
  for (double& v : p) v /= sum;
  return ClassDistribution(model.classes, std::move(p));
}

LossAndGradient loss_and_gradient(const LinearModel& model, std::span<const LabeledExample> batch,
                                  double l2) {
  if (batch.empty()) throw Error(Errc::empty_input, "loss over an empty batch");
  const std::size_t num_classes = model.classes.size();
  const std::size_t stride = model.row_stride();
  LossAndGradient out;
  out.gradient.assign(model.weights.size(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(batch.size());

  for (const auto& ex : batch) {
    const auto label = model.classes.index_of(ex.label);
    if (!label) throw Error(Errc::not_found, "unknown label '" + ex.label + "'");
    const auto s = scores(model, ex.features);
    const double top = *std::max_element(s.begin(), s.end());
    double z = 0.0;
    for (double v : s) z += std::exp(v - top);
    const double log_z = top + std::log(z);
    out.loss += (log_z - s[*label]) * inv_n;

    std::vector<double> residual(num_classes);
    for (std::size_t c = 0; c < num_classes; ++c) {
      residual[c] = (std::exp(s[c] - log_z) - (c == *label ? 1.0 : 0.0)) * inv_n;
      out.gradient[c * stride + model.feature_dim] += residual[c];
    }
    for_each_feature(ex.features, [&](std::size_t j, double v) {
      for (std::size_t c = 0; c < num_classes; ++c) out.gradient[c * stride + j] += residual[c] * v;
    });
  }

  if (l2 != 0.0) {
    double sq = 0.0;
    for (std::size_t c = 0; c < num_classes; ++c) {
      for (std::size_t j = 0; j < model.feature_dim; ++j) {
        const double w = model.weight(c, j);
        sq += w * w;
        out.gradient[c * stride + j] += l2 * w;
      }
    }
    out.loss += 0.5 * l2 * sq;
  }
  return out;
}

LinearModel train(std::span<const LabeledExample> data, const ClassSet& classes,
                  const TrainConfig& config, std::string vocab_hash, TrainStats* stats) {
  if (data.empty()) throw Error(Errc::empty_input, "no training data");
  if (config.max_iters < 0 || !(config.learning_rate > 0.0) || config.l2 < 0.0) {
    throw Error(Errc::invalid_argument, "invalid training configuration");
  }
  const FeatureKind kind = kind_of(data.front().features);
  const std::size_t dim = dim_of(data.front().features);
  std::vector<std::size_t> per_class(classes.size(), 0);
  for (const auto& ex : data) {
    if (kind_of(ex.features) != kind || dim_of(ex.features) != dim) {
      throw Error(Errc::dimension_mismatch, "training examples disagree on feature kind or dimension");
    }
    const auto idx = classes.index_of(ex.label);
    if (!idx) throw Error(Errc::not_found, "unknown label '" + ex.label + "'");
    ++per_class[*idx];
  }
  for (std::size_t c = 0; c < classes.size(); ++c) {
    if (per_class[c] == 0) {
      throw Error(Errc::invalid_argument, "class '" + classes.label(c) + "' has no training examples");
    }
  }

  LinearModel model = LinearModel::zeros(classes, dim, kind, std::move(vocab_hash));
  TrainStats local;
  auto current = loss_and_gradient(model, data, config.l2);
  local.loss_history.push_back(current.loss);
  double lr = config.learning_rate;

  while (local.iterations < config.max_iters) {
    if (inf_norm(current.gradient) < config.grad_tol) break;
    LinearModel candidate = model;
    for (std::size_t k = 0; k < candidate.weights.size(); ++k) {
      candidate.weights[k] -= lr * current.gradient[k];
    }
    auto next = loss_and_gradient(candidate, data, config.l2);
    if (!std::isfinite(next.loss)) {
      throw Error(Errc::numeric_error, "training loss became non-finite");
    }
    if (next.loss > current.loss) {
      ++local.rejected_steps;
      lr *= 0.5;
      if (lr < 1e-12) break;
      continue;
    }
    model = std::move(candidate);
    current = std::move(next);
    ++local.iterations;
    local.loss_history.push_back(current.loss);
  }
  if (!std::isfinite(current.loss)) throw Error(Errc::numeric_error, "training loss is non-finite");
  local.final_loss = current.loss;
  local.final_grad_norm = inf_norm(current.gradient);
  if (stats) *stats = std::move(local);
  return model;
}

namespace {

constexpr char kModelMagic[4] = {'R', 'F', 'L', 'M'};
constexpr std::uint8_t kModelVersion = 1;

void put_u8(std::string& out, std::uint8_t v) { out.push_back(static_cast<char>(v)); }

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_string(std::string& out, std::string_view s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.append(s);
}

class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

  std::uint64_t uint(int width) {
    need(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += static_cast<std::size_t>(width);
    return v;
  }

  std::string string() {
    const auto len = static_cast<std::size_t>(uint(4));
    need(len);
    std::string s(bytes_.substr(pos_, len));
    pos_ += len;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw Error(Errc::truncated, "model payload is truncated");
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string save_model(const LinearModel& model) {
  std::string out(kModelMagic, sizeof kModelMagic);
  put_u8(out, kModelVersion);
  put_u8(out, static_cast<std::uint8_t>(model.feature_kind));
  put_u32(out, static_cast<std::uint32_t>(model.classes.size()));
  for (const auto& label : model.classes.labels()) put_string(out, label);
  put_u64(out, model.feature_dim);
  put_string(out, model.vocab_hash);
  for (double w : model.weights) put_u64(out, std::bit_cast<std::uint64_t>(w));
  return out;
}

LinearModel load_model(std::string_view bytes, std::string_view expected_hash) {
  if (bytes.size() < 5 || std::memcmp(bytes.data(), kModelMagic, sizeof kModelMagic) != 0) {
    throw Error(Errc::parse_error, "not a model file (bad magic)");
  }
  if (static_cast<std::uint8_t>(bytes[4]) != kModelVersion) {
    throw Error(Errc::version_mismatch, "unsupported model version " +
                                            std::to_string(static_cast<unsigned char>(bytes[4])));
  }
  ByteReader in(bytes.substr(5));
  const auto kind_byte = in.uint(1);
  if (kind_byte > 1) throw Error(Errc::parse_error, "corrupt model: unknown feature kind");
  const auto num_classes = in.uint(4);
  if (num_classes > bytes.size()) throw Error(Errc::parse_error, "corrupt model: class count");
  std::vector<std::string> labels;
  for (std::uint64_t i = 0; i < num_classes; ++i) labels.push_back(in.string());
  const auto dim = static_cast<std::size_t>(in.uint(8));
  std::string hash = in.string();
  if (hash != expected_hash) {
    throw Error(Errc::hash_mismatch, "model was trained against '" + hash + "', not '" +
                                         std::string(expected_hash) + "'");
  }
  if (dim >= bytes.size()) throw Error(Errc::truncated, "model payload is truncated");
  LinearModel model = LinearModel::zeros(ClassSet(std::move(labels)), dim,
                                         static_cast<FeatureKind>(kind_byte), std::move(hash));
  for (double& w : model.weights) {
    w = std::bit_cast<double>(in.uint(8));
    if (!std::isfinite(w)) throw Error(Errc::parse_error, "corrupt model: non-finite weight");
  }
  if (!in.done()) throw Error(Errc::parse_error, "corrupt model: trailing bytes");
  return model;
}

}  // namespace rfekit::linclass
