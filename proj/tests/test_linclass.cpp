#include <doctest.h>

#include <cmath>
#include <cstring>
#include <functional>
#include <numeric>
#include <random>

#include "rfekit/error.hpp"
#include "rfekit/linclass.hpp"

using namespace rfekit;
using namespace rfekit::linclass;
using Dense = std::vector<double>;

namespace {

ClassSet two() { return ClassSet({"a", "b"}); }

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected rfekit::Error");
  return Errc::invalid_argument;
}

}  // namespace

TEST_CASE("ClassSet and ClassDistribution validation") {
  CHECK_THROWS_AS(ClassSet({"a"}), Error);
  CHECK_THROWS_AS(ClassSet({"a", "a"}), Error);
  CHECK(two().index_of("b") == 1u);
  CHECK_FALSE(two().index_of("z"));
  CHECK_THROWS_AS(ClassDistribution(two(), {0.7, 0.7}), Error);
  CHECK_THROWS_AS(ClassDistribution(two(), {1.2, -0.2}), Error);
  CHECK_THROWS_AS(ClassDistribution(two(), {1.0}), Error);
  const ClassDistribution tie(two(), {0.5, 0.5});
  CHECK(tie.argmax() == 0);
  CHECK(tie.prob("b") == 0.5);
}

TEST_CASE("predict_proba examples") {
  auto m = LinearModel::zeros(ClassSet({"a", "b", "c"}), 3, FeatureKind::dense, "h");
  const auto u = predict_proba(m, Dense{1.0, -2.0, 5.0});
  for (double p : u.probs()) CHECK(p == doctest::Approx(1.0 / 3).epsilon(1e-15));

  auto m2 = LinearModel::zeros(two(), 1, FeatureKind::dense, "h");
  m2.bias(0) = 4.2;
  m2.bias(1) = 4.2;
  const auto s = predict_proba(m2, Dense{0.0});
  CHECK(s[0] == 0.5);
  CHECK(s[1] == 0.5);

  m2.bias(0) = std::log(9.0);
  m2.bias(1) = 0.0;
  const auto p = predict_proba(m2, Dense{0.0});
  CHECK(std::abs(p[0] - 0.9) < 1e-9);
  CHECK(std::abs(p[1] - 0.1) < 1e-9);

  CHECK(code_of([&] { predict_proba(m2, Dense{1.0, 2.0}); }) == Errc::dimension_mismatch);
  CHECK(code_of([&] { predict_proba(m2, vectorspace::SparseVector{{}, 1}); }) == Errc::dimension_mismatch);
}

TEST_CASE("loss_and_gradient examples") {
  const auto m = LinearModel::zeros(two(), 3, FeatureKind::dense, "h");
  std::vector<LabeledExample> batch = {{Dense{1.0, 2.0, -1.0}, "a"}, {Dense{0.5, 0.0, 3.0}, "b"}};
  const auto lg = loss_and_gradient(m, batch, 0.1);
  CHECK(std::abs(lg.loss - std::log(2.0)) < 1e-12);

  std::vector<LabeledExample> single = {{Dense{1.0, 2.0, -1.0}, "a"}};
  const auto g = loss_and_gradient(m, single, 0.0).gradient;
  const Dense row0 = {-0.5, -1.0, 0.5, -0.5};
  const Dense row1 = {0.5, 1.0, -0.5, 0.5};
  for (std::size_t j = 0; j < 4; ++j) {
    CHECK(g[j] == doctest::Approx(row0[j]).epsilon(1e-15));
    CHECK(g[4 + j] == doctest::Approx(row1[j]).epsilon(1e-15));
  }

  std::vector<LabeledExample> bad = {{Dense{1.0, 2.0, -1.0}, "zzz"}};
  CHECK_THROWS_AS(loss_and_gradient(m, bad, 0.0), Error);
}

TEST_CASE("duplicating the batch leaves the mean loss and gradient unchanged") {
  std::mt19937 gen(1);
  std::normal_distribution<double> nd;
  auto m = LinearModel::zeros(ClassSet({"x", "y", "z"}), 4, FeatureKind::dense, "h");
  for (auto& w : m.weights) w = nd(gen);
  std::vector<LabeledExample> batch;
  for (int i = 0; i < 5; ++i) batch.push_back({Dense{nd(gen), nd(gen), nd(gen), nd(gen)}, i % 2 ? "x" : "z"});
  auto doubled = batch;
  doubled.insert(doubled.end(), batch.begin(), batch.end());
  const auto a = loss_and_gradient(m, batch, 0.0);
  const auto b = loss_and_gradient(m, doubled, 0.0);
  CHECK(a.loss == doctest::Approx(b.loss).epsilon(1e-14));
  for (std::size_t i = 0; i < a.gradient.size(); ++i) CHECK(a.gradient[i] == doctest::Approx(b.gradient[i]).epsilon(1e-12));
}

TEST_CASE("gradient matches central differences on random instances") {
  std::mt19937 gen(4242);
  std::normal_distribution<double> nd;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n_classes = 2 + gen() % 2;
    const std::size_t dim = 1 + gen() % 5;
    std::vector<std::string> labels;
    for (std::size_t c = 0; c < n_classes; ++c) labels.push_back("c" + std::to_string(c));
    auto m = LinearModel::zeros(ClassSet(labels), dim, FeatureKind::dense, "h");
    for (auto& w : m.weights) w = nd(gen);
    std::vector<LabeledExample> batch(1 + gen() % 6);
    for (auto& ex : batch) {
      Dense x(dim);
      for (auto& v : x) v = nd(gen);
      ex = {x, labels[gen() % n_classes]};
    }
    const double l2 = (gen() % 2) ? 0.0 : 0.05;
    const auto analytic = loss_and_gradient(m, batch, l2).gradient;
    const double h = 1e-5;
    for (std::size_t i = 0; i < m.weights.size(); ++i) {
      auto plus = m, minus = m;
      plus.weights[i] += h;
      minus.weights[i] -= h;
      const double numeric =
          (loss_and_gradient(plus, batch, l2).loss - loss_and_gradient(minus, batch, l2).loss) / (2 * h);
      const double rel = std::abs(numeric - analytic[i]) / std::max(1.0, std::abs(numeric) + std::abs(analytic[i]));
      worst = std::max(worst, rel);
    }
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("training on toy sets") {
  SUBCASE("separable four points") {
    std::vector<LabeledExample> data = {{Dense{0.0, 0.0}, "a"}, {Dense{0.2, 0.1}, "a"},
                                        {Dense{1.0, 1.0}, "b"}, {Dense{0.9, 1.2}, "b"}};
    TrainStats stats;
    const auto m = train(data, two(), TrainConfig{}, "h", &stats);
    for (const auto& ex : data) CHECK(predict_proba(m, ex.features).predicted_label() == ex.label);
    for (std::size_t i = 1; i < stats.loss_history.size(); ++i) {
      CHECK(stats.loss_history[i] <= stats.loss_history[i - 1]);
    }
    CHECK(stats.final_loss < std::log(2.0));
  }
  SUBCASE("orthogonal one-per-class") {
    const ClassSet cs({"a", "b", "c"});
    std::vector<LabeledExample> data = {{Dense{1, 0, 0}, "a"}, {Dense{0, 1, 0}, "b"}, {Dense{0, 0, 1}, "c"}};
    const auto m = train(data, cs, TrainConfig{}, "h");
    for (const auto& ex : data) CHECK(predict_proba(m, ex.features).prob(ex.label) > 0.9);
  }
  SUBCASE("max_iters zero returns the zero model") {
    std::vector<LabeledExample> data = {{Dense{1.0}, "a"}, {Dense{-1.0}, "b"}};
    TrainConfig cfg;
    cfg.max_iters = 0;
    const auto m = train(data, two(), cfg, "h");
    for (double w : m.weights) CHECK(w == 0.0);
    CHECK(predict_proba(m, Dense{3.0})[0] == 0.5);
  }
  SUBCASE("sparse features") {
    using vectorspace::SparseVector;
    std::vector<LabeledExample> data = {{SparseVector{{{0, 1.0}}, 3}, "a"}, {SparseVector{{{2, 1.0}}, 3}, "b"}};
    const auto m = train(data, two(), TrainConfig{}, "vh");
    CHECK(m.feature_kind == FeatureKind::sparse);
    CHECK(predict_proba(m, SparseVector{{{0, 1.0}}, 3}).predicted_label() == "a");
  }
}

TEST_CASE("training errors") {
  std::vector<LabeledExample> only_a = {{Dense{1.0}, "a"}};
  CHECK_THROWS_AS(train(only_a, two(), TrainConfig{}, "h"), Error);
  std::vector<LabeledExample> unknown = {{Dense{1.0}, "a"}, {Dense{1.0}, "b"}, {Dense{1.0}, "q"}};
  CHECK_THROWS_AS(train(unknown, two(), TrainConfig{}, "h"), Error);
  std::vector<LabeledExample> mixed = {{Dense{1.0}, "a"}, {Dense{1.0, 2.0}, "b"}};
  CHECK_THROWS_AS(train(mixed, two(), TrainConfig{}, "h"), Error);
  std::vector<LabeledExample> inf = {{Dense{INFINITY}, "a"}, {Dense{1.0}, "b"}};
  CHECK_THROWS_AS(train(inf, two(), TrainConfig{}, "h"), Error);
}

TEST_CASE("model persistence") {
  std::mt19937 gen(8);
  std::normal_distribution<double> nd;
  auto m = LinearModel::zeros(ClassSet({"x", "y", "z"}), 5, FeatureKind::sparse, "vocab-A");
  for (auto& w : m.weights) w = nd(gen);
  const auto bytes = save_model(m);
  const auto back = load_model(bytes, "vocab-A");
  CHECK(back.classes == m.classes);
  CHECK(back.feature_dim == 5);
  CHECK(back.feature_kind == FeatureKind::sparse);
  REQUIRE(back.weights.size() == m.weights.size());
  CHECK(std::memcmp(back.weights.data(), m.weights.data(), m.weights.size() * sizeof(double)) == 0);

  auto tampered = bytes;
  tampered[4] = 9;
  CHECK(code_of([&] { load_model(tampered, "vocab-A"); }) == Errc::version_mismatch);
  CHECK(code_of([&] { load_model(bytes, "vocab-B"); }) == Errc::hash_mismatch);
  CHECK(code_of([&] { load_model(bytes.substr(0, bytes.size() - 3), "vocab-A"); }) == Errc::truncated);
  CHECK(code_of([&] { load_model("XXXX", "vocab-A"); }) == Errc::parse_error);
}
