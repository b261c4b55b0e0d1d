#include <doctest.h>

#include <filesystem>
#include <random>

#include "rfekit/error.hpp"
#include "rfekit/evalharness.hpp"
#include "rfekit/io.hpp"

using namespace rfekit;
using namespace rfekit::evalharness;
namespace fs = std::filesystem;

TEST_CASE("metrics examples") {
  const auto m = metrics({22, 9, 4, 14});
  CHECK(std::abs(m.accuracy - 0.7347) < 1e-4);
  CHECK(std::abs(m.precision - 0.7097) < 1e-4);
  CHECK(std::abs(m.recall - 0.8462) < 1e-4);
  CHECK(std::abs(m.f1 - 0.7719) < 1e-4);
  CHECK(m.f1 == doctest::Approx(0.7719298245614036).epsilon(1e-12));

  const auto z = metrics({0, 0, 5, 5});
  CHECK(z.precision == 0.0);
  CHECK(z.recall == 0.0);
  CHECK(z.f1 == 0.0);
  CHECK(z.accuracy == 0.5);

  CHECK(std::abs(ClassRow{"All", 104, 102}.accuracy() - 0.9808) < 1e-4);
  CHECK_THROWS_AS(metrics({0, 0, 0, 0}), Error);
}

TEST_CASE("metrics are scale free and exact on small counts") {
  std::mt19937 gen(17);
  for (int trial = 0; trial < 300; ++trial) {
    ConfusionCounts c{gen() % 20, gen() % 20, gen() % 20, gen() % 20};
    if (c.total() == 0) continue;
    const auto base = metrics(c);
    const std::uint64_t k = 1 + gen() % 50;
    const auto scaled = metrics({c.tp * k, c.fp * k, c.fn * k, c.tn * k});
    CHECK(scaled.accuracy == doctest::Approx(base.accuracy).epsilon(1e-12));
    CHECK(scaled.precision == doctest::Approx(base.precision).epsilon(1e-12));
    CHECK(scaled.recall == doctest::Approx(base.recall).epsilon(1e-12));
    CHECK(scaled.f1 == doctest::Approx(base.f1).epsilon(1e-12));
    // (tp+tn)/total as a reduced fraction, compared in floating point.
    const auto num = c.tp + c.tn, den = c.total();
    CHECK(std::abs(base.accuracy - static_cast<double>(num) / static_cast<double>(den)) < 1e-12);
    if (base.precision + base.recall > 0) {
      CHECK(base.f1 == doctest::Approx(2 * base.precision * base.recall / (base.precision + base.recall)));
    }
  }
}

TEST_CASE("percent formatting") {
  CHECK(format_percent(1.0) == "100");
  CHECK(format_percent(102.0 / 104) == "98.08");
  CHECK(format_percent(69.0 / 71) == "97.18");
  CHECK(format_percent(0.5) == "50");
  CHECK(format_percent(0.125) == "12.5");
  CHECK(format_percent(0.0) == "0");
}

TEST_CASE("tabulate bookkeeping") {
  std::vector<std::pair<std::string, std::string>> outcomes = {{"a", "a"}, {"a", "b"}, {"b", "b"}, {"b", "b"}};
  const auto t = tabulate({"a", "b"}, outcomes);
  CHECK(t.overall.count == 4);
  CHECK(t.overall.correct == 3);
  CHECK(t.classes[0].count + t.classes[1].count == t.overall.count);
  CHECK(t.classes[0].correct + t.classes[1].correct == t.overall.correct);
  CHECK(format_table(t).find("All") != std::string::npos);
  CHECK_THROWS_AS(tabulate({"a", "b"}, {{"c", "a"}}), Error);
  CHECK_THROWS_AS(tabulate({"a", "b"}, {{"a", "c"}}), Error);

  const auto perfect = tabulate({"a", "b"}, {{"a", "a"}, {"b", "b"}});
  CHECK(perfect.overall.accuracy() == 1.0);
  for (const auto& r : perfect.classes) CHECK(r.accuracy() == 1.0);
}

namespace {

const char* kBank = R"({"format":"rfekit-bank","version":1,"attacks":[
  {"id":"specialty_occupation","description":"","sentences":["The position does not qualify as a specialty occupation."]},
  {"id":"maintenance_of_status","description":"","sentences":["Provide the Form I-94 arrival record."]}]})";

}  // namespace

TEST_CASE("evaluate_attacks on hand-made RFEs") {
  const auto bank = attackdetect::ExampleBank::parse(kBank);
  const auto dir = fs::path(RFEKIT_TEST_TMP) / "evalharness";
  fs::remove_all(dir);
  write_file_atomic(dir / "r0.txt", "The position does not qualify as a specialty occupation.\n");
  write_file_atomic(dir / "r1.txt", "Provide the Form I-94 arrival record.\n");
  write_file_atomic(dir / "r2.txt", "Nothing relevant here.\n");
  const std::vector<corpusgen::RfeGroundTruth> rfes = {
      {"r0", dir / "r0.txt", {"specialty_occupation"}},
      {"r1", dir / "r1.txt", {"maintenance_of_status"}},
      {"r2", dir / "r2.txt", {"specialty_occupation"}},
  };
  const auto e = evaluate_attacks(bank, 0.6, rfes, "specialty_occupation");
  CHECK(e.counts == ConfusionCounts{1, 0, 1, 1});
  const auto strict = evaluate_attacks(bank, 1.0, rfes, "specialty_occupation");
  CHECK(strict.counts.tp == 0);
  CHECK(strict.counts.fp == 0);
  CHECK_THROWS_AS(evaluate_attacks(bank, 0.6, rfes, "nope"), Error);
  CHECK(format_attack_metrics(e).find("Recall") != std::string::npos);

  // Ground truth equal to what the detector flags gives no errors.
  std::vector<corpusgen::RfeGroundTruth> exact = rfes;
  exact[2].planted_attacks = {};
  const auto ok = evaluate_attacks(bank, 0.6, exact, "specialty_occupation");
  CHECK(ok.counts.fp == 0);
  CHECK(ok.counts.fn == 0);
}
