// rfekit command-line entry point. Exit codes: 0 success, 1 runtime failure,
// 2 usage error.
#include <chrono>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rfekit/attackdetect.hpp"
#include "rfekit/corpusgen.hpp"
#include "rfekit/drafting.hpp"
#include "rfekit/ensemble.hpp"
#include "rfekit/error.hpp"
#include "rfekit/evalharness.hpp"
#include "rfekit/io.hpp"

namespace fs = std::filesystem;
using namespace rfekit;
using nlohmann::json;

namespace {

struct Options {
  // gen-corpus
  std::string out;
  std::uint64_t seed = 42;
  int docs_per_class = 100;
  int n_rfes = 49;
  double noise = 0.15;
  double train_fraction = 0.8;
  double second_attack_rate = 0.35;
  // train-docs / eval-docs
  std::string corpus;
  std::string model;
  std::string channel = "degraded";
  std::string split = "test";
  double l2 = 1e-3;
  double lr = 0.5;
  int max_iters = 2000;
  double grad_tol = 1e-6;
  // classify
  std::vector<std::string> inputs;
  std::string move_to;
  // detect / draft / eval-attacks
  std::string bank;
  std::string rfe;
  std::string stopwords;
  double tau = attackdetect::kDefaultThreshold;
  std::string beneficiaries;
  std::string templates;
  std::string patterns;
  std::string today;
  std::string target = "specialty_occupation";
};

textprep::StopwordSet load_stopwords(const Options& o) {
  return o.stopwords.empty() ? textprep::StopwordSet::builtin()
                             : textprep::StopwordSet::parse(read_file(o.stopwords));
}

attackdetect::ExampleBank load_bank(const Options& o) {
  return attackdetect::ExampleBank::parse(read_file(o.bank), load_stopwords(o));
}

void emit(const Options& o, const json& j) {
  const std::string text = j.dump(2) + "\n";
  if (o.out.empty()) std::cout << text;
  else write_file_atomic(o.out, text);
}

corpusgen::TextChannel parse_channel(const std::string& s) {
  return s == "clean" ? corpusgen::TextChannel::clean : corpusgen::TextChannel::degraded;
}

int cmd_gen_corpus(const Options& o) {
  corpusgen::CorpusConfig cfg;
  cfg.seed = o.seed;
  for (auto& c : cfg.classes) c.count = o.docs_per_class;
  cfg.n_rfes = o.n_rfes;
  cfg.ocr_noise_rate = o.noise;
  cfg.train_fraction = o.train_fraction;
  cfg.second_attack_rate = o.second_attack_rate;
  cfg.validate();
  const auto manifest = corpusgen::generate_corpus(cfg, o.out);
  std::cerr << "wrote " << manifest.at("documents").size() << " documents and " << manifest.at("rfes").size()
            << " RFEs to " << o.out << " (config_hash " << manifest.at("config_hash").get<std::string>() << ")\n";
  return 0;
}

int cmd_train_docs(const Options& o) {
  const auto corpus = corpusgen::load_documents(o.corpus, parse_channel(o.channel));
  std::vector<ensemble::TrainingDocument> train;
  for (const auto& d : corpus.documents) {
    if (d.train) train.push_back({&d.doc, d.label});
  }
  if (train.empty()) throw Error(Errc::empty_input, "corpus has no training documents");
  linclass::TrainConfig tc{o.l2, o.lr, o.max_iters, o.grad_tol};
  const auto clf = ensemble::train_document_classifier(train, linclass::ClassSet(corpus.classes), tc);
  clf.save(o.model);
  std::cerr << "trained on " << train.size() << " documents; model written to " << o.model << "\n";
  return 0;
}

// A document directory holds its pages as *.pgm (sorted by name) and its text
// in text.txt, degraded.txt or clean.txt (first found).
ensemble::Document load_document_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(Errc::not_found, "not a document directory: " + dir.string());
  ensemble::Document doc;
  doc.id = dir.filename().string();
  std::vector<fs::path> pages;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".pgm") pages.push_back(e.path());
  }
  std::sort(pages.begin(), pages.end());
  for (const auto& p : pages) doc.pages.push_back(imagefeat::decode_pgm(read_file(p)));
  for (const char* name : {"text.txt", "degraded.txt", "clean.txt"}) {
    if (fs::is_regular_file(dir / name)) {
      doc.text = read_file(dir / name);
      break;
    }
  }
  return doc;
}

int cmd_classify(const Options& o) {
  const auto clf = ensemble::DocumentClassifier::load(o.model);
  json results = json::array();
  for (const auto& in : o.inputs) {
    fs::path dir = fs::path(in).lexically_normal();
    if (dir.filename().empty()) dir = dir.parent_path();
    const auto doc = load_document_dir(dir);
    const auto trace = clf.classify(doc);
    json r = ensemble::to_json(trace);
    r["id"] = doc.id;
    r["path"] = dir.generic_string();
    if (!o.move_to.empty()) {
      const fs::path dest_dir = fs::path(o.move_to) / trace.predicted;
      const fs::path dest = dest_dir / dir.filename();
      if (fs::exists(dest) && fs::equivalent(dest, dir)) {
        r["moved_to"] = dest.generic_string();
      } else {
        if (fs::exists(dest)) throw Error(Errc::io_error, "destination already exists: " + dest.string());
        fs::create_directories(dest_dir);
        fs::rename(dir, dest);
        r["moved_to"] = dest.generic_string();
      }
    }
    results.push_back(std::move(r));
  }
  emit(o, results);
  return 0;
}

int cmd_detect(const Options& o) {
  const auto bank = load_bank(o);
  const auto report = attackdetect::detect_in_text(read_file(o.rfe), bank, o.tau);
  emit(o, attackdetect::to_json(report, bank));
  return 0;
}

drafting::Date system_today() {
  return drafting::Date{std::chrono::floor<std::chrono::days>(std::chrono::system_clock::now())};
}

int cmd_draft(const Options& o) {
  const auto bank = load_bank(o);
  const auto store = drafting::BeneficiaryStore::parse(read_file(o.beneficiaries));
  const auto library = drafting::TemplateLibrary::load(o.templates);
  const auto patterns = o.patterns.empty() ? drafting::PatternSet::builtin()
                                           : drafting::PatternSet::parse(read_file(o.patterns));
  drafting::DraftInputs in{&bank, &store, &library, &patterns, o.tau, std::nullopt};
  if (o.today.empty()) {
    in.today = system_today();
  } else {
    in.today = drafting::parse_iso_date(o.today);
    if (!in.today) throw Error(Errc::invalid_argument, "--today must be YYYY-MM-DD");
  }
  const auto outcome = drafting::draft_response(read_file(o.rfe), in);
  const fs::path out_dir = o.out;
  write_file_atomic(out_dir / "draft.txt", outcome.draft.text());
  write_file_atomic(out_dir / "draft.json", drafting::manifest_json(outcome, bank).dump(2) + "\n");
  std::cerr << "status: " << (outcome.draft.complete() ? "complete" : "incomplete");
  if (!outcome.draft.complete()) {
    std::cerr << " (missing:";
    for (const auto& m : outcome.draft.missing) std::cerr << ' ' << m;
    std::cerr << ')';
  }
  std::cerr << "\n";
  return 0;
}

int cmd_eval_docs(const Options& o) {
  const auto clf = ensemble::DocumentClassifier::load(o.model);
  const auto corpus = corpusgen::load_documents(o.corpus, parse_channel(o.channel));
  std::vector<corpusgen::CorpusDocument> selected;
  for (const auto& d : corpus.documents) {
    if (o.split == "all" || (o.split == "train") == d.train) selected.push_back(d);
  }
  if (selected.empty()) throw Error(Errc::empty_input, "no documents in split '" + o.split + "'");
  const auto eval = evalharness::evaluate_documents(clf, corpus.classes, selected);
  std::cout << evalharness::format_table(eval.ensemble);
  std::cout << "image-only accuracy (%)  " << evalharness::format_percent(eval.image_only_accuracy) << "\n";
  std::cout << "text-only accuracy (%)   " << evalharness::format_percent(eval.text_only_accuracy) << "\n";
  if (!o.out.empty()) write_file_atomic(o.out, evalharness::to_json(eval).dump(2) + "\n");
  return 0;
}

int cmd_eval_attacks(const Options& o) {
  Options with_bank = o;
  if (with_bank.bank.empty()) with_bank.bank = (fs::path(o.corpus) / "bank.json").string();
  const auto bank = load_bank(with_bank);
  const auto rfes = corpusgen::load_rfes(o.corpus);
  const auto eval = evalharness::evaluate_attacks(bank, o.tau, rfes, o.target);
  std::cout << evalharness::format_attack_metrics(eval);
  if (!o.out.empty()) write_file_atomic(o.out, evalharness::to_json(eval).dump(2) + "\n");
  return 0;
}

void add_train_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--l2", o.l2, "L2 penalty")->capture_default_str()->check(CLI::NonNegativeNumber);
  cmd->add_option("--lr", o.lr, "initial learning rate")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--max-iters", o.max_iters, "iteration cap")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--grad-tol", o.grad_tol, "gradient-norm stop")->capture_default_str()->check(CLI::PositiveNumber);
}

CLI::Option* add_channel(CLI::App* cmd, Options& o) {
  return cmd->add_option("--channel", o.channel, "text channel")
      ->capture_default_str()
      ->check(CLI::IsMember({"clean", "degraded"}));
}

CLI::Option* add_tau(CLI::App* cmd, Options& o) {
  return cmd->add_option("--tau", o.tau, "similarity threshold in [0,1]")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rfekit: immigration document classification and RFE response drafting"};
  app.set_config("--config", "", "TOML/INI file with option values (flags take precedence)");
  app.require_subcommand(1, 1);
  Options o;

  auto* gen = app.add_subcommand("gen-corpus", "generate a synthetic ground-truthed corpus");
  gen->add_option("--out", o.out, "output directory")->required();
  gen->add_option("--seed", o.seed, "generator seed")->capture_default_str();
  gen->add_option("--docs-per-class", o.docs_per_class)->capture_default_str()->check(CLI::PositiveNumber);
  gen->add_option("--n-rfes", o.n_rfes)->capture_default_str()->check(CLI::NonNegativeNumber);
  gen->add_option("--noise", o.noise, "OCR noise rate in [0,1)")->capture_default_str()->check(CLI::Range(0.0, 0.999999));
  gen->add_option("--train-fraction", o.train_fraction)->capture_default_str()->check(CLI::Range(0.01, 0.99));
  gen->add_option("--second-attack-rate", o.second_attack_rate)->capture_default_str()->check(CLI::Range(0.0, 1.0));

  auto* train = app.add_subcommand("train-docs", "train the image and text document classifiers");
  train->add_option("--corpus", o.corpus, "corpus directory")->required()->check(CLI::ExistingDirectory);
  train->add_option("--model", o.model, "model output directory")->required();
  add_channel(train, o);
  add_train_flags(train, o);

  auto* classify = app.add_subcommand("classify", "classify document directories");
  classify->add_option("--model", o.model, "model directory")->required()->check(CLI::ExistingDirectory);
  classify->add_option("documents", o.inputs, "document directories")->required();
  classify->add_option("--move", o.move_to, "move each document into <dir>/<label>/");
  classify->add_option("--out", o.out, "write results JSON here instead of stdout");

  auto* detect = app.add_subcommand("detect", "detect attacks in an RFE text file");
  detect->add_option("--bank", o.bank, "example bank JSON")->required()->check(CLI::ExistingFile);
  detect->add_option("--rfe", o.rfe, "RFE text file")->required()->check(CLI::ExistingFile);
  detect->add_option("--stopwords", o.stopwords, "stopword file")->check(CLI::ExistingFile);
  detect->add_option("--out", o.out, "write report JSON here instead of stdout");
  add_tau(detect, o);

  auto* draft = app.add_subcommand("draft", "draft a response to an RFE");
  draft->add_option("--rfe", o.rfe, "RFE text file")->required()->check(CLI::ExistingFile);
  draft->add_option("--bank", o.bank, "example bank JSON")->required()->check(CLI::ExistingFile);
  draft->add_option("--beneficiaries", o.beneficiaries, "beneficiary store JSON")->required()->check(CLI::ExistingFile);
  draft->add_option("--templates", o.templates, "template library directory")->required()->check(CLI::ExistingDirectory);
  draft->add_option("--patterns", o.patterns, "field pattern JSON")->check(CLI::ExistingFile);
  draft->add_option("--stopwords", o.stopwords, "stopword file")->check(CLI::ExistingFile);
  draft->add_option("--today", o.today, "date for {{today}} as YYYY-MM-DD (default: system date)");
  draft->add_option("--out", o.out, "output directory for draft.txt and draft.json")->required();
  add_tau(draft, o);

  auto* eval_docs = app.add_subcommand("eval-docs", "evaluate document classification");
  eval_docs->add_option("--corpus", o.corpus)->required()->check(CLI::ExistingDirectory);
  eval_docs->add_option("--model", o.model)->required()->check(CLI::ExistingDirectory);
  eval_docs->add_option("--split", o.split)->capture_default_str()->check(CLI::IsMember({"train", "test", "all"}));
  eval_docs->add_option("--out", o.out, "also write JSON results here");
  add_channel(eval_docs, o);

  auto* eval_attacks = app.add_subcommand("eval-attacks", "evaluate attack detection for one attack type");
  eval_attacks->add_option("--corpus", o.corpus)->required()->check(CLI::ExistingDirectory);
  eval_attacks->add_option("--bank", o.bank, "example bank JSON (default: <corpus>/bank.json)")->check(CLI::ExistingFile);
  eval_attacks->add_option("--stopwords", o.stopwords, "stopword file")->check(CLI::ExistingFile);
  eval_attacks->add_option("--target", o.target)->capture_default_str();
  eval_attacks->add_option("--out", o.out, "also write JSON results here");
  add_tau(eval_attacks, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  CLI::App* cmd = app.get_subcommands().front();
  // Effective values of the active subcommand after flags, config file and
  // defaults are merged.
  std::string effective;
  {
    std::istringstream lines(cmd->config_to_str(true, false));
    for (std::string line; std::getline(lines, line);) {
      if (!line.empty() && line.front() != '[') effective += cmd->get_name() + "." + line + "\n";
    }
  }
  std::cerr << "# rfekit " << cmd->get_name() << " config_hash " << sha256_hex(effective).substr(0, 16) << "\n";
  std::cerr << effective;

  try {
    const std::string name = cmd->get_name();
    if (name == "gen-corpus") return cmd_gen_corpus(o);
    if (name == "train-docs") return cmd_train_docs(o);
    if (name == "classify") return cmd_classify(o);
    if (name == "detect") return cmd_detect(o);
    if (name == "draft") return cmd_draft(o);
    if (name == "eval-docs") return cmd_eval_docs(o);
    if (name == "eval-attacks") return cmd_eval_attacks(o);
  } catch (const Error& e) {
    std::cerr << "error [" << errc_name(e.code()) << "]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
