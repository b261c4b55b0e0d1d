#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rfekit/attackdetect.hpp"
#include "rfekit/error.hpp"

namespace rfekit::drafting {

using Date = std::chrono::year_month_day;

// "Month DD, YYYY" or "MM/DD/YYYY"; nullopt for anything else or an
// impossible calendar date.
std::optional<Date> parse_date(std::string_view text);
std::optional<Date> parse_iso_date(std::string_view text);
std::string iso_date(const Date& d);
// "March 3, 2021"
std::string long_date(const Date& d);

struct RfeFields {
  std::optional<std::string> case_number;
  std::optional<std::string> employee_name;
  std::optional<std::string> employer_name;
  std::optional<std::string> attorney_name;
  std::optional<Date> rfe_date;
  std::optional<Date> response_due_date;

  bool operator==(const RfeFields&) const = default;
};

// Per-field regular expressions applied line by line to raw RFE text. The
// first capture group of the first matching pattern is the field value.
class PatternSet {
 public:
  static PatternSet parse(std::string_view json_text);
  // Patterns for the canonical layout, shipped as data/rfe_patterns.json.
  static const PatternSet& builtin();

  const std::vector<std::regex>& patterns_for(std::string_view field) const;

 private:
  std::map<std::string, std::vector<std::regex>, std::less<>> fields_;
};

// Absent fields are data, not errors. A due date earlier than the notice
// date is dropped.
RfeFields extract_fields(std::string_view raw_rfe_text,
                         const PatternSet& patterns = PatternSet::builtin());

struct BeneficiaryRecord {
  std::string case_number;
  std::string soc_code;  // NN-NNNN
  std::string field_of_study;
  std::string degree;
  std::string institution;

  bool operator==(const BeneficiaryRecord&) const = default;
};

bool is_soc_code(std::string_view s);

class BeneficiaryStore {
 public:
  // Rejects duplicate case numbers and malformed SOC codes.
  static BeneficiaryStore parse(std::string_view json_text);
  static BeneficiaryStore from_records(std::vector<BeneficiaryRecord> records);

  // Throws Error{not_found} for an unknown case number.
  const BeneficiaryRecord& lookup(std::string_view case_number) const;
  std::size_t size() const { return records_.size(); }
  nlohmann::json to_json() const;

 private:
  std::map<std::string, BeneficiaryRecord, std::less<>> records_;
};

// Every name a template may reference.
const std::vector<std::string>& field_namespace();

class Template {
 public:
  // soc_selector == nullopt means the wildcard template for the attack.
  Template(std::string id, std::string applicable_attack,
           std::optional<std::vector<std::string>> soc_selector, std::string body);

  const std::string& id() const { return id_; }
  const std::string& applicable_attack() const { return attack_; }
  const std::optional<std::vector<std::string>>& soc_selector() const { return soc_selector_; }
  bool is_wildcard() const { return !soc_selector_.has_value(); }
  const std::string& body() const { return body_; }
  // Distinct placeholder names in order of first appearance.
  std::vector<std::string> placeholders() const;

  struct Segment {
    bool placeholder;
    std::string text;  // literal text or placeholder name
  };
  const std::vector<Segment>& segments() const { return segments_; }

 private:
  std::string id_;
  std::string attack_;
  std::optional<std::vector<std::string>> soc_selector_;
  std::string body_;
  std::vector<Segment> segments_;
};

class TemplateLibrary {
 public:
  explicit TemplateLibrary(std::vector<Template> templates);
  // Reads manifest.json and the body files it names.
  static TemplateLibrary load(const std::filesystem::path& dir);

  const std::vector<Template>& templates() const { return templates_; }

 private:
  std::vector<Template> templates_;
};

using FieldMap = std::map<std::string, std::string, std::less<>>;

// Thrown by fill_template; names() lists every unresolved placeholder.
class MissingFieldsError : public Error {
 public:
  explicit MissingFieldsError(std::vector<std::string> names);
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
};

// For each detected attack in report order: the templates whose selector
// lists soc_code, otherwise that attack's wildcard templates. Throws
// Error{not_found} naming an attack with neither.
std::vector<const Template*> select_templates(const attackdetect::AttackReport& report,
                                              std::optional<std::string_view> soc_code,
                                              const TemplateLibrary& library);

// Single pass: substituted values are never re-scanned for placeholders.
std::string fill_template(const Template& t, const FieldMap& values);

FieldMap field_values(const RfeFields& fields, const BeneficiaryRecord* record,
                      std::optional<Date> today);

inline constexpr std::string_view kSectionDelimiter = "\n\n----\n\n";
inline constexpr std::string_view kMissingMarkerPrefix = "[MISSING: ";

struct FilledSection {
  std::string template_id;
  std::string attack_id;
  std::string text;
  std::vector<attackdetect::Evidence> evidence;
};

struct ResponseDraft {
  std::string preamble;
  std::vector<FilledSection> sections;
  std::vector<std::string> missing;  // sorted, unique

  bool complete() const { return missing.empty(); }
  // preamble, then each section, joined by kSectionDelimiter, newline-terminated.
  std::string text() const;
};

// The case-header preamble used by assemble_response.
const Template& preamble_template();

// Renders the preamble from the RFE fields and appends sections in order.
// Unresolvable preamble fields render as "[MISSING: name]" and are listed in
// ResponseDraft::missing.
ResponseDraft assemble_response(std::vector<FilledSection> filled, const RfeFields& fields);

struct DraftInputs {
  const attackdetect::ExampleBank* bank;
  const BeneficiaryStore* store;
  const TemplateLibrary* library;
  const PatternSet* patterns;
  double tau = attackdetect::kDefaultThreshold;
  std::optional<Date> today;
};

struct DraftOutcome {
  RfeFields fields;
  attackdetect::AttackReport report;
  std::optional<BeneficiaryRecord> record;
  std::vector<std::string> notes;  // lookup failures and similar diagnostics
  ResponseDraft draft;
};

// detect -> extract -> lookup -> select -> fill -> assemble. A failed lookup
// is recorded in notes and leaves the draft incomplete rather than failing.
// Throws when no attack is detected or selection finds no template.
DraftOutcome draft_response(std::string_view rfe_text, const DraftInputs& inputs);

nlohmann::json manifest_json(const DraftOutcome& outcome, const attackdetect::ExampleBank& bank);

}  // namespace rfekit::drafting
