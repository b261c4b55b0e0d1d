#include "rfekit/drafting.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <set>

#include "rfekit/io.hpp"

namespace rfekit::drafting {

extern const char kBuiltinPatterns[];  // generated from data/rfe_patterns.json

namespace {

constexpr std::array<std::string_view, 12> kMonths = {
    "January", "February", "March",     "April",   "May",      "June",
    "July",    "August",   "September", "October", "November", "December"};

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i]))) {
      return false;
    }
  }
  return true;
}

std::optional<Date> make_date(int y, unsigned m, unsigned d) {
  Date date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!date.ok()) return std::nullopt;
  return date;
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

std::optional<std::string> first_capture(std::string_view text, const std::vector<std::regex>& patterns) {
  const auto lines = lines_of(text);
  for (const auto& re : patterns) {
    for (const auto& line : lines) {
      std::match_results<std::string_view::const_iterator> m;
      if (std::regex_search(line.begin(), line.end(), m, re) && m.size() > 1 && m[1].matched) {
        return m[1].str();
      }
    }
  }
  return std::nullopt;
}

bool is_placeholder_name(std::string_view s) {
  if (s.empty() || !(std::islower(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::islower(static_cast<unsigned char>(c)) || std::isdigit(static_cast<unsigned char>(c)) || c == '_';
  });
}

std::string missing_marker(std::string_view name) {
  return std::string(kMissingMarkerPrefix) + std::string(name) + "]";
}

// Substitutes known values; unknown names render as a missing marker and are
// appended to missing.
std::string render(const Template& t, const FieldMap& values, std::vector<std::string>& missing) {
  std::string out;
  for (const auto& seg : t.segments()) {
    if (!seg.placeholder) {
      out += seg.text;
      continue;
    }
    auto it = values.find(seg.text);
    if (it != values.end()) {
      out += it->second;
    } else {
      out += missing_marker(seg.text);
      if (std::find(missing.begin(), missing.end(), seg.text) == missing.end()) missing.push_back(seg.text);
    }
  }
  return out;
}

nlohmann::json parse_json(std::string_view text, std::string_view what) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, std::string(what) + ": " + e.what());
  }
}

void check_header(const nlohmann::json& doc, std::string_view format, std::string_view what) {
  if (!doc.is_object() || doc.value("format", std::string()) != format) {
    throw Error(Errc::parse_error, std::string(what) + ": expected format '" + std::string(format) + "'");
  }
  if (doc.value("version", 0) != 1) {
    throw Error(Errc::version_mismatch, std::string(what) + ": unsupported version");
  }
}

nlohmann::json evidence_json(const std::vector<attackdetect::Evidence>& evidence) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& e : evidence) {
    out.push_back({{"sentence", e.sentence}, {"example", e.example}, {"similarity", e.similarity}});
  }
  return out;
}

}  // namespace

std::optional<Date> parse_date(std::string_view text) {
  static const std::regex long_form(R"(^\s*([A-Za-z]+)\.?\s+([0-9]{1,2}),\s*([0-9]{4})\s*$)");
  static const std::regex numeric(R"(^\s*([0-9]{1,2})/([0-9]{1,2})/([0-9]{4})\s*$)");
  const std::string s(text);
  std::smatch m;
  if (std::regex_match(s, m, long_form)) {
    const std::string name = m[1].str();
    for (std::size_t i = 0; i < kMonths.size(); ++i) {
      if (iequals(name, kMonths[i]) || (name.size() == 3 && iequals(name, kMonths[i].substr(0, 3)))) {
        return make_date(std::stoi(m[3].str()), static_cast<unsigned>(i + 1),
                         static_cast<unsigned>(std::stoi(m[2].str())));
      }
    }
    return std::nullopt;
  }
  if (std::regex_match(s, m, numeric)) {
    return make_date(std::stoi(m[3].str()), static_cast<unsigned>(std::stoi(m[1].str())),
                     static_cast<unsigned>(std::stoi(m[2].str())));
  }
  return std::nullopt;
}

std::optional<Date> parse_iso_date(std::string_view text) {
  static const std::regex iso(R"(^([0-9]{4})-([0-9]{2})-([0-9]{2})$)");
  const std::string s(text);
  std::smatch m;
  if (!std::regex_match(s, m, iso)) return std::nullopt;
  return make_date(std::stoi(m[1].str()), static_cast<unsigned>(std::stoi(m[2].str())),
                   static_cast<unsigned>(std::stoi(m[3].str())));
}

std::string iso_date(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
  return buf;
}

std::string long_date(const Date& d) {
  return std::string(kMonths[static_cast<unsigned>(d.month()) - 1]) + " " +
         std::to_string(static_cast<unsigned>(d.day())) + ", " +
         std::to_string(static_cast<int>(d.year()));
}

PatternSet PatternSet::parse(std::string_view json_text) {
  const auto doc = parse_json(json_text, "pattern file");
  check_header(doc, "rfekit-patterns", "pattern file");
  PatternSet set;
  try {
    for (const auto& [field, list] : doc.at("fields").items()) {
      if (std::find(field_namespace().begin(), field_namespace().end(), field) == field_namespace().end()) {
        throw Error(Errc::parse_error, "pattern file: unknown field '" + field + "'");
      }
      auto& compiled = set.fields_[field];
      for (const auto& p : list) {
        try {
          compiled.emplace_back(p.get<std::string>(), std::regex::ECMAScript);
        } catch (const std::regex_error& e) {
          throw Error(Errc::parse_error, "pattern file: bad regex for '" + field + "': " + e.what());
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, std::string("pattern file: ") + e.what());
  }
  return set;
}

const PatternSet& PatternSet::builtin() {
  static const PatternSet set = parse(kBuiltinPatterns);
  return set;
}

const std::vector<std::regex>& PatternSet::patterns_for(std::string_view field) const {
  static const std::vector<std::regex> none;
  auto it = fields_.find(field);
  return it == fields_.end() ? none : it->second;
}

RfeFields extract_fields(std::string_view raw_rfe_text, const PatternSet& patterns) {
  RfeFields f;
  f.case_number = first_capture(raw_rfe_text, patterns.patterns_for("case_number"));
  f.employee_name = first_capture(raw_rfe_text, patterns.patterns_for("employee_name"));
  f.employer_name = first_capture(raw_rfe_text, patterns.patterns_for("employer_name"));
  f.attorney_name = first_capture(raw_rfe_text, patterns.patterns_for("attorney_name"));
  if (auto s = first_capture(raw_rfe_text, patterns.patterns_for("rfe_date"))) f.rfe_date = parse_date(*s);
  if (auto s = first_capture(raw_rfe_text, patterns.patterns_for("response_due_date"))) {
    f.response_due_date = parse_date(*s);
  }
  if (f.case_number && f.case_number->empty()) f.case_number.reset();
  if (f.rfe_date && f.response_due_date &&
      std::chrono::sys_days{*f.response_due_date} < std::chrono::sys_days{*f.rfe_date}) {
    f.response_due_date.reset();
  }
  return f;
}

bool is_soc_code(std::string_view s) {
  if (s.size() != 7 || s[2] != '-') return false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i != 2 && !std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  }
  return true;
}

BeneficiaryStore BeneficiaryStore::from_records(std::vector<BeneficiaryRecord> records) {
  BeneficiaryStore store;
  for (auto& r : records) {
    if (r.case_number.empty()) throw Error(Errc::invalid_argument, "beneficiary record without case number");
    if (!is_soc_code(r.soc_code)) {
      throw Error(Errc::invalid_argument, "case " + r.case_number + ": malformed SOC code '" + r.soc_code + "'");
    }
    if (store.records_.count(r.case_number) != 0) {
      throw Error(Errc::duplicate_key, "duplicate case number '" + r.case_number + "' in beneficiary store");
    }
    std::string key = r.case_number;
    store.records_.emplace(std::move(key), std::move(r));
  }
  return store;
}

BeneficiaryStore BeneficiaryStore::parse(std::string_view json_text) {
  const auto doc = parse_json(json_text, "beneficiary store");
  check_header(doc, "rfekit-beneficiaries", "beneficiary store");
  std::vector<BeneficiaryRecord> records;
  try {
    for (const auto& r : doc.at("records")) {
      records.push_back({r.at("case_number").get<std::string>(), r.at("soc_code").get<std::string>(),
                         r.at("field_of_study").get<std::string>(), r.at("degree").get<std::string>(),
                         r.at("institution").get<std::string>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, std::string("beneficiary store: ") + e.what());
  }
  return from_records(std::move(records));
}

const BeneficiaryRecord& BeneficiaryStore::lookup(std::string_view case_number) const {
  auto it = records_.find(case_number);
  if (it == records_.end()) {
    throw Error(Errc::not_found, "no beneficiary record for case '" + std::string(case_number) + "'");
  }
  return it->second;
}

nlohmann::json BeneficiaryStore::to_json() const {
  nlohmann::json records = nlohmann::json::array();
  for (const auto& [_, r] : records_) {
    records.push_back({{"case_number", r.case_number},
                       {"soc_code", r.soc_code},
                       {"field_of_study", r.field_of_study},
                       {"degree", r.degree},
                       {"institution", r.institution}});
  }
  return {{"format", "rfekit-beneficiaries"}, {"version", 1}, {"records", records}};
}

const std::vector<std::string>& field_namespace() {
  static const std::vector<std::string> names = {
      "case_number", "employee_name", "employer_name", "attorney_name",
      "rfe_date",    "response_due_date", "soc_code",  "field_of_study",
      "degree",      "institution",   "today"};
  return names;
}

Template::Template(std::string id, std::string applicable_attack,
                   std::optional<std::vector<std::string>> soc_selector, std::string body)
    : id_(std::move(id)),
      attack_(std::move(applicable_attack)),
      soc_selector_(std::move(soc_selector)),
      body_(std::move(body)) {
  if (id_.empty() || attack_.empty()) {
    throw Error(Errc::invalid_argument, "template needs an id and an applicable attack");
  }
  if (soc_selector_) {
    for (const auto& code : *soc_selector_) {
      if (!is_soc_code(code)) {
        throw Error(Errc::invalid_argument, "template " + id_ + ": malformed SOC code '" + code + "'");
      }
    }
  }
  std::size_t pos = 0;
  std::string literal;
  while (pos < body_.size()) {
    const auto open = body_.find("{{", pos);
    if (open == std::string::npos) {
      literal += body_.substr(pos);
      break;
    }
    literal += body_.substr(pos, open - pos);
    const auto close = body_.find("}}", open + 2);
    const std::string name = close == std::string::npos ? std::string() : body_.substr(open + 2, close - open - 2);
    if (!is_placeholder_name(name)) {
      throw Error(Errc::parse_error, "template " + id_ + ": malformed placeholder at offset " + std::to_string(open));
    }
    if (std::find(field_namespace().begin(), field_namespace().end(), name) == field_namespace().end()) {
      throw Error(Errc::invalid_argument, "template " + id_ + ": unknown placeholder '" + name + "'");
    }
    if (!literal.empty()) segments_.push_back({false, std::move(literal)});
    literal.clear();
    segments_.push_back({true, name});
    pos = close + 2;
  }
  if (!literal.empty()) segments_.push_back({false, std::move(literal)});
}

std::vector<std::string> Template::placeholders() const {
  std::vector<std::string> names;
  for (const auto& seg : segments_) {
    if (seg.placeholder && std::find(names.begin(), names.end(), seg.text) == names.end()) {
      names.push_back(seg.text);
    }
  }
  return names;
}

TemplateLibrary::TemplateLibrary(std::vector<Template> templates) : templates_(std::move(templates)) {
  std::set<std::string> ids;
  for (const auto& t : templates_) {
    if (!ids.insert(t.id()).second) throw Error(Errc::duplicate_key, "duplicate template id '" + t.id() + "'");
  }
}

TemplateLibrary TemplateLibrary::load(const std::filesystem::path& dir) {
  const auto doc = parse_json(read_file(dir / "manifest.json"), "template manifest");
  check_header(doc, "rfekit-templates", "template manifest");
  std::vector<Template> templates;
  try {
    for (const auto& entry : doc.at("templates")) {
      std::optional<std::vector<std::string>> selector;
      const auto& soc = entry.at("soc");
      if (!(soc.is_string() && soc.get<std::string>() == "*")) {
        selector = soc.get<std::vector<std::string>>();
      }
      std::string body = read_file(dir / entry.at("file").get<std::string>());
      while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) body.pop_back();
      templates.emplace_back(entry.at("id").get<std::string>(), entry.at("attack").get<std::string>(),
                             std::move(selector), std::move(body));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, std::string("template manifest: ") + e.what());
  }
  return TemplateLibrary(std::move(templates));
}

namespace {

std::string join(const std::vector<std::string>& names) {
  std::string out;
  for (const auto& n : names) {
    if (!out.empty()) out += ", ";
    out += n;
  }
  return out;
}

}  // namespace

MissingFieldsError::MissingFieldsError(std::vector<std::string> names)
    : Error(Errc::missing_fields, "missing placeholder values: " + join(names)), names_(std::move(names)) {}

std::vector<const Template*> select_templates(const attackdetect::AttackReport& report,
                                              std::optional<std::string_view> soc_code,
                                              const TemplateLibrary& library) {
  std::vector<const Template*> selected;
  for (const auto& attack : report.detected) {
    std::vector<const Template*> specific;
    std::vector<const Template*> wildcard;
    for (const auto& t : library.templates()) {
      if (t.applicable_attack() != attack) continue;
      if (t.is_wildcard()) {
        wildcard.push_back(&t);
      } else if (soc_code && std::find(t.soc_selector()->begin(), t.soc_selector()->end(), *soc_code) !=
                                 t.soc_selector()->end()) {
        specific.push_back(&t);
      }
    }
    const auto& chosen = specific.empty() ? wildcard : specific;
    if (chosen.empty()) {
      throw Error(Errc::not_found, "no response template applies to attack '" + attack + "'");
    }
    selected.insert(selected.end(), chosen.begin(), chosen.end());
  }
  return selected;
}

std::string fill_template(const Template& t, const FieldMap& values) {
  std::vector<std::string> missing;
  std::string out = render(t, values, missing);
  if (!missing.empty()) throw MissingFieldsError(std::move(missing));
  return out;
}

FieldMap field_values(const RfeFields& fields, const BeneficiaryRecord* record, std::optional<Date> today) {
  FieldMap m;
  if (fields.case_number) m["case_number"] = *fields.case_number;
  if (fields.employee_name) m["employee_name"] = *fields.employee_name;
  if (fields.employer_name) m["employer_name"] = *fields.employer_name;
  if (fields.attorney_name) m["attorney_name"] = *fields.attorney_name;
  if (fields.rfe_date) m["rfe_date"] = long_date(*fields.rfe_date);
  if (fields.response_due_date) m["response_due_date"] = long_date(*fields.response_due_date);
  if (record) {
    m["soc_code"] = record->soc_code;
    m["field_of_study"] = record->field_of_study;
    m["degree"] = record->degree;
    m["institution"] = record->institution;
  }
  if (today) m["today"] = long_date(*today);
  return m;
}

std::string ResponseDraft::text() const {
  std::string out = preamble;
  for (const auto& s : sections) {
    out += kSectionDelimiter;
    out += s.text;
  }
  out += '\n';
  return out;
}

const Template& preamble_template() {
  static const Template preamble("preamble", "*", std::nullopt,
                                 "RESPONSE TO REQUEST FOR EVIDENCE\n"
                                 "\n"
                                 "Case Number: {{case_number}}\n"
                                 "Beneficiary: {{employee_name}}\n"
                                 "Petitioner: {{employer_name}}\n"
                                 "Attorney of Record: {{attorney_name}}\n"
                                 "Date of Notice: {{rfe_date}}\n"
                                 "Response Due: {{response_due_date}}");
  return preamble;
}

ResponseDraft assemble_response(std::vector<FilledSection> filled, const RfeFields& fields) {
  if (filled.empty()) throw Error(Errc::empty_input, "cannot assemble a response without sections");
  ResponseDraft draft;
  draft.preamble = render(preamble_template(), field_values(fields, nullptr, std::nullopt), draft.missing);
  draft.sections = std::move(filled);
  std::sort(draft.missing.begin(), draft.missing.end());
  return draft;
}

DraftOutcome draft_response(std::string_view rfe_text, const DraftInputs& inputs) {
  DraftOutcome out;
  out.report = attackdetect::detect_in_text(rfe_text, *inputs.bank, inputs.tau);
  if (out.report.detected.empty()) {
    throw Error(Errc::not_found, "no attack detected above the threshold; nothing to draft");
  }
  out.fields = extract_fields(rfe_text, *inputs.patterns);
  if (!out.fields.case_number) {
    out.notes.push_back("case number not found in RFE text");
  } else {
    try {
      out.record = inputs.store->lookup(*out.fields.case_number);
    } catch (const Error& e) {
      if (e.code() != Errc::not_found) throw;
      out.notes.push_back(e.what());
    }
  }

  const auto selected = select_templates(
      out.report, out.record ? std::optional<std::string_view>(out.record->soc_code) : std::nullopt,
      *inputs.library);
  const auto values = field_values(out.fields, out.record ? &*out.record : nullptr, inputs.today);
  std::vector<std::string> missing;
  std::vector<FilledSection> sections;
  for (const Template* t : selected) {
    FilledSection s{t->id(), t->applicable_attack(), render(*t, values, missing), {}};
    for (const auto& e : out.report.evidence) {
      if (inputs.bank->attacks()[inputs.bank->examples()[e.example].attack].id == t->applicable_attack()) {
        s.evidence.push_back(e);
      }
    }
    sections.push_back(std::move(s));
  }
  out.draft = assemble_response(std::move(sections), out.fields);
  for (auto& m : missing) out.draft.missing.push_back(std::move(m));
  std::sort(out.draft.missing.begin(), out.draft.missing.end());
  out.draft.missing.erase(std::unique(out.draft.missing.begin(), out.draft.missing.end()),
                          out.draft.missing.end());
  return out;
}

nlohmann::json manifest_json(const DraftOutcome& outcome, const attackdetect::ExampleBank& bank) {
  auto opt = [](const std::optional<std::string>& s) -> nlohmann::json {
    return s ? nlohmann::json(*s) : nlohmann::json(nullptr);
  };
  auto opt_date = [](const std::optional<Date>& d) -> nlohmann::json {
    return d ? nlohmann::json(iso_date(*d)) : nlohmann::json(nullptr);
  };
  nlohmann::json sections = nlohmann::json::array();
  for (const auto& s : outcome.draft.sections) {
    sections.push_back({{"template", s.template_id}, {"attack", s.attack_id}, {"evidence", evidence_json(s.evidence)}});
  }
  nlohmann::json record = nullptr;
  if (outcome.record) {
    record = {{"case_number", outcome.record->case_number},
              {"soc_code", outcome.record->soc_code},
              {"field_of_study", outcome.record->field_of_study},
              {"degree", outcome.record->degree},
              {"institution", outcome.record->institution}};
  }
  return {{"format", "rfekit-draft-manifest"},
          {"version", 1},
          {"status", outcome.draft.complete() ? "complete" : "incomplete"},
          {"missing", outcome.draft.missing},
          {"fields",
           {{"case_number", opt(outcome.fields.case_number)},
            {"employee_name", opt(outcome.fields.employee_name)},
            {"employer_name", opt(outcome.fields.employer_name)},
            {"attorney_name", opt(outcome.fields.attorney_name)},
            {"rfe_date", opt_date(outcome.fields.rfe_date)},
            {"response_due_date", opt_date(outcome.fields.response_due_date)}}},
          {"beneficiary", record},
          {"notes", outcome.notes},
          {"report", attackdetect::to_json(outcome.report, bank)},
          {"sections", sections}};
}

}  // namespace rfekit::drafting
