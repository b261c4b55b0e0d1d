#include "rfekit/corpusgen.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "rfekit/drafting.hpp"
#include "rfekit/error.hpp"
#include "rfekit/io.hpp"

namespace rfekit::corpusgen {

namespace fs = std::filesystem;
using nlohmann::json;

std::size_t Rng::below(std::size_t n) {
  if (n == 0) throw Error(Errc::invalid_argument, "Rng::below(0)");
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x = next();
  while (x >= limit) x = next();
  return static_cast<std::size_t>(x % bound);
}

int Rng::between(int lo, int hi) {
  return lo + static_cast<int>(below(static_cast<std::size_t>(hi - lo + 1)));
}

double Rng::unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

namespace {

// ---------------------------------------------------------------------------
// Phrase pools

const std::vector<std::string> kFirstNames = {
    "Priya", "Wei", "Carlos", "Amara", "Dmitri", "Sofia", "Kenji", "Fatima", "Lucas", "Ananya",
    "Mateo", "Yuki", "Olga", "Samuel", "Leila", "Arjun", "Chen", "Elena", "Tomas", "Nadia"};
const std::vector<std::string> kLastNames = {
    "Sharma", "Zhang", "Rodriguez", "Okafor", "Ivanov", "Rossi", "Tanaka", "Haddad", "Silva",
    "Iyer", "Garcia", "Sato", "Petrova", "Mensah", "Karimi", "Patel", "Liu", "Novak", "Costa", "Ali"};
const std::vector<std::string> kEmployers = {
    "Northwind Analytics LLC", "Bluewater Systems Inc.", "Cedar Ridge Software Corp.",
    "Helix Data Partners LLC", "Summit Engineering Group", "Lakeshore Medical Devices Inc.",
    "Orchard Financial Services", "Granite Cloud Solutions LLC", "Redwood Robotics Inc.",
    "Meridian Consulting Group LLC"};
const std::vector<std::string> kAttorneys = {
    "Margaret L. Chen, Esq.", "David R. Okonkwo, Esq.", "Susan P. Whitfield, Esq.",
    "Rahul K. Mehta, Esq.", "Laura J. Benitez, Esq."};
const std::vector<std::string> kCenters = {"California", "Vermont", "Nebraska", "Texas"};
const std::vector<std::string> kCasePrefixes = {"WAC", "EAC", "LIN", "SRC", "IOE"};

const std::vector<std::string> kApprovalPool = {
    "Notice Type: Approval Notice",
    "Class: H1B  Valid from {date} to {date2}",
    "The above petition has been approved.",
    "The petition indicates that the person for whom you are petitioning is in the United States "
    "and will be employed in the classification requested.",
    "The I-94 at the bottom of this notice reflects the new status and period of stay.",
    "Please contact the consulate if the beneficiary will apply for a visa abroad.",
    "This approval does not by itself guarantee admission to the United States.",
    "NOTICE: Although this petition has been approved, USCIS reserves the right to verify the "
    "information submitted at any time.",
    "The beneficiary may begin employment in the approved classification on the validity start date.",
    "Approval of this petition extends the stay of the beneficiary through the end date shown.",
};

const std::vector<std::string> kReceiptPool = {
    "Notice Type: Receipt Notice",
    "Amount received: $460.00 U.S.",
    "This notice confirms that USCIS received your application or petition.",
    "If any of the above information is incorrect, call customer service immediately.",
    "Processing time: processing times vary by kind of case.",
    "You can check our current processing time for this kind of case on our website.",
    "We will notify you separately about any other case you may have filed.",
    "If you move while this case is pending, please tell us your new address.",
    "This receipt notice is not an approval and does not grant any immigration status.",
    "We may send you a notice to appear at an application support center for biometrics.",
};

const std::vector<std::string> kSharedPool = {
    "Please see the additional information on the back of this notice.",
    "Keep this notice for your records.",
    "If you have questions, visit our website or call customer service.",
    "Your case status is available online with the receipt number above.",
    "Please save this notice and any other notice we send you about this case.",
    "The petitioner and the beneficiary should keep copies of this notice.",
};

// ---------------------------------------------------------------------------
// RFE material

struct BankAttack {
  std::string id;
  std::string description;
  std::vector<std::string> sentences;
};

const std::vector<BankAttack>& bank_attacks() {
  static const std::vector<BankAttack> attacks = {
      {"specialty_occupation",
       "Specialty occupation",
       {"The evidence does not establish that the proffered position qualifies as a specialty "
        "occupation.",
        "The record does not demonstrate that a bachelor's degree in a specific specialty is normally "
        "the minimum requirement for entry into the position.",
        "You have not shown that the duties of the position are so specialized and complex that the "
        "knowledge required is usually associated with a baccalaureate degree.",
        "The petitioner has not established that the degree requirement is common to the industry in "
        "parallel positions among similar organizations.",
        "Submit evidence that the employer normally requires a degree or its equivalent for the "
        "position."}},
      {"beneficiary_qualifications",
       "Beneficiary qualifications",
       {"The evidence does not establish that the beneficiary is qualified to perform services in a "
        "specialty occupation.",
        "Provide a credentials evaluation showing that the foreign degree is equivalent to a United "
        "States bachelor's degree.",
        "Submit copies of the beneficiary's diploma and transcripts from the degree granting "
        "institution.",
        "The record lacks evidence that the beneficiary's combination of education and progressive "
        "work experience equals a degree."}},
      {"employer_employee",
       "Employer-employee relationship",
       {"The petitioner has not established that it will have an employer employee relationship "
        "with the beneficiary.",
        "Provide evidence of the petitioner's right to control the work of the beneficiary at the "
        "client site.",
        "Submit contracts, statements of work, or work orders between the petitioner and the end "
        "client.",
        "Explain who will supervise the beneficiary's daily work and evaluate the beneficiary's "
        "performance."}},
      {"maintenance_of_status",
       "Maintenance of status",
       {"The evidence does not show that the beneficiary has maintained lawful nonimmigrant status "
        "in the United States.",
        "Submit copies of the beneficiary's recent pay statements and Form W-2 to establish "
        "maintenance of status.",
        "Provide the beneficiary's Form I-94 arrival and departure record and evidence of continuous "
        "lawful status."}},
      {"available_work",
       "Specific and non-speculative work",
       {"The petitioner has not established that specific and non-speculative work is available for "
        "the beneficiary for the entire requested period.",
        "Provide an itinerary listing the dates and locations of the services the beneficiary will "
        "perform.",
        "Submit evidence that the work at the third party worksite will be available for the "
        "requested validity period."}},
  };
  return attacks;
}

const std::vector<std::string> kRfeBoilerplate = {
    "This office has reviewed the petition and the supporting documentation submitted.",
    "Additional evidence is required before a decision can be made on this case.",
    "You must submit all requested evidence at one time together with this notice.",
    "If you do not respond by the due date, the petition may be denied as abandoned.",
    "Please include a copy of this notice on top of your response package.",
    "Evidence submitted after the deadline will not be considered.",
    "The petitioner filed Form I-129 seeking to classify the beneficiary as an H-1B nonimmigrant "
    "worker.",
    "The regulations provide a period of eighty four days to respond to this request.",
    "Send your response to the address shown at the bottom of this notice.",
    "Failure to submit the requested evidence may result in denial of the petition.",
};

const std::map<std::string, std::vector<std::string>>& synonyms() {
  static const std::map<std::string, std::vector<std::string>> table = {
      {"position", {"role", "job"}},
      {"evidence", {"documentation", "proof"}},
      {"establish", {"show", "prove"}},
      {"demonstrate", {"show", "prove"}},
      {"record", {"file"}},
      {"submit", {"provide", "send"}},
      {"provide", {"submit", "furnish"}},
      {"duties", {"responsibilities", "tasks"}},
      {"specific", {"particular"}},
      {"minimum", {"baseline", "lowest"}},
      {"complex", {"complicated", "intricate"}},
      {"requires", {"demands", "expects"}},
      {"normally", {"typically", "ordinarily"}},
      {"usually", {"typically", "commonly"}},
      {"similar", {"comparable"}},
      {"copies", {"duplicates"}},
      {"recent", {"latest"}},
      {"explain", {"describe", "clarify"}},
      {"listing", {"showing", "detailing"}},
      {"services", {"tasks", "assignments"}},
      {"qualified", {"eligible"}},
      {"lacks", {"omits"}},
      {"equivalent", {"comparable"}},
      {"daily", {"everyday", "routine"}},
      {"shown", {"demonstrated"}},
      {"continuous", {"uninterrupted"}},
      {"entire", {"whole", "full"}},
      {"available", {"open"}},
      {"contracts", {"agreements"}},
      {"supervise", {"oversee", "manage"}},
  };
  return table;
}

struct SocProfile {
  std::string soc;
  std::vector<std::string> fields;
  std::vector<std::string> degrees;
};

const std::vector<std::string> kScienceDegrees = {"Bachelor of Science", "Master of Science"};
const std::vector<SocProfile> kSocProfiles = {
    {"15-1211", {"Information Systems", "Management Information Systems"}, kScienceDegrees},
    {"15-1252", {"Computer Science", "Software Engineering"}, kScienceDegrees},
    {"15-2051", {"Statistics", "Data Science"}, kScienceDegrees},
    {"17-2141", {"Mechanical Engineering"}, {"Bachelor of Engineering", "Master of Engineering"}},
    {"13-2011", {"Accounting", "Finance"}, {"Bachelor of Commerce", "Master of Accountancy"}},
};
const std::vector<std::string> kInstitutions = {
    "University of Michigan", "Georgia Institute of Technology", "Anna University",
    "Tsinghua University", "University of Sao Paulo", "Purdue University",
    "University of Texas at Austin", "National University of Singapore"};

struct TemplateSource {
  std::string id;
  std::string attack;
  std::vector<std::string> soc;  // empty = wildcard
  std::string body;
};

const std::vector<TemplateSource>& template_sources() {
  static const std::vector<TemplateSource> sources = {
      {"so-15-1211",
       "specialty_occupation",
       {"15-1211"},
       "I. THE POSITION IS A SPECIALTY OCCUPATION\n\n"
       "The Service questions whether the position offered to {{employee_name}} qualifies as a "
       "specialty occupation. The position is classified under SOC code {{soc_code}} (Computer "
       "Systems Analysts). {{employer_name}} requires at least a bachelor's degree in a directly "
       "related field for this role, consistent with industry practice for systems analysis "
       "positions.\n\n"
       "The beneficiary holds a {{degree}} in {{field_of_study}} from {{institution}}, which "
       "directly prepares the beneficiary for the duties described in the petition.\n\n"
       "Submitted on {{today}}."},
      {"so-15-1252",
       "specialty_occupation",
       {"15-1252", "15-2051"},
       "I. THE POSITION IS A SPECIALTY OCCUPATION\n\n"
       "The Service questions whether the position offered to {{employee_name}} qualifies as a "
       "specialty occupation. The position falls under SOC code {{soc_code}}, an occupation for "
       "which the Occupational Outlook Handbook reports that a bachelor's degree in a computational "
       "field is the typical entry requirement. {{employer_name}} has consistently required such a "
       "degree for this role.\n\n"
       "The beneficiary holds a {{degree}} in {{field_of_study}} from {{institution}}.\n\n"
       "Submitted on {{today}}."},
      {"so-general",
       "specialty_occupation",
       {},
       "I. THE POSITION IS A SPECIALTY OCCUPATION\n\n"
       "The Service questions whether the position offered to {{employee_name}} (SOC code "
       "{{soc_code}}) qualifies as a specialty occupation. {{employer_name}} submits the enclosed "
       "expert opinion letter and job postings from parallel positions showing that a degree in a "
       "specific specialty is the normal minimum requirement.\n\n"
       "The beneficiary holds a {{degree}} in {{field_of_study}} from {{institution}}.\n\n"
       "Submitted on {{today}}."},
      {"bq-general",
       "beneficiary_qualifications",
       {},
       "II. THE BENEFICIARY IS QUALIFIED\n\n"
       "{{employee_name}} earned a {{degree}} in {{field_of_study}} from {{institution}}. A "
       "credentials evaluation, diploma and transcripts are enclosed."},
      {"eer-general",
       "employer_employee",
       {},
       "III. EMPLOYER-EMPLOYEE RELATIONSHIP\n\n"
       "{{employer_name}} will supervise and control the work of {{employee_name}} throughout the "
       "requested period. Contracts, statements of work and the organizational chart are "
       "enclosed."},
      {"mos-general",
       "maintenance_of_status",
       {},
       "IV. MAINTENANCE OF STATUS\n\n"
       "{{employee_name}} has maintained lawful status at all times. Recent pay statements, Forms "
       "W-2 and the Form I-94 record are enclosed."},
      {"aw-general",
       "available_work",
       {},
       "V. SPECIFIC AND NON-SPECULATIVE WORK\n\n"
       "{{employer_name}} has specific work available for {{employee_name}} for the entire "
       "requested period, as shown by the enclosed itinerary and end-client letters."},
  };
  return sources;
}

// ---------------------------------------------------------------------------
// Page rendering

class Canvas {
 public:
  Canvas(int w, int h, std::uint8_t bg) : w_(w), h_(h), px_(static_cast<std::size_t>(w * h), bg) {}

  void rect(int x0, int y0, int x1, int y1, std::uint8_t v) {
    for (int y = std::max(0, y0); y < std::min(h_, y1); ++y) {
      for (int x = std::max(0, x0); x < std::min(w_, x1); ++x) px_[static_cast<std::size_t>(y * w_ + x)] = v;
    }
  }

  void outline(int x0, int y0, int x1, int y1, int t, std::uint8_t v) {
    rect(x0, y0, x1, y0 + t, v);
    rect(x0, y1 - t, x1, y1, v);
    rect(x0, y0, x0 + t, y1, v);
    rect(x1 - t, y0, x1, y1, v);
  }

  // A line of "words": 2-px-high ink runs separated by gaps.
  void text_line(int x, int y, int length, std::uint8_t ink, Rng& rng) {
    int cx = x;
    while (cx < x + length) {
      const int word = rng.between(3, 10);
      rect(cx, y, std::min(cx + word, x + length), y + 2, ink);
      cx += word + 2;
    }
  }

  void paragraph(int x, int y, int width, int lines, std::uint8_t ink, Rng& rng) {
    for (int i = 0; i < lines; ++i) {
      const int len = i + 1 == lines ? rng.between(width / 3, width) : rng.between(width * 3 / 4, width);
      text_line(x, y + i * 5, len, ink, rng);
    }
  }

  void speckle(Rng& rng, int amplitude) {
    for (auto& p : px_) {
      const int v = static_cast<int>(p) + rng.between(-amplitude, amplitude);
      p = static_cast<std::uint8_t>(std::clamp(v, 0, 255));
    }
  }

  imagefeat::PageImage image() const {
    return imagefeat::PageImage(static_cast<std::size_t>(w_), static_cast<std::size_t>(h_), px_);
  }

 private:
  int w_, h_;
  std::vector<std::uint8_t> px_;
};

constexpr int kPageWidth = 136;
constexpr int kPageHeight = 176;

imagefeat::PageImage render_first_page(Layout layout, Rng& rng) {
  const auto bg = static_cast<std::uint8_t>(rng.between(225, 250));
  const auto ink = static_cast<std::uint8_t>(rng.between(20, 90));
  const int dx = rng.between(-4, 4);
  const int dy = rng.between(-4, 4);
  Canvas c(kPageWidth, kPageHeight, bg);

  // Shared header band and address block.
  c.rect(10 + dx, 8 + dy, 126 + dx, 18 + dy, ink);
  c.paragraph(10 + dx, 24 + dy, 50, 4, ink, rng);
  c.paragraph(74 + dx, 24 + dy, 50, 4, ink, rng);

  if (layout == Layout::approval) {
    const int box_bottom = rng.between(90, 98);
    c.outline(10 + dx, 50 + dy, 126 + dx, box_bottom + dy, 2, ink);
    c.paragraph(16 + dx, 56 + dy, 100, (box_bottom - 60) / 5, ink, rng);
    c.paragraph(10 + dx, box_bottom + 6 + dy, 112, rng.between(5, 8), ink, rng);
    if (rng.chance(0.85)) {
      // Tear-off I-94 strip.
      for (int x = 4; x < kPageWidth - 4; x += 6) c.rect(x + dx, 146 + dy, x + 3 + dx, 147 + dy, ink);
      c.outline(10 + dx, 150 + dy, 70 + dx, 168 + dy, 1, ink);
      c.paragraph(74 + dx, 152 + dy, 50, 3, ink, rng);
    }
  } else {
    const int box_bottom = rng.between(70, 78);
    c.outline(10 + dx, 50 + dy, 126 + dx, box_bottom + dy, 2, ink);
    c.paragraph(16 + dx, 56 + dy, 100, (box_bottom - 60) / 5, ink, rng);
    const int lines = rng.between(10, 14);
    c.paragraph(10 + dx, box_bottom + 6 + dy, 112, lines, ink, rng);
    c.rect(10 + dx, 158 + dy, rng.between(50, 70) + dx, 162 + dy, ink);
  }
  c.speckle(rng, 6);
  return c.image();
}

// Continuation page carrying only running text; identical distribution for
// every class.
imagefeat::PageImage render_back_page(Rng& rng) {
  const auto bg = static_cast<std::uint8_t>(rng.between(225, 250));
  const auto ink = static_cast<std::uint8_t>(rng.between(20, 90));
  Canvas c(kPageWidth, kPageHeight, bg);
  int y = 10 + rng.between(0, 6);
  while (y < kPageHeight - 20) {
    const int lines = rng.between(3, 7);
    c.paragraph(10, y, 116, lines, ink, rng);
    y += lines * 5 + 6;
  }
  c.speckle(rng, 6);
  return c.image();
}

// ---------------------------------------------------------------------------
// Helpers

drafting::Date random_date(Rng& rng) {
  using namespace std::chrono;
  const sys_days start = year{2019} / January / 1;
  return year_month_day{start + days{rng.between(0, 4 * 365)}};
}

std::string numeric_date(const drafting::Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02u/%02u/%04d", static_cast<unsigned>(d.month()),
                static_cast<unsigned>(d.day()), static_cast<int>(d.year()));
  return buf;
}

std::string digits(Rng& rng, int n) {
  std::string s;
  for (int i = 0; i < n; ++i) s.push_back(static_cast<char>('0' + rng.below(10)));
  return s;
}

std::string person(Rng& rng) { return rng.pick(kFirstNames) + " " + rng.pick(kLastNames); }

std::vector<std::string> split_words(const std::string& s) { return textprep::tokenize(s); }

std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

std::string fill_dates(std::string s, Rng& rng) {
  for (const char* key : {"{date}", "{date2}"}) {
    const auto pos = s.find(key);
    if (pos != std::string::npos) s.replace(pos, std::string(key).size(), numeric_date(random_date(rng)));
  }
  return s;
}

std::string document_text(Layout layout, Rng& rng) {
  const auto& own = layout == Layout::approval ? kApprovalPool : kReceiptPool;
  const auto& other = layout == Layout::approval ? kReceiptPool : kApprovalPool;
  std::vector<std::string> lines = {
      "Department of Homeland Security",
      "U.S. Citizenship and Immigration Services",
      layout == Layout::approval ? "Form I-797A, Notice of Action" : "Form I-797C, Notice of Action",
      "THE UNITED STATES OF AMERICA",
      "Receipt Number: " + rng.pick(kCasePrefixes) + digits(rng, 10) +
          "    Case Type: I129 - Petition for a Nonimmigrant Worker",
      "Received Date: " + numeric_date(random_date(rng)) + "    Notice Date: " +
          numeric_date(random_date(rng)) + "    Page 1 of 1",
      "Petitioner: " + rng.pick(kEmployers),
      "Beneficiary: " + person(rng),
  };

  std::vector<std::size_t> order(own.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  std::vector<std::string> body;
  const int n_own = rng.between(3, 5);
  for (int i = 0; i < n_own; ++i) body.push_back(fill_dates(own[order[static_cast<std::size_t>(i)]], rng));
  const int n_shared = rng.between(2, 4);
  std::vector<std::size_t> shared(kSharedPool.size());
  std::iota(shared.begin(), shared.end(), 0);
  rng.shuffle(shared);
  for (int i = 0; i < n_shared; ++i) body.push_back(kSharedPool[shared[static_cast<std::size_t>(i)]]);
  if (rng.chance(0.15)) body.push_back(fill_dates(rng.pick(other), rng));
  rng.shuffle(body);
  lines.insert(lines.end(), body.begin(), body.end());
  lines.push_back("U.S. Citizenship and Immigration Services, " + rng.pick(kCenters) + " Service Center");
  lines.push_back("Customer Service Telephone: 800-375-5283");

  std::string text;
  for (const auto& l : lines) text += l + "\n";
  return text;
}

json fields_json(const std::string& case_number, const std::string& employee, const std::string& employer,
                 const std::string& attorney, const drafting::Date& rfe_date, const drafting::Date& due) {
  return {{"case_number", case_number},
          {"employee_name", employee},
          {"employer_name", employer},
          {"attorney_name", attorney},
          {"rfe_date", drafting::iso_date(rfe_date)},
          {"response_due_date", drafting::iso_date(due)}};
}

void write_text(const fs::path& path, const std::string& s) { write_file_atomic(path, s); }

}  // namespace

void CorpusConfig::validate() const {
  if (classes.size() < 2) throw Error(Errc::invalid_argument, "corpus needs at least two classes");
  for (const auto& c : classes) {
    if (c.count < 1) throw Error(Errc::invalid_argument, "class '" + c.label + "' needs at least one document");
  }
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error(Errc::invalid_argument, "train_fraction must lie in (0, 1)");
  }
  if (n_rfes < 0) throw Error(Errc::invalid_argument, "n_rfes must be >= 0");
  if (!(ocr_noise_rate >= 0.0 && ocr_noise_rate < 1.0)) {
    throw Error(Errc::invalid_argument, "ocr_noise_rate must lie in [0, 1)");
  }
  if (!(second_attack_rate >= 0.0 && second_attack_rate <= 1.0)) {
    throw Error(Errc::invalid_argument, "second_attack_rate must lie in [0, 1]");
  }
  double sum = 0.0;
  for (const auto& share : attack_mix) {
    if (share.proportion < 0.0) throw Error(Errc::invalid_argument, "negative attack proportion");
    const bool known = std::any_of(bank_attacks().begin(), bank_attacks().end(),
                                   [&](const BankAttack& a) { return a.id == share.attack_id; });
    if (!known) throw Error(Errc::invalid_argument, "unknown attack '" + share.attack_id + "' in mix");
    sum += share.proportion;
  }
  if (attack_mix.empty() || std::abs(sum - 1.0) > 1e-9) {
    throw Error(Errc::invalid_argument, "attack mix proportions must sum to 1");
  }
}

json CorpusConfig::to_json() const {
  json cls = json::array();
  for (const auto& c : classes) {
    cls.push_back({{"label", c.label}, {"layout", c.layout == Layout::approval ? "approval" : "receipt"},
                   {"count", c.count}});
  }
  json mix = json::array();
  for (const auto& m : attack_mix) mix.push_back({{"attack", m.attack_id}, {"proportion", m.proportion}});
  return {{"seed", seed},
          {"classes", cls},
          {"train_fraction", train_fraction},
          {"n_rfes", n_rfes},
          {"attack_mix", mix},
          {"second_attack_rate", second_attack_rate},
          {"ocr_noise_rate", ocr_noise_rate}};
}

std::vector<int> apportion(const std::vector<double>& proportions, int total) {
  std::vector<int> counts(proportions.size(), 0);
  std::vector<std::pair<double, std::size_t>> remainders;
  int assigned = 0;
  for (std::size_t i = 0; i < proportions.size(); ++i) {
    const double exact = proportions[i] * total;
    counts[i] = static_cast<int>(std::floor(exact + 1e-9));
    assigned += counts[i];
    remainders.push_back({exact - counts[i], i});
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < total && k < remainders.size(); ++k, ++assigned) {
    ++counts[remainders[k].second];
  }
  return counts;
}

std::string degrade_text(const std::string& clean, double rate, Rng& rng) {
  static const std::string kNoiseChars = "abcdefghijklmnopqrstuvwxyz0123456789.,;:'-|/ ";
  if (rate <= 0.0) return clean;
  std::string out;
  out.reserve(clean.size() + clean.size() / 8);
  for (char c : clean) {
    if (c == '\n' || !rng.chance(rate)) {
      out.push_back(c);
      continue;
    }
    switch (rng.below(3)) {
      case 0: out.push_back(kNoiseChars[rng.below(kNoiseChars.size())]); break;
      case 1: break;
      default:
        out.push_back(kNoiseChars[rng.below(kNoiseChars.size())]);
        out.push_back(c);
        break;
    }
  }
  return out;
}

double token_overlap(const std::vector<std::string>& original, const std::vector<std::string>& paraphrase) {
  if (original.empty()) return 1.0;
  std::map<std::string, int> counts;
  for (const auto& t : paraphrase) ++counts[t];
  std::size_t shared = 0;
  for (const auto& t : original) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++shared;
    }
  }
  return static_cast<double>(shared) / static_cast<double>(original.size());
}

std::vector<std::string> apply_edits(std::vector<std::string> tokens, const ParaphraseEdits& edits) {
  if (edits.drop && *edits.drop < tokens.size()) {
    tokens.erase(tokens.begin() + static_cast<std::ptrdiff_t>(*edits.drop));
  }
  if (edits.swap && *edits.swap + 1 < tokens.size()) std::swap(tokens[*edits.swap], tokens[*edits.swap + 1]);
  if (edits.substitute && edits.substitute->first < tokens.size()) {
    tokens[edits.substitute->first] = edits.substitute->second;
  }
  return tokens;
}

ParaphraseEdits draw_edits(const std::vector<std::string>& tokens, Rng& rng) {
  ParaphraseEdits edits;
  if (tokens.size() < 3) return edits;
  auto acceptable = [&](const ParaphraseEdits& e) {
    return token_overlap(tokens, apply_edits(tokens, e)) >= kMinParaphraseOverlap;
  };

  if (rng.chance(0.5)) {
    ParaphraseEdits trial = edits;
    trial.drop = rng.below(tokens.size());
    if (acceptable(trial)) edits = trial;
  }
  const std::size_t after_drop = tokens.size() - (edits.drop ? 1 : 0);
  if (rng.chance(0.5) && after_drop >= 2) {
    ParaphraseEdits trial = edits;
    trial.swap = rng.below(after_drop - 1);
    if (acceptable(trial)) edits = trial;
  }
  if (rng.chance(0.5)) {
    const auto current = apply_edits(tokens, edits);
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < current.size(); ++i) {
      if (synonyms().count(current[i])) candidates.push_back(i);
    }
    if (!candidates.empty()) {
      const std::size_t at = rng.pick(candidates);
      ParaphraseEdits trial = edits;
      trial.substitute = {{at, rng.pick(synonyms().at(current[at]))}};
      if (acceptable(trial)) edits = trial;
    }
  }
  return edits;
}

std::vector<std::string> paraphrase_sentence(const std::vector<std::string>& tokens, Rng& rng) {
  return apply_edits(tokens, draw_edits(tokens, rng));
}

json generate_corpus(const CorpusConfig& config, const fs::path& out_dir) {
  config.validate();
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) {
    throw Error(Errc::io_error, "cannot create output directory " + out_dir.string());
  }
  Rng rng(config.seed);

  // Documents: exact per-class counts, shuffled, stratified split.
  struct Planned {
    std::size_t cls;
    bool train;
  };
  std::vector<Planned> planned;
  for (std::size_t c = 0; c < config.classes.size(); ++c) {
    const int n = config.classes[c].count;
    const int n_train = static_cast<int>(std::lround(config.train_fraction * n));
    for (int i = 0; i < n; ++i) planned.push_back({c, i < n_train});
  }
  rng.shuffle(planned);

  json documents = json::array();
  for (std::size_t i = 0; i < planned.size(); ++i) {
    const auto& spec = config.classes[planned[i].cls];
    char id[32];
    std::snprintf(id, sizeof id, "doc_%04zu", i);
    const fs::path rel = fs::path("docs") / id;
    json pages = json::array();
    std::vector<imagefeat::PageImage> images = {render_first_page(spec.layout, rng)};
    if (rng.chance(0.3)) images.push_back(render_back_page(rng));
    for (std::size_t p = 0; p < images.size(); ++p) {
      const fs::path page = rel / ("page_" + std::to_string(p + 1) + ".pgm");
      write_text(out_dir / page, imagefeat::encode_pgm(images[p]));
      pages.push_back(page.generic_string());
    }
    const std::string clean = document_text(spec.layout, rng);
    const std::string degraded = degrade_text(clean, config.ocr_noise_rate, rng);
    write_text(out_dir / rel / "clean.txt", clean);
    write_text(out_dir / rel / "degraded.txt", degraded);
    documents.push_back({{"id", id},
                         {"label", spec.label},
                         {"split", planned[i].train ? "train" : "test"},
                         {"pages", pages},
                         {"clean_text", (rel / "clean.txt").generic_string()},
                         {"degraded_text", (rel / "degraded.txt").generic_string()}});
  }

  // Example bank.
  const auto& attacks = bank_attacks();
  json bank_attacks_json = json::array();
  for (const auto& a : attacks) {
    bank_attacks_json.push_back({{"id", a.id}, {"description", a.description}, {"sentences", a.sentences}});
  }
  write_text(out_dir / "bank.json",
             json{{"format", "rfekit-bank"}, {"version", 1}, {"attacks", bank_attacks_json}}.dump(2) + "\n");

  // RFEs.
  std::vector<double> shares;
  for (const auto& m : config.attack_mix) shares.push_back(m.proportion);
  const auto primary_counts = apportion(shares, config.n_rfes);
  std::vector<std::string> primaries;
  for (std::size_t k = 0; k < primary_counts.size(); ++k) {
    for (int i = 0; i < primary_counts[k]; ++i) primaries.push_back(config.attack_mix[k].attack_id);
  }
  rng.shuffle(primaries);

  json rfes = json::array();
  std::vector<drafting::BeneficiaryRecord> records;
  for (int r = 0; r < config.n_rfes; ++r) {
    char id[32];
    std::snprintf(id, sizeof id, "rfe_%04d", r);
    std::vector<std::string> planted = {primaries[static_cast<std::size_t>(r)]};
    if (rng.chance(config.second_attack_rate)) {
      std::vector<std::string> others;
      for (const auto& a : attacks) {
        if (a.id != planted.front()) others.push_back(a.id);
      }
      planted.push_back(rng.pick(others));
    }
    // Declaration order, matching detector output order.
    std::vector<std::string> ordered;
    for (const auto& a : attacks) {
      if (std::find(planted.begin(), planted.end(), a.id) != planted.end()) ordered.push_back(a.id);
    }

    const std::string case_number = rng.pick(kCasePrefixes) + "-" + digits(rng, 2) + "-" + digits(rng, 3) +
                                    "-" + digits(rng, 5);
    const std::string employee = person(rng);
    const std::string employer = rng.pick(kEmployers);
    const std::string attorney = rng.pick(kAttorneys);
    const auto rfe_date = random_date(rng);
    const auto due = drafting::Date{std::chrono::sys_days{rfe_date} + std::chrono::days{rng.pick(std::vector<int>{84, 87})}};
    auto fmt = [&](const drafting::Date& d) { return rng.chance(0.5) ? drafting::long_date(d) : numeric_date(d); };

    std::vector<std::string> body;
    json sentences = json::array();
    for (const auto& attack_id : ordered) {
      const auto& a = *std::find_if(attacks.begin(), attacks.end(), [&](const BankAttack& x) { return x.id == attack_id; });
      std::vector<std::size_t> idx(a.sentences.size());
      std::iota(idx.begin(), idx.end(), 0);
      rng.shuffle(idx);
      const std::size_t n_planted = std::min<std::size_t>(2, idx.size());
      for (std::size_t k = 0; k < n_planted; ++k) {
        const auto original = split_words(a.sentences[idx[k]]);
        const auto para = paraphrase_sentence(original, rng);
        const std::string line = join_words(para);
        body.push_back(line);
        sentences.push_back({{"attack", attack_id},
                             {"bank_sentence", idx[k]},
                             {"text", line},
                             {"overlap", token_overlap(original, para)}});
      }
    }
    std::vector<std::size_t> boiler(kRfeBoilerplate.size());
    std::iota(boiler.begin(), boiler.end(), 0);
    rng.shuffle(boiler);
    const int n_boiler = rng.between(3, 5);
    for (int k = 0; k < n_boiler; ++k) body.push_back(kRfeBoilerplate[boiler[static_cast<std::size_t>(k)]]);
    rng.shuffle(body);

    std::string text = "U.S. Department of Homeland Security\nU.S. Citizenship and Immigration Services\n\n"
                       "REQUEST FOR EVIDENCE\n\n";
    text += "Case Number: " + case_number + "\n";
    text += "Date of Notice: " + fmt(rfe_date) + "\n";
    text += "Beneficiary: " + employee + "\n";
    text += "Petitioner: " + employer + "\n";
    text += "Attorney of Record: " + attorney + "\n";
    text += "Response Due: " + fmt(due) + "\n\n";
    for (std::size_t k = 0; k < body.size(); ++k) {
      text += body[k] + "\n";
      if (k % 3 == 2) text += "\n";
    }
    text += "\nSincerely,\nDirector, " + rng.pick(kCenters) + " Service Center\n";

    const fs::path rel = fs::path("rfes") / (std::string(id) + ".txt");
    write_text(out_dir / rel, text);

    const auto& profile = rng.pick(kSocProfiles);
    records.push_back({case_number, profile.soc, rng.pick(profile.fields), rng.pick(profile.degrees),
                       rng.pick(kInstitutions)});

    rfes.push_back({{"id", id},
                    {"text", rel.generic_string()},
                    {"planted_attacks", ordered},
                    {"fields", fields_json(case_number, employee, employer, attorney, rfe_date, due)},
                    {"soc_code", profile.soc},
                    {"sentences", sentences}});
  }
  write_text(out_dir / "beneficiaries.json",
             drafting::BeneficiaryStore::from_records(records).to_json().dump(2) + "\n");

  // Template library.
  json templates = json::array();
  for (const auto& t : template_sources()) {
    const std::string file = t.id + ".txt";
    write_text(out_dir / "templates" / file, t.body + "\n");
    json soc = t.soc.empty() ? json("*") : json(t.soc);
    templates.push_back({{"id", t.id}, {"attack", t.attack}, {"soc", soc}, {"file", file}});
  }
  write_text(out_dir / "templates" / "manifest.json",
             json{{"format", "rfekit-templates"}, {"version", 1}, {"templates", templates}}.dump(2) + "\n");

  std::vector<std::string> labels;
  for (const auto& c : config.classes) labels.push_back(c.label);
  const json cfg = config.to_json();
  json manifest = {{"format", "rfekit-corpus"},
                   {"version", 1},
                   {"config", cfg},
                   {"config_hash", sha256_hex(cfg.dump())},
                   {"classes", labels},
                   {"documents", documents},
                   {"rfes", rfes},
                   {"bank", "bank.json"},
                   {"beneficiaries", "beneficiaries.json"},
                   {"templates", "templates"}};

  // Overlap audit: every planted sentence must keep the guaranteed overlap.
  for (const auto& r : rfes) {
    for (const auto& s : r.at("sentences")) {
      if (s.at("overlap").get<double>() < kMinParaphraseOverlap) {
        throw Error(Errc::invalid_argument, "paraphrase overlap audit failed in " + r.at("id").get<std::string>());
      }
    }
  }
  write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
  return manifest;
}

json read_manifest(const fs::path& corpus_dir) {
  json doc;
  try {
    doc = json::parse(read_file(corpus_dir / "manifest.json"));
  } catch (const json::exception& e) {
    throw Error(Errc::parse_error, std::string("corpus manifest: ") + e.what());
  }
  if (doc.value("format", std::string()) != "rfekit-corpus") {
    throw Error(Errc::parse_error, "corpus manifest: wrong format tag");
  }
  if (doc.value("version", 0) != 1) throw Error(Errc::version_mismatch, "corpus manifest: unsupported version");
  return doc;
}

LoadedCorpus load_documents(const fs::path& corpus_dir, TextChannel channel) {
  const auto manifest = read_manifest(corpus_dir);
  LoadedCorpus corpus;
  try {
    corpus.classes = manifest.at("classes").get<std::vector<std::string>>();
    for (const auto& d : manifest.at("documents")) {
      CorpusDocument cd;
      cd.doc.id = d.at("id").get<std::string>();
      cd.label = d.at("label").get<std::string>();
      cd.train = d.at("split").get<std::string>() == "train";
      for (const auto& p : d.at("pages")) {
        cd.doc.pages.push_back(imagefeat::decode_pgm(read_file(corpus_dir / p.get<std::string>())));
      }
      const auto& key = channel == TextChannel::clean ? "clean_text" : "degraded_text";
      cd.doc.text = read_file(corpus_dir / d.at(key).get<std::string>());
      corpus.documents.push_back(std::move(cd));
    }
  } catch (const json::exception& e) {
    throw Error(Errc::parse_error, std::string("corpus manifest: ") + e.what());
  }
  return corpus;
}

std::vector<RfeGroundTruth> load_rfes(const fs::path& corpus_dir) {
  const auto manifest = read_manifest(corpus_dir);
  std::vector<RfeGroundTruth> out;
  try {
    for (const auto& r : manifest.at("rfes")) {
      out.push_back({r.at("id").get<std::string>(), corpus_dir / r.at("text").get<std::string>(),
                     r.at("planted_attacks").get<std::vector<std::string>>()});
    }
  } catch (const json::exception& e) {
    throw Error(Errc::parse_error, std::string("corpus manifest: ") + e.what());
  }
  return out;
}

}  // namespace rfekit::corpusgen
