#include "scribe/templates.hpp"

#include <algorithm>
#include <set>

namespace scribe {

namespace {

NoteTemplate make_builtin(std::string id, std::string name, std::string preamble,
                          std::vector<TemplateSection> sections) {
  NoteTemplate t;
  t.id = std::move(id);
  t.name = std::move(name);
  t.kind = TemplateKind::builtin;
  t.preamble = std::move(preamble);
  t.sections = std::move(sections);
  t.created_at = Timestamp{1730419200000};  // 2024-11-01T00:00:00Z
  return t;
}

const char* const kPreamble =
    "You are a clinical documentation assistant for emergency physicians. Draft a note "
    "strictly from the encounter transcript. Do not invent findings, vital signs, doses or "
    "history that are not stated. Where information is absent, write \"Not documented\". "
    "Use concise clinical language and standard abbreviations.";

std::vector<NoteTemplate> make_builtins() {
  std::vector<NoteTemplate> out;
  out.push_back(make_builtin(
      "builtin-full-visit", "Full Visit", kPreamble,
      {
          {"Chief Complaint", "One line: the main reason for the visit in the patient's words."},
          {"History of Present Illness",
           "Onset, duration, character, associated symptoms and relevant negatives."},
          {"Past Medical History", "Relevant conditions, surgeries and social history mentioned."},
          {"Medications and Allergies", "Current medications and allergies as stated."},
          {"Physical Examination", "Examination findings stated during the encounter."},
          {"Investigations", "Tests ordered or results discussed."},
          {"Assessment", "Working diagnosis and differential as discussed by the physician."},
          {"Plan", "Treatments, consultations, follow-up and patient instructions."},
          {"Disposition", "Discharge, admission or transfer as stated."},
      }));
  out.push_back(make_builtin(
      "builtin-narrative", "Narrative", kPreamble,
      {
          {"Narrative",
           "A chronological prose account of the encounter in full sentences, in the third "
           "person, covering presentation, findings and discussion."},
          {"Impression and Plan", "Short prose summary of the impression and the agreed plan."},
      }));
  out.push_back(make_builtin(
      "builtin-handover", "Handover", kPreamble,
      {
          {"Situation", "Who the patient is and why they are in the department."},
          {"Background", "Pertinent history and what has happened so far this visit."},
          {"Assessment", "Current status, vital trends and working diagnosis."},
          {"Recommendation", "What the receiving physician needs to do next."},
          {"Pending Items", "Outstanding results, consults and reassessments with times."},
      }));
  return out;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

const std::vector<NoteTemplate>& builtin_templates() {
  static const std::vector<NoteTemplate> kBuiltins = make_builtins();
  return kBuiltins;
}

bool is_builtin_template_id(std::string_view id) {
  const auto& all = builtin_templates();
  return std::any_of(all.begin(), all.end(), [&](const NoteTemplate& t) { return t.id == id; });
}

std::size_t utf8_length(std::string_view text) {
  std::size_t n = 0;
  for (unsigned char c : text) {
    if ((c & 0xC0) != 0x80) ++n;
  }
  return n;
}

std::vector<Violation> validate_template(const NoteTemplate& t) {
  std::vector<Violation> out;
  if (trim(t.name).empty()) out.push_back({"empty_name", "name", "template name is empty"});
  if (utf8_length(t.name) > kMaxTemplateNameChars) {
    out.push_back({"name_too_long", "name",
                   "name exceeds " + std::to_string(kMaxTemplateNameChars) + " characters"});
  }
  if (t.sections.empty()) {
    out.push_back({"empty_sections", "sections", "template needs at least one section"});
  }
  if (t.sections.size() > kMaxTemplateSections) {
    out.push_back({"too_many_sections", "sections",
                   "more than " + std::to_string(kMaxTemplateSections) + " sections"});
  }
  std::set<std::string> titles;
  for (std::size_t i = 0; i < t.sections.size(); ++i) {
    const auto& s = t.sections[i];
    const std::string field = "sections[" + std::to_string(i) + "]";
    if (trim(s.title).empty()) {
      out.push_back({"empty_section_title", field + ".title", "section title is empty"});
    } else if (s.title.find_first_of("\r\n") != std::string::npos || trim(s.title) != s.title) {
      out.push_back({"malformed_section_title", field + ".title",
                     "section title must be a single line without surrounding spaces"});
    }
    if (!titles.insert(s.title).second) {
      out.push_back({"duplicate_section_title", field + ".title",
                     "section title '" + s.title + "' appears more than once"});
    }
    if (utf8_length(s.instruction_text) > kMaxInstructionChars) {
      out.push_back({"instruction_too_long", field + ".instruction_text",
                     "instruction exceeds " + std::to_string(kMaxInstructionChars) + " characters"});
    }
  }
  if (t.kind == TemplateKind::custom && !t.owner_id) {
    out.push_back({"custom_without_owner", "owner_id", "custom templates need an owner"});
  }
  if (t.kind == TemplateKind::builtin && t.owner_id) {
    out.push_back({"builtin_with_owner", "owner_id", "builtin templates have no owner"});
  }
  return out;
}

std::string output_contract(const NoteTemplate& tmpl) {
  std::string out =
      "Output format: plain text. Start every section on its own line as \"## \" followed by the "
      "exact section title, then the section body on the following lines. Emit every section "
      "exactly once, in the order given, and no other \"## \" headings. Required headings:";
  for (const auto& s : tmpl.sections) out += "\n## " + s.title;
  return out;
}

PromptBundle render_prompt(const NoteTemplate& tmpl, const std::vector<Transcript>& transcripts,
                           const std::optional<std::string>& encounter_context) {
  if (auto problems = validate_template(tmpl); !problems.empty()) {
    throw Error(ErrorCode::ValidationFailed, "template '" + tmpl.id + "' is invalid",
                std::move(problems));
  }
  const bool all_empty = std::all_of(transcripts.begin(), transcripts.end(),
                                     [](const Transcript& t) { return trim(t.full_text).empty(); });
  if (all_empty) throw Error(ErrorCode::EmptyTranscript, "no transcript text to summarize");

  PromptBundle bundle;
  bundle.template_id = tmpl.id;
  bundle.system_text = tmpl.preamble;
  if (!bundle.system_text.empty()) bundle.system_text += "\n\n";
  bundle.system_text +=
      "Output format: plain text. Start every section on its own line as \"## \" followed by "
      "the exact section title, then the section body on the following lines. Emit every "
      "requested section exactly once, in the requested order, and no other \"## \" headings.";

  std::string& u = bundle.user_text;
  u += "Write the clinical note using these sections, in this order:\n\n<sections>\n";
  for (const auto& s : tmpl.sections) {
    u += "## " + s.title + "\n";
    if (!s.instruction_text.empty()) u += s.instruction_text + "\n";
    u += "\n";
  }
  u += "</sections>\n";
  for (std::size_t i = 0; i < transcripts.size(); ++i) {
    u += "\n<transcript index=\"" + std::to_string(i + 1) + "\">\n";
    u += transcripts[i].full_text;
    u += "\n</transcript>\n";
    bundle.transcript_ids.push_back(transcripts[i].id);
  }
  if (encounter_context && !encounter_context->empty()) {
    u += "\n<encounter_context>\n" + *encounter_context + "\n</encounter_context>\n";
  }
  return bundle;
}

std::vector<Section> parse_sections(std::string_view raw, const NoteTemplate& tmpl) {
  const auto& expected = tmpl.sections;
  std::vector<Section> out;
  std::string body;
  bool in_section = false;

  auto flush = [&] {
    if (in_section) out.back().body = trim(body);
    body.clear();
  };

  std::size_t pos = 0;
  while (pos <= raw.size()) {
    auto nl = raw.find('\n', pos);
    if (nl == std::string_view::npos) nl = raw.size();
    const std::string_view line = raw.substr(pos, nl - pos);
    pos = nl + 1;

    std::optional<std::size_t> marker;
    if (line.size() > 3 && line.substr(0, 3) == "## ") {
      const std::string title = trim(line.substr(3));
      for (std::size_t k = 0; k < expected.size(); ++k) {
        if (expected[k].title == title) marker = k;
      }
    }
    if (!marker) {
      if (in_section) {
        body.append(line);
        body += '\n';
      }
      continue;
    }
    if (*marker != out.size()) {
      const bool repeated = *marker < out.size();
      throw Error(ErrorCode::MalformedOutput,
                  repeated ? "section '" + expected[*marker].title + "' repeated or out of order"
                           : "section '" + expected[out.size()].title + "' missing before '" +
                                 expected[*marker].title + "'");
    }
    flush();
    out.push_back({expected[*marker].title, {}});
    in_section = true;
  }
  flush();
  if (out.size() != expected.size()) {
    throw Error(ErrorCode::MalformedOutput, "section '" + expected[out.size()].title + "' missing");
  }
  return out;
}

std::string render_sections(const std::vector<Section>& sections) {
  std::string out;
  for (std::size_t i = 0; i < sections.size(); ++i) {
    if (i) out += "\n";
    out += "## " + sections[i].title + "\n" + sections[i].body + "\n";
  }
  return out;
}

}  // namespace scribe
