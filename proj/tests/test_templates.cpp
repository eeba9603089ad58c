#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>

#include "scribe/errors.hpp"
#include "scribe/llm_gateway.hpp"
#include "scribe/templates.hpp"

using namespace scribe;

namespace {

std::size_t count_of(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
  return n;
}

Transcript transcript(const std::string& id, const std::string& text) {
  Transcript t;
  t.id = id;
  t.recording_id = "r-" + id;
  t.segments = {{0.0, 1.0, text, std::nullopt}};
  t.full_text = text;
  return t;
}

std::set<std::string> codes(const std::vector<Violation>& v) {
  std::set<std::string> out;
  for (const auto& x : v) out.insert(x.code);
  return out;
}

bool blank(const std::string& s) { return s.find_first_not_of(" \t\r\n") == std::string::npos; }

std::size_t code_points(const std::string& s) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < s.size(); ++i) n += (static_cast<unsigned char>(s[i]) & 0xC0) != 0x80;
  return n;
}

// Re-evaluates every rule on its own.
std::set<std::string> oracle_codes(const NoteTemplate& t) {
  std::set<std::string> out;
  if (blank(t.name)) out.insert("empty_name");
  if (code_points(t.name) > 120) out.insert("name_too_long");
  if (t.sections.empty()) out.insert("empty_sections");
  if (t.sections.size() > 40) out.insert("too_many_sections");
  for (std::size_t i = 0; i < t.sections.size(); ++i) {
    const auto& title = t.sections[i].title;
    if (blank(title)) {
      out.insert("empty_section_title");
    } else if (title.find('\n') != std::string::npos || title.find('\r') != std::string::npos ||
               title.front() == ' ' || title.back() == ' ' || title.front() == '\t' || title.back() == '\t') {
      out.insert("malformed_section_title");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (t.sections[j].title == title) out.insert("duplicate_section_title");
    }
    if (code_points(t.sections[i].instruction_text) > 4000) out.insert("instruction_too_long");
  }
  if (t.kind == TemplateKind::custom && !t.owner_id) out.insert("custom_without_owner");
  if (t.kind == TemplateKind::builtin && t.owner_id) out.insert("builtin_with_owner");
  return out;
}

std::string random_word(std::mt19937& rng) {
  static const std::vector<std::string> words = {"Plan", "Assessment", "History", "Vitals", "Meds",
                                                 "Social", "Follow Up", "Imaging", "Labs", "Notes"};
  return words[rng() % words.size()];
}

}  // namespace

TEST_CASE("three builtin templates with the published names") {
  const auto& b = builtin_templates();
  REQUIRE(b.size() == 3);
  CHECK(b[0].name == "Full Visit");
  CHECK(b[1].name == "Narrative");
  CHECK(b[2].name == "Handover");
  for (const auto& t : b) {
    CHECK(t.kind == TemplateKind::builtin);
    CHECK_FALSE(t.owner_id.has_value());
    CHECK(validate_template(t).empty());
    CHECK(is_builtin_template_id(t.id));
  }
  const auto again = builtin_templates();
  CHECK(again == b);
  CHECK(b[0].id == "builtin-full-visit");
}

TEST_CASE("duplicate section title is reported") {
  NoteTemplate t;
  t.name = "Mine";
  t.owner_id = "u";
  t.sections = {{"Plan", "a"}, {"Plan", "b"}};
  const auto v = validate_template(t);
  REQUIRE(v.size() == 1);
  CHECK(v[0].code == "duplicate_section_title");
  CHECK(v[0].field == "sections[1].title");
}

TEST_CASE("validator verdict matches the clause oracle on fuzzed templates") {
  std::mt19937 rng(41);
  int valid = 0;
  for (int trial = 0; trial < 3000; ++trial) {
    NoteTemplate t;
    t.kind = rng() % 4 == 0 ? TemplateKind::builtin : TemplateKind::custom;
    if (rng() % 3 != 0) t.owner_id = "u";
    switch (rng() % 6) {
      case 0: t.name = ""; break;
      case 1: t.name = "   "; break;
      case 2: t.name = std::string(120 + rng() % 3, 'n'); break;
      case 3: {
        // 121 two-byte code points: too long by characters, 242 bytes
        for (int k = 0; k < 119 + static_cast<int>(rng() % 4); ++k) t.name += "\xc3\xa9";
        break;
      }
      default: t.name = "Template " + std::to_string(trial);
    }
    const int n = rng() % 10 == 0 ? 38 + static_cast<int>(rng() % 5) : static_cast<int>(rng() % 6);
    for (int k = 0; k < n; ++k) {
      TemplateSection s;
      switch (rng() % 8) {
        case 0: s.title = ""; break;
        case 1: s.title = " " + random_word(rng); break;
        case 2: s.title = random_word(rng) + "\nX"; break;
        default: s.title = n > 10 ? "S" + std::to_string(k) : random_word(rng);
      }
      s.instruction_text = rng() % 10 == 0 ? std::string(3999 + rng() % 3, 'i') : "Write it.";
      t.sections.push_back(s);
    }
    const auto got = validate_template(t);
    INFO("trial " << trial);
    CHECK(codes(got) == oracle_codes(t));
    valid += got.empty();
  }
  CHECK(valid > 100);
}

TEST_CASE("single-section prompt carries the transcript once") {
  NoteTemplate t;
  t.name = "One";
  t.owner_id = "u";
  t.sections = {{"Note", ""}};
  const auto b = render_prompt(t, {transcript("t1", "hello")});
  CHECK(count_of(b.user_text, "hello") == 1);
  CHECK(b.transcript_ids == std::vector<std::string>{"t1"});
}

TEST_CASE("handover prompt keeps two transcripts in recording order") {
  const auto& handover = builtin_templates()[2];
  const auto b = render_prompt(handover, {transcript("a", "first recording text about sepsis"),
                                          transcript("b", "second recording text about lactate")},
                               std::string("bed 4"));
  const auto p1 = b.user_text.find("first recording text about sepsis");
  const auto p2 = b.user_text.find("second recording text about lactate");
  CHECK(count_of(b.user_text, "first recording text about sepsis") == 1);
  CHECK(count_of(b.user_text, "second recording text about lactate") == 1);
  CHECK(p1 < p2);
  CHECK(b.user_text.find("bed 4") > p2);
  CHECK(b.system_text.rfind(handover.preamble, 0) == 0);
  CHECK(b.system_text.find("## ") != std::string::npos);
}

TEST_CASE("substring counts on random templates and transcripts") {
  std::mt19937 rng(43);
  static const std::vector<std::string> vocab = {"pain", "fever", "cough", "left", "arm", "since",
                                                 "yesterday", "denies", "nausea", "ok"};
  for (int trial = 0; trial < 500; ++trial) {
    NoteTemplate t;
    t.name = "R";
    t.owner_id = "u";
    const int n = 1 + static_cast<int>(rng() % 8);
    for (int k = 0; k < n; ++k) t.sections.push_back({"Title" + std::to_string(k) + "x", "Instruction " + std::to_string(k)});
    std::vector<Transcript> ts;
    const int m = 1 + static_cast<int>(rng() % 4);
    for (int k = 0; k < m; ++k) {
      std::string text = "T" + std::to_string(trial) + "_" + std::to_string(k);
      for (int w = 0; w < 12; ++w) text += " " + vocab[rng() % vocab.size()];
      ts.push_back(transcript(std::to_string(k), text));
    }
    const auto b = render_prompt(t, ts);
    std::size_t last = 0;
    for (const auto& s : t.sections) {
      CHECK(count_of(b.user_text, "## " + s.title + "\n") == 1);
      CHECK(count_of(b.user_text, s.instruction_text + "\n") == 1);
      const auto at = b.user_text.find("## " + s.title + "\n");
      CHECK(at >= last);
      last = at;
    }
    for (const auto& tr : ts) {
      CHECK(count_of(b.user_text, tr.full_text) == 1);
      CHECK(b.user_text.find(tr.full_text) > last);
    }
  }
}

TEST_CASE("render_prompt errors") {
  const auto& full = builtin_templates()[0];
  try {
    render_prompt(full, {transcript("a", ""), transcript("b", "  ")});
    FAIL("expected EmptyTranscript");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyTranscript);
  }
  NoteTemplate bad;
  bad.name = "bad";
  bad.owner_id = "u";
  try {
    render_prompt(bad, {transcript("a", "x")});
    FAIL("expected ValidationFailed");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ValidationFailed);
    CHECK_FALSE(e.violations().empty());
  }
}

TEST_CASE("parse_sections basics") {
  NoteTemplate one;
  one.name = "one";
  one.owner_id = "u";
  one.sections = {{"Note", ""}};
  CHECK(parse_sections("## Note\nbody", one) == std::vector<Section>{{"Note", "body"}});

  NoteTemplate two = one;
  two.sections = {{"Assessment", ""}, {"Plan", ""}};
  try {
    parse_sections("## Assessment\nstable\n", two);
    FAIL("expected MalformedOutput");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MalformedOutput);
  }
  CHECK_THROWS_AS(parse_sections("## Plan\nx\n## Assessment\ny", two), Error);
  CHECK_THROWS_AS(parse_sections("## Assessment\nx\n## Assessment\ny\n## Plan\nz", two), Error);
  // Preamble text before the first marker is ignored.
  CHECK(parse_sections("Sure!\n## Assessment\n  a  \n\n## Plan\nb\n", two) ==
        std::vector<Section>{{"Assessment", "a"}, {"Plan", "b"}});
}

TEST_CASE("render_sections and parse_sections round-trip") {
  std::mt19937 rng(47);
  static const std::vector<std::string> lines = {"stable", "BP 120/80", "- item one", "# not a marker",
                                                 "##nospace", "follow up in 2 weeks", "", "x = y"};
  for (int trial = 0; trial < 1000; ++trial) {
    NoteTemplate t;
    t.name = "R";
    t.owner_id = "u";
    std::vector<Section> sections;
    const int n = 1 + static_cast<int>(rng() % 7);
    for (int k = 0; k < n; ++k) {
      const std::string title = "Section " + std::to_string(k);
      t.sections.push_back({title, ""});
      std::string body;
      const int nl = 1 + static_cast<int>(rng() % 4);
      for (int l = 0; l < nl; ++l) {
        if (l) body += "\n";
        body += lines[rng() % lines.size()];
      }
      const auto b = body.find_first_not_of(" \n");
      body = b == std::string::npos ? "" : body.substr(b, body.find_last_not_of(" \n") - b + 1);
      sections.push_back({title, body});
    }
    INFO(render_sections(sections));
    CHECK(parse_sections(render_sections(sections), t) == sections);
  }
}

TEST_CASE("render then parse over a compliant mock completion reproduces the titles") {
  for (const auto& tmpl : builtin_templates()) {
    const auto b = render_prompt(tmpl, {transcript("a", "patient reports chest pain radiating to the left arm")});
    const auto parsed = parse_sections(mock_completion(b.user_text), tmpl);
    REQUIRE(parsed.size() == tmpl.sections.size());
    for (std::size_t i = 0; i < parsed.size(); ++i) CHECK(parsed[i].title == tmpl.sections[i].title);
  }
}
