#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "scribe/domain.hpp"
#include "scribe/errors.hpp"

namespace scribe {

inline constexpr std::size_t kMaxTemplateNameChars = 120;
inline constexpr std::size_t kMaxTemplateSections = 40;
inline constexpr std::size_t kMaxInstructionChars = 4000;

/// "Full Visit", "Narrative", "Handover". Ids and content are fixed.
const std::vector<NoteTemplate>& builtin_templates();
bool is_builtin_template_id(std::string_view id);

/// Every rule the template breaks; empty means valid.
std::vector<Violation> validate_template(const NoteTemplate& candidate);

/// Number of UTF-8 code points (invalid lead bytes count as one each).
std::size_t utf8_length(std::string_view text);

struct PromptBundle {
  std::string system_text;
  std::string user_text;
  std::string template_id;
  std::vector<std::string> transcript_ids;
};

/// How the model must format its answer. Also restated on repair.
std::string output_contract(const NoteTemplate& tmpl);

/// Throws EmptyTranscript when every transcript is empty, ValidationFailed for
/// an invalid template.
PromptBundle render_prompt(const NoteTemplate& tmpl, const std::vector<Transcript>& transcripts,
                           const std::optional<std::string>& encounter_context = std::nullopt);

/// Splits on "## <title>" lines in template order. Throws MalformedOutput
/// when a title is missing, repeated or out of order.
std::vector<Section> parse_sections(std::string_view raw_text, const NoteTemplate& tmpl);

/// Plain-text rendering used for copy-out and as the inverse of parse_sections.
std::string render_sections(const std::vector<Section>& sections);

}  // namespace scribe
