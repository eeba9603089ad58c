#include "scribe/json_codec.hpp"

#include "scribe/errors.hpp"

namespace scribe {

namespace {

template <typename T>
std::optional<T> read_opt(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->template get<T>();
}

template <typename Enum>
Enum read_enum(const json& j, const char* key) {
  return parse_enum<Enum>(j.at(key).get<std::string>());
}

}  // namespace

void to_json(json& j, const Timestamp& v) { j = format_timestamp(v); }
void from_json(const json& j, Timestamp& v) { v = parse_timestamp(j.get<std::string>()); }

void to_json(json& j, const UserProfile& v) {
  j = json{{"id", v.id},
           {"display_name", v.display_name},
           {"role", to_string(v.role)},
           {"created_at", v.created_at}};
}
void from_json(const json& j, UserProfile& v) {
  v.id = j.at("id").get<std::string>();
  v.display_name = j.at("display_name").get<std::string>();
  v.role = read_enum<Role>(j, "role");
  v.created_at = j.at("created_at").get<Timestamp>();
}

void to_json(json& j, const Facility& v) {
  j = json{{"id", v.id}, {"name", v.name}, {"region_tag", v.region_tag}};
}
void from_json(const json& j, Facility& v) {
  v.id = j.at("id").get<std::string>();
  v.name = j.at("name").get<std::string>();
  v.region_tag = j.at("region_tag").get<std::string>();
}

void to_json(json& j, const Session& v) {
  j = json{{"id", v.id},
           {"owner_id", v.owner_id},
           {"facility_id", json_or_null(v.facility_id)},
           {"created_at", v.created_at},
           {"recording_ids", v.recording_ids},
           {"note_ids", v.note_ids},
           {"archived", v.archived}};
}
void from_json(const json& j, Session& v) {
  v.id = j.at("id").get<std::string>();
  v.owner_id = j.at("owner_id").get<std::string>();
  v.facility_id = read_opt<std::string>(j, "facility_id");
  v.created_at = j.at("created_at").get<Timestamp>();
  v.recording_ids = j.at("recording_ids").get<std::vector<std::string>>();
  v.note_ids = j.at("note_ids").get<std::vector<std::string>>();
  v.archived = j.at("archived").get<bool>();
}

void to_json(json& j, const Recording& v) {
  j = json{{"id", v.id},
           {"session_id", v.session_id},
           {"blob_ref", v.blob_ref},
           {"duration_s", v.duration_s},
           {"sample_rate_hz", v.sample_rate_hz},
           {"media_format", to_string(v.media_format)},
           {"status", to_string(v.status)},
           {"created_at", v.created_at}};
}
void from_json(const json& j, Recording& v) {
  v.id = j.at("id").get<std::string>();
  v.session_id = j.at("session_id").get<std::string>();
  v.blob_ref = j.at("blob_ref").get<std::string>();
  v.duration_s = j.at("duration_s").get<double>();
  v.sample_rate_hz = j.at("sample_rate_hz").get<int>();
  v.media_format = read_enum<MediaFormat>(j, "media_format");
  v.status = read_enum<RecordingStatus>(j, "status");
  v.created_at = j.at("created_at").get<Timestamp>();
}

void to_json(json& j, const Segment& v) {
  j = json{{"start_s", v.start_s},
           {"end_s", v.end_s},
           {"text", v.text},
           {"speaker_label", json_or_null(v.speaker_label)}};
}
void from_json(const json& j, Segment& v) {
  v.start_s = j.at("start_s").get<double>();
  v.end_s = j.at("end_s").get<double>();
  v.text = j.at("text").get<std::string>();
  v.speaker_label = read_opt<std::string>(j, "speaker_label");
}

void to_json(json& j, const Transcript& v) {
  j = json{{"id", v.id},
           {"recording_id", v.recording_id},
           {"segments", v.segments},
           {"full_text", v.full_text},
           {"language_tag", v.language_tag},
           {"asr_backend_id", v.asr_backend_id},
           {"asr_model_id", v.asr_model_id},
           {"created_at", v.created_at}};
}
void from_json(const json& j, Transcript& v) {
  v.id = j.at("id").get<std::string>();
  v.recording_id = j.at("recording_id").get<std::string>();
  v.segments = j.at("segments").get<std::vector<Segment>>();
  v.full_text = j.at("full_text").get<std::string>();
  v.language_tag = j.at("language_tag").get<std::string>();
  v.asr_backend_id = j.at("asr_backend_id").get<std::string>();
  v.asr_model_id = j.at("asr_model_id").get<std::string>();
  v.created_at = j.at("created_at").get<Timestamp>();
}

void to_json(json& j, const Section& v) { j = json{{"title", v.title}, {"body", v.body}}; }
void from_json(const json& j, Section& v) {
  v.title = j.at("title").get<std::string>();
  v.body = j.at("body").get<std::string>();
}

void to_json(json& j, const TokenUsage& v) {
  j = json{{"prompt_tokens", v.prompt_tokens}, {"completion_tokens", v.completion_tokens}};
}
void from_json(const json& j, TokenUsage& v) {
  v.prompt_tokens = j.at("prompt_tokens").get<std::int64_t>();
  v.completion_tokens = j.at("completion_tokens").get<std::int64_t>();
}

void to_json(json& j, const Note& v) {
  j = json{{"id", v.id},
           {"session_id", v.session_id},
           {"template_id", v.template_id},
           {"transcript_ids", v.transcript_ids},
           {"sections", v.sections},
           {"llm_backend_id", v.llm_backend_id},
           {"llm_model_id", v.llm_model_id},
           {"token_usage", v.token_usage},
           {"status", to_string(v.status)},
           {"created_at", v.created_at},
           {"edited_at", json_or_null(v.edited_at)},
           {"failure_reason", json_or_null(v.failure_reason)}};
}
void from_json(const json& j, Note& v) {
  v.id = j.at("id").get<std::string>();
  v.session_id = j.at("session_id").get<std::string>();
  v.template_id = j.at("template_id").get<std::string>();
  v.transcript_ids = j.at("transcript_ids").get<std::vector<std::string>>();
  v.sections = j.at("sections").get<std::vector<Section>>();
  v.llm_backend_id = j.at("llm_backend_id").get<std::string>();
  v.llm_model_id = j.at("llm_model_id").get<std::string>();
  v.token_usage = j.at("token_usage").get<TokenUsage>();
  v.status = read_enum<NoteStatus>(j, "status");
  v.created_at = j.at("created_at").get<Timestamp>();
  v.edited_at = read_opt<Timestamp>(j, "edited_at");
  v.failure_reason = read_opt<std::string>(j, "failure_reason");
}

void to_json(json& j, const TemplateSection& v) {
  j = json{{"title", v.title}, {"instruction_text", v.instruction_text}};
}
void from_json(const json& j, TemplateSection& v) {
  v.title = j.at("title").get<std::string>();
  v.instruction_text = j.value("instruction_text", std::string{});
}

void to_json(json& j, const NoteTemplate& v) {
  j = json{{"id", v.id},
           {"name", v.name},
           {"kind", to_string(v.kind)},
           {"owner_id", json_or_null(v.owner_id)},
           {"sections", v.sections},
           {"preamble", v.preamble},
           {"created_at", v.created_at}};
}
void from_json(const json& j, NoteTemplate& v) {
  v.id = j.value("id", std::string{});
  v.name = j.at("name").get<std::string>();
  v.kind = j.contains("kind") ? read_enum<TemplateKind>(j, "kind") : TemplateKind::custom;
  v.owner_id = read_opt<std::string>(j, "owner_id");
  v.sections = j.at("sections").get<std::vector<TemplateSection>>();
  v.preamble = j.value("preamble", std::string{});
  v.created_at = j.contains("created_at") ? j.at("created_at").get<Timestamp>() : Timestamp{};
}

void to_json(json& j, const Job& v) {
  j = json{{"id", v.id},
           {"kind", to_string(v.kind)},
           {"subject_id", v.subject_id},
           {"attempt", v.attempt},
           {"state", to_string(v.state)},
           {"enqueued_at", v.enqueued_at},
           {"finished_at", json_or_null(v.finished_at)},
           {"error", json_or_null(v.error)}};
}
void from_json(const json& j, Job& v) {
  v.id = j.at("id").get<std::string>();
  v.kind = read_enum<JobKind>(j, "kind");
  v.subject_id = j.at("subject_id").get<std::string>();
  v.attempt = j.at("attempt").get<int>();
  v.state = read_enum<JobState>(j, "state");
  v.enqueued_at = j.at("enqueued_at").get<Timestamp>();
  v.finished_at = read_opt<Timestamp>(j, "finished_at");
  v.error = read_opt<std::string>(j, "error");
}

}  // namespace scribe
