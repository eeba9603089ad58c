#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace scribe {

// ── Time and identity ────────────────────────────────────────────────────────

/// UTC instant with millisecond precision.
struct Timestamp {
  std::int64_t ms = 0;

  auto operator<=>(const Timestamp&) const = default;
};

Timestamp now_utc();
/// "2025-07-01T08:30:00.125Z"
std::string format_timestamp(Timestamp t);
Timestamp parse_timestamp(std::string_view text);

/// 128 random bits rendered as 32 lowercase hex characters.
std::string new_id();

// ── Enumerations ─────────────────────────────────────────────────────────────

enum class Role { clinician, admin };
enum class MediaFormat { wav_pcm16 };
enum class RecordingStatus { uploaded, transcribing, transcribed, failed };
enum class RecordingEvent { transcription_started, transcription_succeeded, transcription_failed };
enum class NoteStatus { generating, draft, edited, finalized, failed };
enum class NoteEvent { generation_succeeded, generation_failed, edit, finalize };
enum class TemplateKind { builtin, custom };
enum class JobKind { transcription, generation };
enum class JobState { queued, running, done, failed };
enum class SessionStatus { empty, has_audio, transcribed, note_ready, error };

inline constexpr RecordingStatus kRecordingStatuses[] = {
    RecordingStatus::uploaded, RecordingStatus::transcribing, RecordingStatus::transcribed,
    RecordingStatus::failed};
inline constexpr RecordingEvent kRecordingEvents[] = {RecordingEvent::transcription_started,
                                                      RecordingEvent::transcription_succeeded,
                                                      RecordingEvent::transcription_failed};
inline constexpr NoteStatus kNoteStatuses[] = {NoteStatus::generating, NoteStatus::draft,
                                               NoteStatus::edited, NoteStatus::finalized,
                                               NoteStatus::failed};
inline constexpr NoteEvent kNoteEvents[] = {NoteEvent::generation_succeeded,
                                            NoteEvent::generation_failed, NoteEvent::edit,
                                            NoteEvent::finalize};

std::string_view to_string(Role v);
std::string_view to_string(MediaFormat v);
std::string_view to_string(RecordingStatus v);
std::string_view to_string(RecordingEvent v);
std::string_view to_string(NoteStatus v);
std::string_view to_string(NoteEvent v);
std::string_view to_string(TemplateKind v);
std::string_view to_string(JobKind v);
std::string_view to_string(JobState v);
std::string_view to_string(SessionStatus v);

/// Parse the canonical spelling of an enumerator; throws ValidationFailed.
template <typename Enum>
Enum parse_enum(std::string_view text);

/// Accepts "wav", "wav_pcm16", "audio/wav", "audio/x-wav", "audio/wave".
/// Throws UnsupportedMedia otherwise.
MediaFormat parse_media_format(std::string_view text);

// ── Entities ─────────────────────────────────────────────────────────────────

struct UserProfile {
  std::string id;
  std::string display_name;
  Role role = Role::clinician;
  Timestamp created_at;

  bool operator==(const UserProfile&) const = default;
};

struct Facility {
  std::string id;
  std::string name;
  std::string region_tag;

  bool operator==(const Facility&) const = default;
};

struct Session {
  std::string id;
  std::string owner_id;
  std::optional<std::string> facility_id;
  Timestamp created_at;
  std::vector<std::string> recording_ids;
  std::vector<std::string> note_ids;
  bool archived = false;

  bool operator==(const Session&) const = default;
};

struct Recording {
  std::string id;
  std::string session_id;
  std::string blob_ref;
  double duration_s = 0.0;
  int sample_rate_hz = 0;
  MediaFormat media_format = MediaFormat::wav_pcm16;
  RecordingStatus status = RecordingStatus::uploaded;
  Timestamp created_at;

  bool operator==(const Recording&) const = default;
};

struct Segment {
  double start_s = 0.0;
  double end_s = 0.0;
  std::string text;
  std::optional<std::string> speaker_label;

  bool operator==(const Segment&) const = default;
};

struct Transcript {
  std::string id;
  std::string recording_id;
  std::vector<Segment> segments;
  std::string full_text;
  std::string language_tag;
  std::string asr_backend_id;
  std::string asr_model_id;
  Timestamp created_at;

  bool operator==(const Transcript&) const = default;
};

/// Segment texts joined with single spaces.
std::string join_segment_text(const std::vector<Segment>& segments);

struct Section {
  std::string title;
  std::string body;

  bool operator==(const Section&) const = default;
};

struct TokenUsage {
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;

  std::int64_t total() const { return prompt_tokens + completion_tokens; }
  bool operator==(const TokenUsage&) const = default;
};

struct Note {
  std::string id;
  std::string session_id;
  std::string template_id;
  std::vector<std::string> transcript_ids;
  std::vector<Section> sections;
  std::string llm_backend_id;
  std::string llm_model_id;
  TokenUsage token_usage;
  NoteStatus status = NoteStatus::generating;
  Timestamp created_at;
  std::optional<Timestamp> edited_at;
  std::optional<std::string> failure_reason;

  bool operator==(const Note&) const = default;
};

struct TemplateSection {
  std::string title;
  std::string instruction_text;

  bool operator==(const TemplateSection&) const = default;
};

struct NoteTemplate {
  std::string id;
  std::string name;
  TemplateKind kind = TemplateKind::custom;
  std::optional<std::string> owner_id;
  std::vector<TemplateSection> sections;
  std::string preamble;
  Timestamp created_at;

  bool operator==(const NoteTemplate&) const = default;
};

struct Job {
  std::string id;
  JobKind kind = JobKind::transcription;
  std::string subject_id;
  int attempt = 1;
  JobState state = JobState::queued;
  Timestamp enqueued_at;
  std::optional<Timestamp> finished_at;
  std::optional<std::string> error;

  bool operator==(const Job&) const = default;
};

// ── Intrinsic invariants (empty result = valid) ──────────────────────────────

std::vector<std::string> invariant_violations(const UserProfile& v);
std::vector<std::string> invariant_violations(const Facility& v);
std::vector<std::string> invariant_violations(const Session& v);
std::vector<std::string> invariant_violations(const Recording& v);
std::vector<std::string> invariant_violations(const Transcript& v);
/// Checks segment bounds against the source recording length (0.5 s slack).
std::vector<std::string> invariant_violations(const Transcript& v, double recording_duration_s);
std::vector<std::string> invariant_violations(const Note& v);
std::vector<std::string> invariant_violations(const NoteTemplate& v);
std::vector<std::string> invariant_violations(const Job& v);

inline constexpr double kTranscriptEndSlackS = 0.5;

// ── Lifecycle ────────────────────────────────────────────────────────────────

/// Throws IllegalTransition for any pair outside the transition table.
RecordingStatus next_state(RecordingStatus current, RecordingEvent event);
NoteStatus next_state(NoteStatus current, NoteEvent event);

/// Read access to child entities, implemented by the persistence store and by
/// MemoryView for tests and pure computations.
class StoreView {
 public:
  virtual ~StoreView() = default;
  virtual std::optional<Recording> find_recording(const std::string& id) const = 0;
  virtual std::optional<Note> find_note(const std::string& id) const = 0;
};

class MemoryView final : public StoreView {
 public:
  void put(const Recording& r) { recordings_[r.id] = r; }
  void put(const Note& n) { notes_[n.id] = n; }

  std::optional<Recording> find_recording(const std::string& id) const override;
  std::optional<Note> find_note(const std::string& id) const override;

 private:
  std::map<std::string, Recording> recordings_;
  std::map<std::string, Note> notes_;
};

/// Derived, never stored. Throws DanglingReference.
SessionStatus derive_session_status(const Session& session, const StoreView& view);

/// Sum of recording durations. Throws DanglingReference.
double session_audio_seconds(const Session& session, const StoreView& view);

}  // namespace scribe
