#include "scribe/domain.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <random>
#include <set>

#include "scribe/errors.hpp"

namespace scribe {

// ── Time ─────────────────────────────────────────────────────────────────────

Timestamp now_utc() {
  using namespace std::chrono;
  return Timestamp{duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count()};
}

std::string format_timestamp(Timestamp t) {
  using namespace std::chrono;
  const milliseconds total{t.ms};
  const auto day = floor<days>(total);
  const year_month_day ymd{sys_days{day}};
  auto rem = total - day;
  const auto h = duration_cast<hours>(rem);
  rem -= h;
  const auto m = duration_cast<minutes>(rem);
  rem -= m;
  const auto s = duration_cast<seconds>(rem);
  rem -= s;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ", int(ymd.year()),
                unsigned(ymd.month()), unsigned(ymd.day()), int(h.count()), int(m.count()),
                int(s.count()), int(rem.count()));
  return buf;
}

namespace {

bool read_int(std::string_view text, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > text.size()) return false;
  const char* first = text.data() + pos;
  const char* last = first + len;
  if (!std::all_of(first, last, [](char c) { return c >= '0' && c <= '9'; })) return false;
  return std::from_chars(first, last, out).ec == std::errc{};
}

}  // namespace

Timestamp parse_timestamp(std::string_view text) {
  using namespace std::chrono;
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0, frac = 0;
  bool ok = text.size() >= 20 && read_int(text, 0, 4, y) && text[4] == '-' &&
            read_int(text, 5, 2, mo) && text[7] == '-' && read_int(text, 8, 2, d) &&
            text[10] == 'T' && read_int(text, 11, 2, h) && text[13] == ':' &&
            read_int(text, 14, 2, mi) && text[16] == ':' && read_int(text, 17, 2, s);
  if (ok) {
    if (text.size() == 20) {
      ok = text[19] == 'Z';
    } else {
      ok = text.size() == 24 && text[19] == '.' && read_int(text, 20, 3, frac) && text[23] == 'Z';
    }
  }
  const year_month_day ymd{year{y}, month{unsigned(mo)}, day{unsigned(d)}};
  if (!ok || !ymd.ok() || h > 23 || mi > 59 || s > 59) {
    throw Error(ErrorCode::ValidationFailed, "bad timestamp: " + std::string(text));
  }
  const auto tp = sys_days{ymd} + hours{h} + minutes{mi} + seconds{s} + milliseconds{frac};
  return Timestamp{duration_cast<milliseconds>(tp.time_since_epoch()).count()};
}

std::string new_id() {
  thread_local std::mt19937_64 rng = [] {
    std::random_device rd;
    std::seed_seq seq{rd(), rd(), rd(), rd(), rd(), rd(), rd(), rd()};
    return std::mt19937_64(seq);
  }();
  const std::uint64_t hi = rng();
  const std::uint64_t lo = rng();
  char buf[33];
  std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(hi),
                static_cast<unsigned long long>(lo));
  return buf;
}

// ── Enumerations ─────────────────────────────────────────────────────────────

std::string_view to_string(Role v) {
  switch (v) {
    case Role::clinician: return "clinician";
    case Role::admin: return "admin";
  }
  return "?";
}

std::string_view to_string(MediaFormat v) {
  switch (v) {
    case MediaFormat::wav_pcm16: return "wav_pcm16";
  }
  return "?";
}

std::string_view to_string(RecordingStatus v) {
  switch (v) {
    case RecordingStatus::uploaded: return "uploaded";
    case RecordingStatus::transcribing: return "transcribing";
    case RecordingStatus::transcribed: return "transcribed";
    case RecordingStatus::failed: return "failed";
  }
  return "?";
}

std::string_view to_string(RecordingEvent v) {
  switch (v) {
    case RecordingEvent::transcription_started: return "transcription_started";
    case RecordingEvent::transcription_succeeded: return "transcription_succeeded";
    case RecordingEvent::transcription_failed: return "transcription_failed";
  }
  return "?";
}

std::string_view to_string(NoteStatus v) {
  switch (v) {
    case NoteStatus::generating: return "generating";
    case NoteStatus::draft: return "draft";
    case NoteStatus::edited: return "edited";
    case NoteStatus::finalized: return "finalized";
    case NoteStatus::failed: return "failed";
  }
  return "?";
}

std::string_view to_string(NoteEvent v) {
  switch (v) {
    case NoteEvent::generation_succeeded: return "generation_succeeded";
    case NoteEvent::generation_failed: return "generation_failed";
    case NoteEvent::edit: return "edit";
    case NoteEvent::finalize: return "finalize";
  }
  return "?";
}

std::string_view to_string(TemplateKind v) {
  switch (v) {
    case TemplateKind::builtin: return "builtin";
    case TemplateKind::custom: return "custom";
  }
  return "?";
}

std::string_view to_string(JobKind v) {
  switch (v) {
    case JobKind::transcription: return "transcription";
    case JobKind::generation: return "generation";
  }
  return "?";
}

std::string_view to_string(JobState v) {
  switch (v) {
    case JobState::queued: return "queued";
    case JobState::running: return "running";
    case JobState::done: return "done";
    case JobState::failed: return "failed";
  }
  return "?";
}

std::string_view to_string(SessionStatus v) {
  switch (v) {
    case SessionStatus::empty: return "empty";
    case SessionStatus::has_audio: return "has_audio";
    case SessionStatus::transcribed: return "transcribed";
    case SessionStatus::note_ready: return "note_ready";
    case SessionStatus::error: return "error";
  }
  return "?";
}

namespace {

template <typename Enum, std::size_t N>
Enum parse_from(std::string_view text, const std::array<Enum, N>& values, const char* what) {
  for (Enum v : values) {
    if (to_string(v) == text) return v;
  }
  throw Error(ErrorCode::ValidationFailed,
              std::string("unknown ") + what + " '" + std::string(text) + "'");
}

}  // namespace

template <>
Role parse_enum<Role>(std::string_view t) {
  return parse_from(t, std::array{Role::clinician, Role::admin}, "role");
}
template <>
MediaFormat parse_enum<MediaFormat>(std::string_view t) {
  return parse_from(t, std::array{MediaFormat::wav_pcm16}, "media_format");
}
template <>
RecordingStatus parse_enum<RecordingStatus>(std::string_view t) {
  return parse_from(t, std::to_array(kRecordingStatuses), "recording status");
}
template <>
RecordingEvent parse_enum<RecordingEvent>(std::string_view t) {
  return parse_from(t, std::to_array(kRecordingEvents), "recording event");
}
template <>
NoteStatus parse_enum<NoteStatus>(std::string_view t) {
  return parse_from(t, std::to_array(kNoteStatuses), "note status");
}
template <>
NoteEvent parse_enum<NoteEvent>(std::string_view t) {
  return parse_from(t, std::to_array(kNoteEvents), "note event");
}
template <>
TemplateKind parse_enum<TemplateKind>(std::string_view t) {
  return parse_from(t, std::array{TemplateKind::builtin, TemplateKind::custom}, "template kind");
}
template <>
JobKind parse_enum<JobKind>(std::string_view t) {
  return parse_from(t, std::array{JobKind::transcription, JobKind::generation}, "job kind");
}
template <>
JobState parse_enum<JobState>(std::string_view t) {
  return parse_from(
      t, std::array{JobState::queued, JobState::running, JobState::done, JobState::failed},
      "job state");
}
template <>
SessionStatus parse_enum<SessionStatus>(std::string_view t) {
  return parse_from(t,
                    std::array{SessionStatus::empty, SessionStatus::has_audio,
                               SessionStatus::transcribed, SessionStatus::note_ready,
                               SessionStatus::error},
                    "session status");
}

MediaFormat parse_media_format(std::string_view text) {
  static constexpr std::string_view kWavNames[] = {"wav", "wav_pcm16", "audio/wav",
                                                   "audio/x-wav", "audio/wave", "audio/vnd.wave"};
  for (auto name : kWavNames) {
    if (text == name) return MediaFormat::wav_pcm16;
  }
  throw Error(ErrorCode::UnsupportedMedia, "unsupported media format '" + std::string(text) + "'");
}

std::string join_segment_text(const std::vector<Segment>& segments) {
  std::string out;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (i) out += ' ';
    out += segments[i].text;
  }
  return out;
}

// ── Invariants ───────────────────────────────────────────────────────────────

namespace {

bool has_duplicates(const std::vector<std::string>& ids) {
  std::set<std::string> seen;
  for (const auto& id : ids) {
    if (!seen.insert(id).second) return true;
  }
  return false;
}

}  // namespace

std::vector<std::string> invariant_violations(const UserProfile& v) {
  std::vector<std::string> out;
  if (v.id.empty()) out.push_back("user id is empty");
  return out;
}

std::vector<std::string> invariant_violations(const Facility& v) {
  std::vector<std::string> out;
  if (v.id.empty()) out.push_back("facility id is empty");
  return out;
}

std::vector<std::string> invariant_violations(const Session& v) {
  std::vector<std::string> out;
  if (v.id.empty()) out.push_back("session id is empty");
  if (v.owner_id.empty()) out.push_back("session owner_id is empty");
  if (has_duplicates(v.recording_ids)) out.push_back("duplicate recording id in session");
  if (has_duplicates(v.note_ids)) out.push_back("duplicate note id in session");
  return out;
}

std::vector<std::string> invariant_violations(const Recording& v) {
  std::vector<std::string> out;
  if (v.id.empty()) out.push_back("recording id is empty");
  if (v.session_id.empty()) out.push_back("recording session_id is empty");
  if (!(v.duration_s >= 0.0)) out.push_back("recording duration_s is negative");
  if (v.sample_rate_hz <= 0) out.push_back("recording sample_rate_hz must be positive");
  return out;
}

std::vector<std::string> invariant_violations(const Transcript& v) {
  std::vector<std::string> out;
  if (v.id.empty()) out.push_back("transcript id is empty");
  if (v.recording_id.empty()) out.push_back("transcript recording_id is empty");
  for (std::size_t i = 0; i < v.segments.size(); ++i) {
    const auto& s = v.segments[i];
    if (s.end_s < s.start_s) out.push_back("segment " + std::to_string(i) + " ends before start");
    if (i > 0 && s.start_s < v.segments[i - 1].start_s) {
      out.push_back("segment " + std::to_string(i) + " starts before its predecessor");
    }
  }
  if (v.full_text != join_segment_text(v.segments)) {
    out.push_back("full_text is not the space-joined segment text");
  }
  return out;
}

std::vector<std::string> invariant_violations(const Transcript& v, double recording_duration_s) {
  auto out = invariant_violations(v);
  if (!v.segments.empty() && v.segments.back().end_s > recording_duration_s + kTranscriptEndSlackS) {
    out.push_back("final segment ends after the recording");
  }
  return out;
}

std::vector<std::string> invariant_violations(const Note& v) {
  std::vector<std::string> out;
  if (v.id.empty()) out.push_back("note id is empty");
  if (v.session_id.empty()) out.push_back("note session_id is empty");
  if (v.transcript_ids.empty()) out.push_back("note transcript_ids is empty");
  if (v.token_usage.prompt_tokens < 0 || v.token_usage.completion_tokens < 0) {
    out.push_back("negative token usage");
  }
  const bool has_content = v.status == NoteStatus::draft || v.status == NoteStatus::edited ||
                           v.status == NoteStatus::finalized;
  if (has_content && v.sections.empty()) out.push_back("note content is empty");
  if (v.status == NoteStatus::edited && !v.edited_at) out.push_back("edited note lacks edited_at");
  std::set<std::string> titles;
  for (const auto& s : v.sections) {
    if (!titles.insert(s.title).second) out.push_back("duplicate section title '" + s.title + "'");
  }
  return out;
}

std::vector<std::string> invariant_violations(const NoteTemplate& v) {
  std::vector<std::string> out;
  if (v.id.empty()) out.push_back("template id is empty");
  if (v.sections.empty()) out.push_back("template has no sections");
  std::set<std::string> titles;
  for (const auto& s : v.sections) {
    if (!titles.insert(s.title).second) out.push_back("duplicate section title '" + s.title + "'");
  }
  if (v.kind == TemplateKind::custom && !v.owner_id) out.push_back("custom template lacks owner");
  if (v.kind == TemplateKind::builtin && v.owner_id) out.push_back("builtin template has owner");
  return out;
}

std::vector<std::string> invariant_violations(const Job& v) {
  std::vector<std::string> out;
  if (v.id.empty()) out.push_back("job id is empty");
  if (v.attempt < 1) out.push_back("job attempt must be positive");
  const bool finished = v.state == JobState::done || v.state == JobState::failed;
  if (finished != v.finished_at.has_value()) {
    out.push_back("finished_at must be present exactly when the job is finished");
  }
  return out;
}

// ── Lifecycle ────────────────────────────────────────────────────────────────

namespace {

[[noreturn]] void illegal(std::string_view kind, std::string_view from, std::string_view event) {
  throw Error(ErrorCode::IllegalTransition, std::string(kind) + " cannot take '" +
                                                std::string(event) + "' from '" +
                                                std::string(from) + "'");
}

}  // namespace

RecordingStatus next_state(RecordingStatus current, RecordingEvent event) {
  using S = RecordingStatus;
  using E = RecordingEvent;
  if (current == S::uploaded && event == E::transcription_started) return S::transcribing;
  if (current == S::transcribing && event == E::transcription_succeeded) return S::transcribed;
  if (current == S::transcribing && event == E::transcription_failed) return S::failed;
  illegal("recording", to_string(current), to_string(event));
}

NoteStatus next_state(NoteStatus current, NoteEvent event) {
  using S = NoteStatus;
  using E = NoteEvent;
  switch (current) {
    case S::generating:
      if (event == E::generation_succeeded) return S::draft;
      if (event == E::generation_failed) return S::failed;
      break;
    case S::draft:
    case S::edited:
      if (event == E::edit) return S::edited;
      if (event == E::finalize) return S::finalized;
      break;
    case S::finalized:
    case S::failed:
      break;
  }
  illegal("note", to_string(current), to_string(event));
}

std::optional<Recording> MemoryView::find_recording(const std::string& id) const {
  auto it = recordings_.find(id);
  if (it == recordings_.end()) return std::nullopt;
  return it->second;
}

std::optional<Note> MemoryView::find_note(const std::string& id) const {
  auto it = notes_.find(id);
  if (it == notes_.end()) return std::nullopt;
  return it->second;
}

namespace {

template <typename T, typename Finder>
std::vector<T> resolve_all(const std::vector<std::string>& ids, Finder&& find, const char* kind) {
  std::vector<T> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    auto found = find(id);
    if (!found) throw Error(ErrorCode::DanglingReference, std::string(kind) + " " + id + " not found");
    out.push_back(std::move(*found));
  }
  return out;
}

/// True if some element fails and no later element succeeds.
template <typename T, typename FailedPred, typename SuccessPred>
bool unsuperseded_failure(const std::vector<T>& items, FailedPred failed, SuccessPred ok) {
  bool later_success = false;
  for (auto it = items.rbegin(); it != items.rend(); ++it) {
    if (failed(*it) && !later_success) return true;
    if (ok(*it)) later_success = true;
  }
  return false;
}

}  // namespace

SessionStatus derive_session_status(const Session& session, const StoreView& view) {
  const auto recordings = resolve_all<Recording>(
      session.recording_ids, [&](const std::string& id) { return view.find_recording(id); },
      "recording");
  const auto notes = resolve_all<Note>(
      session.note_ids, [&](const std::string& id) { return view.find_note(id); }, "note");

  if (recordings.empty()) return SessionStatus::empty;

  const auto note_ok = [](const Note& n) {
    return n.status == NoteStatus::draft || n.status == NoteStatus::edited ||
           n.status == NoteStatus::finalized;
  };
  const bool recording_error = unsuperseded_failure(
      recordings, [](const Recording& r) { return r.status == RecordingStatus::failed; },
      [](const Recording& r) { return r.status == RecordingStatus::transcribed; });
  const bool note_error = unsuperseded_failure(
      notes, [](const Note& n) { return n.status == NoteStatus::failed; }, note_ok);
  if (recording_error || note_error) return SessionStatus::error;

  if (std::any_of(notes.begin(), notes.end(), note_ok)) return SessionStatus::note_ready;

  const bool any_transcribed = std::any_of(recordings.begin(), recordings.end(), [](const auto& r) {
    return r.status == RecordingStatus::transcribed;
  });
  const bool any_pending = std::any_of(recordings.begin(), recordings.end(), [](const auto& r) {
    return r.status == RecordingStatus::uploaded || r.status == RecordingStatus::transcribing;
  });
  return any_transcribed && !any_pending ? SessionStatus::transcribed : SessionStatus::has_audio;
}

double session_audio_seconds(const Session& session, const StoreView& view) {
  double total = 0.0;
  for (const auto& id : session.recording_ids) {
    auto r = view.find_recording(id);
    if (!r) throw Error(ErrorCode::DanglingReference, "recording " + id + " not found");
    total += r->duration_s;
  }
  return total;
}

}  // namespace scribe
