#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <random>
#include <set>
#include <unordered_set>

#include "scribe/domain.hpp"
#include "scribe/errors.hpp"

using namespace scribe;

namespace {

// Transition tables written out independently of next_state.
const std::map<std::pair<RecordingStatus, RecordingEvent>, RecordingStatus> kRecordingTable = {
    {{RecordingStatus::uploaded, RecordingEvent::transcription_started}, RecordingStatus::transcribing},
    {{RecordingStatus::transcribing, RecordingEvent::transcription_succeeded}, RecordingStatus::transcribed},
    {{RecordingStatus::transcribing, RecordingEvent::transcription_failed}, RecordingStatus::failed},
};

const std::map<std::pair<NoteStatus, NoteEvent>, NoteStatus> kNoteTable = {
    {{NoteStatus::generating, NoteEvent::generation_succeeded}, NoteStatus::draft},
    {{NoteStatus::generating, NoteEvent::generation_failed}, NoteStatus::failed},
    {{NoteStatus::draft, NoteEvent::edit}, NoteStatus::edited},
    {{NoteStatus::edited, NoteEvent::edit}, NoteStatus::edited},
    {{NoteStatus::draft, NoteEvent::finalize}, NoteStatus::finalized},
    {{NoteStatus::edited, NoteEvent::finalize}, NoteStatus::finalized},
};

Recording rec(const std::string& id, RecordingStatus s, double dur = 10.0) {
  Recording r;
  r.id = id;
  r.session_id = "s";
  r.blob_ref = "b";
  r.duration_s = dur;
  r.sample_rate_hz = 16000;
  r.status = s;
  return r;
}

Note note(const std::string& id, NoteStatus s) {
  Note n;
  n.id = id;
  n.session_id = "s";
  n.transcript_ids = {"t"};
  n.status = s;
  if (s != NoteStatus::generating && s != NoteStatus::failed) n.sections = {{"A", "x"}};
  return n;
}

// Clause-by-clause evaluator of the session status definition.
SessionStatus oracle_status(const std::vector<Recording>& recs, const std::vector<Note>& notes) {
  if (recs.empty()) return SessionStatus::empty;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    if (recs[i].status != RecordingStatus::failed) continue;
    bool superseded = false;
    for (std::size_t j = i + 1; j < recs.size(); ++j) superseded |= recs[j].status == RecordingStatus::transcribed;
    if (!superseded) return SessionStatus::error;
  }
  const auto has_content = [](const Note& n) {
    return n.status == NoteStatus::draft || n.status == NoteStatus::edited || n.status == NoteStatus::finalized;
  };
  for (std::size_t i = 0; i < notes.size(); ++i) {
    if (notes[i].status != NoteStatus::failed) continue;
    bool superseded = false;
    for (std::size_t j = i + 1; j < notes.size(); ++j) superseded |= has_content(notes[j]);
    if (!superseded) return SessionStatus::error;
  }
  for (const auto& n : notes) {
    if (has_content(n)) return SessionStatus::note_ready;
  }
  int transcribed = 0, pending = 0;
  for (const auto& r : recs) {
    transcribed += r.status == RecordingStatus::transcribed;
    pending += r.status == RecordingStatus::uploaded || r.status == RecordingStatus::transcribing;
  }
  if (transcribed > 0 && pending == 0) return SessionStatus::transcribed;
  return SessionStatus::has_audio;
}

}  // namespace

TEST_CASE("recording transitions match the table exhaustively") {
  int legal = 0;
  for (auto s : kRecordingStatuses) {
    for (auto e : kRecordingEvents) {
      auto it = kRecordingTable.find({s, e});
      if (it != kRecordingTable.end()) {
        ++legal;
        CHECK(next_state(s, e) == it->second);
      } else {
        try {
          next_state(s, e);
          FAIL("expected IllegalTransition");
        } catch (const Error& err) {
          CHECK(err.code() == ErrorCode::IllegalTransition);
        }
      }
    }
  }
  CHECK(legal == 3);
}

TEST_CASE("note transitions match the table exhaustively") {
  int legal = 0, status_changing = 0;
  for (auto s : kNoteStatuses) {
    for (auto e : kNoteEvents) {
      auto it = kNoteTable.find({s, e});
      if (it != kNoteTable.end()) {
        ++legal;
        status_changing += it->second != s;
        CHECK(next_state(s, e) == it->second);
      } else {
        try {
          next_state(s, e);
          FAIL("expected IllegalTransition");
        } catch (const Error& err) {
          CHECK(err.code() == ErrorCode::IllegalTransition);
        }
      }
    }
  }
  // Five status-changing transitions plus the repeatable edited->edited edit.
  CHECK(status_changing == 5);
  CHECK(legal == 6);
}

TEST_CASE("finalized and failed notes accept no event") {
  for (auto e : kNoteEvents) {
    CHECK_THROWS_AS(next_state(NoteStatus::finalized, e), Error);
    CHECK_THROWS_AS(next_state(NoteStatus::failed, e), Error);
  }
}

TEST_CASE("derive_session_status definition cases") {
  MemoryView view;
  Session s;
  s.id = "s";
  s.owner_id = "u";
  CHECK(derive_session_status(s, view) == SessionStatus::empty);

  view.put(rec("r1", RecordingStatus::transcribed));
  view.put(rec("r2", RecordingStatus::transcribed));
  view.put(note("n1", NoteStatus::draft));
  s.recording_ids = {"r1", "r2"};
  s.note_ids = {"n1"};
  CHECK(derive_session_status(s, view) == SessionStatus::note_ready);

  s.note_ids.clear();
  CHECK(derive_session_status(s, view) == SessionStatus::transcribed);

  view.put(rec("r3", RecordingStatus::failed));
  s.recording_ids.push_back("r3");
  CHECK(derive_session_status(s, view) == SessionStatus::error);

  view.put(rec("r4", RecordingStatus::transcribed));
  s.recording_ids.push_back("r4");
  CHECK(derive_session_status(s, view) == SessionStatus::transcribed);

  view.put(rec("r5", RecordingStatus::uploaded));
  s.recording_ids.push_back("r5");
  CHECK(derive_session_status(s, view) == SessionStatus::has_audio);
}

TEST_CASE("derive_session_status raises DanglingReference") {
  MemoryView view;
  Session s;
  s.id = "s";
  s.owner_id = "u";
  s.recording_ids = {"missing"};
  try {
    derive_session_status(s, view);
    FAIL("expected DanglingReference");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DanglingReference);
  }
}

TEST_CASE("derive_session_status matches the clause oracle on random sessions") {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 2000; ++trial) {
    MemoryView view;
    Session s;
    s.id = "s";
    s.owner_id = "u";
    std::vector<Recording> recs;
    std::vector<Note> notes;
    const int nr = std::uniform_int_distribution<int>(0, 4)(rng);
    const int nn = std::uniform_int_distribution<int>(0, 3)(rng);
    for (int i = 0; i < nr; ++i) {
      auto r = rec("r" + std::to_string(i), kRecordingStatuses[rng() % 4]);
      view.put(r);
      recs.push_back(r);
      s.recording_ids.push_back(r.id);
    }
    for (int i = 0; i < nn; ++i) {
      auto n = note("n" + std::to_string(i), kNoteStatuses[rng() % 5]);
      view.put(n);
      notes.push_back(n);
      s.note_ids.push_back(n.id);
    }
    const auto expected = oracle_status(recs, notes);
    INFO("trial " << trial);
    CHECK(derive_session_status(s, view) == expected);
    CHECK(derive_session_status(s, view) == derive_session_status(s, view));
  }
}

TEST_CASE("session_audio_seconds sums recording durations") {
  MemoryView view;
  Session s;
  s.id = "s";
  s.owner_id = "u";
  CHECK(session_audio_seconds(s, view) == 0.0);
  view.put(rec("a", RecordingStatus::uploaded, 200.0));
  view.put(rec("b", RecordingStatus::uploaded, 256.0));
  s.recording_ids = {"a", "b"};
  CHECK(session_audio_seconds(s, view) == Catch::Approx(456.0).margin(1e-9));
  CHECK(session_audio_seconds(s, view) / 60.0 == Catch::Approx(7.6).margin(1e-9));
}

TEST_CASE("mean session audio over random sessions equals total over count") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> dur(1.0, 900.0);
  MemoryView view;
  double total = 0.0, sum_of_sessions = 0.0;
  for (int i = 0; i < 1000; ++i) {
    Session s;
    s.id = "s" + std::to_string(i);
    s.owner_id = "u";
    const int n = static_cast<int>(rng() % 4);
    for (int k = 0; k < n; ++k) {
      auto r = rec(s.id + "-" + std::to_string(k), RecordingStatus::transcribed, dur(rng));
      total += r.duration_s;
      view.put(r);
      s.recording_ids.push_back(r.id);
    }
    sum_of_sessions += session_audio_seconds(s, view);
  }
  CHECK(sum_of_sessions / 1000.0 == Catch::Approx(total / 1000.0).epsilon(1e-9));
}

TEST_CASE("ids are 32 lowercase hex characters and do not collide over 10^6") {
  std::unordered_set<std::string> seen;
  seen.reserve(1'000'000);
  for (int i = 0; i < 1'000'000; ++i) {
    auto id = new_id();
    if (i < 100) {
      REQUIRE(id.size() == 32);
      for (char c : id) REQUIRE(((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f')));
    }
    seen.insert(std::move(id));
  }
  CHECK(seen.size() == 1'000'000);
}

TEST_CASE("timestamps format and parse with millisecond precision") {
  const Timestamp t{1730419200125};
  CHECK(format_timestamp(t) == "2024-11-01T00:00:00.125Z");
  CHECK(parse_timestamp("2024-11-01T00:00:00.125Z") == t);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 1000; ++i) {
    const Timestamp r{static_cast<std::int64_t>(rng() % 4102444800000ull)};
    CHECK(parse_timestamp(format_timestamp(r)) == r);
  }
  CHECK_THROWS_AS(parse_timestamp("2024-11-01 00:00:00"), Error);
}

TEST_CASE("enum spellings round-trip and unknown spellings are rejected") {
  for (auto s : kNoteStatuses) CHECK(parse_enum<NoteStatus>(to_string(s)) == s);
  for (auto s : kRecordingStatuses) CHECK(parse_enum<RecordingStatus>(to_string(s)) == s);
  CHECK(parse_enum<Role>("admin") == Role::admin);
  CHECK_THROWS_AS(parse_enum<Role>("root"), Error);
  CHECK(parse_media_format("audio/wav") == MediaFormat::wav_pcm16);
  try {
    parse_media_format("audio/mpeg");
    FAIL("expected UnsupportedMedia");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnsupportedMedia);
  }
}

TEST_CASE("intrinsic invariants") {
  Transcript t;
  t.id = "t";
  t.recording_id = "r";
  t.segments = {{0.0, 1.0, "a", {}}, {1.0, 2.0, "b", {}}};
  t.full_text = "a b";
  CHECK(invariant_violations(t, 2.0).empty());
  CHECK(invariant_violations(t, 1.5).empty());  // within slack
  CHECK_FALSE(invariant_violations(t, 1.4).empty());
  t.full_text = "ab";
  CHECK_FALSE(invariant_violations(t).empty());
  t.full_text = "a b";
  t.segments[1].start_s = -1.0;
  CHECK_FALSE(invariant_violations(t).empty());

  Session s;
  s.id = "s";
  s.owner_id = "u";
  s.recording_ids = {"a", "a"};
  CHECK_FALSE(invariant_violations(s).empty());

  Job j;
  j.id = "j";
  j.state = JobState::done;
  CHECK_FALSE(invariant_violations(j).empty());
  j.finished_at = Timestamp{1};
  CHECK(invariant_violations(j).empty());
}
