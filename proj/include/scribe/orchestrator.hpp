#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "scribe/asr_gateway.hpp"
#include "scribe/domain.hpp"
#include "scribe/llm_gateway.hpp"
#include "scribe/store.hpp"
#include "scribe/templates.hpp"

namespace scribe {

/// Fixed-size FIFO worker pool.
class WorkerPool {
 public:
  explicit WorkerPool(int workers);
  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;
  /// Drains queued tasks, then joins.
  ~WorkerPool();

  void submit(std::function<void()> task);
  /// Blocks until the queue is empty and no task is running.
  void wait_idle();
  std::size_t completed() const;

 private:
  void run();

  mutable std::mutex mu_;
  std::condition_variable work_cv_;
  std::condition_variable idle_cv_;
  std::deque<std::function<void()>> queue_;
  std::vector<std::thread> threads_;
  int active_ = 0;
  std::size_t completed_ = 0;
  bool stopping_ = false;
};

struct OrchestratorConfig {
  std::string asr_backend_id;
  std::string llm_backend_id;
  VocabularyLexicon lexicon;
  RetryPolicy retry;
  int transcription_workers = 4;
  int generation_workers = 4;
  /// When false, jobs stay queued until run_transcription / run_generation is
  /// called explicitly.
  bool dispatch_jobs = true;
  std::function<Timestamp()> clock = now_utc;
};

struct UploadResult {
  Recording recording;
  Job job;
};

struct NoteSubmission {
  Note note;
  Job job;
};

inline constexpr const char* kSystemActor = "system";

/// Drives the session lifecycle. Safe for concurrent callers; every
/// state-changing call appends at least one audit event.
class Orchestrator {
 public:
  Orchestrator(Store& store, const AsrRegistry& asr, const LlmRegistry& llm,
               OrchestratorConfig config);
  Orchestrator(const Orchestrator&) = delete;
  Orchestrator& operator=(const Orchestrator&) = delete;
  ~Orchestrator();

  Store& store() { return store_; }
  const OrchestratorConfig& config() const { return config_; }

  // Users and facilities.
  UserProfile ensure_user(const std::string& id, const std::string& display_name,
                          Role role = Role::clinician);
  Facility register_facility(const Facility& facility, const std::string& actor = kSystemActor);

  // Sessions.
  /// Throws UnknownUser.
  Session create_session(const std::string& owner_id,
                         const std::optional<std::string>& facility_id = std::nullopt);
  Session archive_session(const std::string& session_id, const std::string& actor);
  SessionStatus session_status(const std::string& session_id) const;

  // Recordings.
  /// Throws NotFound, SessionArchived, EmptyAudio, UnsupportedMedia.
  UploadResult attach_recording(const std::string& session_id, std::span<const std::uint8_t> audio,
                                std::string_view media_format, const std::string& actor);
  /// Runs a queued transcription job to completion. Rethrows gateway errors
  /// after marking the recording and job failed.
  Transcript run_transcription(const std::string& job_id);
  std::optional<Transcript> transcript_for(const std::string& recording_id) const;

  // Notes.
  /// Synchronous generation. Throws TranscriptNotReady, NotFound,
  /// ValidationFailed, and gateway errors (the note is then failed).
  Note generate_note(const std::string& session_id, const std::string& template_id,
                     const std::vector<std::string>& transcript_ids, const std::string& actor,
                     const std::optional<std::string>& encounter_context = std::nullopt);
  /// Creates the note in `generating` and queues the generation job.
  NoteSubmission submit_note(const std::string& session_id, const std::string& template_id,
                             const std::vector<std::string>& transcript_ids,
                             const std::string& actor,
                             const std::optional<std::string>& encounter_context = std::nullopt);
  Note run_generation(const std::string& job_id);
  /// Throws IllegalTransition, SectionMismatch.
  Note edit_note(const std::string& note_id, const std::vector<Section>& sections,
                 const std::string& actor);
  /// Throws IllegalTransition.
  Note finalize_note(const std::string& note_id, const std::string& actor);

  // Templates.
  /// Throws UnknownUser, ValidationFailed.
  NoteTemplate create_template(const std::string& owner_id, NoteTemplate candidate);
  /// Builtins first, then the user's custom templates.
  std::vector<NoteTemplate> templates_for(const std::string& user_id) const;
  /// Throws NotFound.
  NoteTemplate get_template(const std::string& template_id) const;

  /// Blocks until both job queues are drained.
  void wait_idle();

 private:
  Timestamp next_timestamp();
  void dispatch_transcription(const std::string& job_id);
  void dispatch_generation(const std::string& job_id);
  void check_transcripts_ready(const Session& session,
                               const std::vector<std::string>& transcript_ids) const;
  Note create_generating_note(const std::string& session_id, const std::string& template_id,
                              const std::vector<std::string>& transcript_ids);
  Note perform_generation(Note note, const std::string& actor,
                          const std::optional<std::string>& encounter_context);

  Store& store_;
  const AsrRegistry& asr_;
  const LlmRegistry& llm_;
  OrchestratorConfig config_;

  std::mutex clock_mu_;
  Timestamp last_timestamp_{};

  struct PendingGeneration {
    std::string actor;
    std::optional<std::string> context;
  };

  std::mutex user_mu_;
  std::mutex context_mu_;
  std::map<std::string, PendingGeneration> pending_;

  std::unique_ptr<WorkerPool> transcription_pool_;
  std::unique_ptr<WorkerPool> generation_pool_;
};

/// Hex SHA-256 of the canonical JSON of a note's sections.
std::string content_digest(const std::vector<Section>& sections);

}  // namespace scribe
