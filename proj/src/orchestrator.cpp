#include "scribe/orchestrator.hpp"

#include <algorithm>
#include <iostream>

#include "scribe/audio.hpp"
#include "scribe/digest.hpp"
#include "scribe/json_codec.hpp"

namespace scribe {

// ── WorkerPool ───────────────────────────────────────────────────────────────

WorkerPool::WorkerPool(int workers) {
  threads_.reserve(static_cast<std::size_t>(std::max(workers, 0)));
  for (int i = 0; i < workers; ++i) threads_.emplace_back([this] { run(); });
}

WorkerPool::~WorkerPool() {
  {
    std::lock_guard lock(mu_);
    stopping_ = true;
  }
  work_cv_.notify_all();
  for (auto& t : threads_) t.join();
}

void WorkerPool::submit(std::function<void()> task) {
  {
    std::lock_guard lock(mu_);
    queue_.push_back(std::move(task));
  }
  work_cv_.notify_one();
}

void WorkerPool::wait_idle() {
  std::unique_lock lock(mu_);
  idle_cv_.wait(lock, [this] { return queue_.empty() && active_ == 0; });
}

std::size_t WorkerPool::completed() const {
  std::lock_guard lock(mu_);
  return completed_;
}

void WorkerPool::run() {
  for (;;) {
    std::function<void()> task;
    {
      std::unique_lock lock(mu_);
      work_cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
      if (queue_.empty()) return;  // stopping and drained
      task = std::move(queue_.front());
      queue_.pop_front();
      ++active_;
    }
    try {
      task();
    } catch (const std::exception& e) {
      std::cerr << "worker task failed: " << e.what() << "\n";
    }
    {
      std::lock_guard lock(mu_);
      --active_;
      ++completed_;
      if (queue_.empty() && active_ == 0) idle_cv_.notify_all();
    }
  }
}

// ── Helpers ──────────────────────────────────────────────────────────────────

std::string content_digest(const std::vector<Section>& sections) {
  return to_hex(sha256(json(sections).dump()));
}

namespace {

std::string status_str(auto v) { return std::string(to_string(v)); }

}  // namespace

Orchestrator::Orchestrator(Store& store, const AsrRegistry& asr, const LlmRegistry& llm,
                           OrchestratorConfig config)
    : store_(store), asr_(asr), llm_(llm), config_(std::move(config)) {
  if (!config_.clock) config_.clock = now_utc;
  if (config_.dispatch_jobs) {
    transcription_pool_ = std::make_unique<WorkerPool>(std::max(config_.transcription_workers, 1));
    generation_pool_ = std::make_unique<WorkerPool>(std::max(config_.generation_workers, 1));
  }
}

Orchestrator::~Orchestrator() {
  transcription_pool_.reset();
  generation_pool_.reset();
}

Timestamp Orchestrator::next_timestamp() {
  std::lock_guard lock(clock_mu_);
  Timestamp t = config_.clock();
  if (t <= last_timestamp_) t.ms = last_timestamp_.ms + 1;
  last_timestamp_ = t;
  return t;
}

void Orchestrator::wait_idle() {
  if (transcription_pool_) transcription_pool_->wait_idle();
  if (generation_pool_) generation_pool_->wait_idle();
  if (transcription_pool_) transcription_pool_->wait_idle();
}

// ── Users and facilities ─────────────────────────────────────────────────────

UserProfile Orchestrator::ensure_user(const std::string& id, const std::string& display_name,
                                      Role role) {
  std::lock_guard lock(user_mu_);
  if (auto existing = store_.find<UserProfile>(id)) return *existing;
  UserProfile user{id, display_name.empty() ? id : display_name, role, next_timestamp()};
  store_.save(user);
  store_.append_audit(kSystemActor, "user_created", "user", id, {{"role", status_str(role)}},
                      user.created_at);
  return user;
}

Facility Orchestrator::register_facility(const Facility& facility, const std::string& actor) {
  store_.save(facility);
  store_.append_audit(actor, "facility_registered", "facility", facility.id,
                      {{"name", facility.name}, {"region_tag", facility.region_tag}},
                      next_timestamp());
  return facility;
}

// ── Sessions ─────────────────────────────────────────────────────────────────

Session Orchestrator::create_session(const std::string& owner_id,
                                     const std::optional<std::string>& facility_id) {
  if (!store_.find<UserProfile>(owner_id)) {
    throw Error(ErrorCode::UnknownUser, "unknown user " + owner_id);
  }
  if (facility_id && !store_.find<Facility>(*facility_id)) {
    throw Error(ErrorCode::NotFound, "facility " + *facility_id + " not found");
  }
  Session s;
  s.id = new_id();
  s.owner_id = owner_id;
  s.facility_id = facility_id;
  s.created_at = next_timestamp();
  store_.save(s);
  store_.append_audit(owner_id, "session_created", "session", s.id,
                      {{"owner_id", owner_id}, {"facility_id", json_or_null(facility_id)}}, s.created_at);
  return s;
}

Session Orchestrator::archive_session(const std::string& session_id, const std::string& actor) {
  auto s = store_.update<Session>(session_id, [](Session& v) { v.archived = true; });
  store_.append_audit(actor, "session_archived", "session", session_id, {{"archived", true}},
                      next_timestamp());
  return s;
}

SessionStatus Orchestrator::session_status(const std::string& session_id) const {
  return derive_session_status(store_.load<Session>(session_id), store_);
}

// ── Recordings ───────────────────────────────────────────────────────────────

UploadResult Orchestrator::attach_recording(const std::string& session_id,
                                            std::span<const std::uint8_t> audio,
                                            std::string_view media_format,
                                            const std::string& actor) {
  const auto session = store_.load<Session>(session_id);
  if (session.archived) throw Error(ErrorCode::SessionArchived, "session " + session_id + " is archived");
  const MediaFormat format = parse_media_format(media_format);
  if (audio.empty()) throw Error(ErrorCode::EmptyAudio, "audio upload is empty");
  const WavInfo info = probe_wav(audio);
  if (info.frame_count == 0) throw Error(ErrorCode::EmptyAudio, "audio has no samples");

  const BlobRef blob = store_.put_blob(audio, format);

  Recording rec;
  rec.id = new_id();
  rec.session_id = session_id;
  rec.blob_ref = blob.address;
  rec.duration_s = info.duration_s();
  rec.sample_rate_hz = info.sample_rate_hz;
  rec.media_format = format;
  rec.status = RecordingStatus::uploaded;
  rec.created_at = next_timestamp();
  store_.save(rec);

  // Re-check under the write lock: an archive may have raced the upload.
  store_.update<Session>(session_id, [&](Session& s) {
    if (s.archived) throw Error(ErrorCode::SessionArchived, "session " + session_id + " is archived");
    s.recording_ids.push_back(rec.id);
  });
  store_.append_audit(actor, "recording_uploaded", "recording", rec.id,
                      {{"session_id", session_id},
                       {"blob_ref", blob.address},
                       {"duration_s", rec.duration_s},
                       {"status", status_str(rec.status)}},
                      rec.created_at);

  Job job;
  job.id = new_id();
  job.kind = JobKind::transcription;
  job.subject_id = rec.id;
  job.enqueued_at = next_timestamp();
  store_.save(job);
  store_.append_audit(actor, "job_enqueued", "job", job.id,
                      {{"kind", status_str(job.kind)}, {"subject_id", rec.id}}, job.enqueued_at);

  dispatch_transcription(job.id);
  return {rec, job};
}

void Orchestrator::dispatch_transcription(const std::string& job_id) {
  if (!transcription_pool_) return;
  transcription_pool_->submit([this, job_id] { run_transcription(job_id); });
}

Transcript Orchestrator::run_transcription(const std::string& job_id) {
  const std::string backend_id = config_.asr_backend_id;
  Job job = store_.update<Job>(job_id, [&](Job& j) {
    if (j.kind != JobKind::transcription) {
      throw Error(ErrorCode::IllegalTransition, "job " + job_id + " is not a transcription job");
    }
    if (j.state != JobState::queued) {
      throw Error(ErrorCode::IllegalTransition,
                  "job " + job_id + " is " + status_str(j.state) + ", not queued");
    }
    j.state = JobState::running;
  });
  const Recording rec = store_.update<Recording>(job.subject_id, [](Recording& r) {
    r.status = next_state(r.status, RecordingEvent::transcription_started);
  });
  store_.append_audit(kSystemActor, "transcription_started", "recording", rec.id,
                      {{"job_id", job_id}, {"backend_id", backend_id},
                       {"status", status_str(rec.status)}},
                      next_timestamp());

  int attempts = 0;
  TranscribeOptions opts;
  opts.retry = config_.retry;
  opts.observer = [&](int attempt, const std::optional<std::string>& error) {
    attempts = attempt;
    store_.update<Job>(job_id, [&](Job& j) { j.attempt = attempt; });
    store_.append_audit(kSystemActor, "transcription_attempt", "job", job_id,
                        {{"attempt", attempt}, {"backend_id", backend_id}, {"error", json_or_null(error)}},
                        next_timestamp());
  };

  try {
    if (!asr_.contains(backend_id)) {
      throw Error(ErrorCode::BackendUnavailable, "no ASR backend named '" + backend_id + "'");
    }
    const auto audio = store_.get_blob(rec.blob_ref);
    Transcript t = asr_.transcribe(backend_id, rec, audio, config_.lexicon, opts);
    t.id = new_id();
    t.recording_id = rec.id;
    t.created_at = next_timestamp();
    store_.save(t);
    store_.update<Recording>(rec.id, [](Recording& r) {
      r.status = next_state(r.status, RecordingEvent::transcription_succeeded);
    });
    const Timestamp done = next_timestamp();
    store_.update<Job>(job_id, [&](Job& j) {
      j.state = JobState::done;
      j.finished_at = done;
      j.error.reset();
    });
    store_.append_audit(kSystemActor, "transcription_completed", "recording", rec.id,
                        {{"job_id", job_id},
                         {"transcript_id", t.id},
                         {"attempts", std::max(attempts, 1)},
                         {"backend_id", backend_id},
                         {"status", status_str(RecordingStatus::transcribed)}},
                        done);
    return t;
  } catch (const Error& e) {
    store_.update<Recording>(rec.id, [](Recording& r) {
      r.status = next_state(r.status, RecordingEvent::transcription_failed);
    });
    const Timestamp done = next_timestamp();
    store_.update<Job>(job_id, [&](Job& j) {
      j.state = JobState::failed;
      j.finished_at = done;
      j.error = std::string(to_string(e.code())) + ": " + e.what();
    });
    store_.append_audit(kSystemActor, "transcription_failed", "recording", rec.id,
                        {{"job_id", job_id},
                         {"attempts", std::max(attempts, 1)},
                         {"backend_id", backend_id},
                         {"error", std::string(to_string(e.code()))},
                         {"status", status_str(RecordingStatus::failed)}},
                        done);
    throw;
  }
}

std::optional<Transcript> Orchestrator::transcript_for(const std::string& recording_id) const {
  auto all = store_.load_by_ref<Transcript>(recording_id);
  if (all.empty()) return std::nullopt;
  return *std::max_element(all.begin(), all.end(), [](const auto& a, const auto& b) {
    return std::tie(a.created_at, a.id) < std::tie(b.created_at, b.id);
  });
}

// ── Notes ────────────────────────────────────────────────────────────────────

void Orchestrator::check_transcripts_ready(const Session& session,
                                           const std::vector<std::string>& transcript_ids) const {
  if (transcript_ids.empty()) {
    throw Error(ErrorCode::TranscriptNotReady, "no transcripts given for session " + session.id);
  }
  for (const auto& tid : transcript_ids) {
    const auto t = store_.find<Transcript>(tid);
    if (!t) throw Error(ErrorCode::TranscriptNotReady, "transcript " + tid + " does not exist");
    const auto r = store_.find<Recording>(t->recording_id);
    if (!r || r->session_id != session.id) {
      throw Error(ErrorCode::TranscriptNotReady,
                  "transcript " + tid + " does not belong to session " + session.id);
    }
    if (r->status != RecordingStatus::transcribed) {
      throw Error(ErrorCode::TranscriptNotReady, "recording " + r->id + " is not transcribed");
    }
  }
}

Note Orchestrator::create_generating_note(const std::string& session_id,
                                          const std::string& template_id,
                                          const std::vector<std::string>& transcript_ids) {
  const auto session = store_.load<Session>(session_id);
  if (session.archived) throw Error(ErrorCode::SessionArchived, "session " + session_id + " is archived");
  const NoteTemplate tmpl = get_template(template_id);
  if (auto problems = validate_template(tmpl); !problems.empty()) {
    throw Error(ErrorCode::ValidationFailed, "template " + template_id + " is invalid",
                std::move(problems));
  }
  check_transcripts_ready(session, transcript_ids);
  if (!llm_.contains(config_.llm_backend_id)) {
    throw Error(ErrorCode::BackendUnavailable,
                "no LLM backend named '" + config_.llm_backend_id + "'");
  }

  Note note;
  note.id = new_id();
  note.session_id = session_id;
  note.template_id = template_id;
  note.transcript_ids = transcript_ids;
  note.llm_backend_id = config_.llm_backend_id;
  note.llm_model_id = llm_.get(config_.llm_backend_id).model_id;
  note.status = NoteStatus::generating;
  note.created_at = next_timestamp();
  store_.save(note);
  store_.update<Session>(session_id, [&](Session& s) {
    if (s.archived) throw Error(ErrorCode::SessionArchived, "session " + session_id + " is archived");
    s.note_ids.push_back(note.id);
  });
  return note;
}

Note Orchestrator::perform_generation(Note note, const std::string& actor,
                                      const std::optional<std::string>& encounter_context) {
  try {
    const NoteTemplate tmpl = get_template(note.template_id);
    std::vector<Transcript> transcripts;
    transcripts.reserve(note.transcript_ids.size());
    for (const auto& tid : note.transcript_ids) transcripts.push_back(store_.load<Transcript>(tid));
    const PromptBundle bundle = render_prompt(tmpl, transcripts, encounter_context);

    GenerateOptions opts;
    opts.retry = config_.retry;
    const GenerationResult result = llm_.generate(note.llm_backend_id, bundle, tmpl, opts);

    note = store_.update<Note>(note.id, [&](Note& n) {
      n.sections = result.parsed_sections;
      n.token_usage = result.token_usage;
      n.status = next_state(n.status, NoteEvent::generation_succeeded);
    });
    store_.append_audit(actor, "note_generated", "note", note.id,
                        {{"session_id", note.session_id},
                         {"template_id", note.template_id},
                         {"transcript_ids", note.transcript_ids},
                         {"backend_id", note.llm_backend_id},
                         {"prompt_tokens", note.token_usage.prompt_tokens},
                         {"completion_tokens", note.token_usage.completion_tokens},
                         {"repaired", result.repaired},
                         {"content_digest", content_digest(note.sections)},
                         {"status", status_str(note.status)}},
                        next_timestamp());
    return note;
  } catch (const Error& e) {
    const std::string reason = std::string(to_string(e.code())) + ": " + e.what();
    store_.update<Note>(note.id, [&](Note& n) {
      n.status = next_state(n.status, NoteEvent::generation_failed);
      n.failure_reason = reason;
    });
    store_.append_audit(actor, "note_generation_failed", "note", note.id,
                        {{"session_id", note.session_id},
                         {"error", std::string(to_string(e.code()))},
                         {"status", status_str(NoteStatus::failed)}},
                        next_timestamp());
    throw;
  }
}

Note Orchestrator::generate_note(const std::string& session_id, const std::string& template_id,
                                 const std::vector<std::string>& transcript_ids,
                                 const std::string& actor,
                                 const std::optional<std::string>& encounter_context) {
  Note note = create_generating_note(session_id, template_id, transcript_ids);
  return perform_generation(std::move(note), actor, encounter_context);
}

NoteSubmission Orchestrator::submit_note(const std::string& session_id,
                                         const std::string& template_id,
                                         const std::vector<std::string>& transcript_ids,
                                         const std::string& actor,
                                         const std::optional<std::string>& encounter_context) {
  Note note = create_generating_note(session_id, template_id, transcript_ids);
  Job job;
  job.id = new_id();
  job.kind = JobKind::generation;
  job.subject_id = note.id;
  job.enqueued_at = next_timestamp();
  {
    std::lock_guard lock(context_mu_);
    pending_[job.id] = {actor, encounter_context};
  }
  store_.save(job);
  store_.append_audit(actor, "job_enqueued", "job", job.id,
                      {{"kind", status_str(job.kind)}, {"subject_id", note.id}}, job.enqueued_at);
  dispatch_generation(job.id);
  return {note, job};
}

void Orchestrator::dispatch_generation(const std::string& job_id) {
  if (!generation_pool_) return;
  generation_pool_->submit([this, job_id] { run_generation(job_id); });
}

Note Orchestrator::run_generation(const std::string& job_id) {
  const Job job = store_.update<Job>(job_id, [&](Job& j) {
    if (j.kind != JobKind::generation) {
      throw Error(ErrorCode::IllegalTransition, "job " + job_id + " is not a generation job");
    }
    if (j.state != JobState::queued) {
      throw Error(ErrorCode::IllegalTransition,
                  "job " + job_id + " is " + status_str(j.state) + ", not queued");
    }
    j.state = JobState::running;
  });
  PendingGeneration pending{kSystemActor, std::nullopt};
  {
    std::lock_guard lock(context_mu_);
    if (auto it = pending_.find(job_id); it != pending_.end()) {
      pending = std::move(it->second);
      pending_.erase(it);
    }
  }
  try {
    Note note = perform_generation(store_.load<Note>(job.subject_id), pending.actor, pending.context);
    store_.update<Job>(job_id, [&](Job& j) {
      j.state = JobState::done;
      j.finished_at = next_timestamp();
    });
    return note;
  } catch (const Error& e) {
    store_.update<Job>(job_id, [&](Job& j) {
      j.state = JobState::failed;
      j.finished_at = next_timestamp();
      j.error = std::string(to_string(e.code())) + ": " + e.what();
    });
    throw;
  }
}

Note Orchestrator::edit_note(const std::string& note_id, const std::vector<Section>& sections,
                             const std::string& actor) {
  std::string before;
  const Note note = store_.update<Note>(note_id, [&](Note& n) {
    const NoteStatus next = next_state(n.status, NoteEvent::edit);
    const NoteTemplate tmpl = get_template(n.template_id);
    bool match = sections.size() == tmpl.sections.size();
    for (std::size_t i = 0; match && i < sections.size(); ++i) {
      match = sections[i].title == tmpl.sections[i].title;
    }
    if (!match) {
      throw Error(ErrorCode::SectionMismatch,
                  "section titles must equal the template's, in order");
    }
    before = content_digest(n.sections);
    n.sections = sections;
    n.status = next;
    n.edited_at = next_timestamp();
  });
  store_.append_audit(actor, "note_edited", "note", note_id,
                      {{"before_digest", before},
                       {"after_digest", content_digest(note.sections)},
                       {"status", status_str(note.status)}},
                      *note.edited_at);
  return note;
}

Note Orchestrator::finalize_note(const std::string& note_id, const std::string& actor) {
  const Note note = store_.update<Note>(note_id, [](Note& n) {
    n.status = next_state(n.status, NoteEvent::finalize);
  });
  store_.append_audit(actor, "note_finalized", "note", note_id,
                      {{"content_digest", content_digest(note.sections)},
                       {"status", status_str(note.status)}},
                      next_timestamp());
  return note;
}

// ── Templates ────────────────────────────────────────────────────────────────

NoteTemplate Orchestrator::create_template(const std::string& owner_id, NoteTemplate candidate) {
  if (!store_.find<UserProfile>(owner_id)) {
    throw Error(ErrorCode::UnknownUser, "unknown user " + owner_id);
  }
  candidate.id = new_id();
  candidate.kind = TemplateKind::custom;
  candidate.owner_id = owner_id;
  candidate.created_at = next_timestamp();
  if (auto problems = validate_template(candidate); !problems.empty()) {
    throw Error(ErrorCode::ValidationFailed, "template rejected", std::move(problems));
  }
  store_.save(candidate);
  store_.append_audit(owner_id, "template_created", "template", candidate.id,
                      {{"name", candidate.name},
                       {"section_count", candidate.sections.size()}},
                      candidate.created_at);
  return candidate;
}

std::vector<NoteTemplate> Orchestrator::templates_for(const std::string& user_id) const {
  std::vector<NoteTemplate> out = builtin_templates();
  auto custom = store_.load_by_ref<NoteTemplate>(user_id);
  std::sort(custom.begin(), custom.end(), [](const auto& a, const auto& b) {
    return std::tie(a.created_at, a.id) < std::tie(b.created_at, b.id);
  });
  out.insert(out.end(), custom.begin(), custom.end());
  return out;
}

NoteTemplate Orchestrator::get_template(const std::string& template_id) const {
  for (const auto& t : builtin_templates()) {
    if (t.id == template_id) return t;
  }
  if (auto t = store_.find<NoteTemplate>(template_id)) return *t;
  throw Error(ErrorCode::NotFound, "template " + template_id + " not found");
}

}  // namespace scribe
