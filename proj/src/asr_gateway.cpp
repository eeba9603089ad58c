#include "scribe/asr_gateway.hpp"

#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "http_client.hpp"
#include "scribe/digest.hpp"
#include "scribe/errors.hpp"
#include "scribe/json_codec.hpp"

extern char** environ;

namespace scribe {

namespace fs = std::filesystem;

std::string_view to_string(AsrBackendKind kind) {
  switch (kind) {
    case AsrBackendKind::mock: return "mock";
    case AsrBackendKind::http_transcription: return "http_transcription";
    case AsrBackendKind::local_engine: return "local_engine";
  }
  return "?";
}

AsrBackendKind parse_asr_backend_kind(std::string_view text) {
  for (auto k : {AsrBackendKind::mock, AsrBackendKind::http_transcription,
                 AsrBackendKind::local_engine}) {
    if (to_string(k) == text) return k;
  }
  throw Error(ErrorCode::ConfigInvalid, "unknown ASR backend kind '" + std::string(text) + "'");
}

std::vector<std::string> descriptor_violations(const AsrBackendDescriptor& d) {
  std::vector<std::string> out;
  if (d.backend_id.empty()) out.push_back("backend_id is empty");
  if (!(d.timeout_s > 0)) out.push_back("timeout_s must be positive");
  if (d.max_concurrency <= 0) out.push_back("max_concurrency must be positive");
  const bool is_http = d.kind == AsrBackendKind::http_transcription;
  if (is_http != d.endpoint.has_value()) {
    out.push_back("endpoint is required exactly for http_transcription backends");
  }
  if (d.kind == AsrBackendKind::mock && !d.fixture_dir) out.push_back("mock backend needs fixture_dir");
  if (d.kind == AsrBackendKind::local_engine && !d.executable) {
    out.push_back("local_engine backend needs executable");
  }
  return out;
}

// ── Lexicon ──────────────────────────────────────────────────────────────────

namespace {

bool is_word_byte(char c) {
  const auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) || u >= 0x80 || c == '\'' || c == '-';
}

char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), lower);
  return out;
}

bool iequals_at(std::string_view text, std::size_t pos, std::string_view lowered) {
  if (pos + lowered.size() > text.size()) return false;
  for (std::size_t k = 0; k < lowered.size(); ++k) {
    if (lower(text[pos + k]) != lowered[k]) return false;
  }
  return true;
}

}  // namespace

std::vector<std::string> lexicon_violations(const VocabularyLexicon& lexicon) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& e : lexicon.entries) {
    if (e.surface_form.empty()) {
      out.push_back("empty surface_form");
      continue;
    }
    if (!seen.insert(to_lower(e.surface_form)).second) {
      out.push_back("duplicate surface_form '" + e.surface_form + "'");
    }
  }
  return out;
}

std::string apply_lexicon(std::string_view text, const VocabularyLexicon& lexicon) {
  if (lexicon.entries.empty()) return std::string(text);

  struct Candidate {
    std::string lowered;
    const std::string* canonical;
  };
  std::vector<Candidate> candidates;
  for (const auto& e : lexicon.entries) {
    if (!e.surface_form.empty()) candidates.push_back({to_lower(e.surface_form), &e.canonical_form});
  }
  std::stable_sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
    return a.lowered.size() > b.lowered.size();
  });

  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const bool at_boundary = i == 0 || !is_word_byte(text[i - 1]);
    bool replaced = false;
    if (at_boundary) {
      for (const auto& c : candidates) {
        const std::size_t end = i + c.lowered.size();
        if (iequals_at(text, i, c.lowered) && (end == text.size() || !is_word_byte(text[end]))) {
          out += *c.canonical;
          i = end;
          replaced = true;
          break;
        }
      }
    }
    if (!replaced) out += text[i++];
  }
  return out;
}

Transcript apply_lexicon(const Transcript& transcript, const VocabularyLexicon& lexicon) {
  Transcript out = transcript;
  for (auto& s : out.segments) s.text = apply_lexicon(s.text, lexicon);
  out.full_text = join_segment_text(out.segments);
  return out;
}

// ── Transcription ────────────────────────────────────────────────────────────

void normalize_segments(std::vector<Segment>& segments, double duration_s) {
  const double limit = duration_s + kTranscriptEndSlackS;
  for (auto& s : segments) {
    s.start_s = std::clamp(s.start_s, 0.0, duration_s);
    s.end_s = std::clamp(s.end_s, s.start_s, limit);
  }
  std::stable_sort(segments.begin(), segments.end(),
                   [](const Segment& a, const Segment& b) { return a.start_s < b.start_s; });
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

struct RawTranscription {
  std::vector<Segment> segments;
  std::optional<std::string> language;
};

/// `{"text": ..., "segments": [{"start","end","text","speaker"?}], "language"?}`
RawTranscription parse_transcription_json(const std::string& body, double duration_s) {
  auto j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(ErrorCode::BackendRejected, "backend returned malformed transcription JSON");
  }
  RawTranscription raw;
  try {
    if (j.contains("language") && j["language"].is_string()) raw.language = j["language"];
    if (j.contains("segments") && j["segments"].is_array() && !j["segments"].empty()) {
      for (const auto& s : j["segments"]) {
        Segment seg;
        seg.start_s = s.at("start").get<double>();
        seg.end_s = s.at("end").get<double>();
        seg.text = trim(s.at("text").get<std::string>());
        if (s.contains("speaker") && s["speaker"].is_string()) seg.speaker_label = s["speaker"];
        raw.segments.push_back(std::move(seg));
      }
    } else {
      const std::string text = trim(j.at("text").get<std::string>());
      if (!text.empty()) raw.segments.push_back({0.0, duration_s, text, std::nullopt});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BackendRejected,
                std::string("backend transcription JSON missing fields: ") + e.what());
  }
  return raw;
}

RawTranscription transcribe_mock(std::span<const std::uint8_t> audio, double duration_s,
                                 const AsrBackendDescriptor& backend) {
  const auto address = to_hex(sha256(audio));
  const fs::path sidecar = fs::path(*backend.fixture_dir) / (address + ".txt");
  std::ifstream in(sidecar);
  if (!in) {
    throw Error(ErrorCode::BackendRejected, "no sidecar transcript for audio " + address);
  }
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    auto t = trim(line);
    if (!t.empty()) lines.push_back(std::move(t));
  }
  RawTranscription raw;
  const double step = lines.empty() ? 0.0 : duration_s / static_cast<double>(lines.size());
  for (std::size_t k = 0; k < lines.size(); ++k) {
    const double end = k + 1 == lines.size() ? duration_s : step * static_cast<double>(k + 1);
    raw.segments.push_back({step * static_cast<double>(k), end, lines[k], std::nullopt});
  }
  return raw;
}

RawTranscription transcribe_http(std::span<const std::uint8_t> audio, double duration_s,
                                 const AsrBackendDescriptor& backend, const TranscribeOptions& opt) {
  const auto url = parse_url(*backend.endpoint);
  RawTranscription raw;
  run_with_retries(
      opt.retry,
      [&] {
        auto client = detail::make_client(url.origin, backend.timeout_s, backend.api_key);
        httplib::MultipartFormDataItems items = {
            {"file", std::string(audio.begin(), audio.end()), "audio.wav", "audio/wav"},
            {"model", backend.model_id, "", ""},
            {"response_format", "verbose_json", "", ""},
        };
        const auto result = client->Post(url.path, items);
        const auto& res = detail::require_response(result);
        if (res.status != 200) {
          throw Error(ErrorCode::BackendRejected, "backend '" + backend.backend_id + "' returned " +
                                                      std::to_string(res.status) + ": " +
                                                      detail::backend_message(res));
        }
        raw = parse_transcription_json(res.body, duration_s);
      },
      opt.observer, backend.backend_id);
  return raw;
}

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "scribe-asr-XXXXXX").string();
    if (!::mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

RawTranscription transcribe_local(std::span<const std::uint8_t> audio, double duration_s,
                                  const AsrBackendDescriptor& backend,
                                  const TranscribeOptions& opt) {
  RawTranscription raw;
  run_with_retries(
      opt.retry,
      [&] {
        TempDir dir;
        const auto input = (dir.path() / "input.wav").string();
        const auto output = (dir.path() / "output.json").string();
        {
          std::ofstream f(input, std::ios::binary);
          f.write(reinterpret_cast<const char*>(audio.data()),
                  static_cast<std::streamsize>(audio.size()));
        }
        std::string exe = *backend.executable;
        std::vector<char*> argv = {exe.data(), const_cast<char*>(input.c_str()),
                                   const_cast<char*>(output.c_str()), nullptr};
        pid_t pid = 0;
        if (::posix_spawn(&pid, exe.c_str(), nullptr, nullptr, argv.data(), environ) != 0) {
          throw TransientFailure("connection: cannot start " + exe);
        }
        const auto deadline = std::chrono::steady_clock::now() +
                              std::chrono::duration<double>(backend.timeout_s);
        int status = 0;
        while (::waitpid(pid, &status, WNOHANG) == 0) {
          if (std::chrono::steady_clock::now() > deadline) {
            ::kill(pid, SIGKILL);
            ::waitpid(pid, &status, 0);
            throw TransientFailure("timeout: local engine exceeded " +
                                   std::to_string(backend.timeout_s) + " s");
          }
          std::this_thread::sleep_for(std::chrono::milliseconds(5));
        }
        if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
          if (WIFEXITED(status) && WEXITSTATUS(status) == 127) {
            throw TransientFailure("connection: cannot execute " + exe);
          }
          throw Error(ErrorCode::BackendRejected,
                      "local engine exited with status " + std::to_string(WEXITSTATUS(status)));
        }
        std::ifstream in(output);
        std::stringstream body;
        body << in.rdbuf();
        raw = parse_transcription_json(body.str(), duration_s);
      },
      opt.observer, backend.backend_id);
  return raw;
}

}  // namespace

Transcript transcribe(const Recording& recording, std::span<const std::uint8_t> audio,
                      const AsrBackendDescriptor& backend, const VocabularyLexicon& lexicon,
                      const TranscribeOptions& options) {
  if (audio.empty() || !(recording.duration_s > 0)) {
    throw Error(ErrorCode::EmptyAudio, "recording " + recording.id + " has no audio");
  }
  RawTranscription raw;
  switch (backend.kind) {
    case AsrBackendKind::mock:
      raw = transcribe_mock(audio, recording.duration_s, backend);
      if (options.observer) options.observer(1, std::nullopt);
      break;
    case AsrBackendKind::http_transcription:
      raw = transcribe_http(audio, recording.duration_s, backend, options);
      break;
    case AsrBackendKind::local_engine:
      raw = transcribe_local(audio, recording.duration_s, backend, options);
      break;
  }
  normalize_segments(raw.segments, recording.duration_s);

  Transcript t;
  t.id = new_id();
  t.recording_id = recording.id;
  t.segments = std::move(raw.segments);
  t.full_text = join_segment_text(t.segments);
  t.language_tag = raw.language.value_or(backend.language_tag);
  t.asr_backend_id = backend.backend_id;
  t.asr_model_id = backend.model_id;
  t.created_at = now_utc();
  return apply_lexicon(t, lexicon);
}

HealthStatus health_check(const AsrBackendDescriptor& backend) {
  switch (backend.kind) {
    case AsrBackendKind::mock:
      return HealthStatus::ok();
    case AsrBackendKind::http_transcription: {
      if (!backend.endpoint) return HealthStatus::failing("config: no endpoint");
      try {
        const auto url = parse_url(*backend.endpoint);
        return detail::probe(url.origin + backend.health_path, backend.timeout_s, backend.api_key);
      } catch (const Error& e) {
        return HealthStatus::failing(std::string("config: ") + e.what());
      }
    }
    case AsrBackendKind::local_engine:
      if (backend.executable && ::access(backend.executable->c_str(), X_OK) == 0) {
        return HealthStatus::ok();
      }
      return HealthStatus::failing("executable not found");
  }
  return HealthStatus::failing("unknown backend kind");
}

// ── Registry ─────────────────────────────────────────────────────────────────

void AsrRegistry::add(AsrBackendDescriptor descriptor) {
  auto problems = descriptor_violations(descriptor);
  if (entries_.count(descriptor.backend_id)) {
    problems.push_back("duplicate backend_id '" + descriptor.backend_id + "'");
  }
  if (!problems.empty()) {
    throw Error(ErrorCode::ConfigInvalid, "ASR backend '" + descriptor.backend_id + "': " + problems.front());
  }
  auto limiter = std::make_unique<ConcurrencyLimiter>(descriptor.max_concurrency);
  const auto id = descriptor.backend_id;
  entries_.emplace(id, Entry{std::move(descriptor), std::move(limiter)});
}

const AsrBackendDescriptor& AsrRegistry::get(const std::string& backend_id) const {
  auto it = entries_.find(backend_id);
  if (it == entries_.end()) throw Error(ErrorCode::NotFound, "no ASR backend '" + backend_id + "'");
  return it->second.descriptor;
}

std::vector<std::string> AsrRegistry::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, _] : entries_) out.push_back(id);
  return out;
}

Transcript AsrRegistry::transcribe(const std::string& backend_id, const Recording& recording,
                                   std::span<const std::uint8_t> audio,
                                   const VocabularyLexicon& lexicon,
                                   const TranscribeOptions& options) const {
  auto it = entries_.find(backend_id);
  if (it == entries_.end()) throw Error(ErrorCode::NotFound, "no ASR backend '" + backend_id + "'");
  ConcurrencyLimiter::Permit permit(*it->second.limiter);
  return scribe::transcribe(recording, audio, it->second.descriptor, lexicon, options);
}

int AsrRegistry::peak_concurrency(const std::string& backend_id) const {
  auto it = entries_.find(backend_id);
  return it == entries_.end() ? 0 : it->second.limiter->in_flight_peak();
}

}  // namespace scribe
