#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scribe/domain.hpp"
#include "scribe/http_util.hpp"

namespace scribe {

enum class AsrBackendKind { mock, http_transcription, local_engine };

std::string_view to_string(AsrBackendKind kind);
AsrBackendKind parse_asr_backend_kind(std::string_view text);

struct AsrBackendDescriptor {
  std::string backend_id;
  AsrBackendKind kind = AsrBackendKind::mock;
  std::optional<std::string> endpoint;  // full transcription URL for http_transcription
  std::string model_id;
  double timeout_s = 120.0;
  int max_concurrency = 4;
  std::string language_tag = "en";
  std::optional<std::string> api_key;
  std::string health_path = "/health";
  std::optional<std::string> fixture_dir;  // mock: <sha256-of-audio>.txt sidecars
  std::optional<std::string> executable;   // local_engine: `<exe> <in.wav> <out.json>`
};

/// Empty when valid.
std::vector<std::string> descriptor_violations(const AsrBackendDescriptor& d);

struct LexiconEntry {
  std::string surface_form;
  std::string canonical_form;

  bool operator==(const LexiconEntry&) const = default;
};

/// Terminology corrections: facility, clinician and community names,
/// regional slang.
struct VocabularyLexicon {
  std::vector<LexiconEntry> entries;
};

std::vector<std::string> lexicon_violations(const VocabularyLexicon& lexicon);

/// Whole-token, case-insensitive, longest surface form first, left to right.
/// Replaced text is not rescanned.
std::string apply_lexicon(std::string_view text, const VocabularyLexicon& lexicon);
Transcript apply_lexicon(const Transcript& transcript, const VocabularyLexicon& lexicon);

struct TranscribeOptions {
  RetryPolicy retry;
  AttemptObserver observer;
};

/// Throws EmptyAudio, BackendUnavailable, BackendRejected. The returned
/// transcript always satisfies the Transcript invariants for the recording.
Transcript transcribe(const Recording& recording, std::span<const std::uint8_t> audio,
                      const AsrBackendDescriptor& backend, const VocabularyLexicon& lexicon,
                      const TranscribeOptions& options = {});

HealthStatus health_check(const AsrBackendDescriptor& backend);

/// Sorts by start, clamps ends into [start, duration + slack] and rebuilds
/// full_text. Applied to every backend response.
void normalize_segments(std::vector<Segment>& segments, double duration_s);

/// Registered backends, each with its own concurrency cap.
class AsrRegistry {
 public:
  /// Throws ConfigInvalid for an invalid or duplicate descriptor.
  void add(AsrBackendDescriptor descriptor);

  const AsrBackendDescriptor& get(const std::string& backend_id) const;
  bool contains(const std::string& backend_id) const { return entries_.count(backend_id) > 0; }
  std::vector<std::string> ids() const;
  bool empty() const { return entries_.empty(); }

  Transcript transcribe(const std::string& backend_id, const Recording& recording,
                        std::span<const std::uint8_t> audio, const VocabularyLexicon& lexicon,
                        const TranscribeOptions& options = {}) const;

  int peak_concurrency(const std::string& backend_id) const;

 private:
  struct Entry {
    AsrBackendDescriptor descriptor;
    std::unique_ptr<ConcurrencyLimiter> limiter;
  };
  std::map<std::string, Entry> entries_;
};

}  // namespace scribe
