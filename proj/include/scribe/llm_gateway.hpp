#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "scribe/domain.hpp"
#include "scribe/http_util.hpp"
#include "scribe/templates.hpp"

namespace scribe {

enum class LlmBackendKind { mock, http_chat };

std::string_view to_string(LlmBackendKind kind);
LlmBackendKind parse_llm_backend_kind(std::string_view text);

struct LlmBackendDescriptor {
  std::string backend_id;
  LlmBackendKind kind = LlmBackendKind::mock;
  /// Base URL of a chat-completions API, e.g. "http://gpu01:8000/v1".
  std::optional<std::string> endpoint;
  std::string model_id;
  int max_output_tokens = 1500;
  double temperature = 0.2;
  double timeout_s = 300.0;
  int max_concurrency = 8;
  std::int64_t context_window_tokens = 128000;
  std::optional<std::string> api_key;
};

std::vector<std::string> descriptor_violations(const LlmBackendDescriptor& d);

struct GenerationResult {
  std::string raw_text;
  std::vector<Section> parsed_sections;
  TokenUsage token_usage;
  std::int64_t latency_ms = 0;
  bool repaired = false;
};

/// ceil(bytes / 4). Used only when a backend omits usage.
std::int64_t estimate_tokens(std::string_view text);

struct GenerateOptions {
  RetryPolicy retry;
  AttemptObserver observer;
};

/// Throws BackendUnavailable, BackendRejected, ContextOverflow, and
/// MalformedOutput (only after one repair re-prompt also fails to parse).
GenerationResult generate(const PromptBundle& bundle, const NoteTemplate& tmpl,
                          const LlmBackendDescriptor& backend, const GenerateOptions& options = {});

HealthStatus health_check(const LlmBackendDescriptor& backend);

/// The mock model: for every "## <title>" line inside the prompt's <sections>
/// block, emits that header followed by the first ten words of the first
/// transcript.
std::string mock_completion(std::string_view user_text);

class LlmRegistry {
 public:
  void add(LlmBackendDescriptor descriptor);
  const LlmBackendDescriptor& get(const std::string& backend_id) const;
  bool contains(const std::string& backend_id) const { return entries_.count(backend_id) > 0; }
  std::vector<std::string> ids() const;
  bool empty() const { return entries_.empty(); }

  GenerationResult generate(const std::string& backend_id, const PromptBundle& bundle,
                            const NoteTemplate& tmpl, const GenerateOptions& options = {}) const;

 private:
  struct Entry {
    LlmBackendDescriptor descriptor;
    std::unique_ptr<ConcurrencyLimiter> limiter;
  };
  std::map<std::string, Entry> entries_;
};

}  // namespace scribe
