#pragma once

// Service configuration: one JSON file plus BERTA_* environment overrides.
//
//   BERTA_LISTEN_HOST, BERTA_LISTEN_PORT, BERTA_STORAGE_ROOT,
//   BERTA_MAX_UPLOAD_BYTES, BERTA_AUTH_MODE, BERTA_ALLOW_DEV_AUTH,
//   BERTA_OIDC_KEY, BERTA_ASR_BACKEND, BERTA_ASR_ENDPOINT, BERTA_ASR_API_KEY,
//   BERTA_LLM_BACKEND, BERTA_LLM_ENDPOINT, BERTA_LLM_MODEL, BERTA_LLM_API_KEY,
//   BERTA_TRANSCRIPTION_WORKERS, BERTA_GENERATION_WORKERS
//
// BERTA_ASR_BACKEND / BERTA_LLM_BACKEND select the default backend by id; the
// endpoint, model and key overrides apply to that default backend.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "scribe/asr_gateway.hpp"
#include "scribe/auth.hpp"
#include "scribe/llm_gateway.hpp"
#include "scribe/json_codec.hpp"

namespace scribe {

struct SeedUser {
  std::string id;
  std::string display_name;
  Role role = Role::clinician;
};

struct ApiConfig {
  std::string listen_host = "127.0.0.1";
  int listen_port = 8080;  // 0 picks a free port
  std::filesystem::path storage_root = "data";
  std::uint64_t max_upload_bytes = 256ull * 1024 * 1024;
  AuthConfig auth;
  int transcription_workers = 4;
  int generation_workers = 4;
  std::vector<AsrBackendDescriptor> asr_backends;
  std::vector<LlmBackendDescriptor> llm_backends;
  std::string default_asr_backend;  // empty: the first listed
  std::string default_llm_backend;
  VocabularyLexicon lexicon;
  RetryPolicy retry;
  std::vector<SeedUser> users;
  bool sync_audit_appends = true;
};

using EnvLookup = std::function<std::optional<std::string>(const char* name)>;

/// Reads the process environment.
std::optional<std::string> process_env(const char* name);

/// Throws ConfigInvalid for unknown kinds, wrong types or missing fields.
ApiConfig parse_config(const json& document);
/// Throws ConfigInvalid.
void apply_env_overrides(ApiConfig& config, const EnvLookup& env);
/// Empty when the config can be served.
std::vector<std::string> config_violations(const ApiConfig& config);
/// Parse, override, resolve defaults, validate. Throws ConfigInvalid.
ApiConfig load_config(const std::filesystem::path& file, const EnvLookup& env = process_env);
ApiConfig load_config_json(const json& document, const EnvLookup& env = process_env);

const AsrBackendDescriptor& default_asr(const ApiConfig& config);
const LlmBackendDescriptor& default_llm(const ApiConfig& config);

}  // namespace scribe
