#include "scribe/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

#include "scribe/errors.hpp"

namespace scribe {

namespace {

[[noreturn]] void invalid(const std::string& why) { throw Error(ErrorCode::ConfigInvalid, why); }

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    invalid(where + "." + key + " has the wrong type");
  }
}

template <typename T>
void read(const json& obj, const char* key, std::optional<T>& out, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return;
  T value{};
  read(obj, key, value, where);
  out = std::move(value);
}

const json& object_at(const json& parent, const char* key, const std::string& where) {
  static const json empty = json::object();
  auto it = parent.find(key);
  if (it == parent.end() || it->is_null()) return empty;
  if (!it->is_object()) invalid(where + "." + key + " must be an object");
  return *it;
}

const json& array_at(const json& parent, const char* key) {
  static const json empty = json::array();
  auto it = parent.find(key);
  if (it == parent.end() || it->is_null()) return empty;
  if (!it->is_array()) invalid(std::string(key) + " must be an array");
  return *it;
}

AsrBackendDescriptor parse_asr(const json& j, std::size_t index) {
  const std::string where = "asr_backends[" + std::to_string(index) + "]";
  if (!j.is_object()) invalid(where + " must be an object");
  AsrBackendDescriptor d;
  std::string kind = "mock";
  read(j, "backend_id", d.backend_id, where);
  read(j, "kind", kind, where);
  try {
    d.kind = parse_asr_backend_kind(kind);
  } catch (const Error& e) {
    invalid(where + ": " + e.what());
  }
  read(j, "endpoint", d.endpoint, where);
  read(j, "model_id", d.model_id, where);
  read(j, "timeout_s", d.timeout_s, where);
  read(j, "max_concurrency", d.max_concurrency, where);
  read(j, "language_tag", d.language_tag, where);
  read(j, "api_key", d.api_key, where);
  read(j, "health_path", d.health_path, where);
  read(j, "fixture_dir", d.fixture_dir, where);
  read(j, "executable", d.executable, where);
  return d;
}

LlmBackendDescriptor parse_llm(const json& j, std::size_t index) {
  const std::string where = "llm_backends[" + std::to_string(index) + "]";
  if (!j.is_object()) invalid(where + " must be an object");
  LlmBackendDescriptor d;
  std::string kind = "mock";
  read(j, "backend_id", d.backend_id, where);
  read(j, "kind", kind, where);
  try {
    d.kind = parse_llm_backend_kind(kind);
  } catch (const Error& e) {
    invalid(where + ": " + e.what());
  }
  read(j, "endpoint", d.endpoint, where);
  read(j, "model_id", d.model_id, where);
  read(j, "max_output_tokens", d.max_output_tokens, where);
  read(j, "temperature", d.temperature, where);
  read(j, "timeout_s", d.timeout_s, where);
  read(j, "max_concurrency", d.max_concurrency, where);
  read(j, "context_window_tokens", d.context_window_tokens, where);
  read(j, "api_key", d.api_key, where);
  return d;
}

template <typename T>
T parse_number(const std::string& name, const std::string& text) {
  try {
    std::size_t used = 0;
    long long v = std::stoll(text, &used);
    if (used != text.size() || v < 0) throw std::invalid_argument(text);
    return static_cast<T>(v);
  } catch (const std::exception&) {
    invalid(name + " must be a nonnegative integer, got '" + text + "'");
  }
}

bool parse_flag(const std::string& name, const std::string& text) {
  if (text == "1" || text == "true" || text == "yes") return true;
  if (text == "0" || text == "false" || text == "no" || text.empty()) return false;
  invalid(name + " must be a boolean, got '" + text + "'");
}

}  // namespace

std::optional<std::string> process_env(const char* name) {
  const char* v = std::getenv(name);
  if (!v) return std::nullopt;
  return std::string(v);
}

ApiConfig parse_config(const json& doc) {
  if (!doc.is_object()) invalid("configuration must be a JSON object");
  static const std::set<std::string> known = {
      "listen", "storage_root", "max_upload_bytes", "auth", "workers", "asr_backends",
      "llm_backends", "default_asr_backend", "default_llm_backend", "lexicon", "retry", "users",
      "sync_audit_appends"};
  for (const auto& [key, _] : doc.items()) {
    if (!known.count(key)) invalid("unknown configuration key '" + key + "'");
  }

  ApiConfig c;
  const json& listen = object_at(doc, "listen", "config");
  read(listen, "host", c.listen_host, "listen");
  read(listen, "port", c.listen_port, "listen");
  std::string root = c.storage_root.string();
  read(doc, "storage_root", root, "config");
  c.storage_root = root;
  read(doc, "max_upload_bytes", c.max_upload_bytes, "config");
  read(doc, "sync_audit_appends", c.sync_audit_appends, "config");

  const json& auth = object_at(doc, "auth", "config");
  std::string mode = std::string(to_string(c.auth.mode));
  read(auth, "mode", mode, "auth");
  c.auth.mode = parse_auth_mode(mode);
  read(auth, "tokens", c.auth.tokens, "auth");
  read(auth, "oidc_key", c.auth.oidc_key, "auth");
  read(auth, "oidc_issuer", c.auth.oidc_issuer, "auth");
  read(auth, "allow_dev", c.auth.allow_dev, "auth");
  read(auth, "dev_user", c.auth.dev_user, "auth");

  const json& workers = object_at(doc, "workers", "config");
  read(workers, "transcription", c.transcription_workers, "workers");
  read(workers, "generation", c.generation_workers, "workers");

  const json& asr = array_at(doc, "asr_backends");
  for (std::size_t i = 0; i < asr.size(); ++i) c.asr_backends.push_back(parse_asr(asr[i], i));
  const json& llm = array_at(doc, "llm_backends");
  for (std::size_t i = 0; i < llm.size(); ++i) c.llm_backends.push_back(parse_llm(llm[i], i));
  read(doc, "default_asr_backend", c.default_asr_backend, "config");
  read(doc, "default_llm_backend", c.default_llm_backend, "config");

  for (const auto& e : array_at(doc, "lexicon")) {
    LexiconEntry entry;
    read(e, "surface_form", entry.surface_form, "lexicon");
    read(e, "canonical_form", entry.canonical_form, "lexicon");
    c.lexicon.entries.push_back(std::move(entry));
  }

  const json& retry = object_at(doc, "retry", "config");
  read(retry, "max_retries", c.retry.max_retries, "retry");
  std::int64_t base_ms = c.retry.base_delay.count();
  read(retry, "base_delay_ms", base_ms, "retry");
  c.retry.base_delay = std::chrono::milliseconds(base_ms);
  read(retry, "factor", c.retry.factor, "retry");

  for (const auto& u : array_at(doc, "users")) {
    SeedUser s;
    std::string role = "clinician";
    read(u, "id", s.id, "users");
    read(u, "display_name", s.display_name, "users");
    read(u, "role", role, "users");
    try {
      s.role = parse_enum<Role>(role);
    } catch (const Error& e) {
      invalid(std::string("users: ") + e.what());
    }
    c.users.push_back(std::move(s));
  }
  return c;
}

void apply_env_overrides(ApiConfig& c, const EnvLookup& env) {
  if (auto v = env("BERTA_LISTEN_HOST")) c.listen_host = *v;
  if (auto v = env("BERTA_LISTEN_PORT")) c.listen_port = parse_number<int>("BERTA_LISTEN_PORT", *v);
  if (auto v = env("BERTA_STORAGE_ROOT")) c.storage_root = *v;
  if (auto v = env("BERTA_MAX_UPLOAD_BYTES")) {
    c.max_upload_bytes = parse_number<std::uint64_t>("BERTA_MAX_UPLOAD_BYTES", *v);
  }
  if (auto v = env("BERTA_AUTH_MODE")) c.auth.mode = parse_auth_mode(*v);
  if (auto v = env("BERTA_ALLOW_DEV_AUTH")) c.auth.allow_dev = parse_flag("BERTA_ALLOW_DEV_AUTH", *v);
  if (auto v = env("BERTA_OIDC_KEY")) c.auth.oidc_key = *v;
  if (auto v = env("BERTA_TRANSCRIPTION_WORKERS")) {
    c.transcription_workers = parse_number<int>("BERTA_TRANSCRIPTION_WORKERS", *v);
  }
  if (auto v = env("BERTA_GENERATION_WORKERS")) {
    c.generation_workers = parse_number<int>("BERTA_GENERATION_WORKERS", *v);
  }
  if (auto v = env("BERTA_ASR_BACKEND")) c.default_asr_backend = *v;
  if (auto v = env("BERTA_LLM_BACKEND")) c.default_llm_backend = *v;

  const auto asr_target = [&]() -> AsrBackendDescriptor& {
    if (c.asr_backends.empty()) invalid("ASR override given but no ASR backend is configured");
    for (auto& d : c.asr_backends) {
      if (d.backend_id == c.default_asr_backend) return d;
    }
    return c.asr_backends.front();
  };
  const auto llm_target = [&]() -> LlmBackendDescriptor& {
    if (c.llm_backends.empty()) invalid("LLM override given but no LLM backend is configured");
    for (auto& d : c.llm_backends) {
      if (d.backend_id == c.default_llm_backend) return d;
    }
    return c.llm_backends.front();
  };
  if (auto v = env("BERTA_ASR_ENDPOINT")) asr_target().endpoint = *v;
  if (auto v = env("BERTA_ASR_API_KEY")) asr_target().api_key = *v;
  if (auto v = env("BERTA_LLM_ENDPOINT")) llm_target().endpoint = *v;
  if (auto v = env("BERTA_LLM_MODEL")) llm_target().model_id = *v;
  if (auto v = env("BERTA_LLM_API_KEY")) llm_target().api_key = *v;
}

std::vector<std::string> config_violations(const ApiConfig& c) {
  std::vector<std::string> out;
  if (c.asr_backends.empty()) out.push_back("at least one ASR backend is required");
  if (c.llm_backends.empty()) out.push_back("at least one LLM backend is required");
  std::set<std::string> ids;
  for (const auto& d : c.asr_backends) {
    for (const auto& p : descriptor_violations(d)) out.push_back("asr backend '" + d.backend_id + "': " + p);
    if (!ids.insert("asr/" + d.backend_id).second) out.push_back("duplicate ASR backend '" + d.backend_id + "'");
  }
  for (const auto& d : c.llm_backends) {
    for (const auto& p : descriptor_violations(d)) out.push_back("llm backend '" + d.backend_id + "': " + p);
    if (!ids.insert("llm/" + d.backend_id).second) out.push_back("duplicate LLM backend '" + d.backend_id + "'");
  }
  if (!c.default_asr_backend.empty() && !ids.count("asr/" + c.default_asr_backend)) {
    out.push_back("default ASR backend '" + c.default_asr_backend + "' is not configured");
  }
  if (!c.default_llm_backend.empty() && !ids.count("llm/" + c.default_llm_backend)) {
    out.push_back("default LLM backend '" + c.default_llm_backend + "' is not configured");
  }
  if (c.listen_port < 0 || c.listen_port > 65535) out.push_back("listen port out of range");
  if (c.max_upload_bytes == 0) out.push_back("max_upload_bytes must be positive");
  if (c.storage_root.empty()) out.push_back("storage_root is required");
  if (c.transcription_workers < 1 || c.generation_workers < 1) out.push_back("worker counts must be positive");
  if (c.retry.max_retries < 0 || c.retry.base_delay.count() < 0 || c.retry.factor < 1.0) {
    out.push_back("retry policy needs max_retries >= 0, base_delay_ms >= 0, factor >= 1");
  }
  for (const auto& p : lexicon_violations(c.lexicon)) out.push_back("lexicon: " + p);
  switch (c.auth.mode) {
    case AuthMode::none_dev:
      if (!c.auth.allow_dev) out.push_back("auth mode none_dev requires allow_dev (BERTA_ALLOW_DEV_AUTH=1)");
      break;
    case AuthMode::static_token:
      if (c.auth.tokens.empty()) out.push_back("static_token auth needs at least one token");
      for (const auto& [token, user] : c.auth.tokens) {
        if (token.empty() || user.empty()) out.push_back("static_token entries need a token and a user id");
      }
      break;
    case AuthMode::oidc_stub:
      if (!c.auth.oidc_key || c.auth.oidc_key->empty()) out.push_back("oidc_stub auth needs oidc_key");
      break;
  }
  for (const auto& u : c.users) {
    if (u.id.empty()) out.push_back("seeded users need an id");
  }
  return out;
}

namespace {

ApiConfig finish(ApiConfig c, const EnvLookup& env, const std::filesystem::path& base) {
  apply_env_overrides(c, env);
  if (!base.empty()) {
    if (c.storage_root.is_relative()) c.storage_root = base / c.storage_root;
    for (auto& d : c.asr_backends) {
      if (d.fixture_dir && std::filesystem::path(*d.fixture_dir).is_relative()) {
        d.fixture_dir = (base / *d.fixture_dir).string();
      }
    }
  }
  if (c.default_asr_backend.empty() && !c.asr_backends.empty()) c.default_asr_backend = c.asr_backends.front().backend_id;
  if (c.default_llm_backend.empty() && !c.llm_backends.empty()) c.default_llm_backend = c.llm_backends.front().backend_id;
  if (auto problems = config_violations(c); !problems.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& p : problems) msg += "\n  - " + p;
    invalid(msg);
  }
  return c;
}

}  // namespace

ApiConfig load_config_json(const json& document, const EnvLookup& env) {
  return finish(parse_config(document), env, {});
}

ApiConfig load_config(const std::filesystem::path& file, const EnvLookup& env) {
  std::ifstream in(file);
  if (!in) invalid("cannot read configuration file " + file.string());
  const json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) invalid("configuration file " + file.string() + " is not valid JSON");
  return finish(parse_config(doc), env, file.parent_path());
}

const AsrBackendDescriptor& default_asr(const ApiConfig& config) {
  for (const auto& d : config.asr_backends) {
    if (d.backend_id == config.default_asr_backend) return d;
  }
  if (config.asr_backends.empty()) invalid("no ASR backend configured");
  return config.asr_backends.front();
}

const LlmBackendDescriptor& default_llm(const ApiConfig& config) {
  for (const auto& d : config.llm_backends) {
    if (d.backend_id == config.default_llm_backend) return d;
  }
  if (config.llm_backends.empty()) invalid("no LLM backend configured");
  return config.llm_backends.front();
}

}  // namespace scribe
