#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <map>

#include "fixtures.hpp"
#include "scribe/auth.hpp"
#include "scribe/config.hpp"
#include "scribe/digest.hpp"
#include "scribe/errors.hpp"

using namespace scribe;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::InvariantViolation;
}

EnvLookup env_of(std::map<std::string, std::string> vars) {
  return [vars = std::move(vars)](const char* name) -> std::optional<std::string> {
    auto it = vars.find(name);
    if (it == vars.end()) return std::nullopt;
    return it->second;
  };
}

const EnvLookup no_env = env_of({});

json base_config() {
  return json::parse(R"({
    "listen": {"host": "127.0.0.1", "port": 0},
    "storage_root": "/tmp/scribe-config-test",
    "auth": {"mode": "static_token", "tokens": {"tok-a": "alice"}},
    "asr_backends": [
      {"backend_id": "mock-asr", "kind": "mock", "model_id": "mock-asr-1", "fixture_dir": "fixtures"},
      {"backend_id": "whisper", "kind": "http_transcription", "endpoint": "http://asr:9000/v1/audio/transcriptions",
       "model_id": "whisper-large-v3"}
    ],
    "llm_backends": [
      {"backend_id": "mock-llm", "kind": "mock", "model_id": "mock-llm-1"},
      {"backend_id": "vllm", "kind": "http_chat", "endpoint": "http://llm:8000/v1", "model_id": "llama-3.1-70b",
       "max_output_tokens": 1500, "temperature": 0.2, "context_window_tokens": 32768}
    ],
    "lexicon": [{"surface_form": "fort mac", "canonical_form": "Fort McMurray"}],
    "retry": {"max_retries": 3, "base_delay_ms": 100, "factor": 2.0},
    "users": [{"id": "root", "display_name": "Admin", "role": "admin"}]
  })");
}

}  // namespace

TEST_CASE("config parses every section") {
  const auto c = load_config_json(base_config(), no_env);
  CHECK(c.listen_port == 0);
  CHECK(c.auth.mode == AuthMode::static_token);
  CHECK(c.auth.tokens.at("tok-a") == "alice");
  REQUIRE(c.asr_backends.size() == 2);
  CHECK(c.asr_backends[1].kind == AsrBackendKind::http_transcription);
  CHECK(c.llm_backends[1].context_window_tokens == 32768);
  CHECK(default_asr(c).backend_id == "mock-asr");
  CHECK(default_llm(c).backend_id == "mock-llm");
  CHECK(c.lexicon.entries.size() == 1);
  CHECK(c.retry.max_retries == 3);
  REQUIRE(c.users.size() == 1);
  CHECK(c.users[0].role == Role::admin);
}

TEST_CASE("environment overrides select backends by id and patch the default") {
  const auto c = load_config_json(base_config(), env_of({{"BERTA_LLM_BACKEND", "vllm"},
                                                         {"BERTA_LLM_ENDPOINT", "http://gpu:8000/v1"},
                                                         {"BERTA_LLM_MODEL", "mistral"},
                                                         {"BERTA_LLM_API_KEY", "sk"},
                                                         {"BERTA_ASR_BACKEND", "whisper"},
                                                         {"BERTA_ASR_API_KEY", "ak"},
                                                         {"BERTA_LISTEN_PORT", "9091"},
                                                         {"BERTA_MAX_UPLOAD_BYTES", "1024"},
                                                         {"BERTA_TRANSCRIPTION_WORKERS", "7"}}));
  CHECK(default_llm(c).backend_id == "vllm");
  CHECK(default_llm(c).endpoint == "http://gpu:8000/v1");
  CHECK(default_llm(c).model_id == "mistral");
  CHECK(default_llm(c).api_key == std::optional<std::string>("sk"));
  CHECK(c.llm_backends[0].model_id == "mock-llm-1");
  CHECK(default_asr(c).backend_id == "whisper");
  CHECK(default_asr(c).api_key == std::optional<std::string>("ak"));
  CHECK(c.listen_port == 9091);
  CHECK(c.max_upload_bytes == 1024);
  CHECK(c.transcription_workers == 7);

  CHECK(code_of([&] { load_config_json(base_config(), env_of({{"BERTA_LLM_BACKEND", "absent"}})); }) ==
        ErrorCode::ConfigInvalid);
  CHECK(code_of([&] { load_config_json(base_config(), env_of({{"BERTA_LISTEN_PORT", "eighty"}})); }) ==
        ErrorCode::ConfigInvalid);
}

TEST_CASE("configs that cannot be served are refused") {
  auto no_llm = base_config();
  no_llm["llm_backends"] = json::array();
  CHECK(code_of([&] { load_config_json(no_llm, no_env); }) == ErrorCode::ConfigInvalid);

  auto no_asr = base_config();
  no_asr.erase("asr_backends");
  CHECK(code_of([&] { load_config_json(no_asr, no_env); }) == ErrorCode::ConfigInvalid);

  auto dev = base_config();
  dev["auth"] = {{"mode", "none_dev"}};
  CHECK(code_of([&] { load_config_json(dev, no_env); }) == ErrorCode::ConfigInvalid);
  CHECK(load_config_json(dev, env_of({{"BERTA_ALLOW_DEV_AUTH", "1"}})).auth.mode == AuthMode::none_dev);

  auto bad_kind = base_config();
  bad_kind["asr_backends"][0]["kind"] = "telepathy";
  CHECK(code_of([&] { load_config_json(bad_kind, no_env); }) == ErrorCode::ConfigInvalid);

  auto wrong_type = base_config();
  wrong_type["listen"]["port"] = "eighty";
  CHECK(code_of([&] { load_config_json(wrong_type, no_env); }) == ErrorCode::ConfigInvalid);

  auto hot = base_config();
  hot["llm_backends"][1]["temperature"] = 3.0;
  CHECK(code_of([&] { load_config_json(hot, no_env); }) == ErrorCode::ConfigInvalid);

  auto dup = base_config();
  dup["llm_backends"][1]["backend_id"] = "mock-llm";
  CHECK(code_of([&] { load_config_json(dup, no_env); }) == ErrorCode::ConfigInvalid);

  auto no_tokens = base_config();
  no_tokens["auth"]["tokens"] = json::object();
  CHECK(code_of([&] { load_config_json(no_tokens, no_env); }) == ErrorCode::ConfigInvalid);

  auto oidc = base_config();
  oidc["auth"] = {{"mode", "oidc_stub"}};
  CHECK(code_of([&] { load_config_json(oidc, no_env); }) == ErrorCode::ConfigInvalid);
  CHECK(load_config_json(oidc, env_of({{"BERTA_OIDC_KEY", "k"}})).auth.oidc_key == std::optional<std::string>("k"));
}

TEST_CASE("config file paths resolve against the file's directory") {
  fixtures::TempDir dir;
  auto doc = base_config();
  doc["storage_root"] = "data";
  {
    std::ofstream out(dir.path() / "scribe.json");
    out << doc.dump(2);
  }
  const auto c = load_config(dir.path() / "scribe.json", no_env);
  CHECK(c.storage_root == dir.path() / "data");
  CHECK(c.asr_backends[0].fixture_dir == std::optional<std::string>((dir.path() / "fixtures").string()));
  CHECK(code_of([&] { load_config(dir.path() / "missing.json", no_env); }) == ErrorCode::ConfigInvalid);
  {
    std::ofstream out(dir.path() / "broken.json");
    out << "{ not json";
  }
  CHECK(code_of([&] { load_config(dir.path() / "broken.json", no_env); }) == ErrorCode::ConfigInvalid);
}

TEST_CASE("static token auth") {
  AuthConfig a;
  a.tokens = {{"tok-a", "alice"}, {"tok-b", "bob"}};
  CHECK(authenticate(std::string("Bearer tok-a"), a).user_id == "alice");
  CHECK(authenticate(std::string("Bearer tok-b"), a).user_id == "bob");
  CHECK(code_of([&] { authenticate(std::nullopt, a); }) == ErrorCode::Unauthorized);
  CHECK(code_of([&] { authenticate(std::string("Bearer nope"), a); }) == ErrorCode::Unauthorized);
  CHECK(code_of([&] { authenticate(std::string("Basic dG9rLWE="), a); }) == ErrorCode::Unauthorized);
  CHECK(code_of([&] { authenticate(std::string("Bearer "), a); }) == ErrorCode::Unauthorized);
}

TEST_CASE("oidc stub tokens") {
  AuthConfig a;
  a.mode = AuthMode::oidc_stub;
  a.oidc_key = "shared-secret";
  const Timestamp now{1'750'000'000'000};
  const auto good = make_stub_token("carol", "shared-secret", 1'750'000'600);
  CHECK(authenticate("Bearer " + good, a, now).user_id == "carol");
  const auto admin = make_stub_token("dave", "shared-secret", std::nullopt, std::nullopt, Role::admin);
  CHECK(authenticate("Bearer " + admin, a, now).asserted_role == std::optional<Role>(Role::admin));

  // Wrong key, expired, tampered payload.
  CHECK(code_of([&] { authenticate("Bearer " + make_stub_token("carol", "other"), a, now); }) ==
        ErrorCode::Unauthorized);
  CHECK(code_of([&] { authenticate("Bearer " + make_stub_token("carol", "shared-secret", 1'749'999'000), a, now); }) ==
        ErrorCode::Unauthorized);
  const auto dot1 = good.find('.');
  const auto dot2 = good.find('.', dot1 + 1);
  const std::string forged_payload = base64url_encode(R"({"exp":1750000600,"sub":"mallory"})");
  const std::string forged = good.substr(0, dot1 + 1) + forged_payload + good.substr(dot2);
  CHECK(code_of([&] { authenticate("Bearer " + forged, a, now); }) == ErrorCode::Unauthorized);
  std::string flipped = good;
  flipped.back() = flipped.back() == 'A' ? 'B' : 'A';
  CHECK(code_of([&] { authenticate("Bearer " + flipped, a, now); }) == ErrorCode::Unauthorized);
  CHECK(code_of([&] { authenticate(std::string("Bearer a.b"), a, now); }) == ErrorCode::Unauthorized);

  a.oidc_issuer = "https://idp.example";
  CHECK(code_of([&] { authenticate("Bearer " + good, a, now); }) == ErrorCode::Unauthorized);
  const auto issued = make_stub_token("carol", "shared-secret", std::nullopt, std::string("https://idp.example"));
  CHECK(authenticate("Bearer " + issued, a, now).user_id == "carol");
}

TEST_CASE("none_dev refuses unless explicitly allowed") {
  AuthConfig a;
  a.mode = AuthMode::none_dev;
  CHECK(code_of([&] { authenticate(std::nullopt, a); }) == ErrorCode::Unauthorized);
  a.allow_dev = true;
  CHECK(authenticate(std::nullopt, a).user_id == "dev");
  CHECK(parse_auth_mode("oidc_stub") == AuthMode::oidc_stub);
  CHECK(code_of([] { parse_auth_mode("ldap"); }) == ErrorCode::ConfigInvalid);
}
