#include "scribe/auth.hpp"

#include "scribe/digest.hpp"
#include "scribe/errors.hpp"
#include "scribe/json_codec.hpp"

namespace scribe {

std::string_view to_string(AuthMode mode) {
  switch (mode) {
    case AuthMode::static_token: return "static_token";
    case AuthMode::oidc_stub: return "oidc_stub";
    case AuthMode::none_dev: return "none_dev";
  }
  return "static_token";
}

AuthMode parse_auth_mode(std::string_view text) {
  for (auto m : {AuthMode::static_token, AuthMode::oidc_stub, AuthMode::none_dev}) {
    if (to_string(m) == text) return m;
  }
  throw Error(ErrorCode::ConfigInvalid, "unknown auth mode '" + std::string(text) + "'");
}

namespace {

[[noreturn]] void deny(const std::string& why) { throw Error(ErrorCode::Unauthorized, why); }

std::string bearer_token(const std::optional<std::string>& header) {
  if (!header) deny("missing credentials");
  constexpr std::string_view prefix = "Bearer ";
  if (header->size() <= prefix.size() || header->compare(0, prefix.size(), prefix) != 0) {
    deny("expected a bearer token");
  }
  return header->substr(prefix.size());
}

std::string sign(std::string_view signing_input, const std::string& key) {
  const Digest mac = hmac_sha256(key, signing_input);
  return base64url_encode(std::string_view(reinterpret_cast<const char*>(mac.data()), mac.size()));
}

Principal verify_stub_token(const std::string& token, const AuthConfig& config, Timestamp now) {
  if (!config.oidc_key) deny("no verification key configured");
  const auto dot1 = token.find('.');
  const auto dot2 = dot1 == std::string::npos ? dot1 : token.find('.', dot1 + 1);
  if (dot2 == std::string::npos || token.find('.', dot2 + 1) != std::string::npos) deny("malformed token");

  const std::string_view signing_input(token.data(), dot2);
  if (!constant_time_equal(sign(signing_input, *config.oidc_key), std::string_view(token).substr(dot2 + 1))) {
    deny("bad token signature");
  }
  const auto header = base64url_decode(std::string_view(token).substr(0, dot1));
  const auto claims_raw = base64url_decode(std::string_view(token).substr(dot1 + 1, dot2 - dot1 - 1));
  if (!header || !claims_raw) deny("malformed token");
  const auto hdr = json::parse(*header, nullptr, false);
  if (!hdr.is_object() || hdr.value("alg", "") != "HS256") deny("unsupported token algorithm");
  const auto claims = json::parse(*claims_raw, nullptr, false);
  if (!claims.is_object()) deny("malformed token claims");

  const auto sub = claims.find("sub");
  if (sub == claims.end() || !sub->is_string() || sub->get<std::string>().empty()) deny("token has no subject");
  if (auto exp = claims.find("exp"); exp != claims.end()) {
    if (!exp->is_number() || exp->get<double>() * 1000.0 <= static_cast<double>(now.ms)) deny("token expired");
  }
  if (config.oidc_issuer) {
    auto iss = claims.find("iss");
    if (iss == claims.end() || !iss->is_string() || iss->get<std::string>() != *config.oidc_issuer) {
      deny("unexpected token issuer");
    }
  }
  Principal p{sub->get<std::string>(), std::nullopt};
  if (auto role = claims.find("role"); role != claims.end() && role->is_string()) {
    try {
      p.asserted_role = parse_enum<Role>(role->get<std::string>());
    } catch (const Error&) {
      deny("unknown role claim");
    }
  }
  return p;
}

}  // namespace

Principal authenticate(const std::optional<std::string>& authorization, const AuthConfig& config,
                       Timestamp now) {
  switch (config.mode) {
    case AuthMode::none_dev:
      if (!config.allow_dev) deny("development auth is disabled");
      return {config.dev_user, std::nullopt};
    case AuthMode::static_token: {
      const std::string token = bearer_token(authorization);
      for (const auto& [known, user] : config.tokens) {
        if (constant_time_equal(known, token)) return {user, std::nullopt};
      }
      deny("unknown token");
    }
    case AuthMode::oidc_stub:
      return verify_stub_token(bearer_token(authorization), config, now);
  }
  deny("unsupported auth mode");
}

std::string make_stub_token(const std::string& subject, const std::string& key,
                            std::optional<std::int64_t> exp_s, std::optional<std::string> issuer,
                            std::optional<Role> role) {
  json claims = {{"sub", subject}};
  if (exp_s) claims["exp"] = *exp_s;
  if (issuer) claims["iss"] = *issuer;
  if (role) claims["role"] = std::string(to_string(*role));
  const std::string input = base64url_encode(R"({"alg":"HS256","typ":"JWT"})") + "." +
                            base64url_encode(claims.dump());
  return input + "." + sign(input, key);
}

}  // namespace scribe
