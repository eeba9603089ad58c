#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "scribe/domain.hpp"

namespace scribe {

enum class AuthMode { static_token, oidc_stub, none_dev };

std::string_view to_string(AuthMode mode);
/// Throws ConfigInvalid.
AuthMode parse_auth_mode(std::string_view text);

struct AuthConfig {
  AuthMode mode = AuthMode::static_token;
  /// static_token: bearer token -> user id.
  std::map<std::string, std::string> tokens;
  /// oidc_stub: HS256 shared verification key.
  std::optional<std::string> oidc_key;
  /// oidc_stub: required `iss` claim when set.
  std::optional<std::string> oidc_issuer;
  /// none_dev is refused unless this is set.
  bool allow_dev = false;
  std::string dev_user = "dev";
};

struct Principal {
  std::string user_id;
  /// Role asserted by the credential itself (oidc `role` claim); the stored
  /// profile decides otherwise.
  std::optional<Role> asserted_role;
};

/// `authorization` is the raw Authorization header value, if any. Throws
/// Unauthorized.
Principal authenticate(const std::optional<std::string>& authorization, const AuthConfig& config,
                       Timestamp now = now_utc());

/// HS256 compact JWS for the oidc_stub mode. Claims: sub, optional exp
/// (seconds since epoch), optional iss, optional role.
std::string make_stub_token(const std::string& subject, const std::string& key,
                            std::optional<std::int64_t> exp_s = std::nullopt,
                            std::optional<std::string> issuer = std::nullopt,
                            std::optional<Role> role = std::nullopt);

}  // namespace scribe
