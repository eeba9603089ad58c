#pragma once

// Shared client plumbing for the backend adapters. Private to the library.

#include <httplib.h>

#include <memory>
#include <nlohmann/json.hpp>
#include <string>

#include "scribe/errors.hpp"
#include "scribe/http_util.hpp"

namespace scribe::detail {

inline std::unique_ptr<httplib::Client> make_client(const std::string& origin, double timeout_s,
                                                    const std::optional<std::string>& api_key) {
  auto client = std::make_unique<httplib::Client>(origin);
  const auto secs = static_cast<time_t>(timeout_s);
  const auto usecs = static_cast<time_t>((timeout_s - static_cast<double>(secs)) * 1e6);
  client->set_connection_timeout(secs, usecs);
  client->set_read_timeout(secs, usecs);
  client->set_write_timeout(secs, usecs);
  if (api_key && !api_key->empty()) client->set_bearer_token_auth(*api_key);
  return client;
}

/// Throws TransientFailure when the request never produced a response. The
/// returned reference lives as long as `result`.
inline const httplib::Response& require_response(const httplib::Result& result) {
  if (!result) {
    const auto err = result.error();
    const bool timeout = err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout;
    throw TransientFailure(std::string(timeout ? "timeout" : "connection") + ": " +
                           httplib::to_string(err));
  }
  return result.value();
}

/// Extracts an error message from an OpenAI-style error body, or the raw body.
inline std::string backend_message(const httplib::Response& res) {
  auto parsed = nlohmann::json::parse(res.body, nullptr, false);
  if (!parsed.is_discarded() && parsed.is_object()) {
    if (auto it = parsed.find("error"); it != parsed.end()) {
      if (it->is_object() && it->contains("message") && (*it)["message"].is_string()) {
        return (*it)["message"].get<std::string>();
      }
      if (it->is_string()) return it->get<std::string>();
    }
    if (auto it = parsed.find("detail"); it != parsed.end() && it->is_string()) {
      return it->get<std::string>();
    }
  }
  return res.body.substr(0, 500);
}

inline HealthStatus probe(const std::string& url, double timeout_s,
                          const std::optional<std::string>& api_key, httplib::Result* keep = nullptr) {
  ParsedUrl parsed;
  try {
    parsed = parse_url(url);
  } catch (const Error& e) {
    return HealthStatus::failing(std::string("config: ") + e.what());
  }
  auto client = make_client(parsed.origin, timeout_s, api_key);
  auto result = client->Get(parsed.path);
  if (!result) return HealthStatus::failing("connection");
  if (result->status < 200 || result->status >= 300) {
    return HealthStatus::failing("status " + std::to_string(result->status));
  }
  if (keep) *keep = std::move(result);
  return HealthStatus::ok();
}

}  // namespace scribe::detail
