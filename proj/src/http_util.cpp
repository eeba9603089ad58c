#include "scribe/http_util.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "scribe/errors.hpp"

namespace scribe {

ParsedUrl parse_url(std::string_view url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) {
    throw Error(ErrorCode::ConfigInvalid, "endpoint is not an absolute URL: " + std::string(url));
  }
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw Error(ErrorCode::ConfigInvalid, "unsupported URL scheme: " + std::string(scheme));
  }
  const auto host_begin = scheme_end + 3;
  const auto path_begin = url.find('/', host_begin);
  ParsedUrl out;
  out.origin = std::string(url.substr(0, path_begin));
  out.path = path_begin == std::string_view::npos ? "/" : std::string(url.substr(path_begin));
  if (out.origin.size() == host_begin) {
    throw Error(ErrorCode::ConfigInvalid, "endpoint has no host: " + std::string(url));
  }
  return out;
}

std::string join_path(std::string_view base, std::string_view suffix) {
  std::string out(base);
  while (!out.empty() && out.back() == '/') out.pop_back();
  if (suffix.empty() || suffix.front() != '/') out += '/';
  out += suffix;
  return out;
}

std::chrono::milliseconds RetryPolicy::delay_before_retry(int retry) const {
  const double scale = std::pow(factor, retry - 1);
  return std::chrono::milliseconds(static_cast<std::int64_t>(base_delay.count() * scale));
}

void run_with_retries(const RetryPolicy& policy, const std::function<void()>& attempt,
                      const AttemptObserver& observer, std::string_view backend_id) {
  const int max_attempts = 1 + std::max(0, policy.max_retries);
  for (int n = 1;; ++n) {
    try {
      attempt();
      if (observer) observer(n, std::nullopt);
      return;
    } catch (const TransientFailure& e) {
      if (observer) observer(n, std::string(e.what()));
      if (n >= max_attempts) {
        throw Error(ErrorCode::BackendUnavailable,
                    "backend '" + std::string(backend_id) + "' unavailable after " +
                        std::to_string(n) + " attempts: " + e.what());
      }
    } catch (const std::exception& e) {
      if (observer) observer(n, std::string(e.what()));
      throw;
    }
    std::this_thread::sleep_for(policy.delay_before_retry(n));
  }
}

void ConcurrencyLimiter::acquire() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return available_ > 0; });
  --available_;
  ++in_flight_;
  peak_ = std::max(peak_, in_flight_);
}

void ConcurrencyLimiter::release() {
  {
    std::lock_guard lock(mu_);
    ++available_;
    --in_flight_;
  }
  cv_.notify_one();
}

}  // namespace scribe
