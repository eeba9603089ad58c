#pragma once

#include <chrono>
#include <condition_variable>
#include <functional>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace scribe {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // always begins with '/'
};

/// Accepts http:// and https:// URLs. Throws ConfigInvalid.
ParsedUrl parse_url(std::string_view url);

/// Joins a base path and a suffix with exactly one '/'.
std::string join_path(std::string_view base, std::string_view suffix);

/// Retries apply to timeouts and connection failures only.
struct RetryPolicy {
  int max_retries = 2;
  std::chrono::milliseconds base_delay{500};
  double factor = 2.0;

  /// Delay before retry number `retry` (1-based).
  std::chrono::milliseconds delay_before_retry(int retry) const;
};

/// Called once per backend attempt with the 1-based attempt number and the
/// failure message (nullopt when the attempt succeeded).
using AttemptObserver = std::function<void(int attempt, const std::optional<std::string>& error)>;

/// Transport-level failure that the retry loop may retry.
class TransientFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Runs `attempt` up to 1 + max_retries times. TransientFailure triggers a
/// retry; exhausting the budget raises BackendUnavailable. Any other exception
/// propagates immediately.
void run_with_retries(const RetryPolicy& policy, const std::function<void()>& attempt,
                      const AttemptObserver& observer, std::string_view backend_id);

struct HealthStatus {
  bool healthy = true;
  std::string reason;

  static HealthStatus ok() { return {true, {}}; }
  static HealthStatus failing(std::string why) { return {false, std::move(why)}; }
};

/// Caps the number of concurrent requests to a single backend.
class ConcurrencyLimiter {
 public:
  explicit ConcurrencyLimiter(int limit) : available_(limit > 0 ? limit : 1) {}

  class Permit {
   public:
    explicit Permit(ConcurrencyLimiter& owner) : owner_(&owner) { owner_->acquire(); }
    Permit(const Permit&) = delete;
    Permit& operator=(const Permit&) = delete;
    ~Permit() { owner_->release(); }

   private:
    ConcurrencyLimiter* owner_;
  };

  int in_flight_peak() const {
    std::lock_guard lock(mu_);
    return peak_;
  }

 private:
  void acquire();
  void release();

  mutable std::mutex mu_;
  std::condition_variable cv_;
  int available_;
  int in_flight_ = 0;
  int peak_ = 0;
};

}  // namespace scribe
