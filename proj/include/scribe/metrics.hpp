#pragma once

// Usage metrics over a read-only snapshot of the store.
//
// Sessions bucket into the UTC month of created_at. A user counts as having
// customized when they own a custom template created before the end of the
// period. unique_users counts session owners in the period and is the
// customization denominator.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scribe/domain.hpp"

namespace scribe {

class Store;

struct Month {
  int year = 1970;
  int month = 1;  // 1..12

  /// Months since 0000-01.
  std::int32_t index() const { return year * 12 + (month - 1); }
  static Month from_index(std::int32_t index);
  static Month of(Timestamp t);
  /// First instant of the month.
  Timestamp start() const;
  Month next() const { return from_index(index() + 1); }

  auto operator<=>(const Month&) const = default;
};

/// "2024-11"
std::string to_string(Month m);
/// Accepts "YYYY-MM". Throws ValidationFailed.
Month parse_month(std::string_view text);

/// Inclusive on both ends.
struct MonthRange {
  Month first;
  Month last;

  std::int32_t size() const { return last.index() - first.index() + 1; }
  Timestamp begin() const { return first.start(); }
  /// Exclusive upper bound.
  Timestamp end() const { return last.next().start(); }

  bool operator==(const MonthRange&) const = default;
};

struct UsageMetrics {
  MonthRange period;
  std::int64_t session_count = 0;
  std::int64_t unique_users = 0;
  std::int64_t unique_facilities = 0;
  double total_audio_s = 0.0;
  double mean_session_audio_s = 0.0;
  std::int64_t total_prompt_tokens = 0;
  std::int64_t total_completion_tokens = 0;
  std::int64_t users_with_custom_templates = 0;
  double customization_rate = 0.0;

  bool operator==(const UsageMetrics&) const = default;
};

struct CostModel {
  double server_cost_per_month = 0.0;
  double token_cost_per_1k = 0.0;
  double storage_cost_per_gb_month = 0.0;
};

/// Empty when valid.
std::vector<std::string> cost_model_violations(const CostModel& model);

/// One row per session, owners and facilities as dense indices.
struct SessionFact {
  std::int64_t created_ms = 0;
  std::int32_t owner = 0;
  std::int32_t facility = -1;  // -1 when the session has no facility
  std::int64_t audio_us = 0;   // integer microseconds keep sums order-independent
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
};

struct CustomTemplateFact {
  std::int32_t owner = 0;
  std::int64_t created_ms = 0;
};

struct MetricsSnapshot {
  std::vector<SessionFact> sessions;
  std::vector<CustomTemplateFact> custom_templates;
  std::vector<std::string> user_ids;      // index -> id
  std::vector<std::string> facility_ids;  // index -> id
};

/// Reads sessions, recordings, notes and custom templates in one pass.
MetricsSnapshot snapshot_from(const Store& store);

/// Rounds seconds to whole microseconds.
std::int64_t to_audio_us(double seconds);

// Kernels. The serial versions are the reference; the default versions use
// OpenMP and must agree exactly.
UsageMetrics aggregate_serial(const MonthRange& period, const MetricsSnapshot& snapshot);
UsageMetrics aggregate(const MonthRange& period, const MetricsSnapshot& snapshot);

struct MonthCount {
  Month month;
  std::int64_t session_count = 0;

  bool operator==(const MonthCount&) const = default;
};

/// One entry per month of the range, zero-filled.
std::vector<MonthCount> monthly_series_serial(const MonthRange& range,
                                              const MetricsSnapshot& snapshot);
std::vector<MonthCount> monthly_series(const MonthRange& range, const MetricsSnapshot& snapshot);

/// (server + tokens/1000 x token price + storage_gb x storage price) / users.
/// Throws NoUsers when unique_users is 0, ValidationFailed for a negative
/// parameter.
double cost_per_physician_month(const UsageMetrics& metrics, const CostModel& model,
                                double storage_gb);

/// Smallest range covering every session; nullopt for an empty snapshot.
std::optional<MonthRange> covering_range(const MetricsSnapshot& snapshot);

}  // namespace scribe
