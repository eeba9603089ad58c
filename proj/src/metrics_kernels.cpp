#include <algorithm>

#include "scribe/metrics.hpp"

namespace scribe {

namespace {

std::vector<std::int64_t> month_bounds(const MonthRange& range) {
  std::vector<std::int64_t> bounds;
  const auto n = std::max<std::int32_t>(range.size(), 0);
  bounds.reserve(static_cast<std::size_t>(n) + 1);
  for (std::int32_t i = 0; i <= n; ++i) bounds.push_back(Month::from_index(range.first.index() + i).start().ms);
  return bounds;
}

/// Bucket index of `ms`, or -1 outside the range.
std::int64_t bucket_of(const std::vector<std::int64_t>& bounds, std::int64_t ms) {
  if (bounds.size() < 2 || ms < bounds.front() || ms >= bounds.back()) return -1;
  return std::upper_bound(bounds.begin(), bounds.end(), ms) - bounds.begin() - 1;
}

void finish(UsageMetrics& m, const std::vector<std::uint8_t>& active,
            const std::vector<std::uint8_t>& facilities, const std::vector<std::uint8_t>& custom,
            std::int64_t audio_us) {
  for (std::size_t u = 0; u < active.size(); ++u) {
    if (!active[u]) continue;
    ++m.unique_users;
    if (custom[u]) ++m.users_with_custom_templates;
  }
  m.unique_facilities = std::count(facilities.begin(), facilities.end(), std::uint8_t{1});
  m.total_audio_s = static_cast<double>(audio_us) / 1e6;
  m.mean_session_audio_s = m.session_count > 0 ? m.total_audio_s / static_cast<double>(m.session_count) : 0.0;
  m.customization_rate = m.unique_users > 0 ? static_cast<double>(m.users_with_custom_templates) /
                                                  static_cast<double>(m.unique_users)
                                            : 0.0;
}

std::vector<std::uint8_t> custom_owners(const MetricsSnapshot& snap, std::int64_t end_ms) {
  std::vector<std::uint8_t> custom(snap.user_ids.size() + 1, 0);
  for (const auto& t : snap.custom_templates) {
    if (t.created_ms < end_ms) custom[static_cast<std::size_t>(t.owner)] = 1;
  }
  return custom;
}

}  // namespace

UsageMetrics aggregate_serial(const MonthRange& period, const MetricsSnapshot& snap) {
  UsageMetrics m;
  m.period = period;
  const std::int64_t begin = period.begin().ms;
  const std::int64_t end = period.end().ms;
  std::vector<std::uint8_t> active(snap.user_ids.size() + 1, 0);
  std::vector<std::uint8_t> facilities(snap.facility_ids.size() + 1, 0);
  std::int64_t audio_us = 0;
  for (const auto& s : snap.sessions) {
    if (s.created_ms < begin || s.created_ms >= end) continue;
    ++m.session_count;
    audio_us += s.audio_us;
    m.total_prompt_tokens += s.prompt_tokens;
    m.total_completion_tokens += s.completion_tokens;
    active[static_cast<std::size_t>(s.owner)] = 1;
    if (s.facility >= 0) facilities[static_cast<std::size_t>(s.facility)] = 1;
  }
  finish(m, active, facilities, custom_owners(snap, end), audio_us);
  return m;
}

UsageMetrics aggregate(const MonthRange& period, const MetricsSnapshot& snap) {
  UsageMetrics m;
  m.period = period;
  const std::int64_t begin = period.begin().ms;
  const std::int64_t end = period.end().ms;
  std::vector<std::uint8_t> active(snap.user_ids.size() + 1, 0);
  std::vector<std::uint8_t> facilities(snap.facility_ids.size() + 1, 0);
  std::uint8_t* act = active.data();
  std::uint8_t* fac = facilities.data();
  const std::size_t n_users = active.size();
  const std::size_t n_fac = facilities.size();
  const SessionFact* rows = snap.sessions.data();
  const auto n = static_cast<std::int64_t>(snap.sessions.size());

  std::int64_t count = 0, audio_us = 0, prompt = 0, completion = 0;
#pragma omp parallel for schedule(static) reduction(+ : count, audio_us, prompt, completion) \
    reduction(| : act[:n_users], fac[:n_fac])
  for (std::int64_t i = 0; i < n; ++i) {
    const SessionFact& s = rows[i];
    if (s.created_ms < begin || s.created_ms >= end) continue;
    ++count;
    audio_us += s.audio_us;
    prompt += s.prompt_tokens;
    completion += s.completion_tokens;
    act[s.owner] = 1;
    if (s.facility >= 0) fac[s.facility] = 1;
  }
  m.session_count = count;
  m.total_prompt_tokens = prompt;
  m.total_completion_tokens = completion;
  finish(m, active, facilities, custom_owners(snap, end), audio_us);
  return m;
}

std::vector<MonthCount> monthly_series_serial(const MonthRange& range, const MetricsSnapshot& snap) {
  const auto bounds = month_bounds(range);
  std::vector<std::int64_t> counts(bounds.empty() ? 0 : bounds.size() - 1, 0);
  for (const auto& s : snap.sessions) {
    const auto b = bucket_of(bounds, s.created_ms);
    if (b >= 0) ++counts[static_cast<std::size_t>(b)];
  }
  std::vector<MonthCount> out;
  out.reserve(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    out.push_back({Month::from_index(range.first.index() + static_cast<std::int32_t>(i)), counts[i]});
  }
  return out;
}

std::vector<MonthCount> monthly_series(const MonthRange& range, const MetricsSnapshot& snap) {
  const auto bounds = month_bounds(range);
  const std::size_t n_buckets = bounds.empty() ? 0 : bounds.size() - 1;
  std::vector<std::int64_t> counts(n_buckets + 1, 0);
  std::int64_t* hist = counts.data();
  const SessionFact* rows = snap.sessions.data();
  const auto n = static_cast<std::int64_t>(snap.sessions.size());
#pragma omp parallel for schedule(static) reduction(+ : hist[:n_buckets + 1])
  for (std::int64_t i = 0; i < n; ++i) {
    const auto b = bucket_of(bounds, rows[i].created_ms);
    if (b >= 0) ++hist[b];
  }
  std::vector<MonthCount> out;
  out.reserve(n_buckets);
  for (std::size_t i = 0; i < n_buckets; ++i) {
    out.push_back({Month::from_index(range.first.index() + static_cast<std::int32_t>(i)), counts[i]});
  }
  return out;
}

}  // namespace scribe
