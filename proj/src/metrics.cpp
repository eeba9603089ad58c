#include "scribe/metrics.hpp"

#include <chrono>
#include <charconv>
#include <cmath>
#include <map>
#include <unordered_map>

#include "scribe/errors.hpp"
#include "scribe/store.hpp"

namespace scribe {

namespace chr = std::chrono;

Month Month::from_index(std::int32_t index) {
  const std::int32_t y = index >= 0 ? index / 12 : (index - 11) / 12;
  return {y, index - y * 12 + 1};
}

Month Month::of(Timestamp t) {
  const chr::sys_days day = chr::floor<chr::days>(chr::sys_time<chr::milliseconds>(chr::milliseconds(t.ms)));
  const chr::year_month_day ymd{day};
  return {static_cast<int>(ymd.year()), static_cast<int>(static_cast<unsigned>(ymd.month()))};
}

Timestamp Month::start() const {
  const chr::sys_days day{chr::year{year} / chr::month{static_cast<unsigned>(month)} / 1};
  return {chr::duration_cast<chr::milliseconds>(day.time_since_epoch()).count()};
}

std::string to_string(Month m) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d", m.year, m.month);
  return buf;
}

Month parse_month(std::string_view text) {
  Month m;
  const auto bad = [&] {
    return Error(ErrorCode::ValidationFailed, "expected YYYY-MM, got '" + std::string(text) + "'",
                 {{"invalid_month", "month", "expected YYYY-MM"}});
  };
  if (text.size() != 7 || text[4] != '-') throw bad();
  const auto y = std::from_chars(text.data(), text.data() + 4, m.year);
  const auto mo = std::from_chars(text.data() + 5, text.data() + 7, m.month);
  if (y.ec != std::errc{} || y.ptr != text.data() + 4 || mo.ec != std::errc{} ||
      mo.ptr != text.data() + 7 || m.month < 1 || m.month > 12) {
    throw bad();
  }
  return m;
}

std::vector<std::string> cost_model_violations(const CostModel& model) {
  std::vector<std::string> out;
  const auto check = [&](double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v)) out.push_back(std::string(name) + " must be a nonnegative number");
  };
  check(model.server_cost_per_month, "server_cost_per_month");
  check(model.token_cost_per_1k, "token_cost_per_1k");
  check(model.storage_cost_per_gb_month, "storage_cost_per_gb_month");
  return out;
}

std::int64_t to_audio_us(double seconds) { return std::llround(seconds * 1e6); }

MetricsSnapshot snapshot_from(const Store& store) {
  MetricsSnapshot snap;
  std::unordered_map<std::string, std::int32_t> users;
  std::unordered_map<std::string, std::int32_t> facilities;
  const auto intern = [](auto& table, auto& names, const std::string& id) {
    auto [it, inserted] = table.try_emplace(id, static_cast<std::int32_t>(names.size()));
    if (inserted) names.push_back(id);
    return it->second;
  };

  std::unordered_map<std::string, std::int64_t> audio_by_session;
  for (const auto& r : store.load_all<Recording>()) audio_by_session[r.session_id] += to_audio_us(r.duration_s);
  std::unordered_map<std::string, TokenUsage> tokens_by_session;
  for (const auto& n : store.load_all<Note>()) {
    auto& t = tokens_by_session[n.session_id];
    t.prompt_tokens += n.token_usage.prompt_tokens;
    t.completion_tokens += n.token_usage.completion_tokens;
  }

  const auto sessions = store.load_all<Session>();
  snap.sessions.reserve(sessions.size());
  for (const auto& s : sessions) {
    SessionFact f;
    f.created_ms = s.created_at.ms;
    f.owner = intern(users, snap.user_ids, s.owner_id);
    if (s.facility_id) f.facility = intern(facilities, snap.facility_ids, *s.facility_id);
    if (auto it = audio_by_session.find(s.id); it != audio_by_session.end()) f.audio_us = it->second;
    if (auto it = tokens_by_session.find(s.id); it != tokens_by_session.end()) {
      f.prompt_tokens = it->second.prompt_tokens;
      f.completion_tokens = it->second.completion_tokens;
    }
    snap.sessions.push_back(f);
  }
  for (const auto& t : store.load_all<NoteTemplate>()) {
    if (t.kind != TemplateKind::custom || !t.owner_id) continue;
    snap.custom_templates.push_back({intern(users, snap.user_ids, *t.owner_id), t.created_at.ms});
  }
  return snap;
}

double cost_per_physician_month(const UsageMetrics& metrics, const CostModel& model,
                                double storage_gb) {
  auto problems = cost_model_violations(model);
  if (!(storage_gb >= 0.0) || !std::isfinite(storage_gb)) problems.push_back("storage_gb must be a nonnegative number");
  if (!problems.empty()) {
    std::vector<Violation> v;
    for (auto& p : problems) v.push_back({"negative_cost", "cost_model", p});
    throw Error(ErrorCode::ValidationFailed, problems.front(), std::move(v));
  }
  if (metrics.unique_users == 0) throw Error(ErrorCode::NoUsers, "no active users in the period");
  const double tokens = static_cast<double>(metrics.total_prompt_tokens + metrics.total_completion_tokens);
  const double total = model.server_cost_per_month + tokens / 1000.0 * model.token_cost_per_1k +
                       storage_gb * model.storage_cost_per_gb_month;
  return total / static_cast<double>(metrics.unique_users);
}

std::optional<MonthRange> covering_range(const MetricsSnapshot& snapshot) {
  if (snapshot.sessions.empty()) return std::nullopt;
  std::int64_t lo = snapshot.sessions.front().created_ms;
  std::int64_t hi = lo;
  for (const auto& s : snapshot.sessions) {
    lo = std::min(lo, s.created_ms);
    hi = std::max(hi, s.created_ms);
  }
  return MonthRange{Month::of({lo}), Month::of({hi})};
}

}  // namespace scribe
