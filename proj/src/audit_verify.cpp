#include "scribe/audit_verify.hpp"

#include <omp.h>

#include <limits>
#include <optional>
#include <vector>

namespace scribe {

namespace {

/// Checks that depend only on the line itself and its predecessor's stored
/// chain digest (nullptr for the first line).
bool line_is_sound(const AuditEvent& e, std::uint64_t expected_seq, const Digest* prev_chain) {
  if (e.seq != expected_seq) return false;
  const Digest& expected_prev = prev_chain ? *prev_chain : kGenesisDigest;
  if (e.prev_digest != expected_prev) return false;
  if (compute_payload_digest(e) != e.payload_digest) return false;
  return compute_chain_digest(e.prev_digest, e.payload_digest, e.seq) == e.chain_digest;
}

}  // namespace

ChainVerdict verify_chain_serial(std::span<const std::string> lines) {
  std::optional<AuditEvent> prev;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::uint64_t seq = i + 1;
    auto e = parse_event_line(lines[i]);
    if (!e) return ChainVerdict::broken(seq);
    if (!line_is_sound(*e, seq, prev ? &prev->chain_digest : nullptr)) {
      return ChainVerdict::broken(seq);
    }
    prev = std::move(e);
  }
  return ChainVerdict::valid();
}

ChainVerdict verify_chain_parallel(std::span<const std::string> lines) {
  const auto n = static_cast<std::int64_t>(lines.size());
  std::vector<std::optional<AuditEvent>> events(lines.size());

#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    events[i] = parse_event_line(lines[i]);
  }

  std::uint64_t first_bad = std::numeric_limits<std::uint64_t>::max();
#pragma omp parallel for schedule(static) reduction(min : first_bad)
  for (std::int64_t i = 0; i < n; ++i) {
    const std::uint64_t seq = static_cast<std::uint64_t>(i) + 1;
    const auto& e = events[i];
    bool sound = e.has_value();
    if (sound) {
      // An unparseable predecessor already fails at a smaller seq.
      const Digest* prev = nullptr;
      if (i > 0) prev = events[i - 1] ? &events[i - 1]->chain_digest : &e->prev_digest;
      sound = line_is_sound(*e, seq, prev);
    }
    if (!sound && seq < first_bad) first_bad = seq;
  }

  if (first_bad == std::numeric_limits<std::uint64_t>::max()) return ChainVerdict::valid();
  return ChainVerdict::broken(first_bad);
}

}  // namespace scribe
