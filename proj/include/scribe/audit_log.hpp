#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "scribe/digest.hpp"
#include "scribe/domain.hpp"

namespace scribe {

/// One line of audit.log. chain_digest = SHA-256(prev_digest ‖ payload_digest
/// ‖ seq as 8 big-endian bytes); the first event links to 32 zero bytes.
struct AuditEvent {
  std::uint64_t seq = 0;
  Timestamp timestamp;
  std::string actor_id;
  std::string action;
  std::string entity_kind;
  std::string entity_id;
  nlohmann::json payload = nlohmann::json::object();
  Digest payload_digest{};
  Digest prev_digest{};
  Digest chain_digest{};

  bool operator==(const AuditEvent&) const = default;
};

inline constexpr Digest kGenesisDigest{};

/// SHA-256 over the canonical JSON of {action, actor_id, entity_id,
/// entity_kind, payload, timestamp}.
Digest compute_payload_digest(const AuditEvent& event);
Digest compute_chain_digest(const Digest& prev, const Digest& payload_digest, std::uint64_t seq);

/// Canonical single-line JSON, no trailing newline.
std::string serialize_event(const AuditEvent& event);

/// Strict: the line must be exactly the canonical serialization of the event
/// it decodes to. Returns nullopt otherwise.
std::optional<AuditEvent> parse_event_line(std::string_view line);

struct ChainVerdict {
  bool ok = true;
  std::uint64_t broken_at = 0;  // smallest violating seq when !ok

  static ChainVerdict valid() { return {}; }
  static ChainVerdict broken(std::uint64_t seq) { return {false, seq}; }
  bool operator==(const ChainVerdict&) const = default;
};

/// Append-only, hash-chained, line-delimited log. Appends are globally
/// serialized; each line reaches the file in a single write(2).
class AuditLog {
 public:
  explicit AuditLog(std::filesystem::path file, bool sync_each_append = false);
  AuditLog(const AuditLog&) = delete;
  AuditLog& operator=(const AuditLog&) = delete;
  ~AuditLog();

  /// Throws StorageFull.
  AuditEvent append(std::string actor_id, std::string action, std::string entity_kind,
                    std::string entity_id, nlohmann::json payload, Timestamp timestamp);

  std::vector<std::string> read_lines() const;
  /// Events that parse; stops at the first unparseable line.
  std::vector<AuditEvent> read_events() const;
  ChainVerdict verify() const;
  std::uint64_t size() const;
  const std::filesystem::path& path() const { return file_; }

 private:
  std::filesystem::path file_;
  bool sync_;
  int fd_ = -1;
  mutable std::mutex mu_;
  std::uint64_t last_seq_ = 0;
  Digest last_digest_{};
};

}  // namespace scribe
