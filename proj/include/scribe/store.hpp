#pragma once

// Institution-local persistence:
//
//   <root>/blobs/<first2>/<digest>   content-addressed audio
//   <root>/audit.log                 hash-chained audit events, one per line
//   <root>/entities.db               SQLite, canonical JSON keyed "kind/id"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scribe/audit_log.hpp"
#include "scribe/domain.hpp"
#include "scribe/errors.hpp"
#include "scribe/json_codec.hpp"

struct sqlite3;

namespace scribe {

struct BlobRef {
  std::string address;  // lowercase hex SHA-256 of the bytes
  std::uint64_t size_bytes = 0;
  MediaFormat media_format = MediaFormat::wav_pcm16;

  bool operator==(const BlobRef&) const = default;
};

template <typename T>
struct EntityTraits;

#define SCRIBE_ENTITY(Type, Kind, RefExpr)                                 \
  template <>                                                              \
  struct EntityTraits<Type> {                                              \
    static constexpr const char* kind = Kind;                              \
    static std::string ref([[maybe_unused]] const Type& v) { return RefExpr; } \
  }

SCRIBE_ENTITY(UserProfile, "user", std::string{});
SCRIBE_ENTITY(Facility, "facility", std::string{});
SCRIBE_ENTITY(Session, "session", v.owner_id);
SCRIBE_ENTITY(Recording, "recording", v.session_id);
SCRIBE_ENTITY(Transcript, "transcript", v.recording_id);
SCRIBE_ENTITY(Note, "note", v.session_id);
SCRIBE_ENTITY(NoteTemplate, "template", v.owner_id.value_or(std::string{}));
SCRIBE_ENTITY(Job, "job", v.subject_id);

#undef SCRIBE_ENTITY

enum class SortOrder { ascending, descending };

struct StoreOptions {
  bool sync_audit_appends = false;
  bool sqlite_full_sync = false;
};

class Store final : public StoreView {
 public:
  explicit Store(std::filesystem::path root, StoreOptions options = {});
  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;
  ~Store() override;

  const std::filesystem::path& root() const { return root_; }

  // ── Blobs ──
  /// Idempotent for identical bytes. Throws EmptyBlob, StorageFull.
  BlobRef put_blob(std::span<const std::uint8_t> bytes, MediaFormat format = MediaFormat::wav_pcm16);
  /// Throws NotFound.
  std::vector<std::uint8_t> get_blob(const std::string& address) const;
  std::size_t blob_count() const;
  std::vector<BlobRef> list_blobs() const;

  // ── Entities ──
  /// Validates intrinsic invariants (InvariantViolation) then replaces
  /// atomically.
  template <typename T>
  void save(const T& entity) {
    check(entity);
    save_raw(EntityTraits<T>::kind, entity.id, EntityTraits<T>::ref(entity), to_canonical(entity));
  }

  /// One transaction for the whole batch.
  template <typename T>
  void save_many(std::span<const T> entities) {
    std::vector<RawRecord> rows;
    rows.reserve(entities.size());
    for (const auto& e : entities) {
      check(e);
      rows.push_back({EntityTraits<T>::kind, e.id, EntityTraits<T>::ref(e), to_canonical(e)});
    }
    save_batch(rows);
  }

  template <typename T>
  std::optional<T> find(const std::string& id) const {
    auto raw = load_raw(EntityTraits<T>::kind, id);
    if (!raw) return std::nullopt;
    return json::parse(*raw).template get<T>();
  }

  /// Throws NotFound.
  template <typename T>
  T load(const std::string& id) const {
    auto v = find<T>(id);
    if (!v) throw Error(ErrorCode::NotFound, std::string(EntityTraits<T>::kind) + " " + id + " not found");
    return std::move(*v);
  }

  template <typename T>
  std::vector<T> load_all() const {
    return decode_all<T>(load_all_raw(EntityTraits<T>::kind));
  }

  /// Entities whose reference column (owner, session, recording, subject)
  /// equals `ref`, in id order.
  template <typename T>
  std::vector<T> load_by_ref(const std::string& ref) const {
    return decode_all<T>(load_by_ref_raw(EntityTraits<T>::kind, ref));
  }

  /// Atomic read-modify-write under the store's write lock. Throws NotFound.
  template <typename T, typename Fn>
  T update(const std::string& id, Fn&& mutate) {
    std::lock_guard lock(write_mu_);
    T value = load<T>(id);
    mutate(value);
    save(value);
    return value;
  }

  std::size_t count(const char* kind) const;

  // ── Audit ──
  AuditEvent append_audit(const std::string& actor_id, const std::string& action,
                          const std::string& entity_kind, const std::string& entity_id,
                          nlohmann::json payload, Timestamp timestamp = now_utc());
  ChainVerdict verify_audit_chain() const;
  std::vector<AuditEvent> audit_events() const;
  std::vector<std::string> audit_lines() const;
  AuditLog& audit_log() { return *audit_; }

  // ── Queries ──
  /// Owner's sessions by created_at (ties broken by id). Throws UnknownUser.
  std::vector<Session> list_sessions(const std::string& owner_id,
                                     SortOrder order = SortOrder::descending) const;

  // StoreView
  std::optional<Recording> find_recording(const std::string& id) const override {
    return find<Recording>(id);
  }
  std::optional<Note> find_note(const std::string& id) const override { return find<Note>(id); }

 private:
  struct RawRecord {
    std::string kind;
    std::string id;
    std::string ref;
    std::string body;
  };

  template <typename T>
  static void check(const T& entity) {
    auto problems = invariant_violations(entity);
    if (!problems.empty()) {
      throw Error(ErrorCode::InvariantViolation,
                  std::string(EntityTraits<T>::kind) + " " + entity.id + ": " + problems.front());
    }
  }

  template <typename T>
  static std::vector<T> decode_all(const std::vector<std::string>& bodies) {
    std::vector<T> out;
    out.reserve(bodies.size());
    for (const auto& b : bodies) out.push_back(json::parse(b).template get<T>());
    return out;
  }

  void save_raw(const std::string& kind, const std::string& id, const std::string& ref,
                const std::string& body);
  void save_batch(const std::vector<RawRecord>& rows);
  std::optional<std::string> load_raw(const std::string& kind, const std::string& id) const;
  std::vector<std::string> load_all_raw(const std::string& kind) const;
  std::vector<std::string> load_by_ref_raw(const std::string& kind, const std::string& ref) const;
  void exec(const char* sql) const;

  std::filesystem::path root_;
  std::filesystem::path blob_dir_;
  sqlite3* db_ = nullptr;
  mutable std::recursive_mutex db_mu_;
  std::recursive_mutex write_mu_;
  std::unique_ptr<AuditLog> audit_;
};

}  // namespace scribe
