#include "scribe/store.hpp"

#include <sqlite3.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>

#include "scribe/digest.hpp"

namespace scribe {

namespace fs = std::filesystem;

namespace {

class Statement {
 public:
  Statement(sqlite3* db, const char* sql) : db_(db) {
    if (sqlite3_prepare_v2(db, sql, -1, &stmt_, nullptr) != SQLITE_OK) {
      throw Error(ErrorCode::StorageFull, std::string("sqlite prepare: ") + sqlite3_errmsg(db));
    }
  }
  Statement(const Statement&) = delete;
  Statement& operator=(const Statement&) = delete;
  ~Statement() { sqlite3_finalize(stmt_); }

  Statement& bind(int index, const std::string& text) {
    sqlite3_bind_text(stmt_, index, text.data(), static_cast<int>(text.size()), SQLITE_TRANSIENT);
    return *this;
  }

  /// True while a row is available.
  bool step() {
    const int rc = sqlite3_step(stmt_);
    if (rc == SQLITE_ROW) return true;
    if (rc == SQLITE_DONE) return false;
    throw Error(ErrorCode::StorageFull, std::string("sqlite step: ") + sqlite3_errmsg(db_));
  }

  std::string column_text(int col) const {
    const auto* p = reinterpret_cast<const char*>(sqlite3_column_text(stmt_, col));
    return p ? std::string(p, static_cast<std::size_t>(sqlite3_column_bytes(stmt_, col))) : "";
  }

  std::int64_t column_int(int col) const { return sqlite3_column_int64(stmt_, col); }

  void reset() {
    sqlite3_reset(stmt_);
    sqlite3_clear_bindings(stmt_);
  }

 private:
  sqlite3* db_;
  sqlite3_stmt* stmt_ = nullptr;
};

constexpr const char* kUpsert =
    "INSERT INTO entities(key, kind, id, ref, body) VALUES(?1 || '/' || ?2, ?1, ?2, ?3, ?4) "
    "ON CONFLICT(key) DO UPDATE SET ref = excluded.ref, body = excluded.body";

}  // namespace

Store::Store(fs::path root, StoreOptions options)
    : root_(std::move(root)), blob_dir_(root_ / "blobs") {
  std::error_code ec;
  fs::create_directories(blob_dir_, ec);
  if (ec) {
    throw Error(ErrorCode::ConfigInvalid, "cannot create storage root " + root_.string() + ": " + ec.message());
  }
  const auto db_path = (root_ / "entities.db").string();
  if (sqlite3_open_v2(db_path.c_str(), &db_,
                      SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX,
                      nullptr) != SQLITE_OK) {
    const std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
    sqlite3_close(db_);
    throw Error(ErrorCode::ConfigInvalid, "cannot open " + db_path + ": " + msg);
  }
  sqlite3_busy_timeout(db_, 5000);
  exec("PRAGMA journal_mode=WAL");
  exec(options.sqlite_full_sync ? "PRAGMA synchronous=FULL" : "PRAGMA synchronous=NORMAL");
  exec(
      "CREATE TABLE IF NOT EXISTS entities("
      " key TEXT PRIMARY KEY, kind TEXT NOT NULL, id TEXT NOT NULL, ref TEXT NOT NULL,"
      " body TEXT NOT NULL)");
  exec("CREATE INDEX IF NOT EXISTS entities_by_ref ON entities(kind, ref)");
  exec("CREATE INDEX IF NOT EXISTS entities_by_kind ON entities(kind, id)");
  audit_ = std::make_unique<AuditLog>(root_ / "audit.log", options.sync_audit_appends);
}

Store::~Store() {
  if (db_) sqlite3_close(db_);
}

void Store::exec(const char* sql) const {
  std::lock_guard lock(db_mu_);
  char* err = nullptr;
  if (sqlite3_exec(db_, sql, nullptr, nullptr, &err) != SQLITE_OK) {
    std::string msg = err ? err : "unknown";
    sqlite3_free(err);
    throw Error(ErrorCode::StorageFull, "sqlite: " + msg + " in: " + sql);
  }
}

// ── Blobs ────────────────────────────────────────────────────────────────────

BlobRef Store::put_blob(std::span<const std::uint8_t> bytes, MediaFormat format) {
  if (bytes.empty()) throw Error(ErrorCode::EmptyBlob, "refusing to store an empty blob");
  BlobRef ref{to_hex(sha256(bytes)), bytes.size(), format};
  const fs::path dir = blob_dir_ / ref.address.substr(0, 2);
  const fs::path target = dir / ref.address;

  std::error_code ec;
  if (fs::exists(target, ec) && fs::file_size(target, ec) == bytes.size()) return ref;

  fs::create_directories(dir, ec);
  const fs::path tmp = dir / (ref.address + ".tmp-" + new_id());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      fs::remove(tmp, ec);
      throw Error(ErrorCode::StorageFull, "cannot write blob " + ref.address);
    }
  }
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorCode::StorageFull, "cannot commit blob " + ref.address + ": " + ec.message());
  }
  return ref;
}

std::vector<std::uint8_t> Store::get_blob(const std::string& address) const {
  if (!digest_from_hex(address)) throw Error(ErrorCode::NotFound, "bad blob address " + address);
  const fs::path p = blob_dir_ / address.substr(0, 2) / address;
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::NotFound, "blob " + address + " not found");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<BlobRef> Store::list_blobs() const {
  std::vector<BlobRef> out;
  std::error_code ec;
  for (const auto& entry : fs::recursive_directory_iterator(blob_dir_, ec)) {
    if (!entry.is_regular_file()) continue;
    const auto name = entry.path().filename().string();
    if (!digest_from_hex(name)) continue;  // skips in-flight temp files
    out.push_back({name, entry.file_size(), MediaFormat::wav_pcm16});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.address < b.address; });
  return out;
}

std::size_t Store::blob_count() const { return list_blobs().size(); }

// ── Entities ─────────────────────────────────────────────────────────────────

void Store::save_raw(const std::string& kind, const std::string& id, const std::string& ref,
                     const std::string& body) {
  std::lock_guard wlock(write_mu_);
  std::lock_guard lock(db_mu_);
  Statement st(db_, kUpsert);
  st.bind(1, kind).bind(2, id).bind(3, ref).bind(4, body);
  st.step();
}

void Store::save_batch(const std::vector<RawRecord>& rows) {
  std::lock_guard wlock(write_mu_);
  std::lock_guard lock(db_mu_);
  exec("BEGIN IMMEDIATE");
  try {
    Statement st(db_, kUpsert);
    for (const auto& r : rows) {
      st.bind(1, r.kind).bind(2, r.id).bind(3, r.ref).bind(4, r.body);
      st.step();
      st.reset();
    }
    exec("COMMIT");
  } catch (...) {
    exec("ROLLBACK");
    throw;
  }
}

std::optional<std::string> Store::load_raw(const std::string& kind, const std::string& id) const {
  std::lock_guard lock(db_mu_);
  Statement st(db_, "SELECT body FROM entities WHERE key = ?1 || '/' || ?2");
  st.bind(1, kind).bind(2, id);
  if (!st.step()) return std::nullopt;
  return st.column_text(0);
}

std::vector<std::string> Store::load_all_raw(const std::string& kind) const {
  std::lock_guard lock(db_mu_);
  Statement st(db_, "SELECT body FROM entities WHERE kind = ?1 ORDER BY id");
  st.bind(1, kind);
  std::vector<std::string> out;
  while (st.step()) out.push_back(st.column_text(0));
  return out;
}

std::vector<std::string> Store::load_by_ref_raw(const std::string& kind, const std::string& ref) const {
  std::lock_guard lock(db_mu_);
  Statement st(db_, "SELECT body FROM entities WHERE kind = ?1 AND ref = ?2 ORDER BY id");
  st.bind(1, kind).bind(2, ref);
  std::vector<std::string> out;
  while (st.step()) out.push_back(st.column_text(0));
  return out;
}

std::size_t Store::count(const char* kind) const {
  std::lock_guard lock(db_mu_);
  Statement st(db_, "SELECT COUNT(*) FROM entities WHERE kind = ?1");
  st.bind(1, kind);
  st.step();
  return static_cast<std::size_t>(st.column_int(0));
}

// ── Audit ────────────────────────────────────────────────────────────────────

AuditEvent Store::append_audit(const std::string& actor_id, const std::string& action,
                               const std::string& entity_kind, const std::string& entity_id,
                               nlohmann::json payload, Timestamp timestamp) {
  return audit_->append(actor_id, action, entity_kind, entity_id, std::move(payload), timestamp);
}

ChainVerdict Store::verify_audit_chain() const { return audit_->verify(); }

std::vector<AuditEvent> Store::audit_events() const { return audit_->read_events(); }

std::vector<std::string> Store::audit_lines() const { return audit_->read_lines(); }

// ── Queries ──────────────────────────────────────────────────────────────────

std::vector<Session> Store::list_sessions(const std::string& owner_id, SortOrder order) const {
  if (!find<UserProfile>(owner_id)) throw Error(ErrorCode::UnknownUser, "unknown user " + owner_id);
  auto sessions = load_by_ref<Session>(owner_id);
  std::sort(sessions.begin(), sessions.end(), [order](const Session& a, const Session& b) {
    const auto ka = std::tie(a.created_at, a.id);
    const auto kb = std::tie(b.created_at, b.id);
    return order == SortOrder::ascending ? ka < kb : kb < ka;
  });
  return sessions;
}

}  // namespace scribe
