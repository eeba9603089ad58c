#include "scribe/audit_log.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>

#include "scribe/audit_verify.hpp"
#include "scribe/errors.hpp"
#include "scribe/json_codec.hpp"

namespace scribe {

namespace {

std::string dump(const nlohmann::json& j) {
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

}  // namespace

Digest compute_payload_digest(const AuditEvent& e) {
  const nlohmann::json body = {{"action", e.action},
                               {"actor_id", e.actor_id},
                               {"entity_id", e.entity_id},
                               {"entity_kind", e.entity_kind},
                               {"payload", e.payload},
                               {"timestamp", format_timestamp(e.timestamp)}};
  return sha256(dump(body));
}

Digest compute_chain_digest(const Digest& prev, const Digest& payload_digest, std::uint64_t seq) {
  std::array<std::uint8_t, 72> buf{};
  std::copy(prev.begin(), prev.end(), buf.begin());
  std::copy(payload_digest.begin(), payload_digest.end(), buf.begin() + 32);
  for (int i = 0; i < 8; ++i) buf[64 + i] = static_cast<std::uint8_t>(seq >> (56 - 8 * i));
  return sha256(std::span<const std::uint8_t>(buf));
}

std::string serialize_event(const AuditEvent& e) {
  const nlohmann::json j = {{"seq", e.seq},
                            {"timestamp", format_timestamp(e.timestamp)},
                            {"actor_id", e.actor_id},
                            {"action", e.action},
                            {"entity_kind", e.entity_kind},
                            {"entity_id", e.entity_id},
                            {"payload", e.payload},
                            {"payload_digest", to_hex(e.payload_digest)},
                            {"prev_digest", to_hex(e.prev_digest)},
                            {"chain_digest", to_hex(e.chain_digest)}};
  return dump(j);
}

std::optional<AuditEvent> parse_event_line(std::string_view line) {
  auto j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object() || j.size() != 10) return std::nullopt;
  try {
    AuditEvent e;
    if (!j.at("seq").is_number_unsigned()) return std::nullopt;
    e.seq = j.at("seq").get<std::uint64_t>();
    e.timestamp = parse_timestamp(j.at("timestamp").get<std::string>());
    e.actor_id = j.at("actor_id").get<std::string>();
    e.action = j.at("action").get<std::string>();
    e.entity_kind = j.at("entity_kind").get<std::string>();
    e.entity_id = j.at("entity_id").get<std::string>();
    e.payload = j.at("payload");
    auto pd = digest_from_hex(j.at("payload_digest").get<std::string>());
    auto prev = digest_from_hex(j.at("prev_digest").get<std::string>());
    auto chain = digest_from_hex(j.at("chain_digest").get<std::string>());
    if (!pd || !prev || !chain) return std::nullopt;
    e.payload_digest = *pd;
    e.prev_digest = *prev;
    e.chain_digest = *chain;
    if (serialize_event(e) != line) return std::nullopt;
    return e;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

AuditLog::AuditLog(std::filesystem::path file, bool sync_each_append)
    : file_(std::move(file)), sync_(sync_each_append) {
  if (file_.has_parent_path()) std::filesystem::create_directories(file_.parent_path());

  // A crash can leave a torn final line; drop it so the chain stays appendable.
  std::string content;
  {
    std::ifstream in(file_, std::ios::binary);
    content.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  if (!content.empty() && content.back() != '\n') {
    const auto keep = content.rfind('\n');
    const auto new_size = keep == std::string::npos ? 0 : keep + 1;
    std::filesystem::resize_file(file_, new_size);
    content.resize(new_size);
  }

  fd_ = ::open(file_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd_ < 0) {
    throw Error(ErrorCode::ConfigInvalid,
                "cannot open audit log " + file_.string() + ": " + std::strerror(errno));
  }

  if (!content.empty()) {
    const std::string_view body(content.data(), content.size() - 1);
    const auto begin = body.rfind('\n');
    const auto last = begin == std::string_view::npos ? body : body.substr(begin + 1);
    if (auto e = parse_event_line(last)) {
      last_seq_ = e->seq;
      last_digest_ = e->chain_digest;
    } else {
      last_seq_ = static_cast<std::uint64_t>(std::count(content.begin(), content.end(), '\n'));
    }
  }
}

AuditLog::~AuditLog() {
  if (fd_ >= 0) ::close(fd_);
}

AuditEvent AuditLog::append(std::string actor_id, std::string action, std::string entity_kind,
                            std::string entity_id, nlohmann::json payload, Timestamp timestamp) {
  AuditEvent e;
  e.timestamp = timestamp;
  e.actor_id = std::move(actor_id);
  e.action = std::move(action);
  e.entity_kind = std::move(entity_kind);
  e.entity_id = std::move(entity_id);
  e.payload = std::move(payload);
  e.payload_digest = compute_payload_digest(e);

  std::lock_guard lock(mu_);
  e.seq = last_seq_ + 1;
  e.prev_digest = last_digest_;
  e.chain_digest = compute_chain_digest(e.prev_digest, e.payload_digest, e.seq);
  const std::string line = serialize_event(e) + "\n";

  std::size_t written = 0;
  while (written < line.size()) {
    const ssize_t n = ::write(fd_, line.data() + written, line.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::StorageFull, std::string("audit append failed: ") + std::strerror(errno));
    }
    written += static_cast<std::size_t>(n);
  }
  if (sync_) ::fdatasync(fd_);
  last_seq_ = e.seq;
  last_digest_ = e.chain_digest;
  return e;
}

std::vector<std::string> AuditLog::read_lines() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> lines;
  std::ifstream in(file_, std::ios::binary);
  for (std::string line; std::getline(in, line);) lines.push_back(std::move(line));
  return lines;
}

std::vector<AuditEvent> AuditLog::read_events() const {
  std::vector<AuditEvent> out;
  for (const auto& line : read_lines()) {
    auto e = parse_event_line(line);
    if (!e) break;
    out.push_back(std::move(*e));
  }
  return out;
}

ChainVerdict AuditLog::verify() const { return verify_chain_parallel(read_lines()); }

std::uint64_t AuditLog::size() const {
  std::lock_guard lock(mu_);
  return last_seq_;
}

}  // namespace scribe
