#include "fixtures.hpp"

#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstdlib>
#include <fstream>
#include <stdexcept>

#include "ref_sha256.hpp"

namespace fixtures {

TempDir::TempDir() {
  std::string tmpl = (fs::temp_directory_path() / "scribe-test-XXXXXX").string();
  if (!::mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
  path_ = tmpl;
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

namespace {

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

}  // namespace

std::vector<std::uint8_t> make_wav(std::uint64_t frames, int sample_rate_hz, int channels, std::uint32_t seed) {
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(frames * channels * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, static_cast<std::uint16_t>(channels));
  put_u32(out, static_cast<std::uint32_t>(sample_rate_hz));
  put_u32(out, static_cast<std::uint32_t>(sample_rate_hz * channels * 2));
  put_u16(out, static_cast<std::uint16_t>(channels * 2));
  put_u16(out, 16);
  put_tag(out, "data");
  put_u32(out, data_bytes);
  std::uint32_t state = seed * 2654435761u + 12345u;
  for (std::uint64_t i = 0; i < frames * static_cast<std::uint64_t>(channels); ++i) {
    state = state * 1664525u + 1013904223u;
    const auto sample = static_cast<std::int16_t>(static_cast<std::int32_t>(state >> 20) - 2048);
    put_u16(out, static_cast<std::uint16_t>(sample));
  }
  return out;
}

std::vector<std::uint8_t> make_wav_seconds(double seconds, int sample_rate_hz, std::uint32_t seed) {
  return make_wav(static_cast<std::uint64_t>(seconds * sample_rate_hz + 0.5), sample_rate_hz, 1, seed);
}

void write_sidecar(const fs::path& dir, const std::vector<std::uint8_t>& audio, const std::string& text) {
  fs::create_directories(dir);
  const std::string name =
      reftest::sha256_hex(std::string_view(reinterpret_cast<const char*>(audio.data()), audio.size()));
  std::ofstream(dir / (name + ".txt")) << text;
}

scribe::AsrBackendDescriptor mock_asr(const fs::path& fixture_dir, std::string id) {
  scribe::AsrBackendDescriptor d;
  d.backend_id = std::move(id);
  d.kind = scribe::AsrBackendKind::mock;
  d.model_id = "mock-asr-1";
  d.fixture_dir = fixture_dir.string();
  return d;
}

scribe::LlmBackendDescriptor mock_llm(std::string id) {
  scribe::LlmBackendDescriptor d;
  d.backend_id = std::move(id);
  d.kind = scribe::LlmBackendKind::mock;
  d.model_id = "mock-llm-1";
  return d;
}

scribe::RetryPolicy fast_retry(int max_retries) {
  scribe::RetryPolicy p;
  p.max_retries = max_retries;
  p.base_delay = std::chrono::milliseconds(1);
  p.factor = 2.0;
  return p;
}

Pipeline::Pipeline(bool dispatch, int workers) : fixture_dir(dir.path() / "fixtures") {
  fs::create_directories(fixture_dir);
  store = std::make_unique<scribe::Store>(dir.path() / "store");
  asr.add(mock_asr(fixture_dir));
  llm.add(mock_llm());
  scribe::OrchestratorConfig oc;
  oc.asr_backend_id = "mock-asr";
  oc.llm_backend_id = "mock-llm";
  oc.retry = fast_retry();
  oc.dispatch_jobs = dispatch;
  oc.transcription_workers = workers;
  oc.generation_workers = workers;
  orch = std::make_unique<scribe::Orchestrator>(*store, asr, llm, oc);
}

Pipeline::~Pipeline() { orch.reset(); }

std::vector<std::uint8_t> Pipeline::audio(double seconds, std::uint32_t seed, const std::string& text) {
  auto bytes = make_wav_seconds(seconds, 8000, seed);
  write_sidecar(fixture_dir, bytes, text);
  return bytes;
}

StubServer::~StubServer() {
  server_.stop();
  if (thread_.joinable()) thread_.join();
}

void StubServer::start() {
  port_ = server_.bind_to_any_port("127.0.0.1");
  if (port_ <= 0) throw std::runtime_error("stub server cannot bind");
  thread_ = std::thread([this] { server_.listen_after_bind(); });
  server_.wait_until_ready();
}

std::string StubServer::url(const std::string& path) const {
  return "http://127.0.0.1:" + std::to_string(port_) + path;
}

int closed_port() {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  const int port = ntohs(addr.sin_port);
  ::close(fd);
  return port;
}

}  // namespace fixtures
