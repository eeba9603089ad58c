#pragma once

#include <httplib.h>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "scribe/asr_gateway.hpp"
#include "scribe/llm_gateway.hpp"
#include "scribe/orchestrator.hpp"
#include "scribe/store.hpp"

namespace fixtures {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  ~TempDir();
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

/// PCM16 WAV written byte by byte here, independent of the library encoder.
/// Low-amplitude noise seeded by `seed` so distinct seeds give distinct bytes.
std::vector<std::uint8_t> make_wav(std::uint64_t frames, int sample_rate_hz = 16000,
                                   int channels = 1, std::uint32_t seed = 1);
std::vector<std::uint8_t> make_wav_seconds(double seconds, int sample_rate_hz = 16000,
                                           std::uint32_t seed = 1);

/// Writes the mock ASR sidecar for `audio` into `dir`.
void write_sidecar(const fs::path& dir, const std::vector<std::uint8_t>& audio, const std::string& text);

scribe::AsrBackendDescriptor mock_asr(const fs::path& fixture_dir, std::string id = "mock-asr");
scribe::LlmBackendDescriptor mock_llm(std::string id = "mock-llm");

/// Millisecond backoff so retry tests stay fast.
scribe::RetryPolicy fast_retry(int max_retries = 2);

/// Store, mock registries and an orchestrator over a fresh temp directory.
struct Pipeline {
  explicit Pipeline(bool dispatch = false, int workers = 4);
  ~Pipeline();

  /// Audio of the given length whose mock transcript is `text`.
  std::vector<std::uint8_t> audio(double seconds, std::uint32_t seed, const std::string& text);

  TempDir dir;
  fs::path fixture_dir;
  std::unique_ptr<scribe::Store> store;
  scribe::AsrRegistry asr;
  scribe::LlmRegistry llm;
  std::unique_ptr<scribe::Orchestrator> orch;
};

/// Loopback httplib server on a free port, served from a background thread.
class StubServer {
 public:
  StubServer() = default;
  StubServer(const StubServer&) = delete;
  StubServer& operator=(const StubServer&) = delete;
  ~StubServer();

  httplib::Server& http() { return server_; }
  void start();
  int port() const { return port_; }
  std::string url(const std::string& path = "") const;

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

/// A port with nothing listening on it.
int closed_port();

}  // namespace fixtures
