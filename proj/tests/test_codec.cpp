#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "fixtures.hpp"
#include "ref_sha256.hpp"
#include "scribe/audio.hpp"
#include "scribe/digest.hpp"
#include "scribe/errors.hpp"
#include "scribe/json_codec.hpp"

using namespace scribe;

namespace {

std::string random_text(std::mt19937& rng, std::size_t max_len) {
  // Whole code points only, so the result is always valid UTF-8.
  static const std::vector<std::string> pieces = {"a", "z", " ", "A", "\n", "\t", "\"", "\\",
                                                  "/", "\xc3\xa9", "\xe2\x80\x93", "\xe4\xbd\xa0"};
  std::string s;
  const auto n = rng() % (max_len + 1);
  for (std::size_t i = 0; i < n; ++i) s += pieces[rng() % pieces.size()];
  return s;
}

template <typename T>
void check_round_trip(const T& v) {
  const std::string text = to_canonical(v);
  const T back = json::parse(text).get<T>();
  CHECK(back == v);
  CHECK(to_canonical(back) == text);
}

}  // namespace

TEST_CASE("every entity survives a canonical JSON round trip") {
  std::mt19937 rng(5);
  Note n;
  n.id = new_id();
  n.session_id = new_id();
  n.template_id = "builtin-full-visit";
  n.transcript_ids = {new_id(), new_id()};
  n.sections = {{"Plan", "rest"}, {"Assessment", "ok"}};
  n.llm_backend_id = "llm";
  n.llm_model_id = "m";
  n.token_usage = {12, 34};
  n.status = NoteStatus::edited;
  n.created_at = {1730419200000};
  n.edited_at = Timestamp{1730419200500};
  check_round_trip(n);
  n.edited_at.reset();
  n.failure_reason = "BackendUnavailable: x";
  check_round_trip(n);

  Session s;
  s.id = new_id();
  s.owner_id = "u1";
  s.created_at = {5};
  s.recording_ids = {"a", "b"};
  check_round_trip(s);
  s.facility_id = "f1";
  s.archived = true;
  check_round_trip(s);

  Recording r;
  r.id = "r";
  r.session_id = "s";
  r.blob_ref = std::string(64, 'a');
  r.duration_s = 456.0;
  r.sample_rate_hz = 16000;
  r.status = RecordingStatus::failed;
  check_round_trip(r);

  Transcript t;
  t.id = "t";
  t.recording_id = "r";
  t.segments = {{0.0, 1.5, "hello", std::nullopt}, {1.5, 3.25, "there", std::string("S1")}};
  t.full_text = "hello there";
  t.language_tag = "en";
  check_round_trip(t);

  NoteTemplate tmpl;
  tmpl.id = "x";
  tmpl.name = "Rural Handover";
  tmpl.owner_id = "u1";
  tmpl.sections = {{"Situation", "Say it"}};
  check_round_trip(tmpl);

  Job j;
  j.id = "j";
  j.kind = JobKind::generation;
  j.subject_id = "n";
  j.attempt = 3;
  j.state = JobState::failed;
  j.finished_at = Timestamp{9};
  j.error = "boom";
  check_round_trip(j);

  UserProfile u{"u", "Dr U", Role::admin, {1}};
  check_round_trip(u);
  check_round_trip(Facility{"f", "Rural General", "north"});

  for (int i = 0; i < 200; ++i) {
    Section sec{random_text(rng, 20), random_text(rng, 200)};
    check_round_trip(sec);
  }
}

TEST_CASE("canonical JSON has sorted keys and explicit nulls") {
  Session s;
  s.id = "s";
  s.owner_id = "u";
  const std::string text = to_canonical(s);
  CHECK(text.find("\"facility_id\":null") != std::string::npos);
  const auto j = json::parse(text);
  std::string prev;
  for (const auto& [k, _] : j.items()) {
    CHECK(prev < k);
    prev = k;
  }
  CHECK(text.find(' ') == std::string::npos);
}

TEST_CASE("sha256 agrees with the independent reference") {
  CHECK(to_hex(sha256(std::string_view(""))) ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(reftest::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  std::mt19937 rng(9);
  for (int i = 0; i < 300; ++i) {
    std::string data(rng() % 300, '\0');
    for (auto& c : data) c = static_cast<char>(rng());
    CHECK(to_hex(sha256(std::string_view(data))) == reftest::sha256_hex(data));
  }
}

TEST_CASE("hex and base64url helpers") {
  const Digest d = sha256(std::string_view("x"));
  const auto h = to_hex(d);
  REQUIRE(digest_from_hex(h).has_value());
  CHECK(*digest_from_hex(h) == d);
  std::string upper = h;
  upper[0] = static_cast<char>(std::toupper(upper[0]));
  if (upper != h) CHECK_FALSE(digest_from_hex(upper).has_value());
  CHECK_FALSE(digest_from_hex(h.substr(1)).has_value());

  std::mt19937 rng(13);
  for (int i = 0; i < 200; ++i) {
    std::string data(rng() % 64, '\0');
    for (auto& c : data) c = static_cast<char>(rng());
    const auto enc = base64url_encode(data);
    CHECK(enc.find_first_of("+/=") == std::string::npos);
    REQUIRE(base64url_decode(enc).has_value());
    CHECK(*base64url_decode(enc) == data);
  }
  CHECK_FALSE(base64url_decode("a").has_value());
  CHECK(constant_time_equal("abc", "abc"));
  CHECK_FALSE(constant_time_equal("abc", "abd"));
  CHECK_FALSE(constant_time_equal("abc", "ab"));
}

TEST_CASE("WAV duration comes from the data chunk") {
  const auto bytes = fixtures::make_wav(456ull * 16000, 16000);
  const WavInfo info = probe_wav(bytes);
  CHECK(info.sample_rate_hz == 16000);
  CHECK(info.channels == 1);
  CHECK(info.bits_per_sample == 16);
  CHECK(info.duration_s() == Catch::Approx(456.0).margin(0.01));

  const auto stereo = fixtures::make_wav(8000 * 3, 8000, 2);
  CHECK(probe_wav(stereo).duration_s() == Catch::Approx(3.0).margin(1e-9));
}

TEST_CASE("WAV rejection cases") {
  const auto code_of = [](std::vector<std::uint8_t> b) {
    try {
      probe_wav(b);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvariantViolation;
  };
  CHECK(code_of({}) == ErrorCode::EmptyAudio);
  CHECK(code_of({'I', 'D', '3', 4, 0, 0}) == ErrorCode::UnsupportedMedia);

  auto float_wav = fixtures::make_wav(100, 8000);
  float_wav[20] = 3;  // IEEE float format tag
  CHECK(code_of(float_wav) == ErrorCode::UnsupportedMedia);

  auto eight_bit = fixtures::make_wav(100, 8000);
  eight_bit[34] = 8;
  CHECK(code_of(eight_bit) == ErrorCode::UnsupportedMedia);

  auto truncated = fixtures::make_wav(100, 8000);
  truncated.resize(30);
  CHECK(code_of(truncated) == ErrorCode::UnsupportedMedia);
}

TEST_CASE("encoder output probes back to the same shape") {
  std::vector<std::int16_t> samples(16000 * 2 * 2, 7);
  const auto bytes = encode_wav_pcm16(samples, 16000, 2);
  const auto info = probe_wav(bytes);
  CHECK(info.channels == 2);
  CHECK(info.frame_count == 32000);
  CHECK(info.duration_s() == Catch::Approx(2.0));
  CHECK(bytes.size() == 44 + samples.size() * 2);
}
