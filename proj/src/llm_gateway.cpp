#include "scribe/llm_gateway.hpp"

#include <chrono>
#include <sstream>

#include "http_client.hpp"
#include "scribe/errors.hpp"

namespace scribe {

std::string_view to_string(LlmBackendKind kind) {
  switch (kind) {
    case LlmBackendKind::mock: return "mock";
    case LlmBackendKind::http_chat: return "http_chat";
  }
  return "?";
}

LlmBackendKind parse_llm_backend_kind(std::string_view text) {
  if (text == "mock") return LlmBackendKind::mock;
  if (text == "http_chat") return LlmBackendKind::http_chat;
  throw Error(ErrorCode::ConfigInvalid, "unknown LLM backend kind '" + std::string(text) + "'");
}

std::vector<std::string> descriptor_violations(const LlmBackendDescriptor& d) {
  std::vector<std::string> out;
  if (d.backend_id.empty()) out.push_back("backend_id is empty");
  if (d.max_output_tokens <= 0) out.push_back("max_output_tokens must be positive");
  if (!(d.temperature >= 0.0 && d.temperature <= 2.0)) out.push_back("temperature must be in [0, 2]");
  if (!(d.timeout_s > 0)) out.push_back("timeout_s must be positive");
  if (d.max_concurrency <= 0) out.push_back("max_concurrency must be positive");
  if ((d.kind == LlmBackendKind::http_chat) != d.endpoint.has_value()) {
    out.push_back("endpoint is required exactly for http_chat backends");
  }
  return out;
}

std::int64_t estimate_tokens(std::string_view text) {
  return static_cast<std::int64_t>((text.size() + 3) / 4);
}

std::string mock_completion(std::string_view user_text) {
  std::vector<std::string> titles;
  const auto open = user_text.find("<sections>");
  const auto close = user_text.find("</sections>");
  if (open != std::string_view::npos && close != std::string_view::npos && close > open) {
    std::istringstream block(std::string(user_text.substr(open, close - open)));
    for (std::string line; std::getline(block, line);) {
      if (line.rfind("## ", 0) == 0) titles.push_back(line.substr(3));
    }
  }

  std::string words;
  if (const auto t = user_text.find("<transcript"); t != std::string_view::npos) {
    const auto body = user_text.find('\n', t);
    const auto end = user_text.find("</transcript>", t);
    if (body != std::string_view::npos && end != std::string_view::npos && end > body) {
      std::istringstream text(std::string(user_text.substr(body + 1, end - body - 1)));
      std::string w;
      for (int n = 0; n < 10 && (text >> w); ++n) {
        if (n) words += ' ';
        words += w;
      }
    }
  }

  std::string out;
  for (const auto& title : titles) out += "## " + title + "\n" + words + "\n\n";
  return out;
}

namespace {

struct ChatMessage {
  std::string role;
  std::string content;
};

struct ChatReply {
  std::string text;
  TokenUsage usage;
};

TokenUsage estimated_usage(const std::vector<ChatMessage>& messages, std::string_view reply) {
  std::int64_t prompt = 0;
  for (const auto& m : messages) prompt += estimate_tokens(m.content);
  return {prompt, estimate_tokens(reply)};
}

bool looks_like_context_overflow(const httplib::Response& res) {
  auto j = nlohmann::json::parse(res.body, nullptr, false);
  if (!j.is_discarded() && j.contains("error") && j["error"].is_object()) {
    const auto& e = j["error"];
    if (e.value("code", nlohmann::json()).is_string() &&
        e["code"].get<std::string>() == "context_length_exceeded") {
      return true;
    }
  }
  return res.body.find("context length") != std::string::npos ||
         res.body.find("context_length") != std::string::npos;
}

ChatReply chat_http(const std::vector<ChatMessage>& messages, const LlmBackendDescriptor& backend,
                    const GenerateOptions& options) {
  const auto url = parse_url(*backend.endpoint);
  const auto path = join_path(url.path, "chat/completions");

  nlohmann::json request = {{"model", backend.model_id},
                            {"temperature", backend.temperature},
                            {"max_tokens", backend.max_output_tokens},
                            {"stream", false}};
  request["messages"] = nlohmann::json::array();
  for (const auto& m : messages) {
    request["messages"].push_back({{"role", m.role}, {"content", m.content}});
  }
  const std::string body = request.dump();

  ChatReply reply;
  run_with_retries(
      options.retry,
      [&] {
        auto client = detail::make_client(url.origin, backend.timeout_s, backend.api_key);
        const auto result = client->Post(path, body, "application/json");
        const auto& res = detail::require_response(result);
        if (res.status != 200) {
          if (res.status == 400 && looks_like_context_overflow(res)) {
            throw Error(ErrorCode::ContextOverflow, detail::backend_message(res));
          }
          throw Error(ErrorCode::BackendRejected, "backend '" + backend.backend_id + "' returned " +
                                                      std::to_string(res.status) + ": " +
                                                      detail::backend_message(res));
        }
        auto j = nlohmann::json::parse(res.body, nullptr, false);
        bool has_content = false;
        if (!j.is_discarded() && j.contains("choices") && j["choices"].is_array() &&
            !j["choices"].empty()) {
          const auto msg = j["choices"][0].value("message", nlohmann::json::object());
          if (msg.contains("content") && msg["content"].is_string()) {
            reply.text = msg["content"].get<std::string>();
            has_content = true;
          }
        }
        if (!has_content) {
          throw Error(ErrorCode::BackendRejected,
                      "backend '" + backend.backend_id + "' returned no completion text");
        }
        if (j.contains("usage") && j["usage"].is_object() &&
            j["usage"].contains("prompt_tokens") && j["usage"].contains("completion_tokens")) {
          reply.usage = {j["usage"]["prompt_tokens"].get<std::int64_t>(),
                         j["usage"]["completion_tokens"].get<std::int64_t>()};
        } else {
          reply.usage = estimated_usage(messages, reply.text);
        }
      },
      options.observer, backend.backend_id);
  return reply;
}

ChatReply chat(const std::vector<ChatMessage>& messages, const LlmBackendDescriptor& backend,
               const GenerateOptions& options) {
  if (backend.kind == LlmBackendKind::mock) {
    // The mock answers the original user turn; repair turns repeat it.
    ChatReply reply;
    reply.text = mock_completion(messages.at(1).content);
    reply.usage = estimated_usage(messages, reply.text);
    if (options.observer) options.observer(1, std::nullopt);
    return reply;
  }
  return chat_http(messages, backend, options);
}

std::string repair_instruction(const NoteTemplate& tmpl, const std::string& problem) {
  return "Your previous reply could not be parsed (" + problem +
         "). Rewrite the complete note, keeping its clinical content, so that it follows this "
         "contract exactly.\n\n" +
         output_contract(tmpl);
}

}  // namespace

GenerationResult generate(const PromptBundle& bundle, const NoteTemplate& tmpl,
                          const LlmBackendDescriptor& backend, const GenerateOptions& options) {
  const auto started = std::chrono::steady_clock::now();
  const std::int64_t prompt_estimate =
      estimate_tokens(bundle.system_text) + estimate_tokens(bundle.user_text);
  if (prompt_estimate + backend.max_output_tokens > backend.context_window_tokens) {
    throw Error(ErrorCode::ContextOverflow,
                "prompt of ~" + std::to_string(prompt_estimate) + " tokens plus " +
                    std::to_string(backend.max_output_tokens) + " output tokens exceeds the " +
                    std::to_string(backend.context_window_tokens) + "-token window of '" +
                    backend.backend_id + "'");
  }

  std::vector<ChatMessage> messages = {{"system", bundle.system_text},
                                       {"user", bundle.user_text}};
  GenerationResult result;
  ChatReply first = chat(messages, backend, options);
  result.token_usage = first.usage;
  result.raw_text = first.text;
  try {
    result.parsed_sections = parse_sections(first.text, tmpl);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::MalformedOutput) throw;
    messages.push_back({"assistant", first.text});
    messages.push_back({"user", repair_instruction(tmpl, e.what())});
    ChatReply second = chat(messages, backend, options);
    result.token_usage.prompt_tokens += second.usage.prompt_tokens;
    result.token_usage.completion_tokens += second.usage.completion_tokens;
    result.raw_text = second.text;
    result.repaired = true;
    try {
      result.parsed_sections = parse_sections(second.text, tmpl);
    } catch (const Error& again) {
      throw Error(ErrorCode::MalformedOutput,
                  std::string("output still malformed after repair re-prompt: ") + again.what());
    }
  }
  result.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::steady_clock::now() - started)
                          .count();
  return result;
}

HealthStatus health_check(const LlmBackendDescriptor& backend) {
  if (backend.kind == LlmBackendKind::mock) return HealthStatus::ok();
  if (!backend.endpoint) return HealthStatus::failing("config: no endpoint");
  ParsedUrl url;
  try {
    url = parse_url(*backend.endpoint);
  } catch (const Error& e) {
    return HealthStatus::failing(std::string("config: ") + e.what());
  }
  httplib::Result result{nullptr, httplib::Error::Unknown};
  auto status = detail::probe(url.origin + join_path(url.path, "models"), backend.timeout_s,
                              backend.api_key, &result);
  if (!status.healthy) return status;
  auto j = nlohmann::json::parse(result->body, nullptr, false);
  if (j.is_discarded() || !j.contains("data") || !j["data"].is_array()) {
    return HealthStatus::failing("malformed model list");
  }
  for (const auto& m : j["data"]) {
    if (m.is_object() && m.value("id", std::string{}) == backend.model_id) return HealthStatus::ok();
  }
  return HealthStatus::failing("model '" + backend.model_id + "' not listed");
}

void LlmRegistry::add(LlmBackendDescriptor descriptor) {
  auto problems = descriptor_violations(descriptor);
  if (entries_.count(descriptor.backend_id)) {
    problems.push_back("duplicate backend_id '" + descriptor.backend_id + "'");
  }
  if (!problems.empty()) {
    throw Error(ErrorCode::ConfigInvalid, "LLM backend '" + descriptor.backend_id + "': " + problems.front());
  }
  auto limiter = std::make_unique<ConcurrencyLimiter>(descriptor.max_concurrency);
  const auto id = descriptor.backend_id;
  entries_.emplace(id, Entry{std::move(descriptor), std::move(limiter)});
}

const LlmBackendDescriptor& LlmRegistry::get(const std::string& backend_id) const {
  auto it = entries_.find(backend_id);
  if (it == entries_.end()) throw Error(ErrorCode::NotFound, "no LLM backend '" + backend_id + "'");
  return it->second.descriptor;
}

std::vector<std::string> LlmRegistry::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, _] : entries_) out.push_back(id);
  return out;
}

GenerationResult LlmRegistry::generate(const std::string& backend_id, const PromptBundle& bundle,
                                       const NoteTemplate& tmpl,
                                       const GenerateOptions& options) const {
  auto it = entries_.find(backend_id);
  if (it == entries_.end()) throw Error(ErrorCode::NotFound, "no LLM backend '" + backend_id + "'");
  ConcurrencyLimiter::Permit permit(*it->second.limiter);
  return scribe::generate(bundle, tmpl, it->second.descriptor, options);
}

}  // namespace scribe
