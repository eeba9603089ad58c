#include "scribe/api_server.hpp"

#include <httplib.h>

#include <algorithm>
#include <condition_variable>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <regex>
#include <thread>

#include "scribe/auth.hpp"
#include "scribe/json_codec.hpp"
#include "scribe/metrics.hpp"
#include "scribe/templates.hpp"

namespace scribe {

int http_status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotFound:
    case ErrorCode::DanglingReference:
    case ErrorCode::UnknownUser:
      return 404;
    case ErrorCode::IllegalTransition:
    case ErrorCode::SessionArchived:
    case ErrorCode::TranscriptNotReady:
      return 409;
    case ErrorCode::PayloadTooLarge:
      return 413;
    case ErrorCode::UnsupportedMedia:
      return 415;
    case ErrorCode::ValidationFailed:
    case ErrorCode::EmptyAudio:
    case ErrorCode::EmptyBlob:
    case ErrorCode::EmptyTranscript:
    case ErrorCode::SectionMismatch:
    case ErrorCode::ContextOverflow:
    case ErrorCode::NoUsers:
      return 422;
    case ErrorCode::Unauthorized:
      return 401;
    case ErrorCode::Forbidden:
      return 403;
    case ErrorCode::BackendRejected:
    case ErrorCode::MalformedOutput:
      return 502;
    case ErrorCode::BackendUnavailable:
      return 503;
    case ErrorCode::StorageFull:
      return 507;
    case ErrorCode::InvariantViolation:
    case ErrorCode::ConfigInvalid:
    case ErrorCode::AddressInUse:
      return 500;
  }
  return 500;
}

namespace {

// ── Request context ──────────────────────────────────────────────────────────

struct Caller {
  std::string user_id;
  Role role = Role::clinician;

  bool is_admin() const { return role == Role::admin; }
};

struct Context {
  const httplib::Request& req;
  httplib::Response& res;
  Caller caller;
  std::vector<std::string> params;

  const std::string& param(std::size_t i) const { return params.at(i); }
};

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

json error_body(ErrorCode code, const std::string& message, const std::vector<Violation>& violations) {
  json v = json::array();
  for (const auto& x : violations) v.push_back({{"code", x.code}, {"field", x.field}, {"message", x.message}});
  return {{"error", {{"code", std::string(to_string(code))}, {"message", message}, {"violations", v}}}};
}

void send_error(httplib::Response& res, const Error& e) {
  const int status = http_status_for(e.code());
  // 5xx responses for internal conditions never echo internals.
  const bool internal = status == 500;
  send_json(res, status,
            error_body(e.code(), internal ? "internal error" : e.what(), internal ? std::vector<Violation>{} : e.violations()));
}

json parse_body(const httplib::Request& req, bool required = true) {
  if (req.body.empty()) {
    if (required) throw Error(ErrorCode::ValidationFailed, "request body is required");
    return json::object();
  }
  auto j = json::parse(req.body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(ErrorCode::ValidationFailed, "request body must be a JSON object",
                {{"malformed_body", "body", "not a JSON object"}});
  }
  return j;
}

template <typename T>
T field(const json& body, const char* key) {
  auto it = body.find(key);
  if (it == body.end() || it->is_null()) {
    throw Error(ErrorCode::ValidationFailed, std::string(key) + " is required",
                {{"missing_field", key, "required"}});
  }
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::ValidationFailed, std::string(key) + " has the wrong type",
                {{"wrong_type", key, "wrong type"}});
  }
}

template <typename T>
std::optional<T> optional_field(const json& body, const char* key) {
  auto it = body.find(key);
  if (it == body.end() || it->is_null()) return std::nullopt;
  return field<T>(body, key);
}

std::string first_line_preview(const Note& note) {
  for (const auto& s : note.sections) {
    const auto start = s.body.find_first_not_of(" \t\r\n");
    if (start == std::string::npos) continue;
    const auto end = s.body.find('\n', start);
    std::string line = s.body.substr(start, end == std::string::npos ? std::string::npos : end - start);
    if (utf8_length(line) > 160) line.resize(160);
    return line;
  }
  return {};
}

// ── Routes ───────────────────────────────────────────────────────────────────

using Handler = std::function<void(Context&)>;

struct Route {
  RouteSpec spec;
  Handler handler;
};

std::string to_regex(const std::string& path) {
  static const std::regex param(R"(\{[a-z_]+\})");
  return std::regex_replace(path, param, "([^/]+)");
}

}  // namespace

struct ApiServer::Impl {
  ApiConfig config;
  Store store;
  AsrRegistry asr;
  LlmRegistry llm;
  std::unique_ptr<Orchestrator> orch;
  httplib::Server http;
  std::thread thread;
  int bound_port = 0;
  std::mutex state_mu;
  std::condition_variable state_cv;
  bool running = false;
  bool stopped = false;

  explicit Impl(ApiConfig cfg)
      : config(std::move(cfg)),
        store(config.storage_root, StoreOptions{config.sync_audit_appends, false}) {
    for (const auto& d : config.asr_backends) asr.add(d);
    for (const auto& d : config.llm_backends) llm.add(d);
    OrchestratorConfig oc;
    oc.asr_backend_id = default_asr(config).backend_id;
    oc.llm_backend_id = default_llm(config).backend_id;
    oc.lexicon = config.lexicon;
    oc.retry = config.retry;
    oc.transcription_workers = config.transcription_workers;
    oc.generation_workers = config.generation_workers;
    orch = std::make_unique<Orchestrator>(store, asr, llm, std::move(oc));
    for (const auto& u : config.users) {
      auto profile = orch->ensure_user(u.id, u.display_name, u.role);
      if (profile.role != u.role) {
        store.update<UserProfile>(u.id, [&](UserProfile& p) { p.role = u.role; });
      }
    }
    register_routes();
  }

  // ── Helpers ──

  Caller authenticate_request(const httplib::Request& req) {
    std::optional<std::string> header;
    if (req.has_header("Authorization")) header = req.get_header_value("Authorization");
    const Principal p = authenticate(header, config.auth);
    UserProfile profile = orch->ensure_user(p.user_id, p.user_id, p.asserted_role.value_or(Role::clinician));
    return {profile.id, p.asserted_role.value_or(profile.role)};
  }

  void require_admin(const Caller& c) const {
    if (!c.is_admin()) throw Error(ErrorCode::Forbidden, "admin role required");
  }

  Session owned_session(const Caller& c, const std::string& id) const {
    Session s = store.load<Session>(id);
    if (s.owner_id != c.user_id && !c.is_admin()) {
      throw Error(ErrorCode::Forbidden, "session " + id + " belongs to another user");
    }
    return s;
  }

  json session_view(const Session& s) const {
    json j = s;
    j["status"] = std::string(to_string(derive_session_status(s, store)));
    j["audio_s"] = session_audio_seconds(s, store);
    return j;
  }

  json note_view(const Note& n) const {
    json j = n;
    j["rendered"] = render_sections(n.sections);
    return j;
  }

  json recording_view(const Recording& r) const {
    json j = r;
    auto jobs = store.load_by_ref<Job>(r.id);
    if (!jobs.empty()) {
      const auto& latest = *std::max_element(jobs.begin(), jobs.end(), [](const Job& a, const Job& b) {
        return std::tie(a.enqueued_at, a.id) < std::tie(b.enqueued_at, b.id);
      });
      j["job"] = latest;
    } else {
      j["job"] = nullptr;
    }
    return j;
  }

  std::vector<std::string> latest_transcripts(const Session& s) const {
    std::vector<std::string> ids;
    for (const auto& rid : s.recording_ids) {
      const auto r = store.find<Recording>(rid);
      if (!r || r->status != RecordingStatus::transcribed) continue;
      if (auto t = orch->transcript_for(rid)) ids.push_back(t->id);
    }
    return ids;
  }

  // ── Handlers ──

  void healthz(Context& ctx) {
    json asr_status = json::object();
    json llm_status = json::object();
    bool all_ok = true;
    for (const auto& id : asr.ids()) {
      const auto h = health_check(asr.get(id));
      all_ok = all_ok && h.healthy;
      asr_status[id] = {{"healthy", h.healthy}, {"reason", h.reason}};
    }
    for (const auto& id : llm.ids()) {
      const auto h = health_check(llm.get(id));
      all_ok = all_ok && h.healthy;
      llm_status[id] = {{"healthy", h.healthy}, {"reason", h.reason}};
    }
    send_json(ctx.res, 200,
              {{"status", all_ok ? "ok" : "degraded"}, {"asr", asr_status}, {"llm", llm_status}});
  }

  void openapi(Context& ctx) { send_json(ctx.res, 200, openapi_document()); }

  void create_session(Context& ctx) {
    const json body = parse_body(ctx.req, false);
    const Session s = orch->create_session(ctx.caller.user_id, optional_field<std::string>(body, "facility_id"));
    send_json(ctx.res, 201, session_view(s));
  }

  void list_sessions(Context& ctx) {
    std::string owner = ctx.caller.user_id;
    if (ctx.req.has_param("owner")) {
      owner = ctx.req.get_param_value("owner");
      if (owner != ctx.caller.user_id) require_admin(ctx.caller);
    }
    SortOrder order = SortOrder::descending;
    if (ctx.req.has_param("order")) {
      const auto o = ctx.req.get_param_value("order");
      if (o == "asc") {
        order = SortOrder::ascending;
      } else if (o != "desc") {
        throw Error(ErrorCode::ValidationFailed, "order must be asc or desc",
                    {{"invalid_value", "order", "asc or desc"}});
      }
    }
    json items = json::array();
    for (const auto& s : store.list_sessions(owner, order)) {
      json preview = nullptr;
      std::optional<Note> newest;
      for (const auto& nid : s.note_ids) {
        auto n = store.find<Note>(nid);
        if (n && (!newest || std::tie(n->created_at, n->id) > std::tie(newest->created_at, newest->id))) newest = n;
      }
      if (newest) preview = first_line_preview(*newest);
      items.push_back({{"id", s.id},
                       {"created_at", s.created_at},
                       {"status", std::string(to_string(derive_session_status(s, store)))},
                       {"archived", s.archived},
                       {"facility_id", json_or_null(s.facility_id)},
                       {"recording_count", s.recording_ids.size()},
                       {"note_count", s.note_ids.size()},
                       {"preview", preview}});
    }
    send_json(ctx.res, 200, {{"sessions", items}});
  }

  void get_session(Context& ctx) {
    const Session s = owned_session(ctx.caller, ctx.param(0));
    json j = session_view(s);
    json recs = json::array();
    for (const auto& rid : s.recording_ids) {
      if (auto r = store.find<Recording>(rid)) recs.push_back(recording_view(*r));
    }
    json notes = json::array();
    for (const auto& nid : s.note_ids) {
      if (auto n = store.find<Note>(nid)) notes.push_back(note_view(*n));
    }
    j["recordings"] = recs;
    j["notes"] = notes;
    send_json(ctx.res, 200, j);
  }

  void archive_session(Context& ctx) {
    owned_session(ctx.caller, ctx.param(0));
    send_json(ctx.res, 200, session_view(orch->archive_session(ctx.param(0), ctx.caller.user_id)));
  }

  void upload_recording(Context& ctx) {
    owned_session(ctx.caller, ctx.param(0));
    std::string bytes;
    std::string media_format = "wav";
    if (ctx.req.is_multipart_form_data()) {
      const char* field_name = ctx.req.has_file("audio") ? "audio" : "file";
      if (!ctx.req.has_file(field_name)) {
        throw Error(ErrorCode::ValidationFailed, "multipart field 'audio' is required",
                    {{"missing_field", "audio", "required"}});
      }
      const auto part = ctx.req.get_file_value(field_name);
      bytes = part.content;
      if (ctx.req.has_file("media_format")) {
        media_format = ctx.req.get_file_value("media_format").content;
      } else if (!part.content_type.empty() && part.content_type != "application/octet-stream") {
        media_format = part.content_type;
      }
    } else {
      const auto type = ctx.req.get_header_value("Content-Type");
      if (!type.empty() && type.rfind("audio/", 0) != 0 && type != "application/octet-stream") {
        throw Error(ErrorCode::UnsupportedMedia, "unsupported content type " + type);
      }
      bytes = ctx.req.body;
      if (type.rfind("audio/", 0) == 0) media_format = type;
    }
    const auto result = orch->attach_recording(ctx.param(0), as_bytes(bytes), media_format, ctx.caller.user_id);
    send_json(ctx.res, 202, {{"recording", recording_view(result.recording)}, {"job", result.job}});
  }

  Recording owned_recording(const Caller& c, const std::string& id) const {
    Recording r = store.load<Recording>(id);
    owned_session(c, r.session_id);
    return r;
  }

  void get_recording(Context& ctx) {
    send_json(ctx.res, 200, recording_view(owned_recording(ctx.caller, ctx.param(0))));
  }

  void get_transcript(Context& ctx) {
    const Recording r = owned_recording(ctx.caller, ctx.param(0));
    const auto t = r.status == RecordingStatus::transcribed ? orch->transcript_for(r.id) : std::nullopt;
    if (!t) {
      throw Error(ErrorCode::TranscriptNotReady,
                  "recording " + r.id + " is " + std::string(to_string(r.status)));
    }
    send_json(ctx.res, 200, *t);
  }

  void submit_note(Context& ctx) {
    const Session s = owned_session(ctx.caller, ctx.param(0));
    const json body = parse_body(ctx.req);
    const auto template_id = field<std::string>(body, "template_id");
    auto transcript_ids = optional_field<std::vector<std::string>>(body, "transcript_ids");
    if (!transcript_ids) transcript_ids = latest_transcripts(s);
    const auto tmpl = orch->get_template(template_id);
    if (tmpl.owner_id && *tmpl.owner_id != ctx.caller.user_id && !ctx.caller.is_admin()) {
      throw Error(ErrorCode::NotFound, "template " + template_id + " not found");
    }
    const auto sub = orch->submit_note(s.id, template_id, *transcript_ids, ctx.caller.user_id,
                                       optional_field<std::string>(body, "encounter_context"));
    send_json(ctx.res, 202, {{"note", note_view(sub.note)}, {"job", sub.job}});
  }

  Note owned_note(const Caller& c, const std::string& id) const {
    Note n = store.load<Note>(id);
    owned_session(c, n.session_id);
    return n;
  }

  void get_note(Context& ctx) { send_json(ctx.res, 200, note_view(owned_note(ctx.caller, ctx.param(0)))); }

  void edit_note(Context& ctx) {
    owned_note(ctx.caller, ctx.param(0));
    const json body = parse_body(ctx.req);
    const auto sections = field<std::vector<Section>>(body, "sections");
    send_json(ctx.res, 200, note_view(orch->edit_note(ctx.param(0), sections, ctx.caller.user_id)));
  }

  void finalize_note(Context& ctx) {
    owned_note(ctx.caller, ctx.param(0));
    send_json(ctx.res, 200, note_view(orch->finalize_note(ctx.param(0), ctx.caller.user_id)));
  }

  void list_templates(Context& ctx) {
    json arr = json::array();
    for (const auto& t : orch->templates_for(ctx.caller.user_id)) arr.push_back(t);
    send_json(ctx.res, 200, {{"templates", arr}});
  }

  void create_template(Context& ctx) {
    const json body = parse_body(ctx.req);
    NoteTemplate candidate;
    candidate.name = field<std::string>(body, "name");
    candidate.sections = field<std::vector<TemplateSection>>(body, "sections");
    candidate.preamble = optional_field<std::string>(body, "preamble").value_or("");
    send_json(ctx.res, 201, orch->create_template(ctx.caller.user_id, std::move(candidate)));
  }

  void get_template(Context& ctx) {
    const auto t = orch->get_template(ctx.param(0));
    if (t.owner_id && *t.owner_id != ctx.caller.user_id && !ctx.caller.is_admin()) {
      throw Error(ErrorCode::NotFound, "template " + ctx.param(0) + " not found");
    }
    send_json(ctx.res, 200, t);
  }

  void metrics(Context& ctx) {
    require_admin(ctx.caller);
    const MetricsSnapshot snap = snapshot_from(store);
    MonthRange range;
    if (ctx.req.has_param("period")) {
      const Month m = parse_month(ctx.req.get_param_value("period"));
      range = {m, m};
    } else if (ctx.req.has_param("from") || ctx.req.has_param("to")) {
      if (!ctx.req.has_param("from") || !ctx.req.has_param("to")) {
        throw Error(ErrorCode::ValidationFailed, "from and to must be given together",
                    {{"missing_field", ctx.req.has_param("from") ? "to" : "from", "required"}});
      }
      range = {parse_month(ctx.req.get_param_value("from")), parse_month(ctx.req.get_param_value("to"))};
      if (range.size() < 1) {
        throw Error(ErrorCode::ValidationFailed, "empty month range", {{"empty_range", "to", "to precedes from"}});
      }
    } else {
      const Month now = Month::of(now_utc());
      range = covering_range(snap).value_or(MonthRange{now, now});
    }
    const UsageMetrics m = aggregate(range, snap);
    json series = json::array();
    for (const auto& mc : monthly_series(range, snap)) {
      series.push_back({{"month", to_string(mc.month)}, {"session_count", mc.session_count}});
    }
    std::uint64_t storage_bytes = 0;
    for (const auto& b : store.list_blobs()) storage_bytes += b.size_bytes;
    json body = {{"period", {{"from", to_string(range.first)}, {"to", to_string(range.last)}}},
                 {"session_count", m.session_count},
                 {"unique_users", m.unique_users},
                 {"unique_facilities", m.unique_facilities},
                 {"total_audio_s", m.total_audio_s},
                 {"mean_session_audio_s", m.mean_session_audio_s},
                 {"total_prompt_tokens", m.total_prompt_tokens},
                 {"total_completion_tokens", m.total_completion_tokens},
                 {"users_with_custom_templates", m.users_with_custom_templates},
                 {"customization_rate", m.customization_rate},
                 {"storage_gb", static_cast<double>(storage_bytes) / 1e9},
                 {"series", series},
                 {"cost_per_physician_month", nullptr}};
    if (ctx.req.has_param("server_cost_per_month")) {
      const auto num = [&](const char* key) {
        if (!ctx.req.has_param(key)) return 0.0;
        try {
          return std::stod(ctx.req.get_param_value(key));
        } catch (const std::exception&) {
          throw Error(ErrorCode::ValidationFailed, std::string(key) + " must be a number",
                      {{"wrong_type", key, "number expected"}});
        }
      };
      const CostModel model{num("server_cost_per_month"), num("token_cost_per_1k"), num("storage_cost_per_gb_month")};
      const double storage_gb = ctx.req.has_param("storage_gb") ? num("storage_gb") : static_cast<double>(storage_bytes) / 1e9;
      if (m.unique_users > 0) body["cost_per_physician_month"] = cost_per_physician_month(m, model, storage_gb);
    }
    send_json(ctx.res, 200, body);
  }

  // ── Registration ──

  std::vector<Route> routes() {
    using S = Impl;
    const auto bind = [this](void (S::*fn)(Context&)) { return [this, fn](Context& c) { (this->*fn)(c); }; };
    std::vector<Route> r;
    for (const auto& spec : route_table()) {
      static const std::map<std::string, void (S::*)(Context&)> handlers = {
          {"GET /healthz", &S::healthz},
          {"GET /openapi", &S::openapi},
          {"POST /sessions", &S::create_session},
          {"GET /sessions", &S::list_sessions},
          {"GET /sessions/{id}", &S::get_session},
          {"POST /sessions/{id}/archive", &S::archive_session},
          {"POST /sessions/{id}/recordings", &S::upload_recording},
          {"GET /recordings/{id}", &S::get_recording},
          {"GET /recordings/{id}/transcript", &S::get_transcript},
          {"POST /sessions/{id}/notes", &S::submit_note},
          {"GET /notes/{id}", &S::get_note},
          {"PATCH /notes/{id}", &S::edit_note},
          {"POST /notes/{id}/finalize", &S::finalize_note},
          {"GET /templates", &S::list_templates},
          {"POST /templates", &S::create_template},
          {"GET /templates/{id}", &S::get_template},
          {"GET /metrics", &S::metrics},
      };
      r.push_back({spec, bind(handlers.at(spec.method + " " + spec.path))});
    }
    return r;
  }

  void register_routes() {
    http.set_payload_max_length(static_cast<std::size_t>(config.max_upload_bytes));
    http.set_socket_options([](socket_t sock) {
      int yes = 1;
      ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
    });
    http.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
      if (res.status == 413) {
        send_json(res, 413, error_body(ErrorCode::PayloadTooLarge, "upload exceeds the configured limit", {}));
      } else if (res.status == 404) {
        send_json(res, 404, error_body(ErrorCode::NotFound, "no such route", {}));
      } else {
        send_json(res, res.status, {{"error", {{"code", "HttpError"}, {"message", httplib::status_message(res.status)}, {"violations", json::array()}}}});
      }
      return httplib::Server::HandlerResponse::Handled;
    });

    for (auto& route : routes()) {
      auto wrapped = [this, route](const httplib::Request& req, httplib::Response& res) {
        Context ctx{req, res, {}, {}};
        for (std::size_t i = 1; i < req.matches.size(); ++i) ctx.params.push_back(req.matches[i].str());
        try {
          if (route.spec.requires_auth) ctx.caller = authenticate_request(req);
          route.handler(ctx);
        } catch (const Error& e) {
          send_error(res, e);
        } catch (const std::exception& e) {
          std::cerr << route.spec.method << " " << route.spec.path << ": " << e.what() << "\n";
          send_json(res, 500, error_body(ErrorCode::InvariantViolation, "internal error", {}));
        }
      };
      const std::string pattern = to_regex(route.spec.path);
      const std::string& m = route.spec.method;
      if (m == "GET") {
        http.Get(pattern, wrapped);
      } else if (m == "POST") {
        http.Post(pattern, wrapped);
      } else if (m == "PATCH") {
        http.Patch(pattern, wrapped);
      } else if (m == "PUT") {
        http.Put(pattern, wrapped);
      } else if (m == "DELETE") {
        http.Delete(pattern, wrapped);
      }
    }
  }
};

const std::vector<RouteSpec>& route_table() {
  static const std::vector<RouteSpec> table = {
      {"GET", "/healthz", false, false, 200, "Service and per-backend health"},
      {"GET", "/openapi", true, false, 200, "This API description"},
      {"POST", "/sessions", true, true, 201, "Create a session"},
      {"GET", "/sessions", true, false, 200, "List the caller's sessions, newest first"},
      {"GET", "/sessions/{id}", true, false, 200, "Session with recordings, notes and derived status"},
      {"POST", "/sessions/{id}/archive", true, true, 200, "Archive a session"},
      {"POST", "/sessions/{id}/recordings", true, true, 202, "Upload audio (multipart field 'audio')"},
      {"GET", "/recordings/{id}", true, false, 200, "Recording with its latest job"},
      {"GET", "/recordings/{id}/transcript", true, false, 200, "Transcript of a transcribed recording"},
      {"POST", "/sessions/{id}/notes", true, true, 202, "Generate a note {template_id, transcript_ids?}"},
      {"GET", "/notes/{id}", true, false, 200, "Note with status"},
      {"PATCH", "/notes/{id}", true, true, 200, "Replace note sections {sections}"},
      {"POST", "/notes/{id}/finalize", true, true, 200, "Finalize a note"},
      {"GET", "/templates", true, false, 200, "Builtin and the caller's custom templates"},
      {"POST", "/templates", true, true, 201, "Create a custom template"},
      {"GET", "/templates/{id}", true, false, 200, "One template"},
      {"GET", "/metrics", true, false, 200, "Usage metrics (?period=YYYY-MM or ?from=&to=), admin only"},
  };
  return table;
}

json openapi_document() {
  json paths = json::object();
  for (const auto& r : route_table()) {
    std::string method = r.method;
    std::transform(method.begin(), method.end(), method.begin(), [](unsigned char c) { return std::tolower(c); });
    json op = {{"summary", r.summary},
               {"responses", {{std::to_string(r.success_status), {{"description", "success"}}}}}};
    if (r.requires_auth) op["security"] = json::array({{{"bearer", json::array()}}});
    json params = json::array();
    if (r.path.find("{id}") != std::string::npos) {
      params.push_back({{"name", "id"}, {"in", "path"}, {"required", true}, {"schema", {{"type", "string"}}}});
    }
    if (!params.empty()) op["parameters"] = params;
    paths[r.path][method] = op;
  }
  json errors = json::object();
  for (auto code : kAllErrorCodes) errors[std::string(to_string(code))] = http_status_for(code);
  return {{"openapi", "3.0.3"},
          {"info", {{"title", "scribe"}, {"version", "1.0.0"}}},
          {"paths", paths},
          {"components", {{"securitySchemes", {{"bearer", {{"type", "http"}, {"scheme", "bearer"}}}}}}},
          {"x-error-status", errors}};
}

ApiServer::ApiServer(ApiConfig config) {
  if (auto problems = config_violations(config); !problems.empty()) {
    throw Error(ErrorCode::ConfigInvalid, "invalid configuration: " + problems.front());
  }
  impl_ = std::make_unique<Impl>(std::move(config));
}

ApiServer::~ApiServer() { stop(); }

void ApiServer::start() {
  auto& i = *impl_;
  const std::string& host = i.config.listen_host;
  if (i.config.listen_port == 0) {
    i.bound_port = i.http.bind_to_any_port(host);
    if (i.bound_port <= 0) throw Error(ErrorCode::AddressInUse, "cannot bind " + host);
  } else {
    if (!i.http.bind_to_port(host, i.config.listen_port)) {
      throw Error(ErrorCode::AddressInUse, "cannot bind " + host + ":" + std::to_string(i.config.listen_port));
    }
    i.bound_port = i.config.listen_port;
  }
  {
    std::lock_guard lock(i.state_mu);
    i.running = true;
  }
  i.thread = std::thread([&i] { i.http.listen_after_bind(); });
  i.http.wait_until_ready();
}

int ApiServer::port() const { return impl_->bound_port; }

void ApiServer::stop() {
  if (!impl_) return;
  auto& i = *impl_;
  {
    std::lock_guard lock(i.state_mu);
    if (i.stopped) return;
    i.stopped = true;
  }
  i.http.stop();
  if (i.thread.joinable()) i.thread.join();
  i.orch->wait_idle();
  i.state_cv.notify_all();
}

void ApiServer::wait() {
  auto& i = *impl_;
  std::unique_lock lock(i.state_mu);
  i.state_cv.wait(lock, [&] { return i.stopped; });
}

Orchestrator& ApiServer::orchestrator() { return *impl_->orch; }
Store& ApiServer::store() { return impl_->store; }
const ApiConfig& ApiServer::config() const { return impl_->config; }

std::unique_ptr<ApiServer> serve(ApiConfig config) {
  auto server = std::make_unique<ApiServer>(std::move(config));
  server->start();
  return server;
}

}  // namespace scribe
