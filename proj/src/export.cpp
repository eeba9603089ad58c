#include "scribe/export.hpp"

#include <fstream>
#include <iostream>

#include "scribe/errors.hpp"

namespace scribe {

namespace {

template <typename T>
json all_of_kind(const Store& store) {
  json arr = json::array();
  for (const auto& v : store.load_all<T>()) arr.push_back(v);
  return arr;
}

}  // namespace

json export_archive(const Store& store, Timestamp exported_at) {
  json entities = {{"user", all_of_kind<UserProfile>(store)},
                   {"facility", all_of_kind<Facility>(store)},
                   {"session", all_of_kind<Session>(store)},
                   {"recording", all_of_kind<Recording>(store)},
                   {"transcript", all_of_kind<Transcript>(store)},
                   {"note", all_of_kind<Note>(store)},
                   {"template", all_of_kind<NoteTemplate>(store)},
                   {"job", all_of_kind<Job>(store)}};
  json blobs = json::array();
  for (const auto& b : store.list_blobs()) {
    blobs.push_back({{"address", b.address}, {"size_bytes", b.size_bytes},
                     {"media_format", std::string(to_string(b.media_format))}});
  }
  const ChainVerdict verdict = store.verify_audit_chain();
  return {{"format", kExportFormat},
          {"exported_at", exported_at},
          {"entities", std::move(entities)},
          {"audit_log", store.audit_lines()},
          {"audit_chain", {{"ok", verdict.ok}, {"broken_at", verdict.ok ? json(nullptr) : json(verdict.broken_at)}}},
          {"blobs", std::move(blobs)}};
}

void write_export(const Store& store, const std::string& out) {
  const std::string text = export_archive(store).dump() + "\n";
  if (out == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(out, std::ios::binary | std::ios::trunc);
  f << text;
  f.flush();
  if (!f) throw Error(ErrorCode::StorageFull, "cannot write export to " + out);
}

json export_templates(const Store& store, const std::optional<std::string>& owner_id) {
  json arr = json::array();
  const auto templates = owner_id ? store.load_by_ref<NoteTemplate>(*owner_id) : store.load_all<NoteTemplate>();
  for (const auto& t : templates) {
    if (t.kind == TemplateKind::custom) arr.push_back(t);
  }
  return {{"templates", std::move(arr)}};
}

std::vector<NoteTemplate> parse_template_document(const json& document) {
  json items;
  if (document.is_array()) {
    items = document;
  } else if (document.is_object() && document.contains("templates")) {
    items = document.at("templates");
  } else if (document.is_object()) {
    items = json::array({document});
  }
  if (!items.is_array()) {
    throw Error(ErrorCode::ValidationFailed, "expected a template, an array of templates or {\"templates\": [...]}");
  }
  std::vector<NoteTemplate> out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    try {
      out.push_back(items[i].get<NoteTemplate>());
    } catch (const std::exception& e) {
      throw Error(ErrorCode::ValidationFailed, "template " + std::to_string(i) + " is malformed: " + e.what(),
                  {{"malformed_template", "templates[" + std::to_string(i) + "]", e.what()}});
    }
  }
  return out;
}

}  // namespace scribe
