#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "scribe/json_codec.hpp"
#include "scribe/store.hpp"

namespace scribe {

inline constexpr const char* kExportFormat = "scribe-export/1";

/// Portable archive: every entity by kind, the raw audit log lines, the
/// chain verdict and the blob manifest. Audio bytes are not inlined.
json export_archive(const Store& store, Timestamp exported_at = now_utc());

/// Writes the archive to `out` ("-" for stdout). Throws StorageFull.
void write_export(const Store& store, const std::string& out);

/// {"templates": [...]} with every custom template, optionally one owner's.
json export_templates(const Store& store, const std::optional<std::string>& owner_id = std::nullopt);

/// Accepts {"templates": [...]}, a bare array, or a single template object.
/// Throws ValidationFailed for malformed input.
std::vector<NoteTemplate> parse_template_document(const json& document);

}  // namespace scribe
