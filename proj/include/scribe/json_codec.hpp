#pragma once

// Canonical JSON for every domain type: snake_case field names, absent
// optionals as null, keys sorted (nlohmann's default object is ordered by
// key), compact separators.

#include <nlohmann/json.hpp>
#include <optional>
#include <string>

#include "scribe/domain.hpp"

namespace scribe {

using nlohmann::json;

template <typename T>
json json_or_null(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

void to_json(json& j, const Timestamp& v);
void from_json(const json& j, Timestamp& v);

void to_json(json& j, const UserProfile& v);
void from_json(const json& j, UserProfile& v);
void to_json(json& j, const Facility& v);
void from_json(const json& j, Facility& v);
void to_json(json& j, const Session& v);
void from_json(const json& j, Session& v);
void to_json(json& j, const Recording& v);
void from_json(const json& j, Recording& v);
void to_json(json& j, const Segment& v);
void from_json(const json& j, Segment& v);
void to_json(json& j, const Transcript& v);
void from_json(const json& j, Transcript& v);
void to_json(json& j, const Section& v);
void from_json(const json& j, Section& v);
void to_json(json& j, const TokenUsage& v);
void from_json(const json& j, TokenUsage& v);
void to_json(json& j, const Note& v);
void from_json(const json& j, Note& v);
void to_json(json& j, const TemplateSection& v);
void from_json(const json& j, TemplateSection& v);
void to_json(json& j, const NoteTemplate& v);
void from_json(const json& j, NoteTemplate& v);
void to_json(json& j, const Job& v);
void from_json(const json& j, Job& v);

template <typename T>
std::string to_canonical(const T& value) {
  return json(value).dump();
}

inline std::string to_canonical(const json& value) { return value.dump(); }

}  // namespace scribe
