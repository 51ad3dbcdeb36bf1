#include "beliefbench/eval/protocol.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

namespace beliefbench::eval {

using json = nlohmann::json;

namespace {

constexpr std::string_view kKindNames[] = {"next_object", "truth", "generate", "edit", "revert"};

}  // namespace

std::string_view kind_name(QueryKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

QueryKind parse_kind(std::string_view name) {
  for (std::size_t i = 0; i < std::size(kKindNames); ++i)
    if (kKindNames[i] == name) return static_cast<QueryKind>(i);
  throw ProtocolError("unknown query kind '" + std::string(name) + "'");
}

std::string encode(const ProbeQuery& q) {
  json j = {{"id", q.id}, {"kind", std::string(kind_name(q.kind))}, {"prompt", q.prompt}};
  if (q.candidate) j["candidate"] = *q.candidate;
  if (q.weight) j["weight"] = *q.weight;
  return j.dump();
}

std::string encode(const ProbeResponse& r) {
  json j = {{"id", r.id}};
  if (r.probability) j["probability"] = *r.probability;
  if (r.text) j["text"] = *r.text;
  if (r.error) j["error"] = *r.error;
  return j.dump();
}

namespace {

json parse_object(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed record: ") + e.what());
  }
  if (!j.is_object()) throw ProtocolError("record is not an object");
  if (!j.contains("id") || !j["id"].is_string()) throw ProtocolError("record has no string id");
  return j;
}

template <class T>
std::optional<T> optional_field(const json& j, const char* name) {
  if (!j.contains(name) || j[name].is_null()) return std::nullopt;
  try {
    return j[name].get<T>();
  } catch (const json::exception&) {
    throw ProtocolError(std::string("field '") + name + "' has the wrong type");
  }
}

}  // namespace

ProbeQuery decode_query(std::string_view line) {
  const json j = parse_object(line);
  ProbeQuery q;
  q.id = j["id"].get<std::string>();
  const auto kind = optional_field<std::string>(j, "kind");
  if (!kind) throw ProtocolError("query has no kind");
  q.kind = parse_kind(*kind);
  q.prompt = optional_field<std::string>(j, "prompt").value_or("");
  q.candidate = optional_field<std::string>(j, "candidate");
  q.weight = optional_field<double>(j, "weight");
  return q;
}

ProbeResponse decode_response(std::string_view line) {
  const json j = parse_object(line);
  ProbeResponse r;
  r.id = j["id"].get<std::string>();
  r.probability = optional_field<double>(j, "probability");
  r.text = optional_field<std::string>(j, "text");
  r.error = optional_field<std::string>(j, "error");
  if (r.probability && !(*r.probability >= 0.0 && *r.probability <= 1.0))
    throw ProtocolError("probability outside [0, 1] in response '" + r.id + "'");
  return r;
}

}  // namespace beliefbench::eval
