#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "beliefbench/ids.hpp"

namespace beliefbench::eval {

/// Query kinds. next_object, truth and generate are model probes; edit and
/// revert drive the edit hook of models that accept it over the protocol.
enum class QueryKind { next_object, truth, generate, edit, revert };

std::string_view kind_name(QueryKind kind);
QueryKind parse_kind(std::string_view name);

/// One request line: {"id", "kind", "prompt", "candidate"?, "weight"?}.
///  - next_object: prompt "s r", candidate an object surface; asks p(o | "s r")
///  - truth: prompt `<claim> is`, candidate "true" (default) or "false"
///  - generate: prompt "s r"; asks for the completion text
///  - edit: prompt "s r", candidate o*, weight w
///  - revert: undo the most recent edit
struct ProbeQuery {
  std::string id;
  QueryKind kind = QueryKind::next_object;
  std::string prompt;
  std::optional<std::string> candidate;
  std::optional<double> weight;
  friend bool operator==(const ProbeQuery&, const ProbeQuery&) = default;
};

/// One response line: {"id", "probability"?, "text"?, "error"?}. edit and
/// revert are acknowledged with an id-only record.
struct ProbeResponse {
  std::string id;
  std::optional<double> probability;
  std::optional<std::string> text;
  std::optional<std::string> error;
  friend bool operator==(const ProbeResponse&, const ProbeResponse&) = default;
};

/// Raised for records that break the schema, unknown response ids and
/// probabilities outside [0, 1].
class ProtocolError : public Error {
 public:
  using Error::Error;
};

std::string encode(const ProbeQuery& q);
std::string encode(const ProbeResponse& r);
ProbeQuery decode_query(std::string_view line);
ProbeResponse decode_response(std::string_view line);

/// Answers one query. Implemented by the built-in agents and by the `serve`
/// command's adapters; errors are reported inside the response.
class Responder {
 public:
  virtual ~Responder() = default;
  virtual ProbeResponse respond(const ProbeQuery& query) = 0;
};

}  // namespace beliefbench::eval
