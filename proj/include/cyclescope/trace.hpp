#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cyclescope/errors.hpp"

namespace cyclescope {

enum class SpanStatus { ok, error };

/// One traced operation. `parent_span_id` is absent for root spans.
struct Span {
  std::string trace_id;
  std::string span_id;
  std::optional<std::string> parent_span_id;
  std::string op;
  std::string input;
  std::string output;
  std::int64_t start_time_ns = 0;
  std::optional<std::int64_t> end_time_ns;
  SpanStatus status = SpanStatus::ok;
  std::optional<std::string> error_type;

  bool is_root() const { return !parent_span_id.has_value(); }
};

enum class GroundTruthClass {
  productive,
  error,
  intermediate_error,
  redundant_step,
  silent_cycle,
  error_cycle,
};

inline constexpr GroundTruthClass kAllClasses[] = {
    GroundTruthClass::productive,      GroundTruthClass::error,
    GroundTruthClass::intermediate_error, GroundTruthClass::redundant_step,
    GroundTruthClass::silent_cycle,    GroundTruthClass::error_cycle,
};

inline const char* to_string(GroundTruthClass c) {
  switch (c) {
    case GroundTruthClass::productive: return "productive";
    case GroundTruthClass::error: return "error";
    case GroundTruthClass::intermediate_error: return "intermediate_error";
    case GroundTruthClass::redundant_step: return "redundant_step";
    case GroundTruthClass::silent_cycle: return "silent_cycle";
    case GroundTruthClass::error_cycle: return "error_cycle";
  }
  return "?";
}

inline GroundTruthClass class_from_string(std::string_view s) {
  for (GroundTruthClass c : kAllClasses)
    if (s == to_string(c)) return c;
  throw ParseError("unknown ground-truth class '" + std::string(s) + "'");
}

/// Binary bad-cycle label: only silent and error cycles count as bad.
inline bool is_bad_cycle(GroundTruthClass c) {
  return c == GroundTruthClass::silent_cycle ||
         c == GroundTruthClass::error_cycle;
}

/// All spans sharing one trace id, in ingestion order. Immutable once validated.
struct Trajectory {
  std::string trace_id;
  std::vector<Span> spans;
  std::optional<GroundTruthClass> label;
};

namespace detail {

inline const nlohmann::json& require_field(const nlohmann::json& j,
                                           const char* key) {
  auto it = j.find(key);
  if (it == j.end())
    throw SchemaError(std::string("missing required field '") + key + "'");
  return *it;
}

inline std::string require_string(const nlohmann::json& j, const char* key) {
  const auto& v = require_field(j, key);
  if (!v.is_string())
    throw ParseError(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

inline std::int64_t require_int(const nlohmann::json& j, const char* key) {
  const auto& v = require_field(j, key);
  if (!v.is_number_integer())
    throw ParseError(std::string("field '") + key + "' must be an integer");
  return v.get<std::int64_t>();
}

}  // namespace detail

/// Parses one newline-delimited JSON span record. Unknown keys are ignored.
inline Span parse_span_record(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("record is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("record is not a JSON object");

  Span s;
  s.trace_id = detail::require_string(j, "trace_id");
  s.span_id = detail::require_string(j, "span_id");
  if (s.span_id.empty()) throw SchemaError("field 'span_id' must be non-empty");

  const auto& parent = detail::require_field(j, "parent_span_id");
  if (parent.is_null()) {
    s.parent_span_id.reset();
  } else if (parent.is_string()) {
    s.parent_span_id = parent.get<std::string>();
    if (s.parent_span_id->empty())
      throw SchemaError("field 'parent_span_id' must be null or non-empty");
    if (*s.parent_span_id == s.span_id)
      throw SchemaError("field 'parent_span_id' equals span_id '" + s.span_id +
                        "'");
  } else {
    throw ParseError("field 'parent_span_id' must be a string or null");
  }

  s.op = detail::require_string(j, "op");
  s.input = detail::require_string(j, "input");
  s.output = detail::require_string(j, "output");
  s.start_time_ns = detail::require_int(j, "start_time_ns");

  if (auto it = j.find("end_time_ns"); it != j.end() && !it->is_null()) {
    if (!it->is_number_integer())
      throw ParseError("field 'end_time_ns' must be an integer");
    s.end_time_ns = it->get<std::int64_t>();
    if (*s.end_time_ns < s.start_time_ns)
      throw SchemaError("field 'end_time_ns' precedes start_time_ns for span '" +
                        s.span_id + "'");
  }

  if (auto it = j.find("status"); it != j.end() && !it->is_null()) {
    if (!it->is_string())
      throw ParseError("field 'status' must be a string");
    const auto status = it->get<std::string>();
    if (status == "ok") {
      s.status = SpanStatus::ok;
    } else if (status == "error") {
      s.status = SpanStatus::error;
    } else {
      throw ParseError("field 'status' must be \"ok\" or \"error\"");
    }
  }

  if (auto it = j.find("error_type"); it != j.end() && !it->is_null()) {
    if (!it->is_string())
      throw ParseError("field 'error_type' must be a string");
    s.error_type = it->get<std::string>();
  }

  return s;
}

/// Serializes a span back to the interchange format (one line, fixed key order).
inline std::string serialize_span_record(const Span& s) {
  nlohmann::ordered_json j;
  j["trace_id"] = s.trace_id;
  j["span_id"] = s.span_id;
  if (s.parent_span_id)
    j["parent_span_id"] = *s.parent_span_id;
  else
    j["parent_span_id"] = nullptr;
  j["op"] = s.op;
  j["input"] = s.input;
  j["output"] = s.output;
  j["start_time_ns"] = s.start_time_ns;
  if (s.end_time_ns) j["end_time_ns"] = *s.end_time_ns;
  j["status"] = s.status == SpanStatus::error ? "error" : "ok";
  if (s.error_type) j["error_type"] = *s.error_type;
  return j.dump();
}

namespace detail {

inline std::string join_ids(const std::vector<std::string>& ids) {
  std::ostringstream out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out << ", ";
    out << ids[i];
  }
  return out.str();
}

}  // namespace detail

/// Validates trajectory invariants: unique non-empty span ids, referential
/// integrity of parent links, acyclic parent chains, at least one root.
inline void validate_trajectory(const Trajectory& t) {
  if (t.spans.empty())
    throw ValidationError("trajectory '" + t.trace_id + "' has no spans");

  std::map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < t.spans.size(); ++i) {
    const Span& s = t.spans[i];
    if (s.trace_id != t.trace_id)
      throw ValidationError("span '" + s.span_id + "' carries trace_id '" +
                            s.trace_id + "', expected '" + t.trace_id + "'");
    if (s.span_id.empty())
      throw ValidationError("trajectory '" + t.trace_id +
                            "' contains a span with empty span_id");
    if (!by_id.emplace(s.span_id, i).second)
      throw ValidationError("duplicate span_id '" + s.span_id + "' in trace '" +
                            t.trace_id + "'");
    if (s.parent_span_id && *s.parent_span_id == s.span_id)
      throw ValidationError("span '" + s.span_id + "' is its own parent");
    if (s.end_time_ns && *s.end_time_ns < s.start_time_ns)
      throw ValidationError("span '" + s.span_id +
                            "' ends before it starts");
  }

  std::vector<std::string> orphans;
  for (const Span& s : t.spans) {
    if (s.parent_span_id && !by_id.count(*s.parent_span_id))
      orphans.push_back(s.span_id);
  }
  if (!orphans.empty())
    throw ValidationError("trace '" + t.trace_id +
                          "' has dangling parent links on spans: " +
                          detail::join_ids(orphans));

  // Parent-chain cycle check. 0 = unvisited, 1 = on current chain, 2 = done.
  std::vector<int> color(t.spans.size(), 0);
  bool has_root = false;
  for (std::size_t start = 0; start < t.spans.size(); ++start) {
    std::vector<std::size_t> chain;
    std::size_t cur = start;
    while (color[cur] == 0) {
      color[cur] = 1;
      chain.push_back(cur);
      if (!t.spans[cur].parent_span_id) {
        has_root = true;
        break;
      }
      cur = by_id.at(*t.spans[cur].parent_span_id);
      if (color[cur] == 1) {
        std::vector<std::string> cycle;
        bool in_cycle = false;
        for (std::size_t idx : chain) {
          if (idx == cur) in_cycle = true;
          if (in_cycle) cycle.push_back(t.spans[idx].span_id);
        }
        cycle.push_back(t.spans[cur].span_id);
        throw ValidationError("trace '" + t.trace_id +
                              "' has a parent-link cycle: " +
                              detail::join_ids(cycle));
      }
    }
    for (std::size_t idx : chain) color[idx] = 2;
  }
  if (!has_root)
    throw ValidationError("trace '" + t.trace_id + "' has no root span");
}

/// Groups spans by trace_id (first-seen order) and validates each group.
inline std::vector<Trajectory> assemble_trajectories(
    const std::vector<Span>& spans) {
  std::vector<Trajectory> out;
  std::map<std::string, std::size_t> index;
  for (const Span& s : spans) {
    auto [it, inserted] = index.emplace(s.trace_id, out.size());
    if (inserted) out.push_back(Trajectory{s.trace_id, {}, std::nullopt});
    out[it->second].spans.push_back(s);
  }
  for (const Trajectory& t : out) validate_trajectory(t);
  return out;
}

}  // namespace cyclescope
