#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "cyclescope/trace.hpp"

namespace cyclescope {

/// Operation-level DAG: node identity is the op name, edge weights count
/// parent-op -> child-op occurrences across the trajectory.
struct OpGraph {
  std::set<std::string> nodes;
  std::map<std::pair<std::string, std::string>, std::int64_t> edges;

  std::int64_t total_edge_weight() const {
    std::int64_t sum = 0;
    for (const auto& [edge, w] : edges) sum += w;
    return sum;
  }
};

/// Spans ordered by creation time; ties broken by span_id.
struct OpSequence {
  std::vector<std::string> ops;
  std::vector<std::string> span_refs;

  std::size_t size() const { return ops.size(); }
};

inline OpGraph build_dag(const Trajectory& t) {
  OpGraph g;
  std::map<std::string, const Span*> by_id;
  for (const Span& s : t.spans) by_id.emplace(s.span_id, &s);
  for (const Span& s : t.spans) {
    g.nodes.insert(s.op);
    if (!s.parent_span_id) continue;  // super-root children carry no edge
    const Span* parent = by_id.at(*s.parent_span_id);
    ++g.edges[{parent->op, s.op}];
  }
  return g;
}

inline OpSequence build_call_stack(const Trajectory& t) {
  std::vector<std::size_t> order(t.spans.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const Span& sa = t.spans[a];
    const Span& sb = t.spans[b];
    if (sa.start_time_ns != sb.start_time_ns)
      return sa.start_time_ns < sb.start_time_ns;
    return sa.span_id < sb.span_id;
  });
  OpSequence seq;
  seq.ops.reserve(order.size());
  seq.span_refs.reserve(order.size());
  for (std::size_t idx : order) {
    seq.ops.push_back(t.spans[idx].op);
    seq.span_refs.push_back(t.spans[idx].span_id);
  }
  return seq;
}

/// DOT-format debug export; node = op name, edge label = weight.
inline std::string to_dot(const OpGraph& g, const std::string& title = "") {
  std::ostringstream out;
  out << "digraph opgraph {\n";
  if (!title.empty()) out << "  label=\"" << title << "\";\n";
  for (const std::string& node : g.nodes) out << "  \"" << node << "\";\n";
  for (const auto& [edge, w] : g.edges) {
    out << "  \"" << edge.first << "\" -> \"" << edge.second << "\" [label="
        << w << "];\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace cyclescope
