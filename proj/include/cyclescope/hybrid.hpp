#pragma once

#include <map>
#include <set>
#include <string>

#include "cyclescope/semantic.hpp"
#include "cyclescope/structural.hpp"

namespace cyclescope {

enum class HybridScope { full, flagged_only };

inline const char* scope_name(HybridScope s) {
  return s == HybridScope::full ? "full" : "flagged_only";
}

inline HybridScope scope_from_string(std::string_view s) {
  if (s == "full") return HybridScope::full;
  if (s == "flagged_only") return HybridScope::flagged_only;
  throw ParameterError("unknown hybrid scope '" + std::string(s) + "'");
}

struct HybridParams {
  double k = 0.5;
  double phi = 0.83;
  int max_len = 20;
  HybridScope scope = HybridScope::full;
};

/// Two-stage detector: CDCS gates, CDSA confirms. Trajectories the call-stack
/// stage clears are labeled 0 without any embedding work.
inline Detection detect_hybrid(const Trajectory& t, const HybridParams& p,
                               EmbeddingProvider& provider) {
  Detection det;
  det.method = Method::hybrid;
  det.params["k"] = p.k;
  det.params["phi"] = p.phi;
  det.params["max_len"] = static_cast<double>(p.max_len);
  det.params["scope_flagged_only"] =
      p.scope == HybridScope::flagged_only ? 1.0 : 0.0;

  const Detection stage1 = detect_cdcs(build_call_stack(t), p.k, p.max_len);
  if (stage1.label == 0) {
    det.evidence = stage1.evidence;  // empty when the gate clears
    det.label = 0;
    return det;
  }

  Detection stage2;
  if (p.scope == HybridScope::flagged_only) {
    std::map<std::string, std::string> op_by_id;
    for (const Span& s : t.spans) op_by_id.emplace(s.span_id, s.op);
    std::set<std::string> flagged_ops;
    for (const Evidence& ev : stage1.evidence)
      for (const std::string& id : ev.span_refs)
        flagged_ops.insert(op_by_id.at(id));
    stage2 = detail::detect_cdsa_impl(t, p.phi, provider, &flagged_ops);
  } else {
    stage2 = detail::detect_cdsa_impl(t, p.phi, provider, nullptr);
  }

  det.label = stage2.label;
  if (det.label == 1) {
    det.evidence = stage1.evidence;
    det.evidence.insert(det.evidence.end(), stage2.evidence.begin(),
                        stage2.evidence.end());
    canonicalize_evidence(det.evidence);
  }
  return det;
}

}  // namespace cyclescope
