#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "cyclescope/detection.hpp"
#include "cyclescope/embedding.hpp"
#include "cyclescope/trace.hpp"

namespace cyclescope {

/// Parent id used for the implicit super-root that adopts all real roots.
/// Span ids are non-empty, so the empty string cannot collide.
inline constexpr const char* kVirtualRootId = "";

/// Two spans sharing a parent, in canonical order (left id < right id).
struct SiblingPair {
  std::string parent_span_id;
  std::string left_span_id;
  std::string right_span_id;
  double similarity = 0.0;
};

struct SiblingPairRef {
  std::string parent_span_id;
  const Span* left = nullptr;
  const Span* right = nullptr;
};

/// All unordered pairs of spans sharing a parent; roots are treated as
/// children of a virtual super-root. Pairs come out in parent-then-pair
/// lexicographic order.
inline std::vector<SiblingPairRef> sibling_pairs(const Trajectory& t) {
  std::map<std::string, std::vector<const Span*>> children;
  for (const Span& s : t.spans)
    children[s.parent_span_id ? *s.parent_span_id : kVirtualRootId].push_back(
        &s);

  std::vector<SiblingPairRef> pairs;
  for (auto& [parent, kids] : children) {
    if (kids.size() < 2) continue;
    std::sort(kids.begin(), kids.end(), [](const Span* a, const Span* b) {
      return a->span_id < b->span_id;
    });
    for (std::size_t i = 0; i < kids.size(); ++i)
      for (std::size_t j = i + 1; j < kids.size(); ++j)
        pairs.push_back(SiblingPairRef{parent, kids[i], kids[j]});
  }
  return pairs;
}

namespace detail {

/// CDSA core. `op_filter`, when set, restricts comparison to pairs whose
/// spans both carry an op from the filter (hybrid flagged_only scope).
inline Detection detect_cdsa_impl(const Trajectory& t, double phi,
                                  EmbeddingProvider& provider,
                                  const std::set<std::string>* op_filter) {
  if (!(phi > 0.0 && phi <= 1.0))
    throw ParameterError("cdsa threshold phi must lie in (0, 1]");
  Detection det;
  det.method = Method::cdsa;
  det.params["phi"] = phi;

  // Embed each distinct output once per trajectory.
  std::map<std::string, EmbeddingVector> cache;
  const auto embed_cached = [&](const std::string& text) -> const EmbeddingVector& {
    auto it = cache.find(text);
    if (it == cache.end()) it = cache.emplace(text, provider.embed(text)).first;
    return it->second;
  };

  for (const SiblingPairRef& pair : sibling_pairs(t)) {
    if (op_filter &&
        (!op_filter->count(pair.left->op) || !op_filter->count(pair.right->op)))
      continue;
    if (pair.left->output.empty() || pair.right->output.empty()) continue;
    const EmbeddingVector& u = embed_cached(pair.left->output);
    if (is_zero_vector(u)) continue;
    const EmbeddingVector& v = embed_cached(pair.right->output);
    if (is_zero_vector(v)) continue;
    const double sim = cosine(u, v);
    if (sim > phi) {
      Evidence ev;
      ev.kind = "sibling_pair";
      ev.subject = pair.left->span_id + "~" + pair.right->span_id + "@" +
                   (pair.parent_span_id.empty() ? "<super-root>"
                                                : pair.parent_span_id);
      ev.score = sim;
      ev.threshold = phi;
      ev.span_refs = {pair.left->span_id, pair.right->span_id};
      det.evidence.push_back(std::move(ev));
    }
  }
  canonicalize_evidence(det.evidence);
  det.label = det.evidence.empty() ? 0 : 1;
  return det;
}

}  // namespace detail

/// Flags the trajectory when any sibling pair's output cosine similarity
/// strictly exceeds phi. Pairs with an empty output on either side are
/// skipped, not flagged.
inline Detection detect_cdsa(const Trajectory& t, double phi,
                             EmbeddingProvider& provider) {
  return detail::detect_cdsa_impl(t, phi, provider, nullptr);
}

}  // namespace cyclescope
