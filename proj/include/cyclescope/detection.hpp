#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "cyclescope/errors.hpp"

namespace cyclescope {

enum class Method { cddag, cdcs, cdsa, hybrid };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::cddag: return "cddag";
    case Method::cdcs: return "cdcs";
    case Method::cdsa: return "cdsa";
    case Method::hybrid: return "hybrid";
  }
  return "?";
}

inline Method method_from_string(std::string_view s) {
  for (Method m : {Method::cddag, Method::cdcs, Method::cdsa, Method::hybrid})
    if (s == method_name(m)) return m;
  throw ParameterError("unknown method '" + std::string(s) + "'");
}

/// One flagged item: a hot edge, a repeating subsequence, or a similar
/// sibling pair, with the score that crossed the threshold.
struct Evidence {
  std::string kind;  // "edge" | "subsequence" | "sibling_pair"
  std::string subject;
  double score = 0.0;
  double threshold = 0.0;
  std::vector<std::string> span_refs;
};

/// Binary verdict for one trajectory. label == 1 iff evidence is non-empty.
struct Detection {
  int label = 0;
  Method method = Method::cddag;
  std::vector<Evidence> evidence;
  std::map<std::string, double> params;
};

/// Canonical evidence order: score descending, then subject, then kind.
inline void canonicalize_evidence(std::vector<Evidence>& items) {
  std::stable_sort(items.begin(), items.end(),
                   [](const Evidence& a, const Evidence& b) {
                     if (a.score != b.score) return a.score > b.score;
                     if (a.subject != b.subject) return a.subject < b.subject;
                     return a.kind < b.kind;
                   });
}

}  // namespace cyclescope
