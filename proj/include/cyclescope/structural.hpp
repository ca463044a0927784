#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cyclescope/detection.hpp"
#include "cyclescope/graph.hpp"

namespace cyclescope {

/// Population mean and standard deviation of a weight multiset.
struct WeightStats {
  double mu = 0.0;
  double sigma = 0.0;
  std::size_t count = 0;
};

inline WeightStats weight_stats(const std::vector<std::int64_t>& weights) {
  if (weights.empty())
    throw DomainError("weight_stats requires a non-empty multiset");
  WeightStats stats;
  stats.count = weights.size();
  double sum = 0.0;
  for (std::int64_t w : weights) sum += static_cast<double>(w);
  stats.mu = sum / static_cast<double>(weights.size());
  double sq = 0.0;
  for (std::int64_t w : weights) {
    const double d = static_cast<double>(w) - stats.mu;
    sq += d * d;
  }
  stats.sigma = std::sqrt(sq / static_cast<double>(weights.size()));
  return stats;
}

/// Flags edges whose weight strictly exceeds mu + m * sigma.
inline Detection detect_cddag(const OpGraph& g, double m) {
  if (m <= 0.0) throw ParameterError("cddag multiplier m must be > 0");
  Detection det;
  det.method = Method::cddag;
  det.params["m"] = m;
  if (g.edges.empty()) return det;

  std::vector<std::int64_t> weights;
  weights.reserve(g.edges.size());
  for (const auto& [edge, w] : g.edges) weights.push_back(w);
  const WeightStats stats = weight_stats(weights);
  const double threshold = stats.mu + m * stats.sigma;

  for (const auto& [edge, w] : g.edges) {
    if (static_cast<double>(w) > threshold) {
      Evidence ev;
      ev.kind = "edge";
      ev.subject = edge.first + "->" + edge.second;
      ev.score = static_cast<double>(w);
      ev.threshold = threshold;
      det.evidence.push_back(std::move(ev));
    }
  }
  canonicalize_evidence(det.evidence);
  det.label = det.evidence.empty() ? 0 : 1;
  return det;
}

/// Occurrence counts for every contiguous op window with length in
/// [window_bounds.first, window_bounds.second]; overlaps counted.
struct FrequencyMap {
  std::map<std::vector<std::string>, std::int64_t> entries;
  std::pair<int, int> window_bounds{3, 3};
};

inline FrequencyMap enumerate_subsequences(const OpSequence& c,
                                           int min_len, int max_len) {
  if (min_len < 3) throw ParameterError("subsequence min_len must be >= 3");
  if (max_len < min_len)
    throw ParameterError("subsequence max_len must be >= min_len");
  FrequencyMap fm;
  fm.window_bounds = {min_len, max_len};
  const int n = static_cast<int>(c.size());
  for (int len = min_len; len <= std::min(max_len, n); ++len) {
    for (int start = 0; start + len <= n; ++start) {
      std::vector<std::string> window(c.ops.begin() + start,
                                      c.ops.begin() + start + len);
      ++fm.entries[std::move(window)];
    }
  }
  return fm;
}

/// Effective window cap used by detect_cdcs: windows longer than n/2 cannot
/// repeat without overlap, so the configured max_len is clamped to n/2.
inline int cdcs_window_cap(int max_len, std::size_t sequence_length) {
  return std::min<int>(max_len, static_cast<int>(sequence_length / 2));
}

namespace detail {

inline std::string join_ops(const std::vector<std::string>& ops) {
  std::ostringstream out;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    if (i) out << ' ';
    out << ops[i];
  }
  return out.str();
}

}  // namespace detail

/// Flags subsequences whose frequency strictly exceeds mu + k * sigma, with
/// statistics taken over all counted windows (frequency-1 entries included).
inline Detection detect_cdcs(const OpSequence& c, double k, int max_len = 20) {
  if (k <= 0.0) throw ParameterError("cdcs multiplier k must be > 0");
  if (max_len < 3) throw ParameterError("cdcs max_len must be >= 3");
  Detection det;
  det.method = Method::cdcs;
  det.params["k"] = k;
  det.params["max_len"] = static_cast<double>(max_len);

  const int cap = cdcs_window_cap(max_len, c.size());
  if (cap < 3) return det;  // too short to hold a repeating window

  const FrequencyMap fm = enumerate_subsequences(c, 3, cap);
  if (fm.entries.empty()) return det;

  std::vector<std::int64_t> freqs;
  freqs.reserve(fm.entries.size());
  for (const auto& [window, count] : fm.entries) freqs.push_back(count);
  const WeightStats stats = weight_stats(freqs);
  const double threshold = stats.mu + k * stats.sigma;

  for (const auto& [window, count] : fm.entries) {
    if (static_cast<double>(count) <= threshold) continue;
    Evidence ev;
    ev.kind = "subsequence";
    ev.subject = detail::join_ops(window);
    ev.score = static_cast<double>(count);
    ev.threshold = threshold;
    // Record the span ids of every occurrence window, in sequence order.
    const int len = static_cast<int>(window.size());
    for (int start = 0; start + len <= static_cast<int>(c.size()); ++start) {
      if (std::equal(window.begin(), window.end(), c.ops.begin() + start)) {
        for (int i = start; i < start + len; ++i)
          ev.span_refs.push_back(c.span_refs[i]);
      }
    }
    det.evidence.push_back(std::move(ev));
  }
  canonicalize_evidence(det.evidence);
  det.label = det.evidence.empty() ? 0 : 1;
  return det;
}

}  // namespace cyclescope
