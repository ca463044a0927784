#pragma once

#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cyclescope/errors.hpp"

namespace cyclescope {

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct Confusion {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t tn = 0;

  std::int64_t total() const { return tp + fp + fn + tn; }
};

/// Binary scores with "cycle" as the positive class; the non-cycle row is
/// the same confusion matrix relabeled.
struct Metrics {
  ClassMetrics cycle;
  ClassMetrics non_cycle;
  double accuracy = 0.0;
  Confusion confusion;
};

namespace detail {

inline double safe_div(double num, double den) {
  return den == 0.0 ? 0.0 : num / den;
}

inline ClassMetrics class_metrics(std::int64_t tp, std::int64_t fp,
                                  std::int64_t fn) {
  ClassMetrics m;
  m.precision = safe_div(static_cast<double>(tp), static_cast<double>(tp + fp));
  m.recall = safe_div(static_cast<double>(tp), static_cast<double>(tp + fn));
  m.f1 = safe_div(2.0 * m.precision * m.recall, m.precision + m.recall);
  return m;
}

}  // namespace detail

inline Metrics score_confusion(const Confusion& c) {
  Metrics m;
  m.confusion = c;
  m.cycle = detail::class_metrics(c.tp, c.fp, c.fn);
  m.non_cycle = detail::class_metrics(c.tn, c.fn, c.fp);
  m.accuracy = detail::safe_div(static_cast<double>(c.tp + c.tn),
                                static_cast<double>(c.total()));
  return m;
}

/// Scores binary predictions against truth. Key sets must match exactly.
inline Metrics score(const std::map<std::string, int>& predictions,
                     const std::map<std::string, int>& truth) {
  std::vector<std::string> missing_pred, missing_truth;
  for (const auto& [id, label] : truth)
    if (!predictions.count(id)) missing_pred.push_back(id);
  for (const auto& [id, label] : predictions)
    if (!truth.count(id)) missing_truth.push_back(id);
  if (!missing_pred.empty() || !missing_truth.empty()) {
    std::ostringstream msg;
    msg << "prediction/truth key sets differ;";
    const auto list = [&msg](const char* what,
                             const std::vector<std::string>& ids) {
      if (ids.empty()) return;
      msg << ' ' << what << ':';
      for (std::size_t i = 0; i < ids.size() && i < 8; ++i) msg << ' ' << ids[i];
      if (ids.size() > 8) msg << " (+" << ids.size() - 8 << " more)";
    };
    list("missing from predictions", missing_pred);
    list("missing from truth", missing_truth);
    throw DomainError(msg.str());
  }

  Confusion c;
  for (const auto& [id, predicted] : predictions) {
    const int actual = truth.at(id);
    if (actual == 1)
      (predicted == 1 ? c.tp : c.fn)++;
    else
      (predicted == 1 ? c.fp : c.tn)++;
  }
  return score_confusion(c);
}

}  // namespace cyclescope
