#pragma once

#include <atomic>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "cyclescope/hybrid.hpp"
#include "cyclescope/metrics.hpp"

namespace cyclescope {

/// Effective parameters for one detector run. phi carries the method's own
/// default: 0.85 standalone, 0.83 inside the hybrid confirmation stage.
struct DetectorParams {
  double m = 1.4;
  double k = 0.5;
  double phi = 0.85;
  int max_len = 20;
  HybridScope scope = HybridScope::full;

  HybridParams hybrid() const { return HybridParams{k, phi, max_len, scope}; }
};

inline double default_phi(Method method) {
  return method == Method::hybrid ? 0.83 : 0.85;
}

inline Detection run_detector(Method method, const Trajectory& t,
                              const DetectorParams& p,
                              EmbeddingProvider& provider) {
  switch (method) {
    case Method::cddag:
      return detect_cddag(build_dag(t), p.m);
    case Method::cdcs:
      return detect_cdcs(build_call_stack(t), p.k, p.max_len);
    case Method::cdsa:
      return detect_cdsa(t, p.phi, provider);
    case Method::hybrid:
      return detect_hybrid(t, p.hybrid(), provider);
  }
  throw ParameterError("unknown method");
}

/// Runs one detector over a corpus with a small worker pool. Results come
/// back indexed by input order, so output order never depends on scheduling.
inline std::vector<Detection> run_corpus(
    Method method, const std::vector<Trajectory>& trajectories,
    const DetectorParams& params, EmbeddingProvider& provider,
    unsigned threads = 0) {
  if (threads == 0) {
    threads = std::thread::hardware_concurrency();
    if (threads == 0) threads = 1;
  }
  threads = std::min<unsigned>(threads, trajectories.size() ? trajectories.size() : 1);

  std::vector<Detection> results(trajectories.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::string failure;
  std::mutex failure_mutex;

  const auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= trajectories.size() || failed.load()) return;
      try {
        results[i] = run_detector(method, trajectories[i], params, provider);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failed.exchange(true))
          failure = "trace '" + trajectories[i].trace_id + "': " + e.what();
        return;
      }
    }
  };

  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }
  if (failed.load()) throw ProviderError(failure);
  return results;
}

/// Ordered sweep values for one tunable parameter of one method.
struct SweepGrid {
  Method method = Method::cdcs;
  std::string param = "k";  // "m" | "k" | "phi"
  std::vector<double> values;
};

inline void validate_grid(const SweepGrid& grid) {
  if (grid.values.empty()) throw ParameterError("sweep grid is empty");
  for (std::size_t i = 1; i < grid.values.size(); ++i)
    if (grid.values[i] <= grid.values[i - 1])
      throw ParameterError("sweep values must be strictly increasing");
  if (grid.param != "m" && grid.param != "k" && grid.param != "phi")
    throw ParameterError("sweep parameter must be one of m, k, phi");
}

/// Inclusive arithmetic grid; `sweep --from 0.2 --to 1.5 --step 0.1` yields
/// 14 values.
inline std::vector<double> grid_values(double from, double to, double step) {
  if (step <= 0.0) throw ParameterError("sweep step must be > 0");
  if (to < from) throw ParameterError("sweep range is empty");
  std::vector<double> values;
  const int count = static_cast<int>((to - from) / step + 1e-9) + 1;
  for (int i = 0; i < count; ++i) values.push_back(from + i * step);
  return values;
}

struct SweepRow {
  double value = 0.0;
  Metrics metrics;
};

/// One metrics row per grid value, in grid order. A failing trajectory
/// aborts the sweep with its trace id.
inline std::vector<SweepRow> sweep(const std::vector<Trajectory>& trajectories,
                                   const SweepGrid& grid,
                                   const DetectorParams& fixed,
                                   const std::map<std::string, int>& truth,
                                   EmbeddingProvider& provider,
                                   unsigned threads = 0) {
  validate_grid(grid);
  std::vector<SweepRow> rows;
  rows.reserve(grid.values.size());
  for (double value : grid.values) {
    DetectorParams p = fixed;
    if (grid.param == "m")
      p.m = value;
    else if (grid.param == "k")
      p.k = value;
    else
      p.phi = value;
    const std::vector<Detection> dets =
        run_corpus(grid.method, trajectories, p, provider, threads);
    std::map<std::string, int> predictions;
    for (std::size_t i = 0; i < trajectories.size(); ++i)
      predictions[trajectories[i].trace_id] = dets[i].label;
    rows.push_back(SweepRow{value, score(predictions, truth)});
  }
  return rows;
}

namespace detail {

inline std::string fixed6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

inline std::string compact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace detail

inline std::string sweep_csv(const SweepGrid& grid,
                             const std::vector<SweepRow>& rows) {
  std::string out =
      "method,param,value,accuracy,cycle_precision,cycle_recall,cycle_f1,"
      "noncycle_precision,noncycle_recall,noncycle_f1,tp,fp,fn,tn\n";
  for (const SweepRow& row : rows) {
    const Metrics& m = row.metrics;
    out += method_name(grid.method);
    out += ',';
    out += grid.param;
    out += ',';
    out += detail::compact(row.value);
    for (double v : {m.accuracy, m.cycle.precision, m.cycle.recall, m.cycle.f1,
                     m.non_cycle.precision, m.non_cycle.recall, m.non_cycle.f1})
      out += ',' + detail::fixed6(v);
    for (std::int64_t v : {m.confusion.tp, m.confusion.fp, m.confusion.fn,
                           m.confusion.tn})
      out += ',' + std::to_string(v);
    out += '\n';
  }
  return out;
}

}  // namespace cyclescope
