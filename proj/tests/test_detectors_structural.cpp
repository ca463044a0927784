#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "cyclescope/generator.hpp"
#include "cyclescope/structural.hpp"

using namespace cyclescope;

namespace {

OpSequence seq_of(const std::vector<std::string>& ops) {
  OpSequence s;
  s.ops = ops;
  for (std::size_t i = 0; i < ops.size(); ++i)
    s.span_refs.push_back("s" + std::to_string(i));
  return s;
}

// Test-only oracle: counts every window by direct pairwise comparison.
// Deliberately independent of the FrequencyMap implementation.
std::map<std::vector<std::string>, long> oracle_all_windows(
    const std::vector<std::string>& ops, int min_len, int max_len) {
  std::map<std::vector<std::string>, long> out;
  const int n = static_cast<int>(ops.size());
  for (int len = min_len; len <= max_len && len <= n; ++len) {
    for (int start = 0; start + len <= n; ++start) {
      long count = 0;
      for (int other = 0; other + len <= n; ++other) {
        bool same = true;
        for (int i = 0; i < len; ++i)
          if (ops[start + i] != ops[other + i]) {
            same = false;
            break;
          }
        if (same) ++count;
      }
      std::vector<std::string> window(ops.begin() + start,
                                      ops.begin() + start + len);
      out[window] = count;
    }
  }
  return out;
}

OpGraph graph_with_weights(const std::vector<std::int64_t>& weights) {
  OpGraph g;
  g.nodes.insert("root");
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const std::string child = "op" + std::to_string(i);
    g.nodes.insert(child);
    g.edges[{"root", child}] = weights[i];
  }
  return g;
}

}  // namespace

TEST_CASE("weight_stats computes population mean and sigma") {
  SECTION("{1,1,4}") {
    const WeightStats s = weight_stats({1, 1, 4});
    REQUIRE(s.mu == Catch::Approx(2.0).epsilon(1e-12));
    REQUIRE(s.sigma == Catch::Approx(std::sqrt(2.0)).epsilon(1e-12));
    REQUIRE(s.count == 3);
  }
  SECTION("all equal weights have zero sigma") {
    const WeightStats s = weight_stats({5, 5, 5});
    REQUIRE(s.mu == 5.0);
    REQUIRE(s.sigma == 0.0);
  }
  SECTION("{1,2,3,4}") {
    const WeightStats s = weight_stats({1, 2, 3, 4});
    REQUIRE(s.mu == Catch::Approx(2.5).epsilon(1e-12));
    REQUIRE(s.sigma == Catch::Approx(std::sqrt(1.25)).epsilon(1e-12));
  }
  SECTION("empty multiset is a domain error") {
    REQUIRE_THROWS_AS(weight_stats({}), DomainError);
  }
  SECTION("scaling all weights scales mu and sigma") {
    const WeightStats a = weight_stats({1, 1, 4});
    const WeightStats b = weight_stats({3, 3, 12});
    REQUIRE(b.mu == Catch::Approx(3.0 * a.mu).epsilon(1e-12));
    REQUIRE(b.sigma == Catch::Approx(3.0 * a.sigma).epsilon(1e-12));
  }
}

TEST_CASE("detect_cddag flags strict edge-weight outliers") {
  SECTION("weights {1,1,4} at m=1: threshold ~3.414, weight-4 edge flagged") {
    const Detection d = detect_cddag(graph_with_weights({1, 1, 4}), 1.0);
    REQUIRE(d.label == 1);
    REQUIRE(d.evidence.size() == 1);
    REQUIRE(d.evidence[0].score == 4.0);
    REQUIRE(d.evidence[0].threshold ==
            Catch::Approx(2.0 + std::sqrt(2.0)).epsilon(1e-9));
  }
  SECTION("weights {1,1,4} at m=1.5: threshold ~4.121, nothing flagged") {
    const Detection d = detect_cddag(graph_with_weights({1, 1, 4}), 1.5);
    REQUIRE(d.label == 0);
    REQUIRE(d.evidence.empty());
  }
  SECTION("uniform weights never flag: strict inequality at sigma 0") {
    for (double m : {0.1, 1.0, 5.0}) {
      const Detection d = detect_cddag(graph_with_weights({3, 3, 3}), m);
      REQUIRE(d.label == 0);
    }
  }
  SECTION("empty edge set labels 0") {
    OpGraph g;
    g.nodes.insert("only");
    REQUIRE(detect_cddag(g, 1.0).label == 0);
  }
  SECTION("non-positive multiplier is a parameter error") {
    REQUIRE_THROWS_AS(detect_cddag(graph_with_weights({1, 2}), 0.0),
                      ParameterError);
    REQUIRE_THROWS_AS(detect_cddag(graph_with_weights({1, 2}), -1.0),
                      ParameterError);
  }
  SECTION("flagging is scale invariant") {
    const Detection a = detect_cddag(graph_with_weights({1, 1, 2, 5}), 1.2);
    const Detection b = detect_cddag(graph_with_weights({4, 4, 8, 20}), 1.2);
    REQUIRE(a.label == b.label);
    REQUIRE(a.evidence.size() == b.evidence.size());
    for (std::size_t i = 0; i < a.evidence.size(); ++i)
      REQUIRE(a.evidence[i].subject == b.evidence[i].subject);
  }
}

TEST_CASE("enumerate_subsequences counts overlapping windows") {
  SECTION("[A,B,C] x3 over lengths 3..4") {
    const auto fm = enumerate_subsequences(
        seq_of({"A", "B", "C", "A", "B", "C", "A", "B", "C"}), 3, 4);
    REQUIRE(fm.entries.at({"A", "B", "C"}) == 3);
    REQUIRE(fm.entries.at({"B", "C", "A"}) == 2);
    REQUIRE(fm.entries.at({"A", "B", "C", "A"}) == 2);
  }
  SECTION("[A,B,C] over 3..3 is a single frequency-1 entry") {
    const auto fm = enumerate_subsequences(seq_of({"A", "B", "C"}), 3, 3);
    REQUIRE(fm.entries.size() == 1);
    REQUIRE(fm.entries.at({"A", "B", "C"}) == 1);
  }
  SECTION("[A,A,A,A] counts overlapping occurrences") {
    const auto fm = enumerate_subsequences(seq_of({"A", "A", "A", "A"}), 3, 3);
    REQUIRE(fm.entries.size() == 1);
    REQUIRE(fm.entries.at({"A", "A", "A"}) == 2);
  }
  SECTION("sequences shorter than min_len give an empty map") {
    REQUIRE(enumerate_subsequences(seq_of({"A", "B"}), 3, 5).entries.empty());
  }
  SECTION("window bounds are validated") {
    REQUIRE_THROWS_AS(enumerate_subsequences(seq_of({"A"}), 2, 5),
                      ParameterError);
    REQUIRE_THROWS_AS(enumerate_subsequences(seq_of({"A"}), 3, 2),
                      ParameterError);
  }
}

TEST_CASE("enumerate_subsequences matches the brute-force oracle") {
  Xoshiro256ss rng(2024);
  for (int round = 0; round < 60; ++round) {
    const int n = static_cast<int>(rng.range(0, 50));
    const int alphabet = static_cast<int>(rng.range(2, 8));
    std::vector<std::string> ops;
    for (int i = 0; i < n; ++i)
      ops.push_back(std::string(1, static_cast<char>('a' + rng.bounded(alphabet))));
    const int max_len = static_cast<int>(rng.range(3, 12));

    const auto oracle = oracle_all_windows(ops, 3, max_len);
    const auto fm = enumerate_subsequences(seq_of(ops), 3, max_len);
    REQUIRE(fm.entries.size() == oracle.size());
    for (const auto& [window, count] : oracle)
      REQUIRE(fm.entries.at(window) == count);
  }
}

TEST_CASE("detect_cdcs flags repeating subsequences") {
  SECTION("twelve distinct ops never flag") {
    std::vector<std::string> ops;
    for (int i = 0; i < 12; ++i) ops.push_back("op" + std::to_string(i));
    const Detection d = detect_cdcs(seq_of(ops), 0.5, 20);
    REQUIRE(d.label == 0);
  }
  SECTION("[A,B,C] x3 at k=0.5, max_len=4 flags exactly [A,B,C]") {
    // Frozen from the oracle: F = {3,2,2,2,2,2}, mu = 13/6,
    // sigma = sqrt(5)/6, threshold = mu + 0.5 sigma ~ 2.35301.
    const Detection d = detect_cdcs(
        seq_of({"A", "B", "C", "A", "B", "C", "A", "B", "C"}), 0.5, 4);
    REQUIRE(d.label == 1);
    REQUIRE(d.evidence.size() == 1);
    REQUIRE(d.evidence[0].subject == "A B C");
    REQUIRE(d.evidence[0].score == 3.0);
    REQUIRE(d.evidence[0].threshold ==
            Catch::Approx(13.0 / 6.0 + 0.5 * std::sqrt(5.0) / 6.0)
                .epsilon(1e-9));
    // Three occurrence windows, three spans each.
    REQUIRE(d.evidence[0].span_refs.size() == 9);
    REQUIRE(d.evidence[0].span_refs[0] == "s0");
    REQUIRE(d.evidence[0].span_refs[3] == "s3");
    REQUIRE(d.evidence[0].span_refs[6] == "s6");
  }
  SECTION("window cap is half the sequence length") {
    REQUIRE(cdcs_window_cap(20, 9) == 4);
    REQUIRE(cdcs_window_cap(4, 100) == 4);
    REQUIRE(cdcs_window_cap(20, 5) == 2);  // too short: detector labels 0
    std::vector<std::string> ops = {"A", "B", "A", "B", "A"};
    REQUIRE(detect_cdcs(seq_of(ops), 0.5, 20).label == 0);
  }
  SECTION("non-positive k is a parameter error") {
    REQUIRE_THROWS_AS(detect_cdcs(seq_of({"A", "B", "C"}), 0.0, 20),
                      ParameterError);
  }
}

TEST_CASE("threshold multipliers are monotone: larger flags a subset") {
  GeneratorSpec spec;
  spec.seed = 404;
  for (GroundTruthClass c : kAllClasses) spec.counts[c] = 6;
  const Corpus corpus = generate_corpus(spec);

  SECTION("cddag over m") {
    std::set<std::string> prev;
    bool first = true;
    for (double m : {0.8, 1.1, 1.4, 1.7, 2.0}) {
      std::set<std::string> flagged;
      for (const Trajectory& t : corpus.trajectories)
        if (detect_cddag(build_dag(t), m).label == 1)
          flagged.insert(t.trace_id);
      if (!first)
        for (const std::string& id : flagged) REQUIRE(prev.count(id) == 1);
      prev = flagged;
      first = false;
    }
  }
  SECTION("cdcs over k") {
    std::set<std::string> prev;
    bool first = true;
    for (double k : {0.3, 0.5, 0.8, 1.1, 1.5}) {
      std::set<std::string> flagged;
      for (const Trajectory& t : corpus.trajectories)
        if (detect_cdcs(build_call_stack(t), k, 20).label == 1)
          flagged.insert(t.trace_id);
      if (!first)
        for (const std::string& id : flagged) REQUIRE(prev.count(id) == 1);
      prev = flagged;
      first = false;
    }
  }
}

TEST_CASE("detections are deterministic with canonical evidence order") {
  GeneratorSpec spec;
  spec.seed = 55;
  Xoshiro256ss rng(spec.seed);
  const Trajectory t =
      generate_trajectory(GroundTruthClass::silent_cycle, rng, spec, "tt");
  const OpSequence seq = build_call_stack(t);
  const Detection a = detect_cdcs(seq, 0.5, 20);
  const Detection b = detect_cdcs(seq, 0.5, 20);
  REQUIRE(a.label == b.label);
  REQUIRE(a.evidence.size() == b.evidence.size());
  for (std::size_t i = 0; i < a.evidence.size(); ++i) {
    REQUIRE(a.evidence[i].subject == b.evidence[i].subject);
    REQUIRE(a.evidence[i].score == b.evidence[i].score);
    if (i > 0) {
      const bool ordered =
          a.evidence[i - 1].score > a.evidence[i].score ||
          (a.evidence[i - 1].score == a.evidence[i].score &&
           a.evidence[i - 1].subject <= a.evidence[i].subject);
      REQUIRE(ordered);
    }
  }
}
