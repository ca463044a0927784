#include <catch2/catch_amalgamated.hpp>

#include "cyclescope/generator.hpp"
#include "cyclescope/hybrid.hpp"
#include "cyclescope/pipeline.hpp"

using namespace cyclescope;

namespace {

Span span_of(const std::string& id, const char* parent, const std::string& op,
             const std::string& output, std::int64_t start) {
  Span s;
  s.trace_id = "t";
  s.span_id = id;
  if (parent) s.parent_span_id = parent;
  s.op = op;
  s.output = output;
  s.start_time_ns = start;
  return s;
}

// Root plus four identical [agent, tool] rounds; outputs chosen by caller.
Trajectory looped_trajectory(const std::vector<std::string>& agent_outputs) {
  Trajectory t{"t", {span_of("s00", nullptr, "root", "answer", 0)}, std::nullopt};
  for (std::size_t i = 0; i < agent_outputs.size(); ++i) {
    const std::string aid = "s" + std::to_string(10 + i);
    t.spans.push_back(span_of(aid, "s00", "agent", agent_outputs[i],
                              static_cast<std::int64_t>(2 * i + 1)));
    t.spans.push_back(span_of(aid + "c", aid.c_str(), "tool", "tool hit " + aid,
                              static_cast<std::int64_t>(2 * i + 2)));
  }
  return t;
}

}  // namespace

TEST_CASE("the gate short-circuits without embedding work") {
  GeneratorSpec spec;
  spec.seed = 3;
  Xoshiro256ss rng(spec.seed);
  const Trajectory t =
      generate_trajectory(GroundTruthClass::productive, rng, spec, "tp");
  BuiltinEmbedder base;
  CountingProvider counter(base);
  const Detection d = detect_hybrid(t, HybridParams{}, counter);
  REQUIRE(d.label == 0);
  REQUIRE(d.evidence.empty());
  REQUIRE(counter.calls() == 0);
}

TEST_CASE("structural repetition without similar outputs is cleared") {
  // Four rounds of [agent, tool] fire CDCS, but every agent output is
  // lexically unrelated, so confirmation fails.
  const Trajectory t = looped_trajectory(
      {"rates markets climbed", "quarterly numbers earnings beat widely",
       "chip demand outlook research264", "volatility index option flows x99"});
  BuiltinEmbedder provider;
  REQUIRE(detect_cdcs(build_call_stack(t), 0.5, 20).label == 1);
  const Detection d = detect_hybrid(t, HybridParams{}, provider);
  REQUIRE(d.label == 0);
}

TEST_CASE("silent cycles at default parameters are confirmed") {
  GeneratorSpec spec;
  spec.seed = 8;
  Xoshiro256ss rng(spec.seed);
  for (int i = 0; i < 10; ++i) {
    const Trajectory t =
        generate_trajectory(GroundTruthClass::silent_cycle, rng, spec, "ts");
    BuiltinEmbedder provider;
    REQUIRE(detect_hybrid(t, HybridParams{}, provider).label == 1);
  }
}

TEST_CASE("hybrid flags only what both stages would flag at full scope") {
  GeneratorSpec spec;
  spec.seed = 12;
  for (GroundTruthClass c : kAllClasses) spec.counts[c] = 10;
  const Corpus corpus = generate_corpus(spec);
  BuiltinEmbedder provider;
  HybridParams hp;  // k=0.5, phi=0.83
  for (const Trajectory& t : corpus.trajectories) {
    const int cdcs_label = detect_cdcs(build_call_stack(t), hp.k, hp.max_len).label;
    const int cdsa_label = detect_cdsa(t, hp.phi, provider).label;
    const int hybrid_label = detect_hybrid(t, hp, provider).label;
    REQUIRE(hybrid_label <= std::min(cdcs_label, cdsa_label));
  }
}

TEST_CASE("hybrid embedding cost never exceeds standalone CDSA") {
  GeneratorSpec spec;
  spec.seed = 13;
  for (GroundTruthClass c : kAllClasses) spec.counts[c] = 10;
  const Corpus corpus = generate_corpus(spec);
  BuiltinEmbedder base;
  CountingProvider hybrid_counter(base);
  CountingProvider cdsa_counter(base);
  for (const Trajectory& t : corpus.trajectories) {
    detect_hybrid(t, HybridParams{0.5, 0.85, 20, HybridScope::full},
                  hybrid_counter);
    detect_cdsa(t, 0.85, cdsa_counter);
  }
  REQUIRE(hybrid_counter.calls() <= cdsa_counter.calls());
}

TEST_CASE("hybrid runs are deterministic") {
  GeneratorSpec spec;
  spec.seed = 14;
  for (GroundTruthClass c : kAllClasses) spec.counts[c] = 4;
  const Corpus corpus = generate_corpus(spec);
  BuiltinEmbedder provider;
  DetectorParams params;
  params.phi = 0.83;
  const auto a = run_corpus(Method::hybrid, corpus.trajectories, params,
                            provider, 2);
  const auto b = run_corpus(Method::hybrid, corpus.trajectories, params,
                            provider, 2);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i].label == b[i].label);
    REQUIRE(a[i].evidence.size() == b[i].evidence.size());
    for (std::size_t j = 0; j < a[i].evidence.size(); ++j) {
      REQUIRE(a[i].evidence[j].subject == b[i].evidence[j].subject);
      REQUIRE(a[i].evidence[j].score == b[i].evidence[j].score);
    }
  }
}

TEST_CASE("flagged_only scope flags at most what full scope flags") {
  GeneratorSpec spec;
  spec.seed = 15;
  for (GroundTruthClass c : kAllClasses) spec.counts[c] = 8;
  const Corpus corpus = generate_corpus(spec);
  BuiltinEmbedder provider;
  for (const Trajectory& t : corpus.trajectories) {
    const int full =
        detect_hybrid(t, HybridParams{0.5, 0.83, 20, HybridScope::full},
                      provider)
            .label;
    const int narrowed =
        detect_hybrid(t, HybridParams{0.5, 0.83, 20, HybridScope::flagged_only},
                      provider)
            .label;
    REQUIRE(narrowed <= full);
  }
}

TEST_CASE("stage evidence is merged into confirmed detections") {
  GeneratorSpec spec;
  spec.seed = 16;
  Xoshiro256ss rng(spec.seed);
  const Trajectory t =
      generate_trajectory(GroundTruthClass::silent_cycle, rng, spec, "tm");
  BuiltinEmbedder provider;
  const Detection d = detect_hybrid(t, HybridParams{}, provider);
  REQUIRE(d.label == 1);
  bool has_subsequence = false, has_pair = false;
  for (const Evidence& ev : d.evidence) {
    if (ev.kind == "subsequence") has_subsequence = true;
    if (ev.kind == "sibling_pair") has_pair = true;
  }
  REQUIRE(has_subsequence);
  REQUIRE(has_pair);
}
