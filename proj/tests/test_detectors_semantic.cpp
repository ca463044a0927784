#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>

#include "cyclescope/generator.hpp"
#include "cyclescope/semantic.hpp"

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

/// Fixed-vector provider used for the interface substitution property.
class MockProvider : public EmbeddingProvider {
 public:
  explicit MockProvider(std::map<std::string, EmbeddingVector> table)
      : table_(std::move(table)) {}
  const std::string& name() const override {
    static const std::string kName = "mock";
    return kName;
  }
  std::size_t dimension() const override { return 3; }
  EmbeddingVector embed(std::string_view text) override {
    auto it = table_.find(std::string(text));
    if (it != table_.end()) return it->second;
    return {0.0, 0.0, 1.0};
  }

 private:
  std::map<std::string, EmbeddingVector> table_;
};

}  // namespace

TEST_CASE("builtin_embed is deterministic and normalized") {
  const EmbeddingVector a = builtin_embed("AAPL price 150");
  const EmbeddingVector b = builtin_embed("AAPL price 150");
  REQUIRE(a == b);
  double norm2 = 0.0;
  for (double x : a) norm2 += x * x;
  REQUIRE(norm2 == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("builtin_embed degenerate and folding cases") {
  SECTION("empty and whitespace-only text map to the zero vector") {
    REQUIRE(is_zero_vector(builtin_embed("")));
    REQUIRE(is_zero_vector(builtin_embed("   \t\n ")));
  }
  SECTION("case and whitespace runs fold away") {
    REQUIRE(builtin_embed("AAPL price 150") == builtin_embed("aapl   price 150"));
    REQUIRE(builtin_embed("a  b") == builtin_embed(" A B "));
  }
  SECTION("dimension below 16 is a parameter error") {
    REQUIRE_THROWS_AS(builtin_embed("x", 8), ParameterError);
    REQUIRE_THROWS_AS(BuiltinEmbedder(15), ParameterError);
  }
}

TEST_CASE("cosine basics") {
  SECTION("identical vectors compare to exactly one") {
    const EmbeddingVector v = builtin_embed("some sibling output text");
    REQUIRE(cosine(v, v) == 1.0);
  }
  SECTION("orthogonal unit vectors compare to zero") {
    EmbeddingVector e1(16, 0.0), e2(16, 0.0);
    e1[0] = 1.0;
    e2[1] = 1.0;
    REQUIRE(cosine(e1, e2) == 0.0);
  }
  SECTION("cosine is scale invariant") {
    EmbeddingVector v = {1.0, 2.0, 3.0};
    EmbeddingVector w = {2.0, 4.0, 6.0};
    REQUIRE(cosine(v, w) == Catch::Approx(1.0).epsilon(1e-12));
  }
  SECTION("cosine is symmetric") {
    Xoshiro256ss rng(3);
    for (int i = 0; i < 50; ++i) {
      EmbeddingVector u(24), v(24);
      for (double& x : u) x = static_cast<double>(rng.range(-100, 100)) / 17.0;
      for (double& x : v) x = static_cast<double>(rng.range(-100, 100)) / 13.0;
      REQUIRE(std::abs(cosine(u, v) - cosine(v, u)) < 1e-12);
      REQUIRE(cosine(u, v) >= -1.0 - 1e-12);
      REQUIRE(cosine(u, v) <= 1.0 + 1e-12);
    }
  }
  SECTION("zero vectors and dimension mismatches are errors") {
    EmbeddingVector z(16, 0.0), v(16, 0.0);
    v[3] = 1.0;
    REQUIRE_THROWS_AS(cosine(z, v), UndefinedSimilarityError);
    REQUIRE_THROWS_AS(cosine(z, z), UndefinedSimilarityError);
    EmbeddingVector w(24, 1.0);
    REQUIRE_THROWS_AS(cosine(v, w), DomainError);
  }
}

TEST_CASE("sibling_pairs enumerates same-parent pairs") {
  SECTION("three children give three pairs") {
    Trajectory t{"t",
                 {span_of("r", nullptr, "root", "o", 0),
                  span_of("a", "r", "x", "1", 1), span_of("b", "r", "y", "2", 2),
                  span_of("c", "r", "z", "3", 3)},
                 std::nullopt};
    const auto pairs = sibling_pairs(t);
    REQUIRE(pairs.size() == 3);
    REQUIRE(pairs[0].left->span_id == "a");
    REQUIRE(pairs[0].right->span_id == "b");
    REQUIRE(pairs[2].left->span_id == "b");
    REQUIRE(pairs[2].right->span_id == "c");
  }
  SECTION("a linear chain has no pairs") {
    Trajectory t{"t",
                 {span_of("r", nullptr, "root", "o", 0),
                  span_of("a", "r", "x", "1", 1), span_of("b", "a", "y", "2", 2)},
                 std::nullopt};
    REQUIRE(sibling_pairs(t).empty());
  }
  SECTION("two roots pair under the virtual super-root") {
    Trajectory t{"t",
                 {span_of("r1", nullptr, "root", "same", 0),
                  span_of("r2", nullptr, "root", "same", 1)},
                 std::nullopt};
    const auto pairs = sibling_pairs(t);
    REQUIRE(pairs.size() == 1);
    REQUIRE(pairs[0].parent_span_id == kVirtualRootId);
  }
}

TEST_CASE("pair count equals the sum of per-parent combinations") {
  GeneratorSpec spec;
  spec.seed = 17;
  for (GroundTruthClass c : kAllClasses) spec.counts[c] = 6;
  const Corpus corpus = generate_corpus(spec);
  for (const Trajectory& t : corpus.trajectories) {
    std::map<std::string, std::int64_t> children;
    for (const Span& s : t.spans)
      ++children[s.parent_span_id ? *s.parent_span_id : kVirtualRootId];
    std::int64_t expected = 0;
    for (const auto& [parent, n] : children) expected += n * (n - 1) / 2;
    REQUIRE(static_cast<std::int64_t>(sibling_pairs(t).size()) == expected);
  }
}

TEST_CASE("detect_cdsa flags similar sibling outputs") {
  BuiltinEmbedder provider;
  SECTION("byte-identical outputs exceed any phi below one") {
    Trajectory t{"t",
                 {span_of("r", nullptr, "root", "summary", 0),
                  span_of("a", "r", "tool", "AAPL rose 3 percent today", 1),
                  span_of("b", "r", "tool", "AAPL rose 3 percent today", 2)},
                 std::nullopt};
    const Detection d = detect_cdsa(t, 0.85, provider);
    REQUIRE(d.label == 1);
    REQUIRE(d.evidence.size() >= 1);
    REQUIRE(d.evidence[0].score == 1.0);
  }
  SECTION("unrelated outputs stay below 0.85") {
    const double sim = cosine(builtin_embed("AAPL rose"),
                              builtin_embed("crude oil inventories fell"));
    REQUIRE(sim < 0.85);
    Trajectory t{"t",
                 {span_of("r", nullptr, "root", "summary", 0),
                  span_of("a", "r", "tool", "AAPL rose", 1),
                  span_of("b", "r", "tool", "crude oil inventories fell", 2)},
                 std::nullopt};
    REQUIRE(detect_cdsa(t, 0.85, provider).label == 0);
  }
  SECTION("no sibling pairs means label 0") {
    Trajectory t{"t",
                 {span_of("r", nullptr, "root", "o", 0),
                  span_of("a", "r", "x", "text", 1)},
                 std::nullopt};
    REQUIRE(detect_cdsa(t, 0.85, provider).label == 0);
  }
  SECTION("pairs with an empty output are skipped, not errors") {
    Trajectory t{"t",
                 {span_of("r", nullptr, "root", "o", 0),
                  span_of("a", "r", "x", "", 1), span_of("b", "r", "x", "", 2),
                  span_of("c", "r", "x", "   ", 3)},
                 std::nullopt};
    const Detection d = detect_cdsa(t, 0.5, provider);
    REQUIRE(d.label == 0);
    REQUIRE(d.evidence.empty());
  }
  SECTION("phi outside (0,1] is a parameter error") {
    Trajectory t{"t", {span_of("r", nullptr, "root", "o", 0)}, std::nullopt};
    REQUIRE_THROWS_AS(detect_cdsa(t, 0.0, provider), ParameterError);
    REQUIRE_THROWS_AS(detect_cdsa(t, 1.01, provider), ParameterError);
  }
}

TEST_CASE("any conforming provider can back detect_cdsa") {
  MockProvider provider({{"left", {1.0, 0.0, 0.0}},
                         {"right", {0.9, 0.1, 0.0}},
                         {"other", {0.0, 1.0, 0.0}}});
  Trajectory t{"t",
               {span_of("r", nullptr, "root", "o", 0),
                span_of("a", "r", "x", "left", 1),
                span_of("b", "r", "x", "right", 2),
                span_of("c", "r", "x", "other", 3)},
               std::nullopt};
  const Detection d = detect_cdsa(t, 0.85, provider);
  REQUIRE(d.label == 1);
  REQUIRE(d.evidence.size() == 1);
  REQUIRE(d.evidence[0].span_refs ==
          std::vector<std::string>{"a", "b"});
}

TEST_CASE("phi is monotone: larger thresholds flag a subset") {
  GeneratorSpec spec;
  spec.seed = 23;
  for (GroundTruthClass c : kAllClasses) spec.counts[c] = 6;
  const Corpus corpus = generate_corpus(spec);
  BuiltinEmbedder provider;
  std::set<std::string> prev;
  bool first = true;
  for (double phi : {0.75, 0.80, 0.85, 0.90, 0.95}) {
    std::set<std::string> flagged;
    for (const Trajectory& t : corpus.trajectories)
      if (detect_cdsa(t, phi, provider).label == 1) flagged.insert(t.trace_id);
    if (!first)
      for (const std::string& id : flagged) REQUIRE(prev.count(id) == 1);
    prev = flagged;
    first = false;
  }
}
