#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "cyclescope/embedding.hpp"
#include "cyclescope/graph.hpp"
#include "cyclescope/rng.hpp"
#include "cyclescope/structural.hpp"
#include "cyclescope/trace.hpp"

namespace cyclescope {

/// Seeded recipe for a labeled corpus. agent_vocab is positional:
/// [root, search agent, stock agent, search tool, price tool,
///  timeseries tool, llm call].
struct GeneratorSpec {
  std::uint64_t seed = 42;
  std::map<GroundTruthClass, int> counts;
  std::vector<std::string> agent_vocab = {
      "supervisor", "search_agent",  "stock_agent", "internet_search",
      "yf_price",   "yf_timeseries", "llm_call"};
  double noise = 0.02;
  int depth = 4;
  std::pair<int, int> repeat_range{3, 6};
  double hard_timeseries_fraction = 0.5;
};

inline void validate_spec(const GeneratorSpec& spec) {
  if (spec.agent_vocab.size() < 7)
    throw ParameterError("agent_vocab needs at least 7 op names");
  if (spec.noise < 0.0 || spec.noise >= 1.0)
    throw ParameterError("noise must lie in [0, 1)");
  if (spec.depth < 3) throw ParameterError("depth must be >= 3");
  if (spec.repeat_range.first < 3)
    throw ParameterError("repeat_range.min must be >= 3");
  if (spec.repeat_range.second < spec.repeat_range.first)
    throw ParameterError("repeat_range.max must be >= repeat_range.min");
  if (spec.hard_timeseries_fraction < 0.0 ||
      spec.hard_timeseries_fraction > 1.0)
    throw ParameterError("hard_timeseries_fraction must lie in [0, 1]");
}

namespace gen {

// Vocab roles, positional in GeneratorSpec::agent_vocab.
enum VocabRole {
  kRoot = 0,
  kSearchAgent = 1,
  kStockAgent = 2,
  kSearchTool = 3,
  kPriceTool = 4,
  kSeriesTool = 5,
  kLlm = 6,
};

inline const std::vector<std::string>& tickers() {
  static const std::vector<std::string> v = {
      "AAPL", "MSFT", "NVDA", "TSLA", "AMZN", "GOOG", "META", "ORCL",
      "INTC", "AMD",  "NFLX", "CRM",  "UBER", "SHOP", "PLTR", "SNOW"};
  return v;
}

inline const std::vector<std::string>& subjects() {
  static const std::vector<std::string> v = {
      "shares",          "futures",         "the chip sector",
      "treasury yields", "crude inventories", "retail sales",
      "cloud revenue",   "ad spending",     "guidance",
      "margins",         "option volume",   "the broader index"};
  return v;
}

inline const std::vector<std::string>& verbs() {
  static const std::vector<std::string> v = {
      "climbed", "slipped", "surged",    "retreated", "steadied",
      "rallied", "wobbled", "rebounded", "drifted",   "paused"};
  return v;
}

inline const std::vector<std::string>& tails() {
  static const std::vector<std::string> v = {
      "after earnings beat expectations", "on stronger than expected demand",
      "as analysts raised price targets", "amid broad profit taking",
      "ahead of the fed decision",        "on upbeat full year guidance",
      "despite lingering supply concerns", "after a broker downgrade",
      "as trading volumes thinned",       "on renewed ai optimism"};
  return v;
}

inline std::string rand_token(Xoshiro256ss& rng) {
  static const char alphabet[] = "abcdefghijklmnopqrstuvwxyz0123456789";
  const int len = static_cast<int>(rng.range(4, 6));
  std::string out;
  for (int i = 0; i < len; ++i) out.push_back(alphabet[rng.bounded(36)]);
  return out;
}

inline std::string cents_str(std::int64_t cents) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%lld.%02lld",
                static_cast<long long>(cents / 100),
                static_cast<long long>(cents % 100));
  return buf;
}

// Quote formats seen from different price endpoints. Two quotes rendered
// through the same skeleton share most of their 3-grams, so one trajectory
// must not reuse a skeleton for outputs that have to stay dissimilar.
inline const std::vector<std::string>& quote_skeletons() {
  static const std::vector<std::string> v = {
      "last price", "intraday quote", "session close", "vwap snapshot",
      "bid ask mid", "realtime print", "delayed tick", "open interest mark"};
  return v;
}

/// Per-trajectory phrase dealer: subjects, verbs, tails and quote skeletons
/// are dealt without replacement so sibling outputs built from the same
/// template cannot collide on their high-weight words.
class PhraseDeck {
 public:
  explicit PhraseDeck(Xoshiro256ss& rng) : rng_(rng) {}

  const std::string& subject() { return deal(subjects(), subject_); }
  const std::string& verb() { return deal(verbs(), verb_); }
  const std::string& tail() { return deal(tails(), tail_); }
  const std::string& quote_skeleton() { return deal(quote_skeletons(), skel_); }

 private:
  struct Cursor {
    std::vector<std::size_t> order;
    std::size_t at = 0;
  };

  const std::string& deal(const std::vector<std::string>& bank, Cursor& c) {
    if (c.at >= c.order.size()) {
      c.order.resize(bank.size());
      for (std::size_t i = 0; i < bank.size(); ++i) c.order[i] = i;
      for (std::size_t i = bank.size(); i > 1; --i)
        std::swap(c.order[i - 1], c.order[rng_.bounded(i)]);
      c.at = 0;
    }
    return bank[c.order[c.at++]];
  }

  Xoshiro256ss& rng_;
  Cursor subject_, verb_, tail_, skel_;
};

inline std::string quote_line(Xoshiro256ss& rng, PhraseDeck& deck,
                              const std::string& ticker) {
  const std::int64_t cents = rng.range(1500, 90000);
  const std::int64_t bps = rng.range(-480, 480);  // tenths of a percent
  const std::int64_t vol = rng.range(400, 9800) * 10000;
  std::ostringstream out;
  out << ticker << " " << deck.quote_skeleton() << " " << cents_str(cents)
      << " " << (bps < 0 ? "-" : "+") << (std::abs(bps) / 10) << "."
      << (std::abs(bps) % 10) << "% " << vol;
  return out.str();
}

inline std::string news_line(Xoshiro256ss& rng, PhraseDeck& deck,
                             const std::string& ticker) {
  std::ostringstream out;
  out << "top story: " << ticker << " " << deck.subject() << " " << deck.verb()
      << " " << deck.tail() << " ref " << rand_token(rng);
  return out.str();
}

inline std::string search_result_line(Xoshiro256ss& rng, PhraseDeck& deck,
                                      const std::string& ticker) {
  std::ostringstream out;
  out << "search hits for " << ticker << ": " << deck.subject() << " "
      << deck.verb() << " " << deck.tail() << "; source feed "
      << rand_token(rng);
  return out.str();
}

inline std::string plan_line(Xoshiro256ss& rng, PhraseDeck& deck,
                             const std::string& ticker) {
  std::ostringstream out;
  out << "plan: gather " << deck.subject() << " data for " << ticker
      << " then summarize findings " << rand_token(rng);
  return out.str();
}

inline std::string thought_line(Xoshiro256ss& rng, PhraseDeck& deck,
                                const std::string& ticker) {
  std::ostringstream out;
  out << "thought: " << ticker << " " << deck.subject() << " needs a "
      << deck.verb() << " check " << rand_token(rng);
  return out.str();
}

inline std::string answer_line(Xoshiro256ss& rng, PhraseDeck& deck,
                               const std::string& ticker) {
  std::ostringstream out;
  out << "final answer: " << ticker << " " << deck.subject() << " "
      << deck.verb() << " " << deck.tail() << " overall " << rand_token(rng)
      << " " << rand_token(rng);
  return out.str();
}

inline std::string prompt_line(Xoshiro256ss& rng, const std::string& ticker) {
  static const std::vector<std::string> asks = {
      "what is the outlook for", "compare recent performance of",
      "summarize the latest news on", "forecast next quarter for",
      "analyze price action in", "what moved"};
  std::ostringstream out;
  out << rng.pick(asks) << " " << ticker;
  return out.str();
}

/// Daily closing series rendered as a JSON fragment with integer cents.
/// Dates are shared between the two series of a pair; values differ.
inline std::vector<std::string> series_dates(Xoshiro256ss& rng) {
  const int points = static_cast<int>(rng.range(36, 52));
  std::vector<std::string> dates;
  int month = 1, day = 2;
  for (int i = 0; i < points; ++i) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "2024-%02d-%02d", month % 13, day % 29);
    dates.emplace_back(buf);
    day += 1;
    if (day > 28) {
      day = 1;
      month = month % 12 + 1;
    }
  }
  return dates;
}

inline std::string timeseries_json(Xoshiro256ss& rng, const std::string& ticker,
                                   const std::vector<std::string>& dates) {
  std::int64_t cents = rng.range(4000, 80000);
  std::ostringstream out;
  out << "{\"ticker\":\"" << ticker << "\",\"interval\":\"1d\",\"series\":[";
  for (std::size_t i = 0; i < dates.size(); ++i) {
    if (i) out << ",";
    cents += rng.range(-cents / 50, cents / 50);
    if (cents < 100) cents = 100;
    out << "{\"d\":\"" << dates[i] << "\",\"c\":" << cents << "}";
  }
  out << "]}";
  return out.str();
}

/// Flips `flips` characters to random lowercase letters.
inline std::string perturb(Xoshiro256ss& rng, std::string text, int flips) {
  static const char letters[] = "abcdefghijklmnopqrstuvwxyz";
  for (int i = 0; i < flips && !text.empty(); ++i) {
    const std::size_t pos = rng.bounded(text.size());
    text[pos] = letters[rng.bounded(26)];
  }
  return text;
}

/// `count` noisy copies of `base`. At noise <= 0.02 the copies are kept
/// above 0.9 pairwise cosine by retrying with fewer flips if needed.
inline std::vector<std::string> near_duplicates(Xoshiro256ss& rng,
                                                const std::string& base,
                                                int count, double noise) {
  BuiltinEmbedder embedder;
  int flips = static_cast<int>(noise * static_cast<double>(base.size()));
  for (;;) {
    std::vector<std::string> outs;
    outs.reserve(count);
    for (int i = 0; i < count; ++i) outs.push_back(perturb(rng, base, flips));
    if (noise > 0.02 || flips == 0) return outs;
    bool ok = true;
    std::vector<EmbeddingVector> vecs;
    for (const std::string& s : outs) vecs.push_back(embedder.embed(s));
    for (std::size_t i = 0; i < vecs.size() && ok; ++i)
      for (std::size_t j = i + 1; j < vecs.size() && ok; ++j)
        if (cosine(vecs[i], vecs[j]) <= 0.9) ok = false;
    if (ok) return outs;
    flips /= 2;  // converges to identical copies
  }
}

/// Second output for the redundant-step pair: shares a token prefix with
/// `first` plus a random tail, adjusted until cosine lands in [lo, hi].
inline std::string related_output(Xoshiro256ss& rng, const std::string& first,
                                  double lo, double hi) {
  BuiltinEmbedder embedder;
  const EmbeddingVector ref = embedder.embed(first);
  std::vector<std::string> tokens;
  {
    std::istringstream in(first);
    std::string tok;
    while (in >> tok) tokens.push_back(tok);
  }
  const auto candidate = [&](std::size_t shared, const std::string& tail) {
    std::ostringstream out;
    for (std::size_t i = 0; i < shared && i < tokens.size(); ++i) {
      if (i) out << ' ';
      out << tokens[i];
    }
    if (shared > 0) out << ' ';
    out << tail;
    return out.str();
  };

  for (int attempt = 0; attempt < 16; ++attempt) {
    std::string tail = rand_token(rng) + " " + rand_token(rng) + " " +
                       rand_token(rng) + " " + rand_token(rng);
    // Scan shared-prefix lengths; the band is wide enough that one lands.
    for (std::size_t shared = 0; shared <= tokens.size(); ++shared) {
      std::string cand = candidate(shared, tail);
      const double sim = cosine(embedder.embed(cand), ref);
      if (sim >= lo && sim <= hi) return cand;
      if (sim > hi) break;  // longer prefixes only increase similarity
    }
  }
  // Fall back to stepwise adjustment from the midpoint.
  std::string cand = candidate(tokens.size() / 2, rand_token(rng));
  for (int step = 0; step < 64; ++step) {
    const double sim = cosine(embedder.embed(cand), ref);
    if (sim >= lo && sim <= hi) return cand;
    if (sim < lo) {
      const std::size_t grow = std::min<std::size_t>(
          tokens.size(), 1 + static_cast<std::size_t>(step) % tokens.size());
      cand += ' ' + tokens[grow ? grow - 1 : 0];
    } else {
      cand += ' ' + rand_token(rng);
    }
  }
  return cand;
}

constexpr std::int64_t kBaseEpochNs = 1735689600000000000ll;  // 2025-01-01T00:00Z

class TrajectoryBuilder {
 public:
  explicit TrajectoryBuilder(std::string trace_id) {
    t_.trace_id = std::move(trace_id);
  }

  std::string add(const std::string& parent, const std::string& op,
                  std::string input, std::string output,
                  SpanStatus status = SpanStatus::ok,
                  std::optional<std::string> error_type = std::nullopt) {
    Span s;
    s.trace_id = t_.trace_id;
    char buf[8];
    std::snprintf(buf, sizeof(buf), "s%03d", static_cast<int>(t_.spans.size() + 1));
    s.span_id = buf;
    if (!parent.empty()) s.parent_span_id = parent;
    s.op = op;
    s.input = std::move(input);
    s.output = std::move(output);
    s.start_time_ns = kBaseEpochNs +
                      static_cast<std::int64_t>(t_.spans.size()) * 1000000ll;
    s.end_time_ns = s.start_time_ns + 850000ll;
    s.status = status;
    s.error_type = std::move(error_type);
    t_.spans.push_back(std::move(s));
    return t_.spans.back().span_id;
  }

  Trajectory take(GroundTruthClass label) {
    t_.label = label;
    return std::move(t_);
  }

 private:
  Trajectory t_;
};

/// True when every counted call-stack window is unique, i.e. CDCS can never
/// flag the trajectory at any k (sigma = 0).
inline bool stack_is_repeat_free(const Trajectory& t) {
  const OpSequence stack = build_call_stack(t);
  const int cap = cdcs_window_cap(20, stack.size());
  if (cap < 3) return true;
  const FrequencyMap fm = enumerate_subsequences(stack, 3, cap);
  for (const auto& [window, count] : fm.entries)
    if (count > 1) return false;
  return true;
}

/// Nudges outputs apart by appending random tokens until all checked pairs
/// fall below `limit`, or reports failure so the caller can rebuild with
/// fresh phrasing. Appending saturates well above zero similarity (random
/// 3-grams spread over every hash bucket), so it only resolves borderline
/// pairs. Pairs listed in `exempt` (unordered span-id pairs) are left
/// alone, as are empty outputs.
inline bool enforce_distinct_outputs(
    Xoshiro256ss& rng, Trajectory& t, double limit,
    const std::set<std::pair<std::string, std::string>>& exempt = {}) {
  BuiltinEmbedder embedder;
  const auto exempted = [&](const std::string& a, const std::string& b) {
    return exempt.count({a, b}) || exempt.count({b, a});
  };
  const auto engineered = [&](const std::string& id) {
    for (const auto& [a, b] : exempt)
      if (a == id || b == id) return true;
    return false;
  };
  std::vector<EmbeddingVector> vecs(t.spans.size());
  for (std::size_t i = 0; i < t.spans.size(); ++i)
    if (!t.spans[i].output.empty())
      vecs[i] = embedder.embed(t.spans[i].output);
  for (int pass = 0; pass < 8; ++pass) {
    bool dirty = false;
    for (std::size_t i = 0; i < t.spans.size(); ++i) {
      if (t.spans[i].output.empty()) continue;
      for (std::size_t j = i + 1; j < t.spans.size(); ++j) {
        if (t.spans[j].output.empty()) continue;
        if (exempted(t.spans[i].span_id, t.spans[j].span_id)) continue;
        if (is_zero_vector(vecs[i]) || is_zero_vector(vecs[j])) continue;
        if (cosine(vecs[i], vecs[j]) >= limit) {
          std::size_t victim = engineered(t.spans[j].span_id) ? i : j;
          if (engineered(t.spans[victim].span_id)) return false;
          t.spans[victim].output += ' ' + rand_token(rng) + ' ' + rand_token(rng);
          vecs[victim] = embedder.embed(t.spans[victim].output);
          dirty = true;
        }
      }
    }
    if (!dirty) return true;
  }
  return false;
}

}  // namespace gen

/// One labeled trajectory of the requested class, at the class contracts
/// documented in the README (repetition templates, output-cosine bands).
inline Trajectory generate_trajectory(GroundTruthClass cls, Xoshiro256ss& rng,
                                      const GeneratorSpec& spec,
                                      const std::string& trace_id,
                                      std::string* variant_out = nullptr);

namespace gen {

inline Trajectory build_productive(Xoshiro256ss& rng, const GeneratorSpec& spec,
                                   const std::string& trace_id) {
  const auto& v = spec.agent_vocab;
  for (int attempt = 0; attempt < 64; ++attempt) {
    TrajectoryBuilder b(trace_id);
    PhraseDeck deck(rng);
    const std::string ticker = rng.pick(tickers());
    const std::string root = b.add("", v[kRoot], prompt_line(rng, ticker),
                                   answer_line(rng, deck, ticker));
    b.add(root, v[kLlm], "route request", plan_line(rng, deck, ticker));

    const int n_agents = static_cast<int>(rng.range(2, 4));
    int search_used = 0, stock_used = 0;
    bool series_used = false;
    for (int a = 0; a < n_agents; ++a) {
      std::string agent_op;
      if ((rng.chance(1, 2) && stock_used < 2) || search_used >= 2) {
        agent_op = v[kStockAgent];
        ++stock_used;
      } else {
        agent_op = v[kSearchAgent];
        ++search_used;
      }
      const std::string agent_ticker = rng.pick(tickers());
      const std::string aid = b.add(
          root, agent_op, "task: " + prompt_line(rng, agent_ticker),
          agent_op == v[kStockAgent] ? quote_line(rng, deck, agent_ticker)
                                     : news_line(rng, deck, agent_ticker));
      const int n_tools = static_cast<int>(rng.range(2, 3));
      std::map<std::string, int> tool_counts;
      for (int k = 0; k < n_tools; ++k) {
        std::string tool_op;
        std::string output;
        if (agent_op == v[kStockAgent]) {
          if (!series_used && rng.chance(1, 4)) {
            tool_op = v[kSeriesTool];
            output = timeseries_json(rng, agent_ticker, series_dates(rng));
            series_used = true;  // at most one series output per trajectory
          } else {
            tool_op = v[kPriceTool];
            output = quote_line(rng, deck, agent_ticker);
          }
        } else {
          tool_op = v[kSearchTool];
          output = search_result_line(rng, deck, agent_ticker);
        }
        if (++tool_counts[tool_op] > 2) continue;  // at most twice per parent
        const std::string tid =
            b.add(aid, tool_op, "query " + agent_ticker, output);
        if (spec.depth >= 4 && rng.chance(1, 4))
          b.add(tid, v[kLlm], "digest", thought_line(rng, deck, agent_ticker));
      }
      b.add(aid, v[kLlm], "decide next step",
            thought_line(rng, deck, agent_ticker));
    }
    b.add(root, v[kLlm], "synthesize", thought_line(rng, deck, ticker));

    Trajectory t = b.take(GroundTruthClass::productive);
    if (!stack_is_repeat_free(t)) continue;
    if (!enforce_distinct_outputs(rng, t, 0.6)) continue;
    if (!stack_is_repeat_free(t)) continue;
    return t;
  }
  throw std::logic_error("productive construction failed to converge");
}

inline Trajectory build_error(Xoshiro256ss& rng, const GeneratorSpec& spec,
                              const std::string& trace_id) {
  const auto& v = spec.agent_vocab;
  TrajectoryBuilder b(trace_id);
  PhraseDeck deck(rng);
  const std::string ticker = rng.pick(tickers());
  const std::string root = b.add("", v[kRoot], prompt_line(rng, ticker), "",
                                 SpanStatus::error);
  b.add(root, v[kLlm], "route request", plan_line(rng, deck, ticker));
  const bool stock = rng.chance(1, 2);
  const std::string agent_op = stock ? v[kStockAgent] : v[kSearchAgent];
  const std::string tool_op = stock ? v[kPriceTool] : v[kSearchTool];
  const std::string aid = b.add(root, agent_op, "task " + ticker, "",
                                SpanStatus::error);
  static const std::vector<std::string> reasons = {"timeout", "api_error",
                                                   "rate_limit"};
  const std::string reason = rng.pick(reasons);
  // Half the instances retry the failing tool enough to look structurally
  // cyclic; they stay in the Error class because nothing ever succeeds.
  const int attempts = rng.chance(1, 2) ? static_cast<int>(rng.range(4, 5))
                                        : static_cast<int>(rng.range(1, 2));
  for (int i = 0; i < attempts; ++i)
    b.add(aid, tool_op, "query " + ticker, "", SpanStatus::error, reason);
  return b.take(GroundTruthClass::error);
}

inline Trajectory build_intermediate_error(Xoshiro256ss& rng,
                                           const GeneratorSpec& spec,
                                           const std::string& trace_id) {
  const auto& v = spec.agent_vocab;
  for (int attempt = 0; attempt < 32; ++attempt) {
    TrajectoryBuilder b(trace_id);
    PhraseDeck deck(rng);
    const std::string ticker = rng.pick(tickers());
    const std::string root = b.add("", v[kRoot], prompt_line(rng, ticker),
                                   answer_line(rng, deck, ticker));
    b.add(root, v[kLlm], "route request", plan_line(rng, deck, ticker));
    const bool stock = rng.chance(1, 2);
    const std::string agent_op = stock ? v[kStockAgent] : v[kSearchAgent];
    const std::string tool_op = stock ? v[kPriceTool] : v[kSearchTool];
    const std::string aid =
        b.add(root, agent_op, "task " + ticker,
              stock ? quote_line(rng, deck, ticker)
                    : news_line(rng, deck, ticker));
    const int failures = rng.chance(1, 2) ? static_cast<int>(rng.range(3, 4))
                                          : static_cast<int>(rng.range(1, 2));
    for (int i = 0; i < failures; ++i)
      b.add(aid, tool_op, "query " + ticker, "", SpanStatus::error, "timeout");
    b.add(aid, tool_op, "query " + ticker + " retry",
          stock ? quote_line(rng, deck, ticker)
                : search_result_line(rng, deck, ticker));
    Trajectory t = b.take(GroundTruthClass::intermediate_error);
    if (!enforce_distinct_outputs(rng, t, 0.6)) continue;
    return t;
  }
  throw std::logic_error("intermediate_error construction failed to converge");
}

inline Trajectory build_redundant_step(Xoshiro256ss& rng,
                                       const GeneratorSpec& spec,
                                       const std::string& trace_id, bool hard) {
  const auto& v = spec.agent_vocab;
  for (int attempt = 0; attempt < 64; ++attempt) {
    TrajectoryBuilder b(trace_id);
    PhraseDeck deck(rng);
    const std::string ticker = rng.pick(tickers());
    const std::string other = rng.pick(tickers());
    const std::string root = b.add("", v[kRoot], prompt_line(rng, ticker),
                                   answer_line(rng, deck, ticker));
    b.add(root, v[kLlm], "route request", plan_line(rng, deck, ticker));
    const std::string aid = b.add(root, v[kStockAgent], "task " + ticker,
                                  quote_line(rng, deck, ticker));
    std::string first_id, second_id;
    if (hard) {
      const std::vector<std::string> dates = series_dates(rng);
      first_id = b.add(aid, v[kSeriesTool], "daily " + ticker,
                       timeseries_json(rng, ticker, dates));
      second_id = b.add(aid, v[kSeriesTool], "daily " + other,
                        timeseries_json(rng, other, dates));
    } else {
      const std::string first_out = quote_line(rng, deck, ticker);
      first_id = b.add(aid, v[kPriceTool], "price " + ticker, first_out);
      // The unnecessary repeat call: related content, distinct wording.
      second_id = b.add(aid, v[kPriceTool], "price " + ticker + " again",
                        related_output(rng, first_out, 0.3, 0.70));
    }
    b.add(aid, v[kLlm], "decide next step", thought_line(rng, deck, ticker));
    const std::string sid = b.add(root, v[kSearchAgent], "context " + ticker,
                                  news_line(rng, deck, ticker));
    b.add(sid, v[kSearchTool], "news " + ticker,
          search_result_line(rng, deck, ticker));
    b.add(sid, v[kLlm], "digest", thought_line(rng, deck, ticker));
    Trajectory t = b.take(GroundTruthClass::redundant_step);
    if (!stack_is_repeat_free(t)) continue;
    if (!enforce_distinct_outputs(rng, t, 0.6, {{first_id, second_id}}))
      continue;
    if (!stack_is_repeat_free(t)) continue;
    return t;
  }
  throw std::logic_error("redundant_step construction failed to converge");
}

inline Trajectory build_silent_cycle(Xoshiro256ss& rng,
                                     const GeneratorSpec& spec,
                                     const std::string& trace_id) {
  const auto& v = spec.agent_vocab;
  TrajectoryBuilder b(trace_id);
  PhraseDeck deck(rng);
  const std::string ticker = rng.pick(tickers());
  const int reps = static_cast<int>(
      rng.range(spec.repeat_range.first, spec.repeat_range.second));
  const std::string root = b.add("", v[kRoot], prompt_line(rng, ticker),
                                 answer_line(rng, deck, ticker));
  const std::vector<std::string> agent_outs =
      near_duplicates(rng, quote_line(rng, deck, ticker), reps, spec.noise);
  const std::vector<std::string> thought_outs =
      near_duplicates(rng, thought_line(rng, deck, ticker), reps, spec.noise);
  const std::vector<std::string> price_outs =
      near_duplicates(rng, quote_line(rng, deck, ticker), reps, spec.noise);
  for (int i = 0; i < reps; ++i) {
    // The agent regenerates the same quote every pass and never notices.
    const std::string aid =
        b.add(root, v[kStockAgent], "task " + ticker, agent_outs[i]);
    b.add(aid, v[kLlm], "decide", thought_outs[i]);
    b.add(aid, v[kPriceTool], "price " + ticker, price_outs[i]);
  }
  b.add(root, v[kLlm], "synthesize", thought_line(rng, deck, ticker));
  return b.take(GroundTruthClass::silent_cycle);
}

inline Trajectory build_error_cycle(Xoshiro256ss& rng, const GeneratorSpec& spec,
                                    const std::string& trace_id) {
  const auto& v = spec.agent_vocab;
  TrajectoryBuilder b(trace_id);
  PhraseDeck deck(rng);
  const std::string ticker = rng.pick(tickers());
  const int reps = static_cast<int>(
      rng.range(spec.repeat_range.first, spec.repeat_range.second));
  // Deep instances hit the same search tool twice per pass and also take a
  // stray stock-agent detour, which concentrates weight on one DAG edge.
  const bool deep = rng.chance(2, 5);
  const std::string root = b.add("", v[kRoot], prompt_line(rng, ticker), "",
                                 SpanStatus::error);
  b.add(root, v[kLlm], "route request", plan_line(rng, deck, ticker));
  if (deep) {
    const std::string stray = b.add(root, v[kStockAgent], "task " + ticker,
                                    quote_line(rng, deck, ticker));
    b.add(stray, v[kPriceTool], "price " + ticker,
          quote_line(rng, deck, ticker));
  }
  // A small slice of error cycles keeps making progress on content while
  // still spinning structurally until the recursion limit trips; these are
  // invisible to semantic confirmation on purpose.
  const bool progressing = rng.chance(1, 10);
  std::vector<std::string> agent_outs, tool_outs;
  if (progressing) {
    for (int i = 0; i < reps; ++i) {
      agent_outs.push_back(news_line(rng, deck, ticker));
      tool_outs.push_back(search_result_line(rng, deck, ticker));
      if (deep) tool_outs.push_back(search_result_line(rng, deck, ticker));
    }
  } else {
    agent_outs =
        near_duplicates(rng, news_line(rng, deck, ticker), reps, spec.noise);
    tool_outs = near_duplicates(rng, search_result_line(rng, deck, ticker),
                                deep ? 2 * reps : reps, spec.noise);
  }
  for (int i = 0; i < reps; ++i) {
    const std::string aid =
        b.add(root, v[kSearchAgent], "search " + ticker, agent_outs[i]);
    b.add(aid, v[kSearchTool], "news " + ticker,
          tool_outs[deep ? 2 * i : i]);
    if (deep)
      b.add(aid, v[kSearchTool], "news " + ticker + " more",
            tool_outs[2 * i + 1]);
  }
  b.add(root, v[kLlm], "continue", "", SpanStatus::error, "recursion_limit");
  Trajectory t = b.take(GroundTruthClass::error_cycle);
  if (progressing) enforce_distinct_outputs(rng, t, 0.6);
  return t;
}

}  // namespace gen

inline Trajectory generate_trajectory(GroundTruthClass cls, Xoshiro256ss& rng,
                                      const GeneratorSpec& spec,
                                      const std::string& trace_id,
                                      std::string* variant_out) {
  validate_spec(spec);
  if (variant_out) variant_out->clear();
  switch (cls) {
    case GroundTruthClass::productive:
      return gen::build_productive(rng, spec, trace_id);
    case GroundTruthClass::error:
      return gen::build_error(rng, spec, trace_id);
    case GroundTruthClass::intermediate_error:
      return gen::build_intermediate_error(rng, spec, trace_id);
    case GroundTruthClass::redundant_step: {
      const bool hard =
          rng.chance(static_cast<std::uint64_t>(
                         spec.hard_timeseries_fraction * 1000.0 + 0.5),
                     1000);
      if (hard && variant_out) *variant_out = "hard_timeseries";
      return gen::build_redundant_step(rng, spec, trace_id, hard);
    }
    case GroundTruthClass::silent_cycle:
      return gen::build_silent_cycle(rng, spec, trace_id);
    case GroundTruthClass::error_cycle:
      return gen::build_error_cycle(rng, spec, trace_id);
  }
  throw std::logic_error("unreachable class");
}

struct Corpus {
  std::vector<Trajectory> trajectories;
  std::map<std::string, std::string> variants;  // trace_id -> variant tag
};

/// Deterministic corpus: same spec (seed included) yields identical
/// trajectories, trace ids and variant tags.
inline Corpus generate_corpus(const GeneratorSpec& spec) {
  validate_spec(spec);
  std::int64_t total = 0;
  for (const auto& [cls, count] : spec.counts) {
    if (count < 0) throw ParameterError("class counts must be >= 0");
    total += count;
  }
  if (total < 1) throw ParameterError("corpus must contain at least one trajectory");

  Corpus corpus;
  Xoshiro256ss rng(spec.seed);
  int index = 0;
  for (GroundTruthClass cls : kAllClasses) {
    const auto it = spec.counts.find(cls);
    const int count = it == spec.counts.end() ? 0 : it->second;
    for (int i = 0; i < count; ++i) {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "t%06d", index++);
      std::string variant;
      Trajectory t = generate_trajectory(cls, rng, spec, buf, &variant);
      if (!variant.empty()) corpus.variants[buf] = variant;
      validate_trajectory(t);
      corpus.trajectories.push_back(std::move(t));
    }
  }
  return corpus;
}

}  // namespace cyclescope
