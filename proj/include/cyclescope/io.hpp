#pragma once

#include <ctime>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cyclescope/detection.hpp"
#include "cyclescope/generator.hpp"
#include "cyclescope/metrics.hpp"
#include "cyclescope/trace.hpp"

namespace cyclescope {

/// One skipped input: a line that would not parse or a trajectory that
/// failed validation.
struct Reject {
  std::string where;  // "line <n>" or "trace <id>"
  std::string reason;
};

struct LoadedCorpus {
  std::vector<Trajectory> trajectories;
  std::vector<Reject> rejects;
};

/// Reads a newline-delimited span file; invalid lines and invalid
/// trajectories are collected as rejects instead of aborting the load.
inline LoadedCorpus load_corpus(std::istream& in) {
  LoadedCorpus out;
  std::vector<Span> spans;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      spans.push_back(parse_span_record(line));
    } catch (const std::exception& e) {
      out.rejects.push_back(Reject{"line " + std::to_string(line_no), e.what()});
    }
  }
  // Group manually so one bad trajectory doesn't reject the whole file.
  std::map<std::string, std::size_t> index;
  std::vector<Trajectory> groups;
  for (Span& s : spans) {
    auto [it, inserted] = index.emplace(s.trace_id, groups.size());
    if (inserted) groups.push_back(Trajectory{s.trace_id, {}, std::nullopt});
    groups[it->second].spans.push_back(std::move(s));
  }
  for (Trajectory& t : groups) {
    try {
      validate_trajectory(t);
      out.trajectories.push_back(std::move(t));
    } catch (const std::exception& e) {
      out.rejects.push_back(Reject{"trace " + t.trace_id, e.what()});
    }
  }
  return out;
}

inline LoadedCorpus load_corpus_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file '" + path + "'");
  return load_corpus(in);
}

inline std::string corpus_to_jsonl(const Corpus& corpus) {
  std::string out;
  for (const Trajectory& t : corpus.trajectories)
    for (const Span& s : t.spans) {
      out += serialize_span_record(s);
      out += '\n';
    }
  return out;
}

inline nlohmann::ordered_json spec_to_json(const GeneratorSpec& spec) {
  nlohmann::ordered_json j;
  j["seed"] = spec.seed;
  nlohmann::ordered_json counts;
  for (GroundTruthClass cls : kAllClasses) {
    const auto it = spec.counts.find(cls);
    counts[to_string(cls)] = it == spec.counts.end() ? 0 : it->second;
  }
  j["counts"] = counts;
  j["agent_vocab"] = spec.agent_vocab;
  j["noise"] = spec.noise;
  j["depth"] = spec.depth;
  j["repeat_range"] = {spec.repeat_range.first, spec.repeat_range.second};
  j["hard_timeseries_fraction"] = spec.hard_timeseries_fraction;
  return j;
}

/// Corpus manifest: generator spec echo, per-trace labels, variant tags and
/// the cosine-band notes. `generated_at` is informational and excluded from
/// determinism comparisons.
inline std::string manifest_to_json(const GeneratorSpec& spec,
                                    const Corpus& corpus) {
  nlohmann::ordered_json j;
  j["spec"] = spec_to_json(spec);
  nlohmann::ordered_json labels;
  for (const Trajectory& t : corpus.trajectories)
    labels[t.trace_id] = to_string(*t.label);
  j["labels"] = labels;
  nlohmann::ordered_json variants;
  for (const auto& [id, tag] : corpus.variants) variants[id] = tag;
  j["variants"] = variants;
  j["notes"] = {
      {"redundant_step_cosine_band", {0.3, 0.70}},
      {"silent_cycle_min_sibling_cosine", 0.9},
      {"productive_max_pairwise_cosine", 0.6},
  };
  std::time_t now = std::time(nullptr);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  j["generated_at"] = stamp;
  return j.dump(2) + "\n";
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file '" + path + "'");
  out << content;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// Binary truth map from a manifest's labels section.
inline std::map<std::string, int> truth_from_manifest(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!j.contains("labels") || !j["labels"].is_object())
    throw SchemaError("manifest is missing the 'labels' object");
  std::map<std::string, int> truth;
  for (const auto& [id, value] : j["labels"].items()) {
    if (!value.is_string())
      throw SchemaError("manifest label for '" + id + "' must be a string");
    truth[id] = is_bad_cycle(class_from_string(value.get<std::string>())) ? 1 : 0;
  }
  return truth;
}

/// Prediction record: {trace_id, label, method, params, evidence_count}.
inline std::string prediction_to_json(const std::string& trace_id,
                                      const Detection& det) {
  nlohmann::ordered_json j;
  j["trace_id"] = trace_id;
  j["label"] = det.label;
  j["method"] = method_name(det.method);
  nlohmann::ordered_json params;
  for (const auto& [key, value] : det.params) params[key] = value;
  j["params"] = params;
  j["evidence_count"] = det.evidence.size();
  return j.dump();
}

inline std::map<std::string, int> predictions_from_jsonl(const std::string& text) {
  std::map<std::string, int> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError("predictions line " + std::to_string(line_no) +
                       " is not valid JSON: " + e.what());
    }
    if (!j.contains("trace_id") || !j["trace_id"].is_string())
      throw SchemaError("predictions line " + std::to_string(line_no) +
                        " is missing 'trace_id'");
    if (!j.contains("label") || !j["label"].is_number_integer())
      throw SchemaError("predictions line " + std::to_string(line_no) +
                        " is missing integer 'label'");
    out[j["trace_id"].get<std::string>()] = j["label"].get<int>();
  }
  return out;
}

}  // namespace cyclescope
