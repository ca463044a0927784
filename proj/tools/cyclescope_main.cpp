// cyclescope CLI: generate synthetic corpora, run detectors, sweep
// parameters and score predictions. Exit codes: 0 success, 1 runtime or
// provider failure, 2 configuration error.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cyclescope/cyclescope.hpp"
#include "cyclescope/remote.hpp"

namespace cs = cyclescope;

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string fixed4(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

struct ProviderOptions {
  std::string kind = "builtin";
  std::string endpoint;
  int timeout_ms = 5000;
  std::size_t dim = 256;
};

void add_provider_options(CLI::App* cmd, ProviderOptions& p) {
  cmd->add_option("--provider", p.kind, "Embedding provider: builtin | remote")
      ->check(CLI::IsMember({"builtin", "remote"}))
      ->capture_default_str();
  cmd->add_option("--endpoint", p.endpoint,
                  "Remote embedding endpoint, e.g. http://host:port/embed");
  cmd->add_option("--timeout-ms", p.timeout_ms,
                  "Remote provider timeout in milliseconds")
      ->capture_default_str();
  cmd->add_option("--dim", p.dim, "Builtin embedding dimension (>= 16)")
      ->capture_default_str();
}

std::unique_ptr<cs::EmbeddingProvider> make_provider(const ProviderOptions& p) {
  if (p.kind == "remote") {
    if (p.endpoint.empty())
      throw cs::ParameterError("--provider remote requires --endpoint");
    return std::make_unique<cs::RemoteEmbeddingProvider>(p.endpoint,
                                                         p.timeout_ms);
  }
  return std::make_unique<cs::BuiltinEmbedder>(p.dim);
}

struct DetectorOptions {
  std::string method;
  double m = 1.4;
  double k = 0.5;
  double phi = -1.0;  // < 0 means: use the method's own default
  int max_len = 20;
  std::string scope = "full";
};

void add_detector_options(CLI::App* cmd, DetectorOptions& d,
                          bool method_required = true) {
  auto* method =
      cmd->add_option("--method", d.method,
                      "Detector: cddag | cdcs | cdsa | hybrid")
          ->check(CLI::IsMember({"cddag", "cdcs", "cdsa", "hybrid"}));
  if (method_required) method->required();
  cmd->add_option("--m", d.m, "CDDAG multiplier (> 0)")->capture_default_str();
  cmd->add_option("--k", d.k, "CDCS multiplier (> 0)")->capture_default_str();
  cmd->add_option("--phi", d.phi,
                  "CDSA similarity threshold in (0,1]; defaults to 0.85 "
                  "standalone and 0.83 inside hybrid");
  cmd->add_option("--max-len", d.max_len, "Subsequence window cap")
      ->capture_default_str();
  cmd->add_option("--scope", d.scope,
                  "Hybrid confirmation scope: full | flagged_only")
      ->check(CLI::IsMember({"full", "flagged_only"}))
      ->capture_default_str();
}

cs::DetectorParams resolve_params(const DetectorOptions& d, cs::Method method) {
  cs::DetectorParams p;
  p.m = d.m;
  p.k = d.k;
  p.phi = d.phi < 0.0 ? cs::default_phi(method) : d.phi;
  p.max_len = d.max_len;
  p.scope = cs::scope_from_string(d.scope);
  if ((method == cs::Method::cddag) && p.m <= 0.0)
    throw cs::ParameterError("--m must be > 0");
  if ((method == cs::Method::cdcs || method == cs::Method::hybrid) && p.k <= 0.0)
    throw cs::ParameterError("--k must be > 0");
  if ((method == cs::Method::cdsa || method == cs::Method::hybrid) &&
      !(p.phi > 0.0 && p.phi <= 1.0))
    throw cs::ParameterError("--phi must lie in (0, 1]");
  if (p.max_len < 3) throw cs::ParameterError("--max-len must be >= 3");
  return p;
}

void write_run_manifest(const std::string& path, const std::string& command,
                        const std::vector<std::pair<std::string, std::string>>&
                            entries) {
  std::ostringstream out;
  out << "# cyclescope " << command << " effective configuration\n";
  for (const auto& [key, value] : entries) out << key << "=" << value << "\n";
  cs::write_file(path, out.str());
}

/// Expands `--config <file>` into ordinary flags. The file holds key=value
/// lines ('#' starts a comment); keys already present on the command line
/// keep their command-line value. Returns tokens in normal order.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::size_t config_at = args.size();
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config_at = i;
      config_path = args[i + 1];
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      config_at = i;
      config_path = args[i].substr(9);
      break;
    }
  }
  if (config_at == args.size()) return args;

  std::set<std::string> given;
  for (const std::string& arg : args) {
    if (arg.rfind("--", 0) != 0) continue;
    const auto eq = arg.find('=');
    given.insert(eq == std::string::npos ? arg.substr(2)
                                         : arg.substr(2, eq - 2));
  }

  std::string config_text;
  try {
    config_text = cs::read_file(config_path);
  } catch (const std::exception& e) {
    throw cs::ParameterError(e.what());
  }
  std::istringstream in(config_text);
  std::vector<std::string> injected;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
      line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw cs::ParameterError("config line is not key=value: '" + line + "'");
    const std::string key = line.substr(0, eq);
    if (key.empty() || key == "config")
      throw cs::ParameterError("config file may not set '" + key + "'");
    if (given.count(key)) continue;  // flags override config values
    injected.push_back("--" + key);
    injected.push_back(line.substr(eq + 1));
  }
  // Splice right after --config so later flags still win positionally.
  std::vector<std::string> out(args.begin(), args.begin() + config_at);
  out.insert(out.end(), injected.begin(), injected.end());
  out.insert(out.end(), args.begin() + config_at, args.end());
  return out;
}

// ---------------------------------------------------------------------------
// generate

struct GenerateOptions {
  std::uint64_t seed = 42;
  int per_class = 0;
  std::vector<std::string> count_overrides;
  std::string out;
  std::string manifest;
  std::string run_manifest;
  double noise = 0.02;
  int depth = 4;
  int repeat_min = 3;
  int repeat_max = 6;
  double hard_fraction = 0.5;
  bool verbose = false;
};

int run_generate(const GenerateOptions& o) {
  cs::GeneratorSpec spec;
  spec.seed = o.seed;
  for (cs::GroundTruthClass cls : cs::kAllClasses)
    spec.counts[cls] = o.per_class;
  for (const std::string& entry : o.count_overrides) {
    const auto eq = entry.find('=');
    if (eq == std::string::npos)
      throw cs::ParameterError("--count expects class=N, got '" + entry + "'");
    const cs::GroundTruthClass cls = [&] {
      try {
        return cs::class_from_string(entry.substr(0, eq));
      } catch (const cs::ParseError& e) {
        throw cs::ParameterError(e.what());
      }
    }();
    try {
      spec.counts[cls] = std::stoi(entry.substr(eq + 1));
    } catch (const std::exception&) {
      throw cs::ParameterError("--count expects an integer after '=' in '" +
                               entry + "'");
    }
  }
  spec.noise = o.noise;
  spec.depth = o.depth;
  spec.repeat_range = {o.repeat_min, o.repeat_max};
  spec.hard_timeseries_fraction = o.hard_fraction;

  if (o.verbose) {
    std::cerr << "generate: seed=" << spec.seed << " noise=" << spec.noise
              << " depth=" << spec.depth << " repeat=["
              << spec.repeat_range.first << "," << spec.repeat_range.second
              << "] hard_fraction=" << spec.hard_timeseries_fraction << "\n";
    for (cs::GroundTruthClass cls : cs::kAllClasses)
      std::cerr << "generate:   " << cs::to_string(cls) << " x"
                << spec.counts[cls] << "\n";
  }
  const cs::Corpus corpus = cs::generate_corpus(spec);
  cs::write_file(o.out, cs::corpus_to_jsonl(corpus));
  const std::string manifest_path =
      o.manifest.empty() ? o.out + ".manifest.json" : o.manifest;
  cs::write_file(manifest_path, cs::manifest_to_json(spec, corpus));

  std::vector<std::pair<std::string, std::string>> entries = {
      {"seed", std::to_string(o.seed)},
      {"out", o.out},
      {"manifest", manifest_path},
      {"noise", num(o.noise)},
      {"depth", std::to_string(o.depth)},
      {"repeat-min", std::to_string(o.repeat_min)},
      {"repeat-max", std::to_string(o.repeat_max)},
      {"hard-fraction", num(o.hard_fraction)},
  };
  for (cs::GroundTruthClass cls : cs::kAllClasses)
    entries.push_back({std::string("count"),
                       std::string(cs::to_string(cls)) + "=" +
                           std::to_string(spec.counts[cls])});
  write_run_manifest(o.run_manifest.empty() ? o.out + ".run" : o.run_manifest,
                     "generate", entries);

  std::cerr << "generated " << corpus.trajectories.size()
            << " trajectories -> " << o.out << " (manifest " << manifest_path
            << ")\n";
  return 0;
}

// ---------------------------------------------------------------------------
// detect

struct DetectOptions {
  std::string in;
  std::string out = "predictions.jsonl";
  std::string rejects;
  std::string run_manifest;
  DetectorOptions detector;
  ProviderOptions provider;
  unsigned threads = 0;
  std::string dot_path;
  std::string dot_trace;
  bool verbose = false;
};

int run_detect(const DetectOptions& o) {
  const cs::Method method = cs::method_from_string(o.detector.method);
  const cs::DetectorParams params = resolve_params(o.detector, method);
  auto provider = make_provider(o.provider);

  if (o.verbose)
    std::cerr << "detect: method=" << o.detector.method << " m=" << params.m
              << " k=" << params.k << " phi=" << params.phi << " max_len="
              << params.max_len << " scope=" << cs::scope_name(params.scope)
              << " provider=" << provider->name() << "\n";
  const auto started = std::chrono::steady_clock::now();
  cs::LoadedCorpus loaded = cs::load_corpus_file(o.in);
  std::sort(loaded.trajectories.begin(), loaded.trajectories.end(),
            [](const cs::Trajectory& a, const cs::Trajectory& b) {
              return a.trace_id < b.trace_id;
            });

  const std::vector<cs::Detection> detections = cs::run_corpus(
      method, loaded.trajectories, params, *provider, o.threads);
  if (o.verbose)
    std::cerr << "detect: finished in "
              << std::chrono::duration<double>(
                     std::chrono::steady_clock::now() - started)
                     .count()
              << "s\n";

  std::string out_text;
  std::int64_t flagged = 0;
  for (std::size_t i = 0; i < loaded.trajectories.size(); ++i) {
    out_text +=
        cs::prediction_to_json(loaded.trajectories[i].trace_id, detections[i]);
    out_text += '\n';
    flagged += detections[i].label;
  }
  cs::write_file(o.out, out_text);

  if (!o.dot_path.empty()) {
    const cs::Trajectory* target = nullptr;
    if (o.dot_trace.empty()) {
      if (!loaded.trajectories.empty()) target = &loaded.trajectories.front();
    } else {
      for (const cs::Trajectory& t : loaded.trajectories)
        if (t.trace_id == o.dot_trace) target = &t;
    }
    if (!target)
      throw std::runtime_error("--dot: trace '" + o.dot_trace +
                               "' not found in input");
    cs::write_file(o.dot_path,
                   cs::to_dot(cs::build_dag(*target), target->trace_id));
  }

  const std::string rejects_path =
      o.rejects.empty() ? o.out + ".rejects.jsonl" : o.rejects;
  if (!loaded.rejects.empty()) {
    std::string text;
    for (const cs::Reject& r : loaded.rejects) {
      nlohmann::ordered_json j;
      j["where"] = r.where;
      j["reason"] = r.reason;
      text += j.dump();
      text += '\n';
    }
    cs::write_file(rejects_path, text);
  }

  write_run_manifest(
      o.run_manifest.empty() ? o.out + ".run" : o.run_manifest, "detect",
      {{"method", o.detector.method},
       {"in", o.in},
       {"out", o.out},
       {"m", num(params.m)},
       {"k", num(params.k)},
       {"phi", num(params.phi)},
       {"max-len", std::to_string(params.max_len)},
       {"scope", cs::scope_name(params.scope)},
       {"provider", o.provider.kind},
       {"endpoint", o.provider.endpoint},
       {"timeout-ms", std::to_string(o.provider.timeout_ms)},
       {"dim", std::to_string(o.provider.dim)},
       {"threads", std::to_string(o.threads)}});

  std::cerr << "detect " << o.detector.method << ": "
            << loaded.trajectories.size() << " trajectories, " << flagged
            << " flagged, " << loaded.rejects.size() << " rejected";
  if (!loaded.rejects.empty()) std::cerr << " (see " << rejects_path << ")";
  std::cerr << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepOptions {
  std::string in;
  std::string truth;
  std::string out;
  std::string run_manifest;
  std::string param = "k";
  double from = 0.0;
  double to = 0.0;
  double step = 0.1;
  DetectorOptions detector;
  ProviderOptions provider;
  unsigned threads = 0;
  bool verbose = false;
};

int run_sweep(const SweepOptions& o) {
  const cs::Method method = cs::method_from_string(o.detector.method);
  const cs::DetectorParams fixed = resolve_params(o.detector, method);
  auto provider = make_provider(o.provider);

  cs::SweepGrid grid;
  grid.method = method;
  grid.param = o.param;
  grid.values = cs::grid_values(o.from, o.to, o.step);
  cs::validate_grid(grid);

  cs::LoadedCorpus loaded = cs::load_corpus_file(o.in);
  if (!loaded.rejects.empty())
    std::cerr << "sweep: skipping " << loaded.rejects.size()
              << " rejected inputs\n";
  std::sort(loaded.trajectories.begin(), loaded.trajectories.end(),
            [](const cs::Trajectory& a, const cs::Trajectory& b) {
              return a.trace_id < b.trace_id;
            });

  std::map<std::string, int> truth =
      cs::truth_from_manifest(cs::read_file(o.truth));
  // Scoring requires identical key sets; drop truth entries for rejects.
  std::map<std::string, int> usable;
  for (const cs::Trajectory& t : loaded.trajectories) {
    auto it = truth.find(t.trace_id);
    if (it != truth.end()) usable[it->first] = it->second;
  }

  if (o.verbose)
    std::cerr << "sweep: method=" << o.detector.method << " param=" << o.param
              << " values=" << grid.values.size() << " trajectories="
              << loaded.trajectories.size() << "\n";
  const std::vector<cs::SweepRow> rows =
      cs::sweep(loaded.trajectories, grid, fixed, usable, *provider, o.threads);
  cs::write_file(o.out, cs::sweep_csv(grid, rows));

  write_run_manifest(
      o.run_manifest.empty() ? o.out + ".run" : o.run_manifest, "sweep",
      {{"method", o.detector.method},
       {"param", o.param},
       {"from", num(o.from)},
       {"to", num(o.to)},
       {"step", num(o.step)},
       {"in", o.in},
       {"truth", o.truth},
       {"out", o.out},
       {"m", num(fixed.m)},
       {"k", num(fixed.k)},
       {"phi", num(fixed.phi)},
       {"max-len", std::to_string(fixed.max_len)},
       {"scope", cs::scope_name(fixed.scope)},
       {"provider", o.provider.kind},
       {"threads", std::to_string(o.threads)}});

  std::cerr << "sweep " << o.detector.method << "/" << o.param << ": "
            << rows.size() << " rows -> " << o.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalOptions {
  std::string pred;
  std::string truth;
  std::string json_out;
  std::string run_manifest;
};

int run_eval(const EvalOptions& o) {
  const std::map<std::string, int> predictions =
      cs::predictions_from_jsonl(cs::read_file(o.pred));
  const std::map<std::string, int> truth =
      cs::truth_from_manifest(cs::read_file(o.truth));
  const cs::Metrics m = cs::score(predictions, truth);

  std::cout << "accuracy: " << fixed4(m.accuracy) << "\n";
  std::cout << "class        precision   recall      f1\n";
  std::cout << "cycle        " << fixed4(m.cycle.precision) << "      "
            << fixed4(m.cycle.recall) << "      " << fixed4(m.cycle.f1) << "\n";
  std::cout << "non_cycle    " << fixed4(m.non_cycle.precision) << "      "
            << fixed4(m.non_cycle.recall) << "      " << fixed4(m.non_cycle.f1)
            << "\n";
  std::cout << "confusion: tp=" << m.confusion.tp << " fp=" << m.confusion.fp
            << " fn=" << m.confusion.fn << " tn=" << m.confusion.tn << "\n";

  if (!o.json_out.empty()) {
    nlohmann::ordered_json j;
    j["accuracy"] = m.accuracy;
    j["cycle"] = {{"precision", m.cycle.precision},
                  {"recall", m.cycle.recall},
                  {"f1", m.cycle.f1}};
    j["non_cycle"] = {{"precision", m.non_cycle.precision},
                      {"recall", m.non_cycle.recall},
                      {"f1", m.non_cycle.f1}};
    j["confusion"] = {{"tp", m.confusion.tp},
                      {"fp", m.confusion.fp},
                      {"fn", m.confusion.fn},
                      {"tn", m.confusion.tn}};
    cs::write_file(o.json_out, j.dump(2) + "\n");
  }
  if (!o.run_manifest.empty())
    write_run_manifest(o.run_manifest, "eval",
                       {{"pred", o.pred},
                        {"truth", o.truth},
                        {"json", o.json_out}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cyclescope: bad-cycle detection for agent trajectories"};
  app.require_subcommand(1);

  GenerateOptions gen;
  CLI::App* generate = app.add_subcommand(
      "generate", "Generate a labeled synthetic corpus");
  std::string config_file;  // consumed by expand_config before parsing
  generate->add_option("--config", config_file,
                       "Key=value config file; flags take precedence");
  generate->add_option("--seed", gen.seed, "Corpus seed")->capture_default_str();
  generate->add_option("--per-class", gen.per_class,
                       "Trajectory count for every class");
  generate->add_option("--count", gen.count_overrides,
                       "Per-class override, class=N (repeatable)");
  generate->add_option("--out", gen.out, "Corpus output path (jsonl)")
      ->required();
  generate->add_option("--manifest", gen.manifest,
                       "Manifest path (default <out>.manifest.json)");
  generate->add_option("--run-manifest", gen.run_manifest,
                       "Effective-config path (default <out>.run)");
  generate->add_option("--noise", gen.noise,
                       "Perturbation rate for near-duplicate outputs")
      ->capture_default_str();
  generate->add_option("--depth", gen.depth, "Max tree depth")
      ->capture_default_str();
  generate->add_option("--repeat-min", gen.repeat_min,
                       "Min repetitions for cyclic classes")
      ->capture_default_str();
  generate->add_option("--repeat-max", gen.repeat_max,
                       "Max repetitions for cyclic classes")
      ->capture_default_str();
  generate->add_option("--hard-fraction", gen.hard_fraction,
                       "Fraction of redundant_step using the hard "
                       "time-series variant")
      ->capture_default_str();
  generate->add_flag("--verbose", gen.verbose, "Echo the effective spec");

  DetectOptions det;
  CLI::App* detect = app.add_subcommand("detect", "Run one detector");
  detect->add_option("--config", config_file,
                     "Key=value config file; flags take precedence");
  detect->add_option("--in", det.in, "Input corpus (jsonl)")->required();
  detect->add_option("--out", det.out, "Predictions output path")
      ->capture_default_str();
  detect->add_option("--rejects", det.rejects,
                     "Rejects path (default <out>.rejects.jsonl)");
  detect->add_option("--run-manifest", det.run_manifest,
                     "Effective-config path (default <out>.run)");
  add_detector_options(detect, det.detector);
  add_provider_options(detect, det.provider);
  detect->add_option("--threads", det.threads, "Worker threads (0 = auto)")
      ->capture_default_str();
  detect->add_option("--dot", det.dot_path,
                     "Write the op DAG of one trace as DOT");
  detect->add_option("--dot-trace", det.dot_trace,
                     "Trace id for --dot (default: first trace)");
  detect->add_flag("--verbose", det.verbose,
                   "Echo effective parameters and timing");

  SweepOptions swp;
  CLI::App* sweep_cmd =
      app.add_subcommand("sweep", "Sweep one parameter and emit CSV");
  sweep_cmd->add_option("--config", config_file,
                        "Key=value config file; flags take precedence");
  sweep_cmd->add_option("--in", swp.in, "Input corpus (jsonl)")->required();
  sweep_cmd->add_option("--truth", swp.truth, "Manifest with labels")
      ->required();
  sweep_cmd->add_option("--out", swp.out, "CSV output path")->required();
  sweep_cmd->add_option("--param", swp.param, "Swept parameter: m | k | phi")
      ->check(CLI::IsMember({"m", "k", "phi"}))
      ->capture_default_str();
  sweep_cmd->add_option("--from", swp.from, "First grid value")->required();
  sweep_cmd->add_option("--to", swp.to, "Last grid value")->required();
  sweep_cmd->add_option("--step", swp.step, "Grid step")->capture_default_str();
  add_detector_options(sweep_cmd, swp.detector);
  add_provider_options(sweep_cmd, swp.provider);
  sweep_cmd->add_option("--threads", swp.threads, "Worker threads (0 = auto)")
      ->capture_default_str();
  sweep_cmd->add_flag("--verbose", swp.verbose, "Echo the grid being swept");

  EvalOptions evl;
  CLI::App* eval_cmd =
      app.add_subcommand("eval", "Score predictions against a manifest");
  eval_cmd->add_option("--config", config_file,
                       "Key=value config file; flags take precedence");
  eval_cmd->add_option("--pred", evl.pred, "Predictions jsonl")->required();
  eval_cmd->add_option("--truth", evl.truth, "Manifest with labels")
      ->required();
  eval_cmd->add_option("--json", evl.json_out, "Optional JSON report path");
  eval_cmd->add_option("--run-manifest", evl.run_manifest,
                       "Optional effective-config path");

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = expand_config(std::move(args));
    std::reverse(args.begin(), args.end());  // CLI11 consumes from the back
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const cs::ParameterError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (generate->parsed()) return run_generate(gen);
    if (detect->parsed()) return run_detect(det);
    if (sweep_cmd->parsed()) return run_sweep(swp);
    if (eval_cmd->parsed()) return run_eval(evl);
  } catch (const cs::ParameterError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
