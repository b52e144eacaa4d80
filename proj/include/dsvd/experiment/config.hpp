#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dsvd/consensus.hpp"

namespace dsvd::experiment {

class ConfigParseError : public Error {
 public:
  using Error::Error;
};

/// Dotted key -> raw value; list values are joined with commas.
using RawConfig = std::map<std::string, std::string>;

/**
 * INI-style text: `key = value` lines, optional `[section]` headers, and
 * dotted keys (`svt.mu = 1.5` is the same as `mu = 1.5` under `[svt]`).
 * Comments start a line with '#' or ';'. Lists are comma separated.
 */
inline RawConfig parse_config(std::istream& in) {
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigINI().from_config(in);
  } catch (const CLI::Error& e) {
    throw ConfigParseError(std::string("config: ") + e.what());
  }
  RawConfig raw;
  for (const CLI::ConfigItem& it : items) {
    if (it.name == "++" || it.name == "--") continue;  // section markers
    std::string key;
    for (const std::string& p : it.parents) key += p + ".";
    key += it.name;
    std::string value;
    for (std::size_t k = 0; k < it.inputs.size(); ++k) value += (k ? "," : "") + it.inputs[k];
    if (!raw.emplace(key, value).second) throw ConfigParseError("config: duplicate key '" + key + "'");
  }
  return raw;
}

inline RawConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigParseError("config: cannot open '" + path + "'");
  return parse_config(in);
}

inline RawConfig parse_config_text(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

enum class Experiment { svd1, svd2, truncation_sweep, localize, radar_roc };

inline std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::svd1: return "svd1";
    case Experiment::svd2: return "svd2";
    case Experiment::truncation_sweep: return "truncation_sweep";
    case Experiment::localize: return "localize";
    case Experiment::radar_roc: return "radar_roc";
  }
  return "?";
}

/// One typed view of every key the runner understands. Defaults are listed
/// in the README next to each key.
struct ExperimentConfig {
  Experiment experiment = Experiment::svd1;
  std::uint64_t seed = 0;
  int trials = 1;
  std::string output;  // empty: CSV on stdout
  int threads = 0;     // 0: one per hardware thread

  struct {
    std::size_t nodes = 10;
    std::string generator = "small_world";
    std::size_t neighbors = 4;
    double rewire = 0.1;
  } network;

  struct {
    EngineKind engine = EngineKind::exact;
    int iterations = 0;
  } consensus;

  struct {
    std::string algorithm = "dra";
    std::size_t d = 1;
    int power_iterations = 10;
    double alpha = 0.1;
    std::size_t n_vectors = 0;  // 0: N
  } backend;

  struct {
    double tau = 0.0;  // 0: 5N
    double mu = 1.5;
    int iterations = 200;
  } svt;

  struct {
    double missing = 0.1;
    std::string mask = "random";
    std::size_t anchors = 5;
    double area = 7.4;
    std::size_t obstacles = 6;
  } localize;

  std::size_t samples = 32;  // T for svd1, svd2 and truncation_sweep

  struct {
    std::size_t rank = 4;
    double delta = 0.1;
    std::vector<std::size_t> d = {4, 9, 19, 29, 39, 49};
  } sweep;

  struct {
    std::size_t snapshots = 5;
    std::size_t illuminators = 1;
    double snr_db = -10.0;
    std::vector<std::string> backends = {"centralized", "dra", "dtra", "dpm"};
    std::string roc_prefix;
  } radar;
};

struct LoadResult {
  ExperimentConfig config;
  std::vector<std::string> violations;  // "field.path: message"
  bool ok() const { return violations.empty(); }
};

namespace detail {

class Reader {
 public:
  explicit Reader(const RawConfig& raw) : raw_(raw) {}

  std::vector<std::string> violations;

  bool has(const std::string& key) const { return raw_.count(key) > 0; }

  void get(const std::string& key, std::string& out) {
    if (auto v = take(key)) out = *v;
  }

  template <class T>
  bool get(const std::string& key, T& out) {
    const auto v = take(key);
    if (!v) return false;
    if (!parse(*v, out)) {
      fail(key, "cannot parse '" + *v + "' as " + type_name<T>());
      return false;
    }
    return true;
  }

  template <class T>
  void get_list(const std::string& key, std::vector<T>& out) {
    const auto v = take(key);
    if (!v) return;
    std::vector<T> parsed;
    std::stringstream ss(*v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = CLI::detail::trim_copy(item);
      T x{};
      if constexpr (std::is_same_v<T, std::string>) {
        x = item;
      } else if (!parse(item, x)) {
        fail(key, "cannot parse list entry '" + item + "' as " + type_name<T>());
        return;
      }
      parsed.push_back(x);
    }
    if (parsed.empty()) {
      fail(key, "list is empty");
      return;
    }
    out = std::move(parsed);
  }

  void fail(const std::string& key, const std::string& message) { violations.push_back(key + ": " + message); }

  void check(bool condition, const std::string& key, const std::string& message) {
    if (!condition) fail(key, message);
  }

  void report_unknown() {
    for (const auto& [key, value] : raw_)
      if (!seen_.count(key)) fail(key, "unknown key");
  }

 private:
  std::optional<std::string> take(const std::string& key) {
    seen_.insert(key);
    const auto it = raw_.find(key);
    if (it == raw_.end()) return std::nullopt;
    return CLI::detail::trim_copy(it->second);
  }

  template <class T>
  static const char* type_name() {
    if constexpr (std::is_floating_point_v<T>) return "a number";
    else if constexpr (std::is_unsigned_v<T>) return "a non-negative integer";
    else return "an integer";
  }

  template <class T>
  static bool parse(const std::string& s, T& out) {
    if (s.empty()) return false;
    if constexpr (std::is_unsigned_v<T>) {
      if (s.front() == '-') return false;
    }
    T value{};
    if (!CLI::detail::lexical_conversion<T, T>({s}, value)) return false;
    if constexpr (std::is_floating_point_v<T>) {
      if (!std::isfinite(value)) return false;
    }
    out = value;
    return true;
  }

  const RawConfig& raw_;
  std::set<std::string> seen_;
};

inline bool one_of(const std::string& v, std::initializer_list<const char*> options) {
  for (const char* o : options)
    if (v == o) return true;
  return false;
}

}  // namespace detail

/// Typed configuration plus every violated precondition, each naming its key.
inline LoadResult load_config(const RawConfig& raw) {
  LoadResult out;
  ExperimentConfig& c = out.config;
  detail::Reader r(raw);

  std::string experiment;
  r.get("experiment", experiment);
  if (experiment.empty()) {
    r.fail("experiment", "missing");
  } else if (experiment == "svd1") {
    c.experiment = Experiment::svd1;
  } else if (experiment == "svd2") {
    c.experiment = Experiment::svd2;
  } else if (experiment == "truncation_sweep") {
    c.experiment = Experiment::truncation_sweep;
  } else if (experiment == "localize") {
    c.experiment = Experiment::localize;
  } else if (experiment == "radar_roc") {
    c.experiment = Experiment::radar_roc;
  } else {
    r.fail("experiment", "unknown experiment '" + experiment + "'");
  }
  if (!r.has("seed")) r.fail("seed", "missing (a seed is mandatory)");
  r.get("seed", c.seed);
  if (r.get("trials", c.trials)) r.check(c.trials >= 0, "trials", "must be >= 0");
  r.get("output", c.output);
  if (r.get("threads", c.threads)) r.check(c.threads >= 0, "threads", "must be >= 0");

  r.get("network.nodes", c.network.nodes);
  r.get("network.generator", c.network.generator);
  r.get("network.neighbors", c.network.neighbors);
  r.get("network.rewire", c.network.rewire);
  const std::size_t n = c.network.nodes;
  r.check(n >= 2, "network.nodes", "need at least 2 nodes");
  const bool mask_graph = c.experiment == Experiment::localize;
  if (!mask_graph) {
    if (!detail::one_of(c.network.generator, {"small_world", "complete", "path"}))
      r.fail("network.generator", "expected small_world, complete or path");
    if (c.network.generator == "small_world") {
      r.check(c.network.neighbors >= 2 && c.network.neighbors % 2 == 0 && c.network.neighbors < n,
              "network.neighbors", "must be even, >= 2 and < network.nodes");
      r.check(c.network.rewire >= 0.0 && c.network.rewire <= 1.0, "network.rewire", "must lie in [0, 1]");
    }
  }

  std::string engine;
  r.get("consensus.engine", engine);
  if (!engine.empty()) {
    try {
      c.consensus.engine = parse_engine_kind(engine);
    } catch (const Error&) {
      r.fail("consensus.engine", "expected exact, ac or ps");
    }
  }
  r.get("consensus.iterations", c.consensus.iterations);
  if (c.consensus.engine != EngineKind::exact)
    r.check(c.consensus.iterations >= 1, "consensus.iterations", "iterative engines need >= 1 iteration");

  r.get("backend.algorithm", c.backend.algorithm);
  r.get("backend.d", c.backend.d);
  r.get("backend.power_iterations", c.backend.power_iterations);
  r.get("backend.alpha", c.backend.alpha);
  r.get("backend.n_vectors", c.backend.n_vectors);
  r.get("samples", c.samples);

  r.get("svt.tau", c.svt.tau);
  r.get("svt.mu", c.svt.mu);
  r.get("svt.iterations", c.svt.iterations);
  r.get("localize.missing", c.localize.missing);
  r.get("localize.mask", c.localize.mask);
  r.get("localize.anchors", c.localize.anchors);
  r.get("localize.area", c.localize.area);
  r.get("localize.obstacles", c.localize.obstacles);
  r.get("sweep.rank", c.sweep.rank);
  r.get("sweep.delta", c.sweep.delta);
  r.get_list("sweep.d", c.sweep.d);
  r.get("radar.snapshots", c.radar.snapshots);
  r.get("radar.illuminators", c.radar.illuminators);
  r.get("radar.snr_db", c.radar.snr_db);
  r.get_list("radar.backends", c.radar.backends);
  r.get("radar.roc_prefix", c.radar.roc_prefix);

  const std::string& alg = c.backend.algorithm;
  const bool uses_d = alg == "dtra" || (c.experiment == Experiment::radar_roc &&
                                        std::count(c.radar.backends.begin(), c.radar.backends.end(), "dtra"));
  const bool uses_pm = alg == "dpm" || (c.experiment == Experiment::radar_roc &&
                                        std::count(c.radar.backends.begin(), c.radar.backends.end(), "dpm"));
  auto check_d = [&]() {
    if (!uses_d) return;
    if (c.backend.d < 1)
      r.fail("backend.d", "must be >= 1");
    else if (c.backend.d >= n)
      r.fail("backend.d", "must be < network.nodes (" + std::to_string(n) + ")");
  };
  auto check_pm = [&](bool with_alpha) {
    if (!uses_pm) return;
    r.check(c.backend.power_iterations >= 1, "backend.power_iterations", "must be >= 1");
    if (with_alpha)
      r.check(c.backend.alpha > 0.0 && c.backend.alpha < 1.0, "backend.alpha", "must lie in (0, 1)");
  };

  switch (c.experiment) {
    case Experiment::svd1:
      if (!detail::one_of(alg, {"dra", "dtra", "dpm"})) r.fail("backend.algorithm", "expected dra, dtra or dpm");
      r.check(c.samples >= 1, "samples", "must be >= 1");
      if (alg == "dra") r.check(c.samples >= n, "samples", "dra needs samples >= network.nodes");
      check_d();
      check_pm(false);
      if (alg == "dpm")
        r.check(c.backend.n_vectors <= std::min(n, c.samples), "backend.n_vectors",
                "must not exceed min(network.nodes, samples)");
      break;
    case Experiment::svd2:
      if (!detail::one_of(alg, {"dra", "dtra", "dpm"})) r.fail("backend.algorithm", "expected dra, dtra or dpm");
      r.check(c.samples >= 1, "samples", "must be >= 1");
      check_d();
      check_pm(true);
      break;
    case Experiment::truncation_sweep:
      r.check(c.samples >= 1, "samples", "must be >= 1");
      r.check(c.sweep.rank >= 1 && c.sweep.rank < std::min(n, c.samples), "sweep.rank",
              "must lie in [1, min(network.nodes, samples))");
      r.check(c.sweep.delta > 0.0 && c.sweep.delta <= 1.0, "sweep.delta", "must lie in (0, 1]");
      for (std::size_t d : c.sweep.d)
        if (d < c.sweep.rank || d >= n) {
          r.fail("sweep.d", "every entry must lie in [sweep.rank, network.nodes)");
          break;
        }
      break;
    case Experiment::localize:
      if (!detail::one_of(alg, {"dra", "dtra", "dpm"})) r.fail("backend.algorithm", "expected dra, dtra or dpm");
      r.check(n >= 4, "network.nodes", "localization needs at least 4 nodes");
      r.check(r.has("svt.tau") ? c.svt.tau > 0.0 : true, "svt.tau", "must be > 0");
      r.check(c.svt.mu > 0.0, "svt.mu", "must be > 0");
      r.check(c.svt.iterations >= 1, "svt.iterations", "must be >= 1");
      r.check(c.localize.missing >= 0.0 && c.localize.missing < 1.0, "localize.missing", "must lie in [0, 1)");
      if (!detail::one_of(c.localize.mask, {"random", "obstacles"}))
        r.fail("localize.mask", "expected random or obstacles");
      r.check(c.localize.anchors >= 3 && c.localize.anchors <= n, "localize.anchors",
              "need between h+1 = 3 and network.nodes anchors");
      r.check(c.localize.area > 0.0, "localize.area", "must be > 0");
      check_d();
      check_pm(false);
      if (alg == "dpm") r.check(c.backend.n_vectors <= n, "backend.n_vectors", "must not exceed network.nodes");
      break;
    case Experiment::radar_roc:
      r.check(c.radar.snapshots >= 1, "radar.snapshots", "must be >= 1");
      r.check(c.radar.illuminators >= 1, "radar.illuminators", "must be >= 1");
      for (const std::string& b : c.radar.backends)
        if (!detail::one_of(b, {"centralized", "dra", "dtra", "dpm"})) {
          r.fail("radar.backends", "unknown backend '" + b + "'");
          break;
        }
      check_d();
      check_pm(true);
      break;
  }
  r.report_unknown();
  out.violations = std::move(r.violations);
  return out;
}

inline std::vector<std::string> validate(const RawConfig& raw) { return load_config(raw).violations; }

}  // namespace dsvd::experiment
