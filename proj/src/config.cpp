#include "ttevolve/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "ttevolve/csv.hpp"

namespace ttv {
namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& msg) { throw ConfigError(msg); }

void check_keys(const json& obj, const std::string& ctx, const std::set<std::string>& allowed,
                const std::set<std::string>& required) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key())) bad("unknown key '" + ctx + it.key() + "'");
  for (const auto& k : required)
    if (!obj.contains(k)) bad("missing key '" + ctx + k + "'");
}

double get_num(const json& obj, const std::string& ctx, const std::string& key, double dflt) {
  if (!obj.contains(key)) return dflt;
  const json& v = obj.at(key);
  if (!v.is_number()) bad("key '" + ctx + key + "' must be a number");
  return v.get<double>();
}

long long get_int(const json& obj, const std::string& ctx, const std::string& key,
                  long long dflt) {
  if (!obj.contains(key)) return dflt;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) bad("key '" + ctx + key + "' must be an integer");
  return v.get<long long>();
}

bool get_bool(const json& obj, const std::string& ctx, const std::string& key, bool dflt) {
  if (!obj.contains(key)) return dflt;
  const json& v = obj.at(key);
  if (!v.is_boolean()) bad("key '" + ctx + key + "' must be a boolean");
  return v.get<bool>();
}

std::string get_str(const json& obj, const std::string& ctx, const std::string& key,
                    const std::string& dflt) {
  if (!obj.contains(key)) return dflt;
  const json& v = obj.at(key);
  if (!v.is_string()) bad("key '" + ctx + key + "' must be a string");
  return v.get<std::string>();
}

ExperimentKind parse_kind(const std::string& s) {
  if (s == "ising-1d") return ExperimentKind::Ising1d;
  if (s == "ising-2d") return ExperimentKind::Ising2d;
  if (s == "double-well") return ExperimentKind::DoubleWell;
  if (s == "ginzburg-landau") return ExperimentKind::GinzburgLandau;
  bad("key 'experiment' must be one of ising-1d, ising-2d, double-well, ginzburg-landau (got '" +
      s + "')");
}

SketchConfig parse_sketch(const json& obj, bool quantum) {
  SketchConfig s;
  s.kind = quantum ? SketchChoice::Random : SketchChoice::Cluster;
  if (!obj.contains("sketch")) return s;
  const json& v = obj.at("sketch");
  if (!v.is_object()) bad("key 'sketch' must be an object");
  check_keys(v, "sketch.", {"kind", "size", "cluster"}, {"kind"});
  const std::string kind = v.at("kind").get<std::string>();
  if (kind == "random") s.kind = SketchChoice::Random;
  else if (kind == "cluster") s.kind = SketchChoice::Cluster;
  else bad("key 'sketch.kind' must be 'random' or 'cluster' (got '" + kind + "')");
  s.size = static_cast<int>(get_int(v, "sketch.", "size", s.size));
  s.cluster = static_cast<int>(get_int(v, "sketch.", "cluster", s.cluster));
  if (s.size < 1) bad("key 'sketch.size' must be >= 1");
  if (s.cluster < 1 || s.cluster > 2) bad("key 'sketch.cluster' must be 1 or 2");
  return s;
}

CompressorConfig parse_compressor(const json& obj) {
  CompressorConfig c;
  if (!obj.contains("compressor")) return c;
  const json& v = obj.at("compressor");
  if (!v.is_object()) bad("key 'compressor' must be an object");
  check_keys(v, "compressor.", {"kind", "max_rank"}, {"kind"});
  const std::string kind = v.at("kind").get<std::string>();
  if (kind == "sketch") c.kind = CompressorKind::Sketch;
  else if (kind == "add-and-round") c.kind = CompressorKind::AddAndRound;
  else bad("key 'compressor.kind' must be 'sketch' or 'add-and-round' (got '" + kind + "')");
  c.max_rank = static_cast<int>(get_int(v, "compressor.", "max_rank", c.max_rank));
  if (c.max_rank < 1) bad("key 'compressor.max_rank' must be >= 1");
  return c;
}

}  // namespace

std::string experiment_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Ising1d: return "ising-1d";
    case ExperimentKind::Ising2d: return "ising-2d";
    case ExperimentKind::DoubleWell: return "double-well";
    case ExperimentKind::GinzburgLandau: return "ginzburg-landau";
  }
  return "?";
}

ExperimentConfig parse_config(const std::string& text, const std::string& dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    bad(std::string("config parse error: ") + e.what());
  }
  if (!doc.is_object()) bad("config root must be an object");
  if (!doc.contains("experiment")) bad("missing key 'experiment'");
  if (!doc.at("experiment").is_string()) bad("key 'experiment' must be a string");

  ExperimentConfig cfg;
  cfg.experiment = parse_kind(doc.at("experiment").get<std::string>());
  const bool quantum = cfg.is_quantum();
  const bool lattice = cfg.experiment == ExperimentKind::Ising2d;

  std::set<std::string> allowed = {"experiment", "dt",         "iterations", "particles",
                                   "seed",       "threads",    "output_dir", "sketch",
                                   "compressor", "svd_threshold", "svg"};
  std::set<std::string> required = {"experiment", "dt", "iterations", "particles", "seed"};
  if (lattice) {
    allowed.insert({"rows", "cols"});
    required.insert({"rows", "cols"});
  } else {
    allowed.insert("d");
    required.insert("d");
  }
  if (quantum) {
    allowed.insert({"field", "periodic", "init", "init_rank", "resample_sketch", "strang"});
  } else {
    allowed.insert({"beta", "halfwidth", "substeps", "basis_size", "marginal_modes", "reference"});
    if (cfg.experiment == ExperimentKind::DoubleWell) allowed.insert("coeff");
    else allowed.insert("lambda");
  }
  check_keys(doc, "", allowed, required);

  cfg.dt = get_num(doc, "", "dt", 0.0);
  cfg.iterations = static_cast<int>(get_int(doc, "", "iterations", 1));
  cfg.particles = get_int(doc, "", "particles", 1);
  {
    const json& v = doc.at("seed");
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<long long>() < 0))
      bad("key 'seed' must be a nonnegative integer");
    cfg.seed = v.get<std::uint64_t>();
  }
  cfg.threads = static_cast<int>(get_int(doc, "", "threads", 1));
  cfg.output_dir = get_str(doc, "", "output_dir", "runs");
  cfg.svg = get_bool(doc, "", "svg", true);
  cfg.sketch = parse_sketch(doc, quantum);
  cfg.compressor = parse_compressor(doc);
  cfg.svd_threshold = get_num(doc, "", "svd_threshold", quantum ? 1e-3 : 1e-2);

  if (lattice) {
    cfg.rows = static_cast<int>(get_int(doc, "", "rows", 0));
    cfg.cols = static_cast<int>(get_int(doc, "", "cols", 0));
    if (cfg.rows < 1 || cfg.cols < 1 || cfg.rows * cfg.cols < 2)
      bad("keys 'rows'/'cols' must define a lattice with at least 2 sites");
    cfg.d = cfg.rows * cfg.cols;
  } else {
    cfg.d = static_cast<int>(get_int(doc, "", "d", 0));
    if (cfg.d < (quantum ? 2 : 1)) bad("key 'd' too small for this experiment");
  }

  if (quantum) {
    if (cfg.sketch.kind == SketchChoice::Cluster)
      bad("key 'sketch.kind' must be 'random' for spin experiments");
    cfg.field = get_num(doc, "", "field", 1.0);
    cfg.periodic = get_bool(doc, "", "periodic", true);
    const std::string init = get_str(doc, "", "init", "random");
    if (init == "random") cfg.init = InitKind::Random;
    else if (init == "uniform") cfg.init = InitKind::Uniform;
    else bad("key 'init' must be 'random' or 'uniform' (got '" + init + "')");
    cfg.init_rank = static_cast<int>(get_int(doc, "", "init_rank", 10));
    if (cfg.init_rank < 1) bad("key 'init_rank' must be >= 1");
    cfg.resample_sketch = get_bool(doc, "", "resample_sketch", false);
    cfg.strang = get_bool(doc, "", "strang", false);
    if (!(cfg.dt > 0)) bad("key 'dt' must be > 0");
  } else {
    const bool gl = cfg.experiment == ExperimentKind::GinzburgLandau;
    cfg.beta = get_num(doc, "", "beta", gl ? 0.125 : 1.0);
    cfg.halfwidth = get_num(doc, "", "halfwidth", 2.5);
    cfg.substeps = static_cast<int>(get_int(doc, "", "substeps", 1));
    cfg.basis_size = static_cast<int>(get_int(doc, "", "basis_size", 20));
    cfg.coeff = get_num(doc, "", "coeff", 0.3);
    cfg.lambda = get_num(doc, "", "lambda", 0.03);
    cfg.reference = get_str(doc, "", "reference", "");
    if (!cfg.reference.empty() && cfg.reference.front() != '/')
      cfg.reference = dir + "/" + cfg.reference;
    if (doc.contains("marginal_modes")) {
      const json& v = doc.at("marginal_modes");
      if (!v.is_array()) bad("key 'marginal_modes' must be an array of integers");
      for (const json& e : v) {
        if (!e.is_number_integer()) bad("key 'marginal_modes' must be an array of integers");
        cfg.marginal_modes.push_back(e.get<int>());
      }
    } else {
      cfg.marginal_modes = {gl ? std::min(7, cfg.d - 1) : 0};
    }
    for (int m : cfg.marginal_modes)
      if (m < 0 || m >= cfg.d) bad("key 'marginal_modes' entry out of range");
    if (cfg.marginal_modes.empty()) bad("key 'marginal_modes' must not be empty");
    if (!(cfg.beta > 0)) bad("key 'beta' must be > 0");
    if (!(cfg.halfwidth > 0)) bad("key 'halfwidth' must be > 0");
    if (cfg.substeps < 1) bad("key 'substeps' must be >= 1");
    if (cfg.basis_size < 2) bad("key 'basis_size' must be >= 2");
    if (cfg.dt < 0) bad("key 'dt' must be >= 0");
    if (cfg.sketch.kind == SketchChoice::Random)
      bad("key 'sketch.kind' must be 'cluster' for continuous experiments");
  }
  if (cfg.iterations < 1) bad("key 'iterations' must be >= 1");
  if (cfg.particles < 1) bad("key 'particles' must be >= 1");
  if (cfg.threads < 1) bad("key 'threads' must be >= 1");
  if (!(cfg.svd_threshold > 0) || cfg.svd_threshold >= 1)
    bad("key 'svd_threshold' must be in (0, 1)");

  cfg.canonical_json = doc.dump(2) + "\n";
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) bad("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  std::string dir = ".";
  const auto slash = path.find_last_of('/');
  if (slash != std::string::npos) dir = path.substr(0, slash);
  return parse_config(ss.str(), dir);
}

std::string reference_config_hash(const ExperimentConfig& cfg) {
  std::string s = experiment_name(cfg.experiment);
  s += " d=" + std::to_string(cfg.nsites());
  if (cfg.is_quantum()) {
    s += " field=" + csv_num(cfg.field);
    s += cfg.periodic ? " periodic" : " open";
  } else {
    s += " beta=" + csv_num(cfg.beta);
    s += " halfwidth=" + csv_num(cfg.halfwidth);
    s += " basis=" + std::to_string(cfg.basis_size);
    if (cfg.experiment == ExperimentKind::DoubleWell) s += " coeff=" + csv_num(cfg.coeff);
    else s += " lambda=" + csv_num(cfg.lambda);
  }
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace ttv
