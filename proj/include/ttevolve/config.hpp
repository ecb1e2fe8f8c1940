#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ttevolve/common.hpp"

namespace ttv {

enum class ExperimentKind { Ising1d, Ising2d, DoubleWell, GinzburgLandau };
enum class CompressorKind { Sketch, AddAndRound };
enum class SketchChoice { Random, Cluster };
enum class InitKind { Random, Uniform };

struct SketchConfig {
  SketchChoice kind = SketchChoice::Random;
  int size = 60;    // random-tensor row count
  int cluster = 1;  // cluster order
};

struct CompressorConfig {
  CompressorKind kind = CompressorKind::Sketch;
  int max_rank = 100;  // add-and-round cap
};

// One experiment run, fully determined by the config file plus CLI
// overrides.  docs/config.md documents the schema; parse_config rejects
// unknown or missing keys by name.
struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::Ising1d;
  int d = 0;              // chain length (1d quantum, langevin)
  int rows = 0, cols = 0; // 2d lattice shape
  double dt = 0.0;
  int iterations = 1;
  long long particles = 1;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string output_dir = "runs";
  SketchConfig sketch;
  CompressorConfig compressor;
  double svd_threshold = 1e-3;
  bool svg = true;

  // quantum
  double field = 1.0;
  bool periodic = true;
  InitKind init = InitKind::Random;
  int init_rank = 10;
  bool resample_sketch = false;  // redraw sketch factors each iteration
  bool strang = false;           // symmetric one-body splitting

  // langevin
  double beta = 1.0;
  double halfwidth = 2.5;
  int substeps = 1;
  int basis_size = 20;
  double coeff = 0.3;    // double-well quadratic coefficient
  double lambda = 0.03;  // Ginzburg-Landau coupling
  std::vector<int> marginal_modes;  // 0-based modes tracked in the trace
  std::string reference;  // cached reference marginal CSV (GL), resolved
                          // relative to the config file's directory

  std::string canonical_json;  // sorted-key echo of the parsed file

  bool is_quantum() const {
    return experiment == ExperimentKind::Ising1d || experiment == ExperimentKind::Ising2d;
  }
  int nsites() const { return experiment == ExperimentKind::Ising2d ? rows * cols : d; }
};

// Parse and validate config text; `dir` is the directory the file came
// from, used to resolve relative reference paths.  Throws ConfigError
// naming the offending key.
ExperimentConfig parse_config(const std::string& text, const std::string& dir = ".");
ExperimentConfig load_config(const std::string& path);

std::string experiment_name(ExperimentKind kind);

// stable fingerprint of the fields that determine a cached reference
// (potential kind and parameters, domain, basis); hex string
std::string reference_config_hash(const ExperimentConfig& cfg);

}  // namespace ttv
