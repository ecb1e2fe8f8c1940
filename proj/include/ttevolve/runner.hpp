#pragma once

#include <string>

#include "ttevolve/config.hpp"

namespace ttv {

// Execute one experiment, writing trace.csv, energy.csv or
// marginals_mode*.csv, run_meta.json and optional SVG plots into
// cfg.output_dir.  Returns the trace.csv path.  Errors carry a message
// naming the failing stage.
std::string run_experiment(const ExperimentConfig& cfg);

// Compute and cache reference data for a config: Lanczos ground energy for
// the spin models, exact quadrature marginals for the double well, a
// long-run Langevin histogram for Ginzburg-Landau.  Writes to
// cfg.reference when set, else into cfg.output_dir.  selfcheck reruns the
// Monte Carlo reference under a second seed and records the total
// variation between the two.  Returns the cache path.
std::string run_oracle(const ExperimentConfig& cfg, bool selfcheck = false);

}  // namespace ttv
