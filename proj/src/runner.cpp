#include "ttevolve/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "ttevolve/csv.hpp"
#include "ttevolve/langevin.hpp"
#include "ttevolve/quantum.hpp"
#include "ttevolve/svg.hpp"

#ifndef TTEVOLVE_GIT_HASH
#define TTEVOLVE_GIT_HASH "unknown"
#endif

namespace ttv {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string join_interior_ranks(const std::vector<int>& ranks) {
  std::string s;
  for (std::size_t b = 1; b + 1 < ranks.size(); ++b) {
    if (!s.empty()) s += ';';
    s += std::to_string(ranks[b]);
  }
  return s.empty() ? "1" : s;
}

int max_rank_of(const std::vector<int>& ranks) {
  return *std::max_element(ranks.begin(), ranks.end());
}

// long-run Langevin settings for the Ginzburg-Landau reference marginal;
// sized so two independent seeds agree to TV ~1e-2 (docs/config.md)
struct McOracleParams {
  long long particles = 250000;
  double substep = 0.002;
  int substeps = 30;  // one outer step covers substeps * substep time
  double t_total = 12.0;
  int bins = 100;
  std::uint64_t seed = 101;
};

IsingModel build_model(const ExperimentConfig& cfg) {
  if (cfg.experiment == ExperimentKind::Ising2d)
    return ising_lattice(cfg.rows, cfg.cols, cfg.field, cfg.periodic);
  return ising_chain(cfg.d, cfg.field, cfg.periodic);
}

Potential build_potential(const ExperimentConfig& cfg) {
  if (cfg.experiment == ExperimentKind::DoubleWell) return double_well(cfg.d, cfg.coeff);
  return ginzburg_landau(cfg.d, cfg.lambda);
}

UnivariateBasis build_basis(const ExperimentConfig& cfg) {
  const double dx = 2.0 * cfg.halfwidth / (cfg.basis_size - 2);
  return gaussian_kernel_basis(cfg.basis_size, cfg.halfwidth, dx, 64);
}

void write_meta(const ExperimentConfig& cfg, const fs::path& dir, const json& extra,
                double walltime) {
  json meta;
  meta["config"] = json::parse(cfg.canonical_json);
  meta["experiment"] = experiment_name(cfg.experiment);
  meta["git_hash"] = TTEVOLVE_GIT_HASH;
  meta["threads"] = cfg.threads;
  meta["walltime_s"] = walltime;
  meta.update(extra);
  std::ofstream os(dir / "run_meta.json", std::ios::binary);
  if (!os) throw StructuralError("cannot write run_meta.json in '" + dir.string() + "'");
  os << meta.dump(2) << "\n";
}

std::vector<Eigen::VectorXd> load_reference_marginals(const ExperimentConfig& cfg,
                                                      const UnivariateBasis& basis,
                                                      const Potential& pot) {
  std::vector<Eigen::VectorXd> refs;
  if (cfg.reference.empty()) {
    if (cfg.experiment != ExperimentKind::DoubleWell)
      throw ConfigError(
          "ginzburg-landau runs need a cached reference marginal; run the oracle subcommand "
          "and point the 'reference' key at its output");
    for (int m : cfg.marginal_modes)
      refs.push_back(equilibrium_marginal(pot, cfg.beta, basis, m));
    return refs;
  }
  CsvTable t;
  try {
    t = CsvTable::read(cfg.reference);
  } catch (const std::exception& e) {
    throw ConfigError("cannot read reference '" + cfg.reference + "': " + e.what());
  }
  const std::string want = "config_hash=" + reference_config_hash(cfg);
  bool hash_ok = false;
  for (const auto& c : t.comments)
    if (c.find(want) != std::string::npos) hash_ok = true;
  if (!hash_ok)
    throw ConfigError("reference '" + cfg.reference +
                      "' was computed for a different model (expected " + want + ")");
  const int cmode = t.column_index("mode");
  const int cgrid = t.column_index("grid");
  const int cval = t.column_index("value");
  if (cmode < 0 || cgrid < 0 || cval < 0)
    throw ConfigError("reference '" + cfg.reference + "' must have columns mode,grid,value");
  const Eigen::VectorXd& nodes = basis.quad().nodes;
  for (int m : cfg.marginal_modes) {
    Eigen::VectorXd v(nodes.size());
    Eigen::Index q = 0;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      if (static_cast<int>(t.number(r, cmode)) != m) continue;
      if (q >= nodes.size()) throw ConfigError("reference has extra grid rows for a mode");
      if (std::abs(t.number(r, cgrid) - nodes(q)) > 1e-9 * basis.halfwidth())
        throw ConfigError("reference grid does not match the basis quadrature; regenerate it");
      v(q++) = t.number(r, cval);
    }
    if (q != nodes.size())
      throw ConfigError("reference '" + cfg.reference + "' is missing mode " +
                        std::to_string(m));
    refs.push_back(v);
  }
  return refs;
}

std::string run_quantum(const ExperimentConfig& cfg, const fs::path& dir) {
  const Clock::time_point t_start = Clock::now();
  const IsingModel model = build_model(cfg);
  const int n = model.nsites;
  const HsDecomposition hs = build_hs(model, cfg.dt);
  const std::vector<int> dims(n, 2);

  TensorTrain<cplx> state = cfg.init == InitKind::Uniform
                                ? uniform_product_state(n)
                                : random_state(n, cfg.init_rank, cfg.seed);
  const TensorTrain<cplx> mixed_ref = uniform_product_state(n);

  double eref = 0.0;
  bool has_ref = false;
  if (n <= 16) {
    eref = lanczos_oracle(model).first;
    has_ref = true;
  }

  SketchFamily sketch =
      SketchFamily::random(dims, cfg.sketch.size, mix_seed(cfg.seed, 0x51c7, 0));

  std::vector<std::string> comments;
  if (has_ref) comments.push_back("reference_energy=" + csv_num(eref));
  CsvWriter trace((dir / "trace.csv").string(),
                  {"iteration", "E_symmetric", "E_mixed", "max_rank", "ranks", "walltime_s"},
                  comments);
  CsvWriter energy((dir / "energy.csv").string(), {"iteration", "E_symmetric", "E_mixed"},
                   comments);

  double esym = 0, emix = 0;
  for (int iter = 1; iter <= cfg.iterations; ++iter) {
    const Clock::time_point t0 = Clock::now();
    try {
      if (cfg.resample_sketch)
        sketch =
            SketchFamily::random(dims, cfg.sketch.size, mix_seed(cfg.seed, 0x51c7, iter));
      if (cfg.compressor.kind == CompressorKind::Sketch)
        state = afqmc_step(state, model, hs, cfg.particles, sketch, cfg.svd_threshold,
                           cfg.seed, iter, nullptr, cfg.threads, cfg.strang);
      else
        state = afqmc_step_round(state, model, hs, cfg.particles, cfg.compressor.max_rank,
                                 cfg.seed, iter, cfg.strang);
      esym = energy_symmetric(state, model);
      emix = energy_mixed(state, mixed_ref, model);
    } catch (const NumericalError& e) {
      throw NumericalError("iteration " + std::to_string(iter) + ": " + e.what());
    }
    const std::vector<int> ranks = state.ranks();
    trace.row({csv_num(static_cast<long long>(iter)), csv_num(esym), csv_num(emix),
               csv_num(static_cast<long long>(max_rank_of(ranks))), join_interior_ranks(ranks),
               csv_num(seconds_since(t0))});
    energy.row({csv_num(static_cast<long long>(iter)), csv_num(esym), csv_num(emix)});
  }
  trace.flush();
  energy.flush();

  json extra;
  if (has_ref) extra["reference_energy"] = eref;
  extra["final"] = {{"E_symmetric", esym}, {"E_mixed", emix}};
  extra["artifacts"] = {"trace.csv", "energy.csv"};
  if (cfg.svg) {
    plot_csv((dir / "energy.csv").string(), (dir / "energy.svg").string());
    extra["artifacts"].push_back("energy.svg");
  }
  write_meta(cfg, dir, extra, seconds_since(t_start));
  return (dir / "trace.csv").string();
}

std::string run_langevin(const ExperimentConfig& cfg, const fs::path& dir) {
  const Clock::time_point t_start = Clock::now();
  const Potential pot = build_potential(cfg);
  const UnivariateBasis basis = build_basis(cfg);
  LangevinConfig lcfg;
  lcfg.beta = cfg.beta;
  lcfg.dt = cfg.dt;
  lcfg.substeps = cfg.substeps;
  lcfg.halfwidth = cfg.halfwidth;
  lcfg.particles = cfg.particles;
  const SketchFamily sketch = SketchFamily::cluster(basis, cfg.sketch.cluster, cfg.d);
  const std::vector<Eigen::VectorXd> refs = load_reference_marginals(cfg, basis, pot);

  TensorTrain<double> density = uniform_density(cfg.d, basis);

  std::vector<std::string> columns = {"iteration"};
  for (int m : cfg.marginal_modes) columns.push_back("err_mode" + std::to_string(m));
  columns.insert(columns.end(), {"clamped_fraction", "max_rank", "ranks", "walltime_s"});
  CsvWriter trace((dir / "trace.csv").string(), columns);

  std::vector<double> errs(cfg.marginal_modes.size(), 0.0);
  double clamped = 0;
  for (int iter = 1; iter <= cfg.iterations; ++iter) {
    const Clock::time_point t0 = Clock::now();
    try {
      FpeStepResult r = fpe_step(density, pot, lcfg, basis, sketch, cfg.svd_threshold,
                                 cfg.seed, iter, cfg.threads);
      density = std::move(r.density);
      clamped = r.diag.clamped_fraction;
      for (std::size_t i = 0; i < cfg.marginal_modes.size(); ++i)
        errs[i] = marginal_error(density, refs[i], basis, cfg.marginal_modes[i]);
    } catch (const NumericalError& e) {
      throw NumericalError("iteration " + std::to_string(iter) + ": " + e.what());
    }
    const std::vector<int> ranks = density.ranks();
    std::vector<std::string> cells = {csv_num(static_cast<long long>(iter))};
    for (double e : errs) cells.push_back(csv_num(e));
    cells.insert(cells.end(), {csv_num(clamped), csv_num(static_cast<long long>(max_rank_of(ranks))),
                               join_interior_ranks(ranks), csv_num(seconds_since(t0))});
    trace.row(cells);
  }
  trace.flush();

  const Eigen::VectorXd& nodes = basis.quad().nodes;
  json extra;
  extra["artifacts"] = {"trace.csv"};
  json final_block;
  for (std::size_t i = 0; i < cfg.marginal_modes.size(); ++i) {
    const int m = cfg.marginal_modes[i];
    const std::string name = "marginals_mode" + std::to_string(m) + ".csv";
    CsvWriter mt((dir / name).string(), {"grid", "reference", "density"});
    const Eigen::VectorXd vals = tt_marginal_on_grid(density, basis, m);
    for (Eigen::Index q = 0; q < nodes.size(); ++q)
      mt.row({csv_num(nodes(q)), csv_num(refs[i](q)), csv_num(vals(q))});
    mt.flush();
    extra["artifacts"].push_back(name);
    final_block["err_mode" + std::to_string(m)] = errs[i];
    if (cfg.svg) {
      const std::string svg = "marginals_mode" + std::to_string(m) + ".svg";
      plot_csv((dir / name).string(), (dir / svg).string());
      extra["artifacts"].push_back(svg);
    }
  }
  final_block["clamped_fraction"] = clamped;
  extra["final"] = final_block;
  if (cfg.svg) {
    plot_csv((dir / "trace.csv").string(), (dir / "errors.svg").string());
    extra["artifacts"].push_back("errors.svg");
  }
  write_meta(cfg, dir, extra, seconds_since(t_start));
  return (dir / "trace.csv").string();
}

}  // namespace

std::string run_experiment(const ExperimentConfig& cfg) {
  const fs::path dir(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec && !fs::is_directory(dir))
    throw ConfigError("cannot create output directory '" + cfg.output_dir + "'");
  if (cfg.is_quantum()) return run_quantum(cfg, dir);
  return run_langevin(cfg, dir);
}

std::string run_oracle(const ExperimentConfig& cfg, bool selfcheck) {
  fs::path out;
  if (cfg.reference.empty())
    out = fs::path(cfg.output_dir) / ("oracle_" + experiment_name(cfg.experiment) + "_" +
                                      reference_config_hash(cfg) + ".csv");
  else
    out = fs::path(cfg.reference);
  if (!out.parent_path().empty()) {
    std::error_code ec;
    fs::create_directories(out.parent_path(), ec);
  }
  const std::string hash_line = "config_hash=" + reference_config_hash(cfg);

  if (cfg.is_quantum()) {
    if (cfg.nsites() > 16) throw ConfigError("Lanczos reference capped at 16 sites");
    const IsingModel model = build_model(cfg);
    const double e = lanczos_oracle(model).first;
    CsvWriter w(out.string(), {"quantity", "value"},
                {experiment_name(cfg.experiment) + " nsites=" + std::to_string(cfg.nsites()) +
                     " field=" + csv_num(cfg.field) + (cfg.periodic ? " periodic" : " open"),
                 hash_line});
    w.row({"ground_energy", csv_num(e)});
    w.flush();
    return out.string();
  }

  const Potential pot = build_potential(cfg);
  const UnivariateBasis basis = build_basis(cfg);
  const Eigen::VectorXd& nodes = basis.quad().nodes;
  const Eigen::VectorXd& weights = basis.quad().weights;

  std::vector<std::string> comments;
  std::vector<Eigen::VectorXd> marginals;
  if (cfg.experiment == ExperimentKind::DoubleWell) {
    comments = {"double-well equilibrium marginals by direct quadrature", hash_line};
    for (int m : cfg.marginal_modes)
      marginals.push_back(equilibrium_marginal(pot, cfg.beta, basis, m));
  } else {
    const McOracleParams P;
    LangevinConfig ocfg;
    ocfg.beta = cfg.beta;
    ocfg.dt = P.substep * P.substeps;
    ocfg.substeps = P.substeps;
    ocfg.halfwidth = cfg.halfwidth;
    ocfg.particles = P.particles;
    comments = {"ginzburg-landau equilibrium marginals by long-run Langevin histogram",
                "oracle: particles=" + std::to_string(P.particles) +
                    " substep=" + csv_num(P.substep) + " t_total=" + csv_num(P.t_total) +
                    " bins=" + std::to_string(P.bins) + " seed=" + std::to_string(P.seed),
                hash_line};
    for (int m : cfg.marginal_modes) {
      marginals.push_back(mc_equilibrium_marginal(pot, ocfg, basis, m, P.particles, P.t_total,
                                                  P.seed, cfg.threads, P.bins));
      if (selfcheck) {
        const Eigen::VectorXd again = mc_equilibrium_marginal(
            pot, ocfg, basis, m, P.particles, P.t_total, P.seed + 101, cfg.threads, P.bins);
        const double tv = 0.5 * (weights.array() * (marginals.back() - again).array().abs()).sum();
        comments.push_back("tv_selfcheck mode=" + std::to_string(m) + " seeds=" +
                           std::to_string(P.seed) + "/" + std::to_string(P.seed + 101) + " tv=" +
                           csv_num(tv));
      }
    }
  }

  CsvWriter w(out.string(), {"mode", "grid", "value"}, comments);
  for (std::size_t i = 0; i < marginals.size(); ++i)
    for (Eigen::Index q = 0; q < nodes.size(); ++q)
      w.row({csv_num(static_cast<long long>(cfg.marginal_modes[i])), csv_num(nodes(q)),
             csv_num(marginals[i](q))});
  w.flush();
  return out.string();
}

}  // namespace ttv
