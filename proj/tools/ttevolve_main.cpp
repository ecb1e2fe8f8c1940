#include <cstdlib>
#include <functional>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "ttevolve/common.hpp"
#include "ttevolve/config.hpp"
#include "ttevolve/runner.hpp"
#include "ttevolve/svg.hpp"

namespace {

int guarded(const char* stage, const std::function<void()>& fn) {
  try {
    fn();
    return 0;
  } catch (const ttv::ConfigError& e) {
    std::cerr << "error (" << stage << "): " << e.what() << "\n";
    return 2;
  } catch (const ttv::NumericalError& e) {
    std::cerr << "error (" << stage << "): " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error (" << stage << "): " << e.what() << "\n";
    return 1;
  }
}

void apply_compressor(ttv::ExperimentConfig& cfg, const std::string& text) {
  if (text == "sketch") {
    cfg.compressor.kind = ttv::CompressorKind::Sketch;
    return;
  }
  std::string head = text;
  const auto colon = text.find(':');
  if (colon != std::string::npos) head = text.substr(0, colon);
  if (head != "add-and-round")
    throw ttv::ConfigError("--compressor must be 'sketch' or 'add-and-round[:max_rank]' (got '" +
                           text + "')");
  cfg.compressor.kind = ttv::CompressorKind::AddAndRound;
  if (colon != std::string::npos) {
    try {
      cfg.compressor.max_rank = std::stoi(text.substr(colon + 1));
    } catch (const std::exception&) {
      cfg.compressor.max_rank = 0;
    }
    if (cfg.compressor.max_rank < 1)
      throw ttv::ConfigError("--compressor add-and-round needs a positive max_rank (got '" +
                             text + "')");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"particle simulation with tensor-train re-estimation by sketching"};
  app.require_subcommand(1);

  std::string run_config, oracle_config, plot_in, plot_out;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string compressor;
  bool selfcheck = false;

  CLI::App* run = app.add_subcommand("run", "execute an experiment config");
  run->add_option("config", run_config, "experiment config (JSON)")->required();
  CLI::Option* seed_opt = run->add_option("--seed", seed, "override the config seed");
  CLI::Option* threads_opt =
      run->add_option("--threads", threads, "override the config thread count");
  CLI::Option* comp_opt = run->add_option(
      "--compressor", compressor, "override the compressor: sketch | add-and-round[:max_rank]");

  CLI::App* oracle = app.add_subcommand("oracle", "compute and cache reference data");
  oracle->add_option("config", oracle_config, "experiment config (JSON)")->required();
  CLI::Option* othreads_opt =
      oracle->add_option("--threads", threads, "override the config thread count");
  oracle->add_flag("--selfcheck", selfcheck,
                   "rerun the Monte Carlo reference under a second seed and record the total "
                   "variation between the two");

  CLI::App* plot = app.add_subcommand("plot", "render a trace or marginal CSV as SVG");
  plot->add_option("csv", plot_in, "trace or marginal table CSV")->required();
  plot->add_option("--out", plot_out, "output SVG path (default: CSV path with .svg)");

  CLI11_PARSE(app, argc, argv);

  if (*run) {
    return guarded("run", [&] {
      ttv::ExperimentConfig cfg = ttv::load_config(run_config);
      if (seed_opt->count()) cfg.seed = seed;
      if (threads_opt->count()) cfg.threads = threads;
      if (comp_opt->count()) apply_compressor(cfg, compressor);
      if (const char* env = std::getenv("TTEVOLVE_OUTDIR")) cfg.output_dir = env;
      const std::string trace = ttv::run_experiment(cfg);
      std::cout << "wrote " << trace << "\n";
    });
  }
  if (*oracle) {
    return guarded("oracle", [&] {
      ttv::ExperimentConfig cfg = ttv::load_config(oracle_config);
      if (othreads_opt->count()) cfg.threads = threads;
      const std::string path = ttv::run_oracle(cfg, selfcheck);
      std::cout << "wrote " << path << "\n";
    });
  }
  return guarded("plot", [&] {
    std::string out = plot_out;
    if (out.empty()) {
      out = plot_in;
      const auto dot = out.find_last_of('.');
      if (dot == std::string::npos || out.find('/', dot) != std::string::npos)
        out += ".svg";
      else
        out = out.substr(0, dot) + ".svg";
    }
    ttv::plot_csv(plot_in, out);
    std::cout << "wrote " << out << "\n";
  });
}
