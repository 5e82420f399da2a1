// Batch driver: scaling, weakconv, pipeline and cellsweep runs writing CSV.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "stratum/experiments.hpp"

namespace ex = stratum::experiments;

namespace {

constexpr int kConfigError = 2;
constexpr int kNotConverged = 3;

struct Options {
  std::string config;
  std::string out;
  std::optional<int> seed;
  int threads = 1;
};

void add_common(CLI::App* sub, Options& opt) {
  sub->add_option("--config", opt.config, "experiment config (key = value lines)")->required();
  sub->add_option("--out", opt.out, "CSV output path; defaults to the config's output key");
  sub->add_option("--seed", opt.seed, "overrides the config seed")->check(CLI::NonNegativeNumber);
  sub->add_option("--threads", opt.threads, "worker threads")->check(CLI::PositiveNumber);
}

int run(const std::string& command, const Options& opt) {
  ex::ExperimentConfig cfg;
  try {
    cfg = ex::load_config(opt.config);
  } catch (const ex::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }
  if (opt.seed) {
    cfg.seed = static_cast<unsigned>(*opt.seed);
    cfg.cell.seed = cfg.seed;
  }
  const std::string path = opt.out.empty() ? cfg.output : opt.out;
  if (path.empty()) {
    std::cerr << "error: no output path (use --out or the 'output' key)\n";
    return kConfigError;
  }

  ex::RunOutput result;
  try {
    if (command == "scaling") result = ex::run_scaling(cfg, opt.threads);
    if (command == "weakconv") result = ex::run_weak_convergence(cfg, opt.threads);
    if (command == "pipeline") result = ex::run_pipeline(cfg, opt.threads);
    if (command == "cellsweep") result = ex::run_cell_sweep(cfg, opt.threads);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }

  std::ofstream os(path, std::ios::binary);
  if (!os) {
    std::cerr << "error: cannot write '" << path << "'\n";
    return kConfigError;
  }
  const std::string hash = cfg.hash();
  if (command == "cellsweep")
    ex::write_cell_csv(os, hash, cfg.n, result.cell_rows);
  else
    ex::write_result_csv(os, hash, result.rows);
  if (!result.extra_csv.empty()) {
    std::ofstream extra(path + ".strips.csv", std::ios::binary);
    extra << result.extra_csv;
  }
  if (!result.converged) {
    std::cerr << "warning: numerical non-convergence; partial results written to " << path << '\n';
    return kNotConverged;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Layered-composite rigidity and homogenization experiments"};
  app.require_subcommand(1);
  Options opt;
  for (const char* name : {"scaling", "weakconv", "pipeline", "cellsweep"}) add_common(app.add_subcommand(name), opt);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }
  return run(app.get_subcommands().front()->get_name(), opt);
}
