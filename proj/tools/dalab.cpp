#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dalab/errors.hpp"
#include "dalab/experiment.hpp"
#include "dalab/parallel.hpp"

namespace {

struct Options {
  std::string config;
  std::string out;
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out, "output directory (overrides the config)");
  cmd->add_option("--threads", o.threads, "worker threads (overrides DALAB_THREADS)")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o.seed, "random seed (overrides the config)");
}

int run(const Options& o, const std::optional<std::string>& only, bool validate_only) {
  dalab::ExperimentConfig cfg;
  try {
    cfg = dalab::load_config(o.config);
    if (o.seed) cfg.seed = *o.seed;
    if (!o.out.empty()) cfg.output_dir = o.out;
    if (only) cfg.analyses = {*only};
    dalab::validate_config(cfg);
  } catch (const dalab::LabError& e) {
    std::cerr << "invalid config: " << e.what() << '\n';
    return dalab::kExitInvalid;
  }
  if (validate_only) {
    std::cout << "config ok\n";
    return dalab::kExitOk;
  }

  if (o.threads) {
    dalab::set_thread_count(*o.threads);
  } else if (const char* env = std::getenv("DALAB_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) dalab::set_thread_count(n);
  }
  return dalab::run_experiment(cfg, std::cout);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical lab for derived-from-Anosov maps of the 3-torus"};
  app.require_subcommand(1);

  Options opts;
  struct Sub {
    const char* name;
    const char* help;
    std::optional<std::string> only;
  };
  const Sub subs[] = {
      {"analyze", "run the analyses selected in the config (default: full report)", std::nullopt},
      {"exponents", "Lyapunov exponents from random orbits", "exponents"},
      {"periodic", "periodic data by continuation from the linear map", "periodic"},
      {"conjugacy", "Franks conjugacy series and its residual", "conjugacy"},
      {"foliation", "leaf density profile and equivariance", "foliation"},
      {"validate", "check the config only", std::nullopt},
  };
  int status = 0;
  for (const auto& s : subs) {
    CLI::App* cmd = app.add_subcommand(s.name, s.help);
    add_common(cmd, opts);
    const bool validate_only = std::string(s.name) == "validate";
    cmd->callback([&status, &opts, only = s.only, validate_only] { status = run(opts, only, validate_only); });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : dalab::kExitInvalid;
  }
  return status;
}
