#include <cstdint>
#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "cdpr/errors.hpp"
#include "experiments.hpp"

namespace {

struct CommonArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config, "experiment config file (key = value lines)");
  cmd->add_option("--out", args.out, "output directory (overrides the config's out key)");
  cmd->add_option("--seed", args.seed, "base seed (overrides the config's seed key)");
}

cdpr::ExperimentConfig load_config(const CommonArgs& args) {
  cdpr::ExperimentConfig cfg;
  if (!args.config.empty()) cfg = cdpr::parse_config_file(args.config);
  if (!args.out.empty()) cfg.out = args.out;
  if (args.seed.has_value()) cfg.seed = *args.seed;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coded-diffraction-pattern phase retrieval experiments"};
  app.require_subcommand(1);

  CommonArgs gen_args;
  CLI::App* gen = app.add_subcommand("generate-masks", "write mask PBMs and spectra");
  add_common(gen, gen_args);

  CommonArgs sim_args;
  CLI::App* sim = app.add_subcommand("simulate", "acquire a measurement-set directory");
  add_common(sim, sim_args);

  cdpr::ReconstructOptions rec_opt;
  CLI::App* rec = app.add_subcommand("reconstruct", "solve a measurement set");
  rec->add_option("measurement_dir", rec_opt.measurement_dir, "measurement-set directory")
      ->required();
  rec->add_option("--out", rec_opt.out, "output directory (default <measurement_dir>/recon)");
  rec->add_option("--alpha", rec_opt.alpha, "TV weight override");
  rec->add_option("--seed", rec_opt.seed, "solver seed override");

  cdpr::EvaluateOptions eval_opt;
  bool no_phase_align = false;
  CLI::App* evl = app.add_subcommand("evaluate", "score a reconstruction against the truth");
  evl->add_option("recon_dir", eval_opt.recon_dir, "reconstruction directory")->required();
  evl->add_option("--truth", eval_opt.truth, "truth sidecar (default: measurement-set truth)");
  evl->add_option("--out", eval_opt.out, "output directory (default <recon_dir>/eval)");
  evl->add_flag("--no-phase-align", no_phase_align, "compare without global phase alignment");

  CommonArgs sweep_args;
  int jobs = 1;
  CLI::App* swp = app.add_subcommand("sweep", "run a parameter grid and emit one CSV");
  add_common(swp, sweep_args);
  swp->add_option("--jobs", jobs, "concurrent cells")->check(CLI::PositiveNumber);

  CommonArgs ker_args;
  std::optional<double> ker_alpha;
  CLI::App* ker = app.add_subcommand("kernel-experiment",
                                     "recover the defocus kernel itself from measurements");
  add_common(ker, ker_args);
  ker->add_option("--alpha", ker_alpha, "TV weight override (default 0.01 here)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) {
      cdpr::cmd_generate_masks(load_config(gen_args));
    } else if (sim->parsed()) {
      cdpr::cmd_simulate(load_config(sim_args));
    } else if (rec->parsed()) {
      cdpr::cmd_reconstruct(rec_opt);
    } else if (evl->parsed()) {
      eval_opt.phase_align = !no_phase_align;
      cdpr::cmd_evaluate(eval_opt);
    } else if (swp->parsed()) {
      cdpr::cmd_sweep(load_config(sweep_args), jobs);
    } else if (ker->parsed()) {
      cdpr::ExperimentConfig cfg = load_config(ker_args);
      if (ker_alpha.has_value()) {
        cfg.solver.alpha = *ker_alpha;
        cfg.solver_alpha_explicit = true;
      }
      cdpr::cmd_kernel_experiment(cfg);
    }
  } catch (const cdpr::InvalidInput& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const cdpr::NumericalFailure& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const cdpr::IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
