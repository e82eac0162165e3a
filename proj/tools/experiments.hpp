#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cdpr/optics.hpp"
#include "cdpr/solver.hpp"

namespace cdpr {

// Flat dotted key=value experiment configuration. Parsing rejects unknown
// and duplicate keys; render_config materializes every key (defaults
// included) in sorted order so a manifest echo is a complete, re-runnable
// description of the run.
struct ExperimentConfig {
  int size = 64;
  std::string target = "builtin";  // builtin | uniform | file
  std::string target_file;

  std::vector<std::string> mask_kinds = {"white", "blue", "green"};  // generate-masks
  std::string mask_kind = "green";                                   // other commands
  double mask_sigma = 0.5;
  double mask_r1 = 1.5;
  int mask_count = 3;  // M for simulate/sweep, masks per kind for generate-masks
  int spectrum_bins = 16;

  std::uint64_t seed = 1;
  double truncation = 0.0;

  bool sensor_enabled = true;
  bool has_snr_target = false;  // snr_db key present and nonempty
  double snr_db = 26.5;
  SensorParams sensor;

  bool defocus_enabled = false;
  DefocusParams defocus;

  SolverConfig solver;
  bool solver_alpha_explicit = false;

  std::string sweep_mode = "sigma-r1";  // sigma-r1 | kind-snr
  std::vector<double> sweep_sigmas = {0.3, 0.4, 0.5, 0.6, 0.7};
  std::vector<double> sweep_r1s = {1.0, 1.5, 2.0, 2.5};
  std::vector<std::string> sweep_kinds = {"white", "blue", "green"};
  std::vector<double> sweep_snrs = {22.5, 24.5, 26.5};
  int sweep_repeats = 1;
  // Fixed-exposure reference cell: the sensor is calibrated once here and
  // the resolved photon budget is reused for every other cell.
  double sweep_ref_sigma = 0.5;
  double sweep_ref_r1 = 1.5;

  std::string out = "out";
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::filesystem::path& p);
std::string render_config(const ExperimentConfig& cfg);

ComplexImage make_target(const ExperimentConfig& cfg);

// count masks of one kind with seeds base_seed, base_seed+1, ...; sigma 0
// and 1 short-circuit to the constant constructors.
std::vector<BinaryMask> make_masks(const std::string& kind, int count, int size, double sigma,
                                   double r1, std::uint64_t base_seed);

// Commands throw InvalidInput / NumericalFailure / IoError; the CLI maps
// them to exit codes 2 / 3 / 4.
void cmd_generate_masks(const ExperimentConfig& cfg);
void cmd_simulate(const ExperimentConfig& cfg);

struct ReconstructOptions {
  std::filesystem::path measurement_dir;
  std::filesystem::path out;          // empty: <measurement_dir>/recon
  std::optional<double> alpha;        // --alpha
  std::optional<std::uint64_t> seed;  // --seed
};
void cmd_reconstruct(const ReconstructOptions& opt);

struct EvaluateOptions {
  std::filesystem::path recon_dir;
  std::filesystem::path truth;  // complex-pair sidecar; empty: measurement dir truth
  std::filesystem::path out;    // empty: <recon_dir>/eval
  bool phase_align = true;
};
void cmd_evaluate(const EvaluateOptions& opt);

void cmd_sweep(const ExperimentConfig& cfg, int jobs);
void cmd_kernel_experiment(const ExperimentConfig& cfg);

}  // namespace cdpr
