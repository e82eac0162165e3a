#include "experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <climits>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <thread>

#include "builtin_targets.hpp"
#include "cdpr/errors.hpp"
#include "cdpr/fft.hpp"
#include "cdpr/io.hpp"
#include "cdpr/metrics.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace cdpr {
namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw InvalidInput("config: " + key + ": cannot parse '" + v + "' as a number");
  }
  return out;
}

long long to_ll(const std::string& key, const std::string& v) {
  long long out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw InvalidInput("config: " + key + ": cannot parse '" + v + "' as an integer");
  }
  return out;
}

int to_int(const std::string& key, const std::string& v) {
  long long x = to_ll(key, v);
  if (x < INT_MIN || x > INT_MAX) throw InvalidInput("config: " + key + ": out of range");
  return static_cast<int>(x);
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw InvalidInput("config: " + key + ": cannot parse '" + v + "' as an unsigned integer");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw InvalidInput("config: " + key + ": expected true or false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(v);
  while (std::getline(in, item, ',')) {
    std::string t = trim(item);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

std::vector<double> to_dlist(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const std::string& item : split_list(v)) out.push_back(to_double(key, item));
  if (out.empty()) throw InvalidInput("config: " + key + ": needs at least one value");
  return out;
}

std::vector<std::string> to_kinds(const std::string& key, const std::string& v) {
  std::vector<std::string> out = split_list(v);
  if (out.empty()) throw InvalidInput("config: " + key + ": needs at least one value");
  for (const std::string& k : out) mask_kind_from_string(k);  // validates
  return out;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += items[i];
  }
  return out;
}

std::string join_d(const std::vector<double>& items) {
  std::vector<std::string> s;
  for (double v : items) s.push_back(format_double(v));
  return join(s);
}

ExperimentConfig config_from_map(std::map<std::string, std::string> kv) {
  ExperimentConfig cfg;
  auto take = [&kv](const char* key) -> std::optional<std::string> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    std::string v = it->second;
    kv.erase(it);
    return v;
  };

  if (auto v = take("size")) cfg.size = to_int("size", *v);
  if (auto v = take("target")) cfg.target = *v;
  if (auto v = take("target.file")) cfg.target_file = *v;
  if (auto v = take("mask.kinds")) cfg.mask_kinds = to_kinds("mask.kinds", *v);
  if (auto v = take("mask.kind")) {
    mask_kind_from_string(*v);
    cfg.mask_kind = *v;
  }
  if (auto v = take("mask.sigma")) cfg.mask_sigma = to_double("mask.sigma", *v);
  if (auto v = take("mask.r1")) cfg.mask_r1 = to_double("mask.r1", *v);
  if (auto v = take("mask.count")) cfg.mask_count = to_int("mask.count", *v);
  if (auto v = take("spectrum.bins")) cfg.spectrum_bins = to_int("spectrum.bins", *v);
  if (auto v = take("seed")) cfg.seed = to_u64("seed", *v);
  if (auto v = take("truncation")) cfg.truncation = to_double("truncation", *v);
  if (auto v = take("snr_db"); v && !v->empty()) {
    cfg.has_snr_target = true;
    cfg.snr_db = to_double("snr_db", *v);
  }
  if (auto v = take("sensor.enabled")) cfg.sensor_enabled = to_bool("sensor.enabled", *v);
  if (auto v = take("sensor.photon_scale")) {
    cfg.sensor.photon_scale = to_double("sensor.photon_scale", *v);
  }
  if (auto v = take("sensor.gaussian_sigma")) {
    cfg.sensor.gaussian_sigma = to_double("sensor.gaussian_sigma", *v);
  }
  if (auto v = take("sensor.bit_depth")) cfg.sensor.bit_depth = to_int("sensor.bit_depth", *v);
  if (auto v = take("sensor.full_well")) cfg.sensor.full_well = to_double("sensor.full_well", *v);
  if (auto v = take("defocus.enabled")) cfg.defocus_enabled = to_bool("defocus.enabled", *v);
  if (auto v = take("defocus.wavelength")) {
    cfg.defocus.wavelength = to_double("defocus.wavelength", *v);
  }
  if (auto v = take("defocus.focal_length")) {
    cfg.defocus.focal_length = to_double("defocus.focal_length", *v);
  }
  if (auto v = take("defocus.distance")) cfg.defocus.distance = to_double("defocus.distance", *v);
  if (auto v = take("defocus.pitch")) cfg.defocus.pitch = to_double("defocus.pitch", *v);
  if (auto v = take("solver.alpha")) {
    cfg.solver.alpha = to_double("solver.alpha", *v);
    cfg.solver_alpha_explicit = true;
  }
  if (auto v = take("solver.rho_fourier")) {
    cfg.solver.rho_fourier = to_double("solver.rho_fourier", *v);
  }
  if (auto v = take("solver.rho_tv")) cfg.solver.rho_tv = to_double("solver.rho_tv", *v);
  if (auto v = take("solver.max_iters")) cfg.solver.max_iters = to_int("solver.max_iters", *v);
  if (auto v = take("solver.rel_tol")) cfg.solver.rel_tol = to_double("solver.rel_tol", *v);
  if (auto v = take("solver.cg_iters")) cfg.solver.cg_iters = to_int("solver.cg_iters", *v);
  if (auto v = take("solver.cg_tol")) cfg.solver.cg_tol = to_double("solver.cg_tol", *v);
  if (auto v = take("solver.epsilon")) cfg.solver.epsilon = to_double("solver.epsilon", *v);
  if (auto v = take("solver.init")) {
    if (*v == "flat") {
      cfg.solver.init_mode = InitMode::flat;
    } else if (*v == "seeded-random") {
      cfg.solver.init_mode = InitMode::seeded_random;
    } else {
      throw InvalidInput("config: solver.init must be flat or seeded-random, got '" + *v + "'");
    }
  }
  if (auto v = take("sweep.mode")) cfg.sweep_mode = *v;
  if (auto v = take("sweep.sigmas")) cfg.sweep_sigmas = to_dlist("sweep.sigmas", *v);
  if (auto v = take("sweep.r1s")) cfg.sweep_r1s = to_dlist("sweep.r1s", *v);
  if (auto v = take("sweep.kinds")) cfg.sweep_kinds = to_kinds("sweep.kinds", *v);
  if (auto v = take("sweep.snrs")) cfg.sweep_snrs = to_dlist("sweep.snrs", *v);
  if (auto v = take("sweep.repeats")) cfg.sweep_repeats = to_int("sweep.repeats", *v);
  if (auto v = take("sweep.ref_sigma")) cfg.sweep_ref_sigma = to_double("sweep.ref_sigma", *v);
  if (auto v = take("sweep.ref_r1")) cfg.sweep_ref_r1 = to_double("sweep.ref_r1", *v);
  if (auto v = take("out")) cfg.out = *v;

  if (!kv.empty()) throw InvalidInput("config: unknown key '" + kv.begin()->first + "'");

  if (cfg.size < 2) throw InvalidInput("config: size must be at least 2");
  if (cfg.mask_count < 1) throw InvalidInput("config: mask.count must be at least 1");
  if (cfg.spectrum_bins < 4) throw InvalidInput("config: spectrum.bins must be at least 4");
  if (!(cfg.mask_sigma >= 0.0 && cfg.mask_sigma <= 1.0)) {
    throw InvalidInput("config: mask.sigma must lie in [0, 1]");
  }
  if (!(cfg.truncation >= 0.0 && cfg.truncation < 1.0)) {
    throw InvalidInput("config: truncation must lie in [0, 1)");
  }
  if (cfg.sweep_repeats < 1) throw InvalidInput("config: sweep.repeats must be at least 1");
  if (cfg.target != "builtin" && cfg.target != "uniform" && cfg.target != "file") {
    throw InvalidInput("config: target must be builtin, uniform, or file, got '" + cfg.target +
                       "'");
  }
  if (cfg.target == "file" && cfg.target_file.empty()) {
    throw InvalidInput("config: target = file requires target.file");
  }
  if (cfg.sweep_mode != "sigma-r1" && cfg.sweep_mode != "kind-snr") {
    throw InvalidInput("config: sweep.mode must be sigma-r1 or kind-snr, got '" + cfg.sweep_mode +
                       "'");
  }
  if (cfg.has_snr_target && !cfg.sensor_enabled) {
    throw InvalidInput("config: snr_db requires sensor.enabled = true");
  }
  return cfg;
}

json read_json_file(const fs::path& p) {
  const auto bytes = read_file_bytes(p);
  try {
    return json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    throw IoError(p.string() + ": " + e.what());
  }
}

void write_json_file(const fs::path& p, const json& j) {
  const std::string text = j.dump(2) + "\n";
  write_file_bytes(p, text.data(), text.size());
}

json checksum_map(const fs::path& dir, const std::vector<std::string>& files) {
  json j = json::object();
  for (const std::string& f : files) j[f] = fnv1a64_hex(dir / f);
  return j;
}

// Mirrors the auto-full-well rule in acquire: 1.2 x the clean truncated
// stack peak, in photons.
double stack_full_well(const ComplexImage& u, const std::vector<BinaryMask>& masks,
                       const std::optional<DefocusParams>& defocus, double truncation,
                       double photon_scale) {
  ComplexImage kernel;
  const ComplexImage* kernel_ptr = nullptr;
  if (defocus.has_value()) {
    kernel = defocus_kernel(u.width, u.height, *defocus);
    kernel_ptr = &kernel;
  }
  double peak = 0.0;
  for (const BinaryMask& m : masks) {
    const RealImage y = truncate_high_freq(forward_intensity(u, m, kernel_ptr), truncation);
    for (double v : y.data) peak = std::max(peak, v);
  }
  return peak > 0.0 ? 1.2 * peak * photon_scale : 1.0;
}

// Resolves the sensor for a single-stack command: seed from the experiment
// seed, photon_scale from SNR calibration when a target is set. The
// calibrated scale is materialized back into cfg for the manifest echo.
std::optional<SensorParams> resolve_sensor(ExperimentConfig& cfg, const ComplexImage& u,
                                           const std::vector<BinaryMask>& masks,
                                           const std::optional<DefocusParams>& defocus) {
  if (!cfg.sensor_enabled) return std::nullopt;
  SensorParams s = cfg.sensor;
  s.seed = cfg.seed;
  if (cfg.has_snr_target) {
    s.photon_scale = calibrate_photon_scale(u, masks, defocus, s, cfg.truncation, cfg.snr_db);
    cfg.sensor.photon_scale = s.photon_scale;
  }
  return s;
}

std::vector<std::vector<std::string>> trace_rows(const SolverTrace& tr) {
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < tr.objective.size(); ++i) {
    rows.push_back({std::to_string(i + 1), format_double(tr.objective[i]),
                    format_double(tr.res_fourier[i]), format_double(tr.res_tv[i]),
                    format_double(tr.rel_change[i])});
  }
  return rows;
}

const std::vector<std::string> kTraceHeader = {"iter", "objective", "res_fourier", "res_tv",
                                               "rel_change"};

bool trace_converged(const SolverTrace& tr, double rel_tol) {
  return !tr.rel_change.empty() && tr.rel_change.back() < rel_tol;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw InvalidInput("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) {
      throw InvalidInput("config line " + std::to_string(lineno) + ": empty key");
    }
    if (!kv.emplace(key, value).second) {
      throw InvalidInput("config: duplicate key '" + key + "'");
    }
  }
  return config_from_map(std::move(kv));
}

ExperimentConfig parse_config_file(const fs::path& p) {
  const auto bytes = read_file_bytes(p);
  return parse_config_text(std::string(bytes.begin(), bytes.end()));
}

std::string render_config(const ExperimentConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> rows;
  auto put = [&rows](const char* k, std::string v) { rows.emplace_back(k, std::move(v)); };
  put("size", std::to_string(cfg.size));
  put("target", cfg.target);
  put("target.file", cfg.target_file);
  put("mask.kinds", join(cfg.mask_kinds));
  put("mask.kind", cfg.mask_kind);
  put("mask.sigma", format_double(cfg.mask_sigma));
  put("mask.r1", format_double(cfg.mask_r1));
  put("mask.count", std::to_string(cfg.mask_count));
  put("spectrum.bins", std::to_string(cfg.spectrum_bins));
  put("seed", std::to_string(cfg.seed));
  put("truncation", format_double(cfg.truncation));
  put("snr_db", cfg.has_snr_target ? format_double(cfg.snr_db) : "");
  put("sensor.enabled", cfg.sensor_enabled ? "true" : "false");
  put("sensor.photon_scale", format_double(cfg.sensor.photon_scale));
  put("sensor.gaussian_sigma", format_double(cfg.sensor.gaussian_sigma));
  put("sensor.bit_depth", std::to_string(cfg.sensor.bit_depth));
  put("sensor.full_well", format_double(cfg.sensor.full_well));
  put("defocus.enabled", cfg.defocus_enabled ? "true" : "false");
  put("defocus.wavelength", format_double(cfg.defocus.wavelength));
  put("defocus.focal_length", format_double(cfg.defocus.focal_length));
  put("defocus.distance", format_double(cfg.defocus.distance));
  put("defocus.pitch", format_double(cfg.defocus.pitch));
  put("solver.alpha", format_double(cfg.solver.alpha));
  put("solver.rho_fourier", format_double(cfg.solver.rho_fourier));
  put("solver.rho_tv", format_double(cfg.solver.rho_tv));
  put("solver.max_iters", std::to_string(cfg.solver.max_iters));
  put("solver.rel_tol", format_double(cfg.solver.rel_tol));
  put("solver.cg_iters", std::to_string(cfg.solver.cg_iters));
  put("solver.cg_tol", format_double(cfg.solver.cg_tol));
  put("solver.epsilon", format_double(cfg.solver.epsilon));
  put("solver.init", cfg.solver.init_mode == InitMode::flat ? "flat" : "seeded-random");
  put("sweep.mode", cfg.sweep_mode);
  put("sweep.sigmas", join_d(cfg.sweep_sigmas));
  put("sweep.r1s", join_d(cfg.sweep_r1s));
  put("sweep.kinds", join(cfg.sweep_kinds));
  put("sweep.snrs", join_d(cfg.sweep_snrs));
  put("sweep.repeats", std::to_string(cfg.sweep_repeats));
  put("sweep.ref_sigma", format_double(cfg.sweep_ref_sigma));
  put("sweep.ref_r1", format_double(cfg.sweep_ref_r1));
  put("out", cfg.out);
  std::sort(rows.begin(), rows.end());
  std::string out;
  for (const auto& [k, v] : rows) {
    out += k;
    out += " = ";
    out += v;
    out += '\n';
  }
  return out;
}

ComplexImage make_target(const ExperimentConfig& cfg) {
  if (cfg.target == "builtin") return targets::builtin_target(cfg.size);
  if (cfg.target == "uniform") {
    ComplexImage u(cfg.size, cfg.size);
    std::fill(u.data.begin(), u.data.end(), cplx(1.0, 0.0));
    return u;
  }
  if (cfg.target == "file") {
    ComplexImage u = read_complex_pair(cfg.target_file);
    if (u.width != cfg.size || u.height != cfg.size) {
      throw InvalidInput("target file is " + std::to_string(u.width) + "x" +
                         std::to_string(u.height) + " but size = " + std::to_string(cfg.size));
    }
    return u;
  }
  throw InvalidInput("unknown target kind: " + cfg.target);
}

std::vector<BinaryMask> make_masks(const std::string& kind, int count, int size, double sigma,
                                   double r1, std::uint64_t base_seed) {
  if (count < 1) throw InvalidInput("make_masks: count must be at least 1");
  const MaskKind mk = mask_kind_from_string(kind);
  std::vector<BinaryMask> masks;
  masks.reserve(count);
  for (int i = 0; i < count; ++i) {
    const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(i);
    if (sigma == 0.0 || sigma == 1.0) {
      BinaryMask m = constant_mask(size, size, sigma == 1.0 ? 1 : 0);
      m.kind = mk;
      m.seed = seed;
      masks.push_back(std::move(m));
    } else if (mk == MaskKind::white) {
      masks.push_back(white_noise_mask(size, size, sigma, seed));
    } else if (mk == MaskKind::blue) {
      masks.push_back(blue_noise_mask(size, size, sigma, seed));
    } else {
      masks.push_back(fmedg_generate(size, size, sigma, r1, seed));
    }
  }
  return masks;
}

void cmd_generate_masks(const ExperimentConfig& cfg) {
  const fs::path dir(cfg.out);
  fs::create_directories(dir);
  std::vector<std::string> files;
  for (const std::string& kind : cfg.mask_kinds) {
    const auto masks =
        make_masks(kind, cfg.mask_count, cfg.size, cfg.mask_sigma, cfg.mask_r1, cfg.seed);
    for (int i = 0; i < cfg.mask_count; ++i) {
      char stem[64];
      std::snprintf(stem, sizeof stem, "%s_%02d", kind.c_str(), i);
      const BinaryMask& m = masks[static_cast<std::size_t>(i)];
      write_mask(m, high_freq_ratio(m), dir / (std::string(stem) + ".pbm"));
      const SpectralProfile prof = radial_power_spectrum(m, cfg.spectrum_bins);
      std::vector<std::vector<std::string>> rows;
      for (std::size_t b = 0; b < prof.bin_centers.size(); ++b) {
        rows.push_back({format_double(prof.bin_centers[b]), format_double(prof.mean_power[b])});
      }
      write_csv(dir / (std::string(stem) + "_spectrum.csv"), {"bin_center", "mean_power"}, rows);
      files.push_back(std::string(stem) + ".pbm");
      files.push_back(std::string(stem) + ".json");
      files.push_back(std::string(stem) + "_spectrum.csv");
    }
  }
  json manifest;
  manifest["schema"] = "cdpr-masks-v1";
  manifest["config"] = render_config(cfg);
  manifest["checksums"] = checksum_map(dir, files);
  write_json_file(dir / "manifest.json", manifest);
}

void cmd_simulate(const ExperimentConfig& cfg0) {
  ExperimentConfig cfg = cfg0;
  const ComplexImage target = make_target(cfg);
  const auto masks =
      make_masks(cfg.mask_kind, cfg.mask_count, cfg.size, cfg.mask_sigma, cfg.mask_r1, cfg.seed);
  const std::optional<DefocusParams> defocus =
      cfg.defocus_enabled ? std::optional<DefocusParams>(cfg.defocus) : std::nullopt;
  const auto sensor = resolve_sensor(cfg, target, masks, defocus);
  const MeasurementSet ms = acquire(target, masks, defocus, sensor, cfg.truncation);
  if (ms.sensor.has_value()) cfg.sensor.full_well = ms.sensor->full_well;
  write_measurement_set(ms, cfg.out, &target, render_config(cfg));
}

void cmd_reconstruct(const ReconstructOptions& opt) {
  const LoadedMeasurementDir loaded = read_measurement_set(opt.measurement_dir);
  ExperimentConfig cfg;
  if (!loaded.config_echo.empty()) cfg = parse_config_text(loaded.config_echo);
  SolverConfig scfg = cfg.solver;
  scfg.seed = cfg.seed;
  if (opt.alpha.has_value()) scfg.alpha = *opt.alpha;
  if (opt.seed.has_value()) scfg.seed = *opt.seed;
  const SolveResult res = solve_tv_map(loaded.ms, scfg);

  const fs::path out = opt.out.empty() ? opt.measurement_dir / "recon" : opt.out;
  fs::create_directories(out);
  write_complex_pair(res.u, out / "recon.json");
  write_csv(out / "trace.csv", kTraceHeader, trace_rows(res.trace));

  cfg.solver = scfg;
  cfg.seed = scfg.seed;
  json manifest;
  manifest["schema"] = "cdpr-recon-v1";
  manifest["measurement_dir"] = opt.measurement_dir.string();
  manifest["iterations"] = res.trace.objective.size();
  manifest["converged"] = trace_converged(res.trace, scfg.rel_tol);
  manifest["config"] = render_config(cfg);
  manifest["checksums"] =
      checksum_map(out, {"recon.json", "recon_amp.f64", "recon_phase.f64", "trace.csv"});
  write_json_file(out / "manifest.json", manifest);
}

void cmd_evaluate(const EvaluateOptions& opt) {
  const json rman = read_json_file(opt.recon_dir / "manifest.json");
  if (rman.value("schema", "") != "cdpr-recon-v1") {
    throw IoError(opt.recon_dir.string() + ": not a reconstruction directory");
  }
  const fs::path mdir(rman.at("measurement_dir").get<std::string>());
  const LoadedMeasurementDir loaded = read_measurement_set(mdir);
  const ComplexImage est = read_complex_pair(opt.recon_dir / "recon.json");

  ComplexImage truth(1, 1);
  if (!opt.truth.empty()) {
    truth = read_complex_pair(opt.truth);
  } else if (loaded.truth.has_value()) {
    truth = *loaded.truth;
  } else {
    throw InvalidInput("evaluate: measurement set has no stored truth; pass --truth");
  }
  const EvalReport rep = evaluate(truth, est, opt.phase_align);

  ExperimentConfig mcfg;
  bool have_cfg = false;
  if (!loaded.config_echo.empty()) {
    mcfg = parse_config_text(loaded.config_echo);
    have_cfg = true;
  }
  const BinaryMask& m0 = loaded.ms.items.front().mask;
  const bool have_snr = have_cfg && mcfg.has_snr_target;

  // Own subdirectory by default: every artifact directory carries exactly
  // one manifest.json, and the recon manifest must survive evaluation.
  const fs::path out = opt.out.empty() ? opt.recon_dir / "eval" : opt.out;
  fs::create_directories(out);
  json report;
  report["sse_amplitude_db"] = rep.sse_amplitude_db;
  report["sse_phase_db"] = rep.sse_phase_db;
  report["phase_aligned"] = rep.phase_aligned;
  report["phase_unnormalized"] = rep.phase_unnormalized;
  report["floor_applied"] = rep.floor_applied;
  report["mask_kind"] = to_string(m0.kind);
  report["mask_sigma"] = m0.sigma;
  report["mask_r1"] = m0.r1;
  report["m"] = loaded.ms.items.size();
  if (have_snr) {
    report["snr_db"] = mcfg.snr_db;
  } else {
    report["snr_db"] = nullptr;
  }
  write_json_file(out / "report.json", report);

  const std::vector<std::string> row = {
      to_string(m0.kind),
      format_double(m0.sigma),
      m0.kind == MaskKind::green ? format_double(m0.r1) : "",
      have_snr ? format_double(mcfg.snr_db) : "",
      std::to_string(loaded.ms.items.size()),
      format_double(rep.sse_amplitude_db),
      format_double(rep.sse_phase_db)};
  write_csv(out / "report.csv",
            {"kind", "sigma", "r1", "snr_db", "m", "sse_amplitude_db", "sse_phase_db"}, {row});

  json manifest;
  manifest["schema"] = "cdpr-eval-v1";
  manifest["recon_dir"] = opt.recon_dir.string();
  manifest["checksums"] = checksum_map(out, {"report.json", "report.csv"});
  write_json_file(out / "manifest.json", manifest);
}

namespace {

struct SweepCell {
  std::string kind;
  double sigma = 0.0;
  double r1 = 0.0;
  double snr = 0.0;
  bool has_snr = false;
};

struct CellOutcome {
  bool ok = false;
  std::string error;
  double amp_db = 0.0;
  double phase_db = 0.0;
};

std::string cell_label(const SweepCell& cell, const std::string& mode) {
  std::string s = "kind=" + cell.kind + " sigma=" + format_double(cell.sigma);
  if (mode == "sigma-r1" || cell.kind == "green") s += " r1=" + format_double(cell.r1);
  if (cell.has_snr) s += " snr=" + format_double(cell.snr);
  return s;
}

}  // namespace

void cmd_sweep(const ExperimentConfig& cfg0, int jobs) {
  ExperimentConfig cfg = cfg0;
  const ComplexImage target = make_target(cfg);
  const std::optional<DefocusParams> defocus =
      cfg.defocus_enabled ? std::optional<DefocusParams>(cfg.defocus) : std::nullopt;

  std::vector<SweepCell> cells;
  if (cfg.sweep_mode == "sigma-r1") {
    for (double sigma : cfg.sweep_sigmas) {
      for (double r1 : cfg.sweep_r1s) {
        cells.push_back({cfg.mask_kind, sigma, r1, 0.0, false});
      }
    }
  } else {
    for (const std::string& kind : cfg.sweep_kinds) {
      for (double snr : cfg.sweep_snrs) {
        cells.push_back({kind, cfg.mask_sigma, cfg.mask_r1, snr, true});
      }
    }
  }

  // sigma-r1 mode compares spectra at a fixed photon budget: calibrate at
  // the reference cell once, then freeze photon_scale and full_well for
  // every cell. kind-snr mode instead pins each cell to its own SNR.
  std::optional<SensorParams> base_sensor;
  if (cfg.sensor_enabled) {
    SensorParams s = cfg.sensor;
    s.seed = cfg.seed;
    if (cfg.sweep_mode == "sigma-r1") {
      const auto ref_masks = make_masks(cfg.mask_kind, cfg.mask_count, cfg.size,
                                        cfg.sweep_ref_sigma, cfg.sweep_ref_r1, cfg.seed);
      if (cfg.has_snr_target) {
        s.photon_scale =
            calibrate_photon_scale(target, ref_masks, defocus, s, cfg.truncation, cfg.snr_db);
      }
      if (s.full_well <= 0.0) {
        s.full_well = stack_full_well(target, ref_masks, defocus, cfg.truncation, s.photon_scale);
      }
      cfg.sensor.photon_scale = s.photon_scale;
      cfg.sensor.full_well = s.full_well;
    }
    base_sensor = s;
  }

  const int repeats = cfg.sweep_repeats;
  auto run_cell = [&](const SweepCell& cell) {
    CellOutcome out;
    try {
      double amp_sum = 0.0;
      double phase_sum = 0.0;
      for (int r = 0; r < repeats; ++r) {
        const std::uint64_t base = cfg.seed + 100000ull * static_cast<std::uint64_t>(r);
        const auto masks =
            make_masks(cell.kind, cfg.mask_count, cfg.size, cell.sigma, cell.r1, base);
        std::optional<SensorParams> sensor;
        if (base_sensor.has_value()) {
          SensorParams s = *base_sensor;
          s.seed = base;
          if (cell.has_snr) {
            s.photon_scale =
                calibrate_photon_scale(target, masks, defocus, s, cfg.truncation, cell.snr);
          }
          sensor = s;
        }
        const MeasurementSet ms = acquire(target, masks, defocus, sensor, cfg.truncation);
        SolverConfig scfg = cfg.solver;
        scfg.seed = base;
        const SolveResult res = solve_tv_map(ms, scfg);
        const EvalReport rep = evaluate(target, res.u, true);
        amp_sum += rep.sse_amplitude_db;
        phase_sum += rep.sse_phase_db;
      }
      out.ok = true;
      out.amp_db = amp_sum / repeats;
      out.phase_db = phase_sum / repeats;
    } catch (const std::exception& e) {
      out.error = e.what();
    }
    return out;
  };

  std::vector<CellOutcome> outcomes(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= cells.size()) return;
      outcomes[idx] = run_cell(cells[idx]);
    }
  };
  const int n_threads =
      std::max(1, std::min<int>(jobs, static_cast<int>(cells.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  const fs::path dir(cfg.out);
  fs::create_directories(dir);
  std::vector<std::vector<std::string>> rows;
  json errors = json::object();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const SweepCell& cell = cells[i];
    const CellOutcome& oc = outcomes[i];
    rows.push_back({cell.kind, format_double(cell.sigma),
                    (cfg.sweep_mode == "sigma-r1" || cell.kind == "green")
                        ? format_double(cell.r1)
                        : "",
                    cell.has_snr ? format_double(cell.snr) : "",
                    std::to_string(cfg.mask_count), std::to_string(repeats),
                    oc.ok ? format_double(oc.amp_db) : "",
                    oc.ok ? format_double(oc.phase_db) : "", oc.ok ? "ok" : "failed"});
    if (!oc.ok) errors[cell_label(cell, cfg.sweep_mode)] = oc.error;
  }
  write_csv(dir / "sweep.csv",
            {"kind", "sigma", "r1", "snr_db", "m", "repeats", "sse_amplitude_db", "sse_phase_db",
             "status"},
            rows);

  json manifest;
  manifest["schema"] = "cdpr-sweep-v1";
  manifest["cells"] = cells.size();
  manifest["config"] = render_config(cfg);
  manifest["errors"] = errors;
  manifest["checksums"] = checksum_map(dir, {"sweep.csv"});
  write_json_file(dir / "manifest.json", manifest);
}

void cmd_kernel_experiment(const ExperimentConfig& cfg0) {
  ExperimentConfig cfg = cfg0;
  const ComplexImage h = defocus_kernel(cfg.size, cfg.size, cfg.defocus);
  const auto masks =
      make_masks(cfg.mask_kind, cfg.mask_count, cfg.size, cfg.mask_sigma, cfg.mask_r1, cfg.seed);
  const auto sensor = resolve_sensor(cfg, h, masks, std::nullopt);
  const MeasurementSet ms = acquire(h, masks, std::nullopt, sensor, cfg.truncation);
  if (ms.sensor.has_value()) cfg.sensor.full_well = ms.sensor->full_well;

  SolverConfig scfg = cfg.solver;
  scfg.seed = cfg.seed;
  // A unimodular kernel has no amplitude structure worth a strong prior.
  if (!cfg.solver_alpha_explicit) scfg.alpha = 0.01;
  const SolveResult res = solve_tv_map(ms, scfg);
  const EvalReport rep = evaluate(h, res.u, true);

  const fs::path out(cfg.out);
  fs::create_directories(out);
  write_complex_pair(res.u, out / "recon.json");
  write_csv(out / "trace.csv", kTraceHeader, trace_rows(res.trace));
  json report;
  report["sse_amplitude_db"] = rep.sse_amplitude_db;
  report["sse_phase_db"] = rep.sse_phase_db;
  report["phase_aligned"] = rep.phase_aligned;
  report["iterations"] = res.trace.objective.size();
  report["converged"] = trace_converged(res.trace, scfg.rel_tol);
  write_json_file(out / "report.json", report);

  cfg.solver = scfg;
  json manifest;
  manifest["schema"] = "cdpr-kernel-v1";
  manifest["config"] = render_config(cfg);
  manifest["checksums"] = checksum_map(
      out, {"recon.json", "recon_amp.f64", "recon_phase.f64", "trace.csv", "report.json"});
  write_json_file(out / "manifest.json", manifest);
}

}  // namespace cdpr
