#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cdpr/image.hpp"
#include "cdpr/maskgen.hpp"
#include "cdpr/optics.hpp"

namespace cdpr {

// All writers are deterministic: no timestamps, fixed key order, shortest
// round-trip number formatting. Re-running a pipeline with the same inputs
// reproduces every artifact byte for byte. Failures throw IoError.

std::vector<unsigned char> read_file_bytes(const std::filesystem::path& p);
void write_file_bytes(const std::filesystem::path& p, const void* data, std::size_t n);

// 64-bit FNV-1a, the artifact checksum used in manifests.
std::uint64_t fnv1a64(const void* data, std::size_t n);
std::string fnv1a64_hex(const std::filesystem::path& p);

// Shortest decimal form that round-trips to the same double.
std::string format_double(double v);

// Masks: 1-bit PBM (P4, mask bit 1 stored as PBM black) plus a JSON sidecar
// {kind, sigma, r1, seed, eta, width, height} at the same stem.
void write_mask(const BinaryMask& mask, double eta, const std::filesystem::path& pbm_path);
BinaryMask read_mask(const std::filesystem::path& pbm_path);

// 16-bit binary PGM (P5, big-endian samples), used for sensor code images.
void write_pgm16(const std::vector<std::uint16_t>& codes, int width, int height,
                 int maxval, const std::filesystem::path& p);
struct Pgm16 {
  int width = 0;
  int height = 0;
  int maxval = 0;
  std::vector<std::uint16_t> codes;
};
Pgm16 read_pgm16(const std::filesystem::path& p);

// Flat float64 little-endian grids; dimensions live in the sidecars.
void write_real_f64(const RealImage& img, const std::filesystem::path& p);
RealImage read_real_f64(const std::filesystem::path& p, int width, int height);

// ComplexImage as an amplitude/phase file pair plus sidecar
// {width, height, convention: "amp-phase-f64le-v1", amp, phase}.
void write_complex_pair(const ComplexImage& img, const std::filesystem::path& sidecar_path);
ComplexImage read_complex_pair(const std::filesystem::path& sidecar_path);

void write_csv(const std::filesystem::path& p, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

// Measurement-set directory: mask_XXX.pbm/.json per mask, y_XXX.pgm sensor
// codes (or y_XXX.f64 for the ideal-sensor case), optional ground truth
// (truth.json pair), and manifest.json capturing every parameter, the file
// checksums, and an echo of the resolved experiment config.
void write_measurement_set(const MeasurementSet& ms, const std::filesystem::path& dir,
                           const ComplexImage* truth = nullptr,
                           const std::string& config_echo = "");

struct LoadedMeasurementDir {
  MeasurementSet ms;
  std::optional<ComplexImage> truth;
  std::string config_echo;
};
// Verifies manifest checksums; throws IoError on any mismatch.
LoadedMeasurementDir read_measurement_set(const std::filesystem::path& dir);

}  // namespace cdpr
