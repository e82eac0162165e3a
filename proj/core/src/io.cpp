#include "cdpr/io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <system_error>
#include <vector>

#include "json.hpp"

#include "cdpr/errors.hpp"

namespace cdpr {

static_assert(std::endian::native == std::endian::little,
              "flat f64 artifacts are little-endian; big-endian hosts need a swap pass");

namespace {

using nlohmann::json;

json load_json(const std::filesystem::path& p) {
  const auto bytes = read_file_bytes(p);
  try {
    return json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    throw IoError(p.string() + ": " + e.what());
  }
}

void write_json(const json& j, const std::filesystem::path& p) {
  const std::string text = j.dump(2) + "\n";
  write_file_bytes(p, text.data(), text.size());
}

// Netpbm header tokenizer: skips whitespace and '#' comment lines.
struct PnmReader {
  const std::vector<unsigned char>& bytes;
  std::size_t pos = 0;
  const std::filesystem::path& path;

  std::string token() {
    while (pos < bytes.size()) {
      const char c = static_cast<char>(bytes[pos]);
      if (c == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        ++pos;
      } else {
        break;
      }
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) ++pos;
    if (start == pos) throw IoError(path.string() + ": truncated netpbm header");
    return std::string(bytes.begin() + static_cast<std::ptrdiff_t>(start),
                       bytes.begin() + static_cast<std::ptrdiff_t>(pos));
  }

  int int_token() {
    const std::string t = token();
    int v = 0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc() || res.ptr != t.data() + t.size()) {
      throw IoError(path.string() + ": bad integer '" + t + "' in netpbm header");
    }
    return v;
  }

  // Consume exactly one whitespace byte separating header from raster.
  void raster_start() {
    if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
      throw IoError(path.string() + ": malformed netpbm raster separator");
    }
    ++pos;
  }
};

std::string index_name(const char* prefix, std::size_t i, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s%03zu%s", prefix, i, ext);
  return buf;
}

json sidecar_json(const BinaryMask& mask, double eta) {
  json j;
  j["kind"] = to_string(mask.kind);
  j["sigma"] = mask.sigma;
  j["r1"] = mask.r1;
  j["seed"] = mask.seed;
  j["eta"] = eta;
  j["width"] = mask.width;
  j["height"] = mask.height;
  return j;
}

std::filesystem::path sidecar_path_for(const std::filesystem::path& pbm_path) {
  std::filesystem::path p = pbm_path;
  p.replace_extension(".json");
  return p;
}

}  // namespace

std::vector<unsigned char> read_file_bytes(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw IoError("cannot open " + p.string() + " for reading");
  f.seekg(0, std::ios::end);
  const std::streamoff size = f.tellg();
  f.seekg(0, std::ios::beg);
  std::vector<unsigned char> bytes(static_cast<std::size_t>(size));
  if (size > 0) f.read(reinterpret_cast<char*>(bytes.data()), size);
  if (!f) throw IoError("short read from " + p.string());
  return bytes;
}

void write_file_bytes(const std::filesystem::path& p, const void* data, std::size_t n) {
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + p.parent_path().string() + ": " + ec.message());
  }
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + p.string() + " for writing");
  f.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  f.flush();
  if (!f) throw IoError("short write to " + p.string());
}

std::uint64_t fnv1a64(const void* data, std::size_t n) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t h = 14695981039346656037ull;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= 1099511628211ull;
  }
  return h;
}

std::string fnv1a64_hex(const std::filesystem::path& p) {
  const auto bytes = read_file_bytes(p);
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes.data(), bytes.size())));
  return buf;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_mask(const BinaryMask& mask, double eta, const std::filesystem::path& pbm_path) {
  const int row_bytes = (mask.width + 7) / 8;
  std::vector<unsigned char> out;
  const std::string header =
      "P4\n" + std::to_string(mask.width) + " " + std::to_string(mask.height) + "\n";
  out.insert(out.end(), header.begin(), header.end());
  for (int r = 0; r < mask.height; ++r) {
    for (int b = 0; b < row_bytes; ++b) {
      unsigned char byte = 0;
      for (int k = 0; k < 8; ++k) {
        const int c = b * 8 + k;
        if (c < mask.width && mask.at(r, c)) byte |= static_cast<unsigned char>(0x80 >> k);
      }
      out.push_back(byte);
    }
  }
  write_file_bytes(pbm_path, out.data(), out.size());
  write_json(sidecar_json(mask, eta), sidecar_path_for(pbm_path));
}

BinaryMask read_mask(const std::filesystem::path& pbm_path) {
  const auto bytes = read_file_bytes(pbm_path);
  PnmReader reader{bytes, 0, pbm_path};
  if (reader.token() != "P4") throw IoError(pbm_path.string() + ": not a P4 bitmap");
  const int w = reader.int_token();
  const int h = reader.int_token();
  if (w < 1 || h < 1) throw IoError(pbm_path.string() + ": bad dimensions");
  reader.raster_start();
  const int row_bytes = (w + 7) / 8;
  if (bytes.size() - reader.pos < static_cast<std::size_t>(row_bytes) * h) {
    throw IoError(pbm_path.string() + ": truncated raster");
  }
  BinaryMask mask;
  mask.width = w;
  mask.height = h;
  mask.bits.assign(static_cast<std::size_t>(w) * h, 0);
  for (int r = 0; r < h; ++r) {
    const unsigned char* row = bytes.data() + reader.pos + static_cast<std::size_t>(r) * row_bytes;
    for (int c = 0; c < w; ++c) {
      mask.bits[static_cast<std::size_t>(r) * w + c] =
          (row[c / 8] >> (7 - c % 8)) & 1u;
    }
  }
  const json side = load_json(sidecar_path_for(pbm_path));
  try {
    mask.kind = mask_kind_from_string(side.at("kind").get<std::string>());
    mask.sigma = side.at("sigma").get<double>();
    mask.r1 = side.at("r1").get<double>();
    mask.seed = side.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw IoError(sidecar_path_for(pbm_path).string() + ": " + e.what());
  }
  return mask;
}

void write_pgm16(const std::vector<std::uint16_t>& codes, int width, int height, int maxval,
                 const std::filesystem::path& p) {
  if (maxval < 1 || maxval > 65535) throw IoError("write_pgm16: maxval must lie in 1..65535");
  if (codes.size() != static_cast<std::size_t>(width) * height) {
    throw IoError("write_pgm16: sample count does not match dimensions");
  }
  std::vector<unsigned char> out;
  const std::string header = "P5\n" + std::to_string(width) + " " + std::to_string(height) +
                             "\n" + std::to_string(maxval) + "\n";
  out.insert(out.end(), header.begin(), header.end());
  // Netpbm: one byte per sample up to maxval 255, big-endian pairs beyond.
  if (maxval > 255) {
    for (std::uint16_t v : codes) {
      out.push_back(static_cast<unsigned char>(v >> 8));
      out.push_back(static_cast<unsigned char>(v & 0xff));
    }
  } else {
    for (std::uint16_t v : codes) out.push_back(static_cast<unsigned char>(v));
  }
  write_file_bytes(p, out.data(), out.size());
}

Pgm16 read_pgm16(const std::filesystem::path& p) {
  const auto bytes = read_file_bytes(p);
  PnmReader reader{bytes, 0, p};
  if (reader.token() != "P5") throw IoError(p.string() + ": not a P5 graymap");
  Pgm16 img;
  img.width = reader.int_token();
  img.height = reader.int_token();
  img.maxval = reader.int_token();
  if (img.width < 1 || img.height < 1 || img.maxval < 1 || img.maxval > 65535) {
    throw IoError(p.string() + ": bad P5 header");
  }
  reader.raster_start();
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  const int bytes_per = img.maxval > 255 ? 2 : 1;
  if (bytes.size() - reader.pos < n * static_cast<std::size_t>(bytes_per)) {
    throw IoError(p.string() + ": truncated raster");
  }
  img.codes.resize(n);
  const unsigned char* raster = bytes.data() + reader.pos;
  for (std::size_t i = 0; i < n; ++i) {
    img.codes[i] = bytes_per == 2
                       ? static_cast<std::uint16_t>((raster[2 * i] << 8) | raster[2 * i + 1])
                       : raster[i];
  }
  return img;
}

void write_real_f64(const RealImage& img, const std::filesystem::path& p) {
  write_file_bytes(p, img.data.data(), img.data.size() * sizeof(double));
}

RealImage read_real_f64(const std::filesystem::path& p, int width, int height) {
  const auto bytes = read_file_bytes(p);
  RealImage img(width, height);
  if (bytes.size() != img.data.size() * sizeof(double)) {
    throw IoError(p.string() + ": size does not match " + std::to_string(width) + "x" +
                  std::to_string(height) + " float64 grid");
  }
  std::memcpy(img.data.data(), bytes.data(), bytes.size());
  return img;
}

void write_complex_pair(const ComplexImage& img, const std::filesystem::path& sidecar_path) {
  const std::string stem = sidecar_path.stem().string();
  const std::string amp_name = stem + "_amp.f64";
  const std::string phase_name = stem + "_phase.f64";
  RealImage amp(img.width, img.height);
  RealImage phase(img.width, img.height);
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    amp.data[i] = std::abs(img.data[i]);
    phase.data[i] = std::arg(img.data[i]);
  }
  const auto dir = sidecar_path.parent_path();
  write_real_f64(amp, dir / amp_name);
  write_real_f64(phase, dir / phase_name);
  json j;
  j["convention"] = "amp-phase-f64le-v1";
  j["width"] = img.width;
  j["height"] = img.height;
  j["amp"] = amp_name;
  j["phase"] = phase_name;
  write_json(j, sidecar_path);
}

ComplexImage read_complex_pair(const std::filesystem::path& sidecar_path) {
  const json j = load_json(sidecar_path);
  try {
    if (j.at("convention").get<std::string>() != "amp-phase-f64le-v1") {
      throw IoError(sidecar_path.string() + ": unknown complex-pair convention");
    }
    const int w = j.at("width").get<int>();
    const int h = j.at("height").get<int>();
    const auto dir = sidecar_path.parent_path();
    const RealImage amp = read_real_f64(dir / j.at("amp").get<std::string>(), w, h);
    const RealImage phase = read_real_f64(dir / j.at("phase").get<std::string>(), w, h);
    ComplexImage img(w, h);
    for (std::size_t i = 0; i < img.data.size(); ++i) {
      img.data[i] = std::polar(amp.data[i], phase.data[i]);
    }
    return img;
  } catch (const json::exception& e) {
    throw IoError(sidecar_path.string() + ": " + e.what());
  }
}

void write_csv(const std::filesystem::path& p, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  const auto append_row = [&out](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i > 0) out += ',';
      out += row[i];
    }
    out += '\n';
  };
  append_row(header);
  for (const auto& row : rows) {
    if (row.size() != header.size()) throw IoError("write_csv: ragged row");
    append_row(row);
  }
  write_file_bytes(p, out.data(), out.size());
}

void write_measurement_set(const MeasurementSet& ms, const std::filesystem::path& dir,
                           const ComplexImage* truth, const std::string& config_echo) {
  if (ms.items.empty()) throw IoError("write_measurement_set: empty measurement set");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  const int w = ms.items[0].mask.width;
  const int h = ms.items[0].mask.height;
  std::vector<std::string> files;
  for (std::size_t i = 0; i < ms.items.size(); ++i) {
    const Measurement& m = ms.items[i];
    const std::string mask_name = index_name("mask_", i, ".pbm");
    write_mask(m.mask, high_freq_ratio(m.mask), dir / mask_name);
    files.push_back(mask_name);
    files.push_back(index_name("mask_", i, ".json"));
    if (ms.sensor.has_value()) {
      // Invert the photon-unit decode back to integer sensor codes.
      const double max_code = static_cast<double>((1u << ms.sensor->bit_depth) - 1u);
      std::vector<std::uint16_t> codes(m.intensity.data.size());
      for (std::size_t j = 0; j < codes.size(); ++j) {
        const double c = std::floor(m.intensity.data[j] * ms.sensor->photon_scale /
                                        ms.sensor->full_well * max_code +
                                    0.5);
        codes[j] = static_cast<std::uint16_t>(std::min(std::max(c, 0.0), max_code));
      }
      const std::string y_name = index_name("y_", i, ".pgm");
      write_pgm16(codes, w, h, static_cast<int>(max_code), dir / y_name);
      files.push_back(y_name);
    } else {
      const std::string y_name = index_name("y_", i, ".f64");
      write_real_f64(m.intensity, dir / y_name);
      files.push_back(y_name);
    }
  }
  if (truth != nullptr) {
    write_complex_pair(*truth, dir / "truth.json");
    files.push_back("truth.json");
    files.push_back("truth_amp.f64");
    files.push_back("truth_phase.f64");
  }

  json manifest;
  manifest["schema"] = "cdpr-measurement-set-v1";
  manifest["width"] = w;
  manifest["height"] = h;
  manifest["m"] = ms.items.size();
  manifest["truncation_fraction"] = ms.truncation_fraction;
  if (ms.defocus.has_value()) {
    manifest["defocus"] = {{"wavelength", ms.defocus->wavelength},
                           {"focal_length", ms.defocus->focal_length},
                           {"distance", ms.defocus->distance},
                           {"pitch", ms.defocus->pitch}};
  } else {
    manifest["defocus"] = nullptr;
  }
  if (ms.sensor.has_value()) {
    manifest["sensor"] = {{"photon_scale", ms.sensor->photon_scale},
                          {"gaussian_sigma", ms.sensor->gaussian_sigma},
                          {"bit_depth", ms.sensor->bit_depth},
                          {"full_well", ms.sensor->full_well},
                          {"seed", ms.sensor->seed}};
  } else {
    manifest["sensor"] = nullptr;
  }
  manifest["truth"] = truth != nullptr;
  if (!config_echo.empty()) manifest["config"] = config_echo;
  json checks;
  for (const std::string& name : files) checks[name] = fnv1a64_hex(dir / name);
  manifest["checksums"] = checks;
  write_json(manifest, dir / "manifest.json");
}

LoadedMeasurementDir read_measurement_set(const std::filesystem::path& dir) {
  const json manifest = load_json(dir / "manifest.json");
  LoadedMeasurementDir loaded;
  try {
    if (manifest.at("schema").get<std::string>() != "cdpr-measurement-set-v1") {
      throw IoError(dir.string() + ": unknown measurement-set schema");
    }
    for (const auto& [name, hex] : manifest.at("checksums").items()) {
      const std::string actual = fnv1a64_hex(dir / name);
      if (actual != hex.get<std::string>()) {
        throw IoError(dir.string() + ": checksum mismatch for " + name);
      }
    }
    MeasurementSet ms;
    ms.truncation_fraction = manifest.at("truncation_fraction").get<double>();
    if (!manifest.at("defocus").is_null()) {
      const json& d = manifest.at("defocus");
      ms.defocus = DefocusParams{d.at("wavelength").get<double>(),
                                 d.at("focal_length").get<double>(),
                                 d.at("distance").get<double>(), d.at("pitch").get<double>()};
    }
    if (!manifest.at("sensor").is_null()) {
      const json& s = manifest.at("sensor");
      SensorParams sp;
      sp.photon_scale = s.at("photon_scale").get<double>();
      sp.gaussian_sigma = s.at("gaussian_sigma").get<double>();
      sp.bit_depth = s.at("bit_depth").get<int>();
      sp.full_well = s.at("full_well").get<double>();
      sp.seed = s.at("seed").get<std::uint64_t>();
      ms.sensor = sp;
    }
    const auto m = manifest.at("m").get<std::size_t>();
    const int w = manifest.at("width").get<int>();
    const int h = manifest.at("height").get<int>();
    for (std::size_t i = 0; i < m; ++i) {
      Measurement item;
      item.mask = read_mask(dir / index_name("mask_", i, ".pbm"));
      if (ms.sensor.has_value()) {
        const Pgm16 pgm = read_pgm16(dir / index_name("y_", i, ".pgm"));
        if (pgm.width != w || pgm.height != h) {
          throw IoError(dir.string() + ": intensity dimensions disagree with manifest");
        }
        item.intensity = RealImage(w, h);
        const double max_code = static_cast<double>((1u << ms.sensor->bit_depth) - 1u);
        for (std::size_t j = 0; j < item.intensity.data.size(); ++j) {
          // Same expression and evaluation order as apply_sensor's return path.
          item.intensity.data[j] = static_cast<double>(pgm.codes[j]) * ms.sensor->full_well /
                                   max_code / ms.sensor->photon_scale;
        }
      } else {
        item.intensity = read_real_f64(dir / index_name("y_", i, ".f64"), w, h);
      }
      ms.items.push_back(std::move(item));
    }
    if (manifest.at("truth").get<bool>()) {
      loaded.truth = read_complex_pair(dir / "truth.json");
    }
    if (manifest.contains("config")) {
      loaded.config_echo = manifest.at("config").get<std::string>();
    }
    loaded.ms = std::move(ms);
  } catch (const json::exception& e) {
    throw IoError(dir.string() + ": manifest error: " + e.what());
  }
  return loaded;
}

}  // namespace cdpr
