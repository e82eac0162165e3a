#include "cdpr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cdpr/errors.hpp"

namespace cdpr {
namespace {

constexpr double kFloorDb = -120.0;
constexpr double kCapDb = 120.0;

double to_db_floored(double num, double den) {
  if (num <= 0.0) return kFloorDb;
  const double db = 10.0 * std::log10(num / den);
  if (db < kFloorDb) return kFloorDb;
  if (db > kCapDb) return kCapDb;
  return db;
}

}  // namespace

double wrap_angle(double a) {
  double w = std::remainder(a, 2.0 * M_PI);
  if (w <= -M_PI) w += 2.0 * M_PI;
  return w;
}

ComplexImage align_global_phase(const ComplexImage& est, const ComplexImage& ref) {
  require_same_dims(est.width, est.height, ref.width, ref.height, "align_global_phase");
  cplx corr(0.0, 0.0);
  for (std::size_t i = 0; i < est.data.size(); ++i) {
    corr += est.data[i] * std::conj(ref.data[i]);
  }
  if (corr == cplx(0.0, 0.0)) {
    throw AlignmentUndefined("align_global_phase: correlation sum is zero");
  }
  // theta* = arg(sum est conj(ref)) minimizes |est e^{-i theta} - ref|^2.
  const cplx rot = std::conj(corr) / std::abs(corr);
  ComplexImage out = est;
  for (cplx& v : out.data) v *= rot;
  return out;
}

double sse_amplitude(const ComplexImage& ref, const ComplexImage& est) {
  require_same_dims(ref.width, ref.height, est.width, est.height, "sse_amplitude");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < ref.data.size(); ++i) {
    const double ra = std::abs(ref.data[i]);
    const double d = ra - std::abs(est.data[i]);
    num += d * d;
    den += ra * ra;
  }
  if (den <= 0.0) throw InvalidInput("sse_amplitude: reference has zero amplitude");
  return to_db_floored(num, den);
}

double sse_phase(const ComplexImage& ref, const ComplexImage& est, bool* unnormalized) {
  require_same_dims(ref.width, ref.height, est.width, est.height, "sse_phase");
  if (unnormalized != nullptr) *unnormalized = false;
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < ref.data.size(); ++i) {
    const double pr = std::arg(ref.data[i]);
    const double d = wrap_angle(pr - std::arg(est.data[i]));
    num += d * d;
    den += pr * pr;
  }
  if (den <= 0.0) {
    // Zero-phase reference: the normalized metric is undefined, report the
    // raw wrapped error sum and flag it.
    if (unnormalized != nullptr) *unnormalized = true;
    if (num <= 0.0) return kFloorDb;
    const double db = 10.0 * std::log10(num);
    return std::clamp(db, kFloorDb, kCapDb);
  }
  return to_db_floored(num, den);
}

double profile_mse(const RealImage& ref, const RealImage& est, int row) {
  require_same_dims(ref.width, ref.height, est.width, est.height, "profile_mse");
  if (row < 0 || row >= ref.height) {
    throw InvalidInput("profile_mse: row " + std::to_string(row) + " out of range 0.." +
                       std::to_string(ref.height - 1));
  }
  double s = 0.0;
  for (int c = 0; c < ref.width; ++c) {
    const double d = ref.at(row, c) - est.at(row, c);
    s += d * d;
  }
  return s / ref.width;
}

EvalReport evaluate(const ComplexImage& ref, const ComplexImage& est, bool align_phase) {
  EvalReport report;
  report.aligned = est;
  report.phase_aligned = false;
  if (align_phase) {
    try {
      report.aligned = align_global_phase(est, ref);
      report.phase_aligned = true;
    } catch (const AlignmentUndefined&) {
      // keep the unaligned estimate, flagged via phase_aligned = false
    }
  }
  report.sse_amplitude_db = sse_amplitude(ref, report.aligned);
  bool unnorm = false;
  report.sse_phase_db = sse_phase(ref, report.aligned, &unnorm);
  report.phase_unnormalized = unnorm;
  report.floor_applied =
      report.sse_amplitude_db <= kFloorDb || report.sse_phase_db <= kFloorDb;
  return report;
}

}  // namespace cdpr
