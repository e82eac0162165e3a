#pragma once

#include <optional>

#include "cdpr/image.hpp"

namespace cdpr {

struct EvalReport {
  double sse_amplitude_db = 0.0;
  double sse_phase_db = 0.0;
  std::optional<double> profile_mse;
  ComplexImage aligned;             // the estimate after phase alignment
  bool floor_applied = false;       // some metric hit the -120 dB floor
  bool phase_unnormalized = false;  // zero-phase reference: raw sum reported
  bool phase_aligned = true;        // false when alignment undefined/disabled
};

// Principal value of an angle in (-pi, pi].
double wrap_angle(double a);

// est * exp(-i theta*) with theta* = arg(sum est * conj(ref)), the
// minimizer of |est e^{-i theta} - ref|^2. Throws AlignmentUndefined when
// the correlation sum is zero.
ComplexImage align_global_phase(const ComplexImage& est, const ComplexImage& ref);

// 10 log10(sum (|ref| - |est|)^2 / sum |ref|^2), floored at -120 dB.
double sse_amplitude(const ComplexImage& ref, const ComplexImage& est);

// 10 log10(sum wrap(angle ref - angle est)^2 / sum (angle ref)^2), floored
// at -120 dB. Callers align est first; a zero-phase reference makes the
// denominator degenerate, in which case the unnormalized error sum is
// returned and *unnormalized set.
double sse_phase(const ComplexImage& ref, const ComplexImage& est,
                 bool* unnormalized = nullptr);

// Mean squared difference along one row of the amplitude images.
double profile_mse(const RealImage& ref, const RealImage& est, int row);

// Bundles alignment + both SSE metrics; align_phase = false reproduces the
// literal unaligned comparison.
EvalReport evaluate(const ComplexImage& ref, const ComplexImage& est,
                    bool align_phase = true);

}  // namespace cdpr
