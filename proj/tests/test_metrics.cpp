#include <cmath>
#include <complex>
#include <numeric>
#include <vector>

#include "cdpr/errors.hpp"
#include "cdpr/image.hpp"
#include "cdpr/metrics.hpp"
#include "cdpr/random.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace cdpr;
using cdpr::testing::random_image;
using cdpr::testing::rel_err;

TEST_SUITE("metrics") {

TEST_CASE("wrap_angle lands in (-pi, pi]") {
  CHECK(wrap_angle(0.0) == 0.0);
  CHECK(wrap_angle(M_PI) == doctest::Approx(M_PI).epsilon(1e-15));
  CHECK(wrap_angle(M_PI) > 0.0);
  CHECK(wrap_angle(-M_PI) == doctest::Approx(M_PI).epsilon(1e-15));  // boundary maps up
  CHECK(wrap_angle(3.0 * M_PI) == doctest::Approx(M_PI).epsilon(1e-12));
  CHECK(wrap_angle(6.0) == doctest::Approx(6.0 - 2.0 * M_PI).epsilon(1e-12));
  CHECK(wrap_angle(-6.0) == doctest::Approx(2.0 * M_PI - 6.0).epsilon(1e-12));
  for (double a : {-20.0, -3.2, 1.0, 9.7, 100.3}) {
    const double w = wrap_angle(a);
    CHECK(w > -M_PI);
    CHECK(w <= M_PI);
    // Same angle modulo 2 pi.
    CHECK(std::remainder(a - w, 2.0 * M_PI) == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("global phase alignment recovers a pure rotation") {
  const ComplexImage ref = random_image(8, 8, 1);
  ComplexImage est = ref;
  const cplx rot = std::polar(1.0, M_PI / 3.0);
  for (cplx& v : est.data) v *= rot;

  const ComplexImage aligned = align_global_phase(est, ref);
  CHECK(rel_err(aligned, ref) < 1e-12);

  // Already aligned input stays put.
  const ComplexImage same = align_global_phase(ref, ref);
  CHECK(rel_err(same, ref) < 1e-14);
}

TEST_CASE("alignment beats every sampled phase") {
  const ComplexImage ref = random_image(8, 8, 2);
  const ComplexImage est = random_image(8, 8, 3);
  const ComplexImage aligned = align_global_phase(est, ref);

  double best = 0.0;
  for (std::size_t i = 0; i < ref.data.size(); ++i) best += std::norm(aligned.data[i] - ref.data[i]);

  for (int k = 0; k < 100; ++k) {
    const double theta = 2.0 * M_PI * k / 100.0;
    double dist = 0.0;
    for (std::size_t i = 0; i < ref.data.size(); ++i) {
      dist += std::norm(est.data[i] * std::polar(1.0, -theta) - ref.data[i]);
    }
    CHECK(dist >= best - 1e-9);
  }
}

TEST_CASE("orthogonal images make alignment undefined") {
  ComplexImage ref(4, 4);
  ComplexImage est(4, 4);
  ref.data[0] = cplx(1.0, 0.0);
  est.data[1] = cplx(1.0, 0.0);  // disjoint support: correlation is exactly 0
  CHECK_THROWS_AS(align_global_phase(est, ref), AlignmentUndefined);

  const EvalReport rep = evaluate(ref, est, true);
  CHECK(!rep.phase_aligned);
  CHECK(rep.aligned.data == est.data);  // falls back to the literal estimate
}

TEST_CASE("sse_amplitude formula, floor, and validation") {
  const ComplexImage ref = random_image(8, 8, 4);
  CHECK(sse_amplitude(ref, ref) == -120.0);

  ComplexImage twice = ref;
  for (cplx& v : twice.data) v *= 2.0;
  CHECK(std::abs(sse_amplitude(ref, twice)) < 1e-12);  // (2a - a)^2 / a^2 = 1

  const ComplexImage est = random_image(8, 8, 5);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < ref.data.size(); ++i) {
    const double d = std::abs(ref.data[i]) - std::abs(est.data[i]);
    num += d * d;
    den += std::norm(ref.data[i]);
  }
  CHECK(sse_amplitude(ref, est) ==
        doctest::Approx(10.0 * std::log10(num / den)).epsilon(1e-12));

  CHECK_THROWS_AS(sse_amplitude(ComplexImage(8, 8), est), InvalidInput);
  CHECK_THROWS_AS(sse_amplitude(ref, ComplexImage(4, 4)), InvalidInput);
}

TEST_CASE("sse_phase handles wrapping across the branch cut") {
  ComplexImage ref(1, 1);
  ComplexImage est(1, 1);
  ref.data[0] = std::polar(1.0, 3.0);
  est.data[0] = std::polar(1.0, -3.0);
  // Naive difference is 6.0; the wrapped error is 6 - 2 pi.
  const double d = 6.0 - 2.0 * M_PI;
  CHECK(sse_phase(ref, est) == doctest::Approx(10.0 * std::log10(d * d / 9.0)).epsilon(1e-12));
}

TEST_CASE("sse_phase on a half-flipped pi/2 pattern is 10 log10 2") {
  // Reference phases alternate +-pi/2; the estimate negates half the
  // pixels, contributing a wrapped error of pi at each flip. The ratio of
  // sums is exactly 2.
  ComplexImage ref(4, 4);
  ComplexImage est(4, 4);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      const double ph = (r + c) % 2 == 0 ? M_PI / 2.0 : -M_PI / 2.0;
      ref.at(r, c) = std::polar(1.0, ph);
      est.at(r, c) = r < 2 ? -ref.at(r, c) : ref.at(r, c);
    }
  }
  CHECK(sse_phase(ref, est) == doctest::Approx(10.0 * std::log10(2.0)).epsilon(1e-12));
}

TEST_CASE("zero-phase reference reports the unnormalized error sum") {
  RandomStream rs(6, "metrics/zero-phase");
  ComplexImage ref(4, 4);
  ComplexImage est(4, 4);
  double num = 0.0;
  for (std::size_t i = 0; i < ref.data.size(); ++i) {
    ref.data[i] = cplx(1.0 + rs.uniform(), 0.0);  // arg == 0 everywhere
    const double ph = 0.4 * rs.uniform() - 0.2;
    est.data[i] = std::polar(1.0, ph);
    num += ph * ph;
  }
  bool unnorm = false;
  const double db = sse_phase(ref, est, &unnorm);
  CHECK(unnorm);
  CHECK(db == doctest::Approx(10.0 * std::log10(num)).epsilon(1e-9));

  // Perfect estimate: the raw sum is zero, floored to -120.
  const double same = sse_phase(ref, ref, &unnorm);
  CHECK(unnorm);
  CHECK(same == -120.0);
}

TEST_CASE("profile_mse along a row") {
  RealImage a(6, 3);
  RealImage b(6, 3);
  for (int c = 0; c < 6; ++c) {
    a.at(1, c) = 0.25 * c;
    b.at(1, c) = 0.25 * c + 1.0;
  }
  CHECK(profile_mse(a, a, 1) == 0.0);
  CHECK(profile_mse(a, b, 1) == 1.0);

  RandomStream rs(7, "metrics/profile");
  RealImage r1(5, 2);
  RealImage r2(5, 2);
  double s = 0.0;
  for (int c = 0; c < 5; ++c) {
    r1.at(0, c) = rs.uniform();
    r2.at(0, c) = rs.uniform();
    const double d = r1.at(0, c) - r2.at(0, c);
    s += d * d;
  }
  CHECK(profile_mse(r1, r2, 0) == doctest::Approx(s / 5.0).epsilon(1e-15));

  CHECK_THROWS_AS(profile_mse(a, b, -1), InvalidInput);
  CHECK_THROWS_AS(profile_mse(a, b, 3), InvalidInput);
  CHECK_THROWS_AS(profile_mse(a, RealImage(4, 3), 0), InvalidInput);
}

TEST_CASE("evaluate removes a global phase entirely") {
  const ComplexImage ref = random_image(8, 8, 8);
  ComplexImage est = ref;
  for (cplx& v : est.data) v *= std::polar(1.0, 2.1);

  const EvalReport rep = evaluate(ref, est, true);
  CHECK(rep.phase_aligned);
  CHECK(rep.sse_amplitude_db == -120.0);
  CHECK(rep.sse_phase_db <= -100.0);  // wrapped differences are ~1 ulp, not exactly 0
  CHECK(rep.floor_applied);           // the amplitude metric sits on the floor
  CHECK(rel_err(rep.aligned, ref) < 1e-12);

  // Without alignment the same pair scores poorly on phase.
  const EvalReport raw = evaluate(ref, est, false);
  CHECK(!raw.phase_aligned);
  CHECK(raw.aligned.data == est.data);
  CHECK(raw.sse_phase_db > rep.sse_phase_db);
}

TEST_CASE("amplitude metric ignores the estimate's global phase") {
  const ComplexImage ref = random_image(8, 8, 9);
  const ComplexImage est = random_image(8, 8, 10);
  ComplexImage est_rot = est;
  for (cplx& v : est_rot.data) v *= std::polar(1.0, -0.9);
  CHECK(sse_amplitude(ref, est) == doctest::Approx(sse_amplitude(ref, est_rot)).epsilon(1e-12));
}

TEST_CASE("metrics are covariant under pixel permutation") {
  const ComplexImage ref = random_image(8, 8, 11);
  const ComplexImage est = random_image(8, 8, 12);

  // Same permutation applied to both images.
  std::vector<std::size_t> perm(ref.data.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  RandomStream rs(13, "metrics/perm");
  for (std::size_t i = perm.size(); i > 1; --i) {
    std::swap(perm[i - 1], perm[rs.below(i)]);
  }
  ComplexImage ref_p(8, 8);
  ComplexImage est_p(8, 8);
  for (std::size_t i = 0; i < perm.size(); ++i) {
    ref_p.data[i] = ref.data[perm[i]];
    est_p.data[i] = est.data[perm[i]];
  }
  CHECK(sse_amplitude(ref_p, est_p) == doctest::Approx(sse_amplitude(ref, est)).epsilon(1e-12));
  CHECK(sse_phase(ref_p, est_p) == doctest::Approx(sse_phase(ref, est)).epsilon(1e-12));
}

TEST_CASE("aligned phase metric is invariant to a unit-modulus factor") {
  const ComplexImage ref = random_image(8, 8, 14);
  const ComplexImage est = random_image(8, 8, 15);
  ComplexImage est_rot = est;
  for (cplx& v : est_rot.data) v *= std::polar(1.0, 0.77);

  const EvalReport a = evaluate(ref, est, true);
  const EvalReport b = evaluate(ref, est_rot, true);
  CHECK(a.sse_phase_db == doctest::Approx(b.sse_phase_db).epsilon(1e-9));
  CHECK(a.sse_amplitude_db == doctest::Approx(b.sse_amplitude_db).epsilon(1e-9));
}

}  // TEST_SUITE
