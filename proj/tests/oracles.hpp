#pragma once

// Independent reference computations shared by the unit tests and the
// acceptance gate. Everything here is written from the mathematical
// definitions, not by calling the code paths under test.

#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "cdpr/image.hpp"
#include "cdpr/maskgen.hpp"
#include "cdpr/optics.hpp"
#include "cdpr/random.hpp"
#include "cdpr/solver.hpp"

namespace cdpr::oracles {

// 1/2(a^2 - y log a^2) + rho/2 (a - s)^2, the scalar objective behind
// fidelity_prox (s = |v|).
inline double prox_objective(double a, double y, double s, double rho) {
  double val = 0.5 * a * a + 0.5 * rho * (a - s) * (a - s);
  if (y > 0.0) val -= 0.5 * y * std::log(a * a);
  return val;
}

// Dense grid search over the prox magnitude. Returns the best objective
// found; the closed form must never lose by more than the caller's margin.
inline double prox_grid_best(double y, double s, double rho) {
  // The minimizer is bounded by the data pull sqrt(y) and the prox pull s.
  const double hi = 2.0 * (std::sqrt(y) + s) + 1.0;
  const int steps = 20000;
  double best = prox_objective(hi, y, s, rho);
  for (int i = y > 0.0 ? 1 : 0; i < steps; ++i) {
    const double a = hi * static_cast<double>(i) / steps;
    best = std::min(best, prox_objective(a, y, s, rho));
  }
  return best;
}

// Central finite differences of objective(u, ms, 0) with respect to the
// real and imaginary part of every pixel, packaged like gradient_fidelity.
inline ComplexImage fd_gradient(const ComplexImage& u, const MeasurementSet& ms, double step) {
  ComplexImage g(u.width, u.height);
  ComplexImage probe = u;
  for (std::size_t j = 0; j < u.data.size(); ++j) {
    const cplx orig = u.data[j];
    probe.data[j] = orig + cplx(step, 0.0);
    const double fp_re = objective(probe, ms, 0.0);
    probe.data[j] = orig - cplx(step, 0.0);
    const double fm_re = objective(probe, ms, 0.0);
    probe.data[j] = orig + cplx(0.0, step);
    const double fp_im = objective(probe, ms, 0.0);
    probe.data[j] = orig - cplx(0.0, step);
    const double fm_im = objective(probe, ms, 0.0);
    probe.data[j] = orig;
    g.data[j] = cplx((fp_re - fm_re) / (2.0 * step), (fp_im - fm_im) / (2.0 * step));
  }
  return g;
}

// Dense complex Gaussian elimination with partial pivoting: solves the
// u_update normal equations assembled column by column from the operator's
// mathematical definition.
inline std::vector<cplx> dense_solve(std::vector<std::vector<cplx>> a, std::vector<cplx> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    }
    std::swap(a[col], a[piv]);
    std::swap(b[col], b[piv]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const cplx f = a[r][col] / a[col][col];
      for (std::size_t k = col; k < n; ++k) a[r][k] -= f * a[col][k];
      b[r] -= f * b[col];
    }
  }
  std::vector<cplx> x(n);
  for (std::size_t i = n; i-- > 0;) {
    cplx s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a[i][k] * x[k];
    x[i] = s / a[i][i];
  }
  return x;
}

// The u_update operator written out directly: (rho_F sum |c_i|^2 + eps) x
// + rho_TV grad^T grad x with the forward-difference stencil spelled out,
// independent of grad_forward / grad_adjoint.
inline std::vector<cplx> reference_operator(const std::vector<cplx>& x, int w, int h,
                                            const RealImage& csum, double rho_f, double rho_tv,
                                            double eps, bool tv) {
  std::vector<cplx> out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    out[j] = (rho_f * csum.data[j] + eps) * x[j];
  }
  if (!tv) return out;
  auto id = [w](int r, int c) { return static_cast<std::size_t>(r) * w + c; };
  // grad^T grad via explicit dx/dy fields.
  std::vector<cplx> dx(x.size()), dy(x.size());
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (c + 1 < w) dx[id(r, c)] = x[id(r, c + 1)] - x[id(r, c)];
      if (r + 1 < h) dy[id(r, c)] = x[id(r + 1, c)] - x[id(r, c)];
    }
  }
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      cplx v(0.0, 0.0);
      if (c > 0) v += dx[id(r, c - 1)];
      if (c + 1 < w) v -= dx[id(r, c)];
      if (r > 0) v += dy[id(r - 1, c)];
      if (r + 1 < h) v -= dy[id(r, c)];
      out[id(r, c)] += rho_tv * v;
    }
  }
  return out;
}

// Conservation check used by criterion 5e and the maskgen suite.
inline bool conserves_mass(const BinaryMask& m) {
  const double n = static_cast<double>(m.width) * m.height;
  const double expect = m.sigma * n;
  return std::abs(static_cast<double>(m.ones()) - expect) <= 0.005 * n;
}

}  // namespace cdpr::oracles
