#pragma once

#include <cstdint>
#include <vector>

#include "cdpr/image.hpp"
#include "cdpr/optics.hpp"

namespace cdpr {

enum class InitMode { flat, seeded_random };

struct SolverConfig {
  double alpha = 0.1;        // TV weight; 0 disables the TV block entirely
  double rho_fourier = 1.0;  // penalty on the z_i = dft2(c_i o u) blocks
  double rho_tv = 1.0;       // penalty on the w = grad u block
  int max_iters = 300;
  double rel_tol = 1e-6;     // stop when |u_k - u_{k-1}| / |u_{k-1}| falls below
  int cg_iters = 10;
  double cg_tol = 1e-8;
  InitMode init_mode = InitMode::flat;
  std::uint64_t seed = 0;
  double epsilon = 1e-8;     // diagonal regularizer keeping the u-step definite
};

struct SolverTrace {
  std::vector<double> objective;
  std::vector<double> res_fourier;  // sqrt(sum_i |dft2(c_i o u) - z_i|^2)
  std::vector<double> res_tv;       // |grad u - w|, 0 when TV inactive
  std::vector<double> rel_change;
};

struct SolveResult {
  ComplexImage u;
  SolverTrace trace;
};

// Forward-difference gradient with reflective boundary: the last column of
// dx and last row of dy are zero. grad_adjoint is the exact transpose.
struct GradField {
  ComplexImage dx;
  ComplexImage dy;
};

GradField grad_forward(const ComplexImage& u);
ComplexImage grad_adjoint(const GradField& g);

// alpha * anisotropic TV (real and imaginary parts separately) plus
// 1/2 sum_i sum_{kept bins} (g - y log g) with g = |dft2(c_i o u)|^2
// floored at 1e-12 inside the log. Truncated bins never enter the sum:
// the sensor did not measure them.
double objective(const ComplexImage& u, const MeasurementSet& ms, double alpha);

// argmin_z 1/2(|z|^2 - y log |z|^2) + rho/2 |z - v|^2. Closed form: the
// magnitude is the positive root of (1+rho) a^2 - rho|v| a - y = 0 and the
// phase is arg(v) (0 when v = 0).
cplx fidelity_prox(cplx v, double y, double rho);

// Scalar soft threshold sign(w) max(|w| - threshold, 0).
double tv_shrink(double w, double threshold);

// Gradient of the fidelity term with respect to the real/imaginary parts,
// packaged as a complex image: sum_i conj(c_i) o idft2(kept o (1 - y/g) o
// dft2(c_i o u)), with g floored as in objective.
ComplexImage gradient_fidelity(const ComplexImage& u, const MeasurementSet& ms);

// ADMM u-step: conjugate gradient on the normal equations
//   (rho_F sum_i |c_i|^2 + rho_TV grad^T grad + epsilon) u
//     = rho_F sum_i conj(c_i) o idft2(z_i - lambda_i) + rho_TV grad^T(w - mu).
// Because dft2 is unitary the operator needs no transforms. Pass w = mu =
// nullptr when the TV block is inactive. Throws NumericalFailure if the CG
// residual grows three steps in a row. cg_residuals, when given, receives
// the residual norm before and after every CG step.
ComplexImage u_update(const std::vector<ComplexImage>& z,
                      const std::vector<ComplexImage>& lambda,
                      const GradField* w, const GradField* mu,
                      const MeasurementSet& ms, const SolverConfig& config,
                      std::vector<double>* cg_residuals = nullptr);

// Scaled-dual ADMM on the TV-MAP objective. z-updates apply fidelity_prox
// on kept bins and pass v through on truncated bins; the w-update is
// tv_shrink with threshold alpha/rho_tv; duals ascend after the u-step.
// Runs until max_iters or rel_change < rel_tol.
SolveResult solve_tv_map(const MeasurementSet& ms, const SolverConfig& config);

}  // namespace cdpr
