#include "cdpr/solver.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "cdpr/errors.hpp"
#include "cdpr/fft.hpp"
#include "cdpr/random.hpp"

namespace cdpr {
namespace {

constexpr double kLogFloor = 1e-12;

void require_config(const SolverConfig& cfg) {
  if (cfg.alpha < 0.0) throw InvalidInput("SolverConfig: alpha must be >= 0");
  if (!(cfg.rho_fourier > 0.0)) throw InvalidInput("SolverConfig: rho_fourier must be > 0");
  if (!(cfg.rho_tv > 0.0)) throw InvalidInput("SolverConfig: rho_tv must be > 0");
  if (cfg.max_iters < 1) throw InvalidInput("SolverConfig: max_iters must be >= 1");
  if (!(cfg.rel_tol > 0.0)) throw InvalidInput("SolverConfig: rel_tol must be > 0");
  if (cfg.cg_iters < 1) throw InvalidInput("SolverConfig: cg_iters must be >= 1");
  if (!(cfg.cg_tol > 0.0)) throw InvalidInput("SolverConfig: cg_tol must be > 0");
  if (cfg.epsilon < 0.0) throw InvalidInput("SolverConfig: epsilon must be >= 0");
}

// Per-solve constants: c_i = mask_i o kernel, their squared sum, and the
// kept-band flags shared by every measurement.
struct SolverCtx {
  int w = 0;
  int h = 0;
  std::vector<ComplexImage> c;
  RealImage csum;
  std::vector<std::uint8_t> kept;
};

SolverCtx make_ctx(const MeasurementSet& ms) {
  if (ms.items.empty()) throw InvalidInput("MeasurementSet: need at least one measurement");
  if (!(ms.truncation_fraction >= 0.0 && ms.truncation_fraction < 1.0)) {
    throw InvalidInput("MeasurementSet: truncation_fraction must lie in [0, 1)");
  }
  SolverCtx ctx;
  ctx.w = ms.items[0].mask.width;
  ctx.h = ms.items[0].mask.height;
  ComplexImage kernel;
  const ComplexImage* kernel_ptr = nullptr;
  if (ms.defocus.has_value()) {
    kernel = defocus_kernel(ctx.w, ctx.h, *ms.defocus);
    kernel_ptr = &kernel;
  }
  ctx.csum = RealImage(ctx.w, ctx.h);
  for (const Measurement& m : ms.items) {
    require_same_dims(ctx.w, ctx.h, m.mask.width, m.mask.height, "MeasurementSet");
    require_same_dims(ctx.w, ctx.h, m.intensity.width, m.intensity.height, "MeasurementSet");
    ComplexImage ci(ctx.w, ctx.h);
    for (int r = 0; r < ctx.h; ++r) {
      for (int col = 0; col < ctx.w; ++col) {
        cplx v = m.mask.at(r, col) ? cplx(1.0, 0.0) : cplx(0.0, 0.0);
        if (kernel_ptr != nullptr) v *= kernel_ptr->at(r, col);
        ci.at(r, col) = v;
      }
    }
    for (std::size_t j = 0; j < ci.data.size(); ++j) ctx.csum.data[j] += std::norm(ci.data[j]);
    ctx.c.push_back(std::move(ci));
  }
  ctx.kept.assign(static_cast<std::size_t>(ctx.w) * ctx.h, 1);
  if (ms.truncation_fraction > 0.0) {
    for (int r = 0; r < ctx.h; ++r) {
      for (int col = 0; col < ctx.w; ++col) {
        if (in_high_band(r, col, ctx.w, ctx.h, 1.0 - ms.truncation_fraction)) {
          ctx.kept[static_cast<std::size_t>(r) * ctx.w + col] = 0;
        }
      }
    }
  }
  return ctx;
}

double tv_sum(const GradField& g) {
  double s = 0.0;
  for (const cplx& z : g.dx.data) s += std::abs(z.real()) + std::abs(z.imag());
  for (const cplx& z : g.dy.data) s += std::abs(z.real()) + std::abs(z.imag());
  return s;
}

// (rho_F sum_i |c_i|^2 + epsilon) x + rho_TV grad^T grad x; no transforms
// needed because dft2 is unitary.
ComplexImage apply_operator(const SolverCtx& ctx, const SolverConfig& cfg, bool tv,
                            const ComplexImage& x) {
  ComplexImage out(ctx.w, ctx.h);
  for (std::size_t j = 0; j < x.data.size(); ++j) {
    out.data[j] = (cfg.rho_fourier * ctx.csum.data[j] + cfg.epsilon) * x.data[j];
  }
  if (tv) {
    const ComplexImage lap = grad_adjoint(grad_forward(x));
    for (std::size_t j = 0; j < x.data.size(); ++j) out.data[j] += cfg.rho_tv * lap.data[j];
  }
  return out;
}

ComplexImage assemble_rhs(const SolverCtx& ctx, const SolverConfig& cfg,
                          const std::vector<ComplexImage>& z,
                          const std::vector<ComplexImage>& lambda, const GradField* w,
                          const GradField* mu) {
  ComplexImage b(ctx.w, ctx.h);
  ComplexImage d(ctx.w, ctx.h);
  for (std::size_t i = 0; i < ctx.c.size(); ++i) {
    for (std::size_t j = 0; j < b.data.size(); ++j) {
      d.data[j] = z[i].data[j] - lambda[i].data[j];
    }
    const ComplexImage t = idft2(d);
    for (std::size_t j = 0; j < b.data.size(); ++j) {
      b.data[j] += cfg.rho_fourier * std::conj(ctx.c[i].data[j]) * t.data[j];
    }
  }
  if (w != nullptr && mu != nullptr) {
    GradField diff{ComplexImage(ctx.w, ctx.h), ComplexImage(ctx.w, ctx.h)};
    for (std::size_t j = 0; j < diff.dx.data.size(); ++j) {
      diff.dx.data[j] = w->dx.data[j] - mu->dx.data[j];
      diff.dy.data[j] = w->dy.data[j] - mu->dy.data[j];
    }
    const ComplexImage adj = grad_adjoint(diff);
    for (std::size_t j = 0; j < b.data.size(); ++j) b.data[j] += cfg.rho_tv * adj.data[j];
  }
  return b;
}

ComplexImage cg_solve(const SolverCtx& ctx, const SolverConfig& cfg, bool tv,
                      const ComplexImage& b, std::vector<double>* residual_history) {
  ComplexImage x(ctx.w, ctx.h);
  const double bnorm = std::sqrt(norm2(b));
  if (residual_history != nullptr) residual_history->push_back(bnorm);
  if (bnorm == 0.0) return x;

  ComplexImage r = b;
  ComplexImage p = b;
  double rs = norm2(r);
  double prev = std::sqrt(rs);
  int growth = 0;
  for (int it = 0; it < cfg.cg_iters && std::sqrt(rs) > cfg.cg_tol * bnorm; ++it) {
    const ComplexImage ap = apply_operator(ctx, cfg, tv, p);
    double pap = 0.0;
    for (std::size_t j = 0; j < p.data.size(); ++j) {
      pap += (std::conj(p.data[j]) * ap.data[j]).real();
    }
    if (!(pap > 0.0)) {
      throw NumericalFailure("u_update: operator lost positive definiteness at CG step " +
                             std::to_string(it + 1));
    }
    const double alpha = rs / pap;
    for (std::size_t j = 0; j < x.data.size(); ++j) {
      x.data[j] += alpha * p.data[j];
      r.data[j] -= alpha * ap.data[j];
    }
    const double rs_new = norm2(r);
    const double rn = std::sqrt(rs_new);
    if (residual_history != nullptr) residual_history->push_back(rn);
    if (rn > prev) {
      if (++growth >= 3) {
        throw NumericalFailure("u_update: CG residual grew for 3 consecutive steps, at CG step " +
                               std::to_string(it + 1));
      }
    } else {
      growth = 0;
    }
    prev = rn;
    const double beta = rs_new / rs;
    rs = rs_new;
    for (std::size_t j = 0; j < p.data.size(); ++j) p.data[j] = r.data[j] + beta * p.data[j];
  }
  return x;
}

double fidelity_value(const SolverCtx& ctx, const MeasurementSet& ms,
                      const std::vector<ComplexImage>& specs) {
  double s = 0.0;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const RealImage& y = ms.items[i].intensity;
    for (std::size_t j = 0; j < specs[i].data.size(); ++j) {
      if (!ctx.kept[j]) continue;
      const double g = std::norm(specs[i].data[j]);
      s += 0.5 * (g - y.data[j] * std::log(std::max(g, kLogFloor)));
    }
  }
  return s;
}

}  // namespace

GradField grad_forward(const ComplexImage& u) {
  GradField g{ComplexImage(u.width, u.height), ComplexImage(u.width, u.height)};
  for (int r = 0; r < u.height; ++r) {
    for (int c = 0; c < u.width; ++c) {
      if (c + 1 < u.width) g.dx.at(r, c) = u.at(r, c + 1) - u.at(r, c);
      if (r + 1 < u.height) g.dy.at(r, c) = u.at(r + 1, c) - u.at(r, c);
    }
  }
  return g;
}

ComplexImage grad_adjoint(const GradField& g) {
  require_same_dims(g.dx.width, g.dx.height, g.dy.width, g.dy.height, "grad_adjoint");
  const int w = g.dx.width;
  const int h = g.dx.height;
  ComplexImage out(w, h);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      cplx v(0.0, 0.0);
      if (c > 0) v += g.dx.at(r, c - 1);
      if (c + 1 < w) v -= g.dx.at(r, c);
      if (r > 0) v += g.dy.at(r - 1, c);
      if (r + 1 < h) v -= g.dy.at(r, c);
      out.at(r, c) = v;
    }
  }
  return out;
}

double objective(const ComplexImage& u, const MeasurementSet& ms, double alpha) {
  if (alpha < 0.0) throw InvalidInput("objective: alpha must be >= 0");
  const SolverCtx ctx = make_ctx(ms);
  require_same_dims(u.width, u.height, ctx.w, ctx.h, "objective");
  double obj = alpha > 0.0 ? alpha * tv_sum(grad_forward(u)) : 0.0;
  std::vector<ComplexImage> specs;
  specs.reserve(ctx.c.size());
  ComplexImage t(ctx.w, ctx.h);
  for (const ComplexImage& ci : ctx.c) {
    for (std::size_t j = 0; j < t.data.size(); ++j) t.data[j] = ci.data[j] * u.data[j];
    specs.push_back(dft2(t));
  }
  return obj + fidelity_value(ctx, ms, specs);
}

cplx fidelity_prox(cplx v, double y, double rho) {
  if (!(rho > 0.0)) throw InvalidInput("fidelity_prox: rho must be > 0");
  if (!(y >= 0.0)) throw InvalidInput("fidelity_prox: y must be >= 0");
  const double s = std::abs(v);
  const double a =
      (rho * s + std::sqrt(rho * rho * s * s + 4.0 * (1.0 + rho) * y)) / (2.0 * (1.0 + rho));
  if (s == 0.0) return cplx(a, 0.0);  // phase convention for v = 0
  return v * (a / s);
}

double tv_shrink(double w, double threshold) {
  const double m = std::abs(w) - threshold;
  if (m <= 0.0) return 0.0;
  return w < 0.0 ? -m : m;
}

ComplexImage gradient_fidelity(const ComplexImage& u, const MeasurementSet& ms) {
  const SolverCtx ctx = make_ctx(ms);
  require_same_dims(u.width, u.height, ctx.w, ctx.h, "gradient_fidelity");
  ComplexImage grad(ctx.w, ctx.h);
  ComplexImage t(ctx.w, ctx.h);
  for (std::size_t i = 0; i < ctx.c.size(); ++i) {
    const RealImage& y = ms.items[i].intensity;
    for (std::size_t j = 0; j < t.data.size(); ++j) t.data[j] = ctx.c[i].data[j] * u.data[j];
    ComplexImage spec = dft2(t);
    for (std::size_t j = 0; j < spec.data.size(); ++j) {
      if (!ctx.kept[j]) {
        spec.data[j] = cplx(0.0, 0.0);
        continue;
      }
      const double g = std::max(std::norm(spec.data[j]), kLogFloor);
      spec.data[j] *= 1.0 - y.data[j] / g;
    }
    const ComplexImage adj = idft2(spec);
    for (std::size_t j = 0; j < grad.data.size(); ++j) {
      grad.data[j] += std::conj(ctx.c[i].data[j]) * adj.data[j];
    }
  }
  return grad;
}

ComplexImage u_update(const std::vector<ComplexImage>& z, const std::vector<ComplexImage>& lambda,
                      const GradField* w, const GradField* mu, const MeasurementSet& ms,
                      const SolverConfig& config, std::vector<double>* cg_residuals) {
  require_config(config);
  const SolverCtx ctx = make_ctx(ms);
  if (z.size() != ctx.c.size() || lambda.size() != ctx.c.size()) {
    throw InvalidInput("u_update: z and lambda must have one block per measurement");
  }
  for (std::size_t i = 0; i < z.size(); ++i) {
    require_same_dims(z[i].width, z[i].height, ctx.w, ctx.h, "u_update");
    require_same_dims(lambda[i].width, lambda[i].height, ctx.w, ctx.h, "u_update");
  }
  if ((w == nullptr) != (mu == nullptr)) {
    throw InvalidInput("u_update: w and mu must be both present or both absent");
  }
  const bool tv = w != nullptr;
  const ComplexImage b = assemble_rhs(ctx, config, z, lambda, w, mu);
  return cg_solve(ctx, config, tv, b, cg_residuals);
}

SolveResult solve_tv_map(const MeasurementSet& ms, const SolverConfig& config) {
  require_config(config);
  const SolverCtx ctx = make_ctx(ms);
  const int w = ctx.w;
  const int h = ctx.h;
  const std::size_t m_count = ctx.c.size();
  const std::size_t n = static_cast<std::size_t>(w) * h;
  const bool tv = config.alpha > 0.0;

  // Flat init: constant magnitude from the kept-band mean intensity.
  double kept_sum = 0.0;
  long long kept_count = 0;
  for (std::size_t i = 0; i < m_count; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (ctx.kept[j]) {
        kept_sum += ms.items[i].intensity.data[j];
        ++kept_count;
      }
    }
  }
  const double mean_kept = kept_count > 0 ? kept_sum / static_cast<double>(kept_count) : 0.0;
  const double flat_mag = std::sqrt(std::max(mean_kept, 0.0) / static_cast<double>(n));
  ComplexImage u(w, h, cplx(flat_mag, 0.0));
  if (config.init_mode == InitMode::seeded_random) {
    RandomStream rs(config.seed, "solver/init");
    const double scale = flat_mag > 0.0 ? flat_mag : 1.0;
    for (cplx& v : u.data) v = cplx(rs.gaussian(), rs.gaussian()) * scale;
  }

  std::vector<ComplexImage> au(m_count);
  ComplexImage t(w, h);
  const auto recompute_au = [&](const ComplexImage& uu) {
    for (std::size_t i = 0; i < m_count; ++i) {
      for (std::size_t j = 0; j < n; ++j) t.data[j] = ctx.c[i].data[j] * uu.data[j];
      au[i] = dft2(t);
    }
  };
  recompute_au(u);

  std::vector<ComplexImage> z = au;
  std::vector<ComplexImage> lambda(m_count, ComplexImage(w, h));
  GradField gu;
  GradField wblk;
  GradField mu;
  if (tv) {
    gu = grad_forward(u);
    wblk = gu;
    mu = GradField{ComplexImage(w, h), ComplexImage(w, h)};
  }

  SolverTrace trace;
  for (int iter = 1; iter <= config.max_iters; ++iter) {
    // z-step: magnitude prox on kept bins, pass-through elsewhere.
    for (std::size_t i = 0; i < m_count; ++i) {
      const RealImage& y = ms.items[i].intensity;
      for (std::size_t j = 0; j < n; ++j) {
        const cplx v = au[i].data[j] + lambda[i].data[j];
        z[i].data[j] = ctx.kept[j] ? fidelity_prox(v, y.data[j], config.rho_fourier) : v;
      }
    }
    // w-step: soft threshold on real and imaginary parts independently.
    if (tv) {
      const double thr = config.alpha / config.rho_tv;
      for (std::size_t j = 0; j < n; ++j) {
        const cplx vx = gu.dx.data[j] + mu.dx.data[j];
        const cplx vy = gu.dy.data[j] + mu.dy.data[j];
        wblk.dx.data[j] = cplx(tv_shrink(vx.real(), thr), tv_shrink(vx.imag(), thr));
        wblk.dy.data[j] = cplx(tv_shrink(vy.real(), thr), tv_shrink(vy.imag(), thr));
      }
    }
    // u-step
    ComplexImage u_new;
    try {
      const ComplexImage b = assemble_rhs(ctx, config, z, lambda, tv ? &wblk : nullptr,
                                          tv ? &mu : nullptr);
      u_new = cg_solve(ctx, config, tv, b, nullptr);
    } catch (const NumericalFailure& e) {
      throw NumericalFailure("ADMM iteration " + std::to_string(iter) + ": " + e.what());
    }
    double diff2 = 0.0;
    double base2 = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      diff2 += std::norm(u_new.data[j] - u.data[j]);
      base2 += std::norm(u.data[j]);
    }
    const double rel_change = std::sqrt(diff2) / std::max(std::sqrt(base2), 1e-300);
    u = std::move(u_new);
    recompute_au(u);
    if (tv) gu = grad_forward(u);

    // dual ascent + primal residuals
    double res_f2 = 0.0;
    for (std::size_t i = 0; i < m_count; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const cplx d = au[i].data[j] - z[i].data[j];
        lambda[i].data[j] += d;
        res_f2 += std::norm(d);
      }
    }
    double res_tv2 = 0.0;
    if (tv) {
      for (std::size_t j = 0; j < n; ++j) {
        const cplx dx = gu.dx.data[j] - wblk.dx.data[j];
        const cplx dy = gu.dy.data[j] - wblk.dy.data[j];
        mu.dx.data[j] += dx;
        mu.dy.data[j] += dy;
        res_tv2 += std::norm(dx) + std::norm(dy);
      }
    }

    double obj = fidelity_value(ctx, ms, au);
    if (tv) obj += config.alpha * tv_sum(gu);
    if (!std::isfinite(obj)) {
      throw NumericalFailure("solve_tv_map: objective non-finite at iteration " +
                             std::to_string(iter));
    }
    trace.objective.push_back(obj);
    trace.res_fourier.push_back(std::sqrt(res_f2));
    trace.res_tv.push_back(std::sqrt(res_tv2));
    trace.rel_change.push_back(rel_change);
    if (rel_change < config.rel_tol) break;
  }
  require_finite(u, "solve_tv_map");
  return SolveResult{std::move(u), std::move(trace)};
}

}  // namespace cdpr
