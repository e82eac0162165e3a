#include "cdpr/fft.hpp"

#include <cmath>
#include <cstdlib>
#include <map>
#include <memory>
#include <mutex>
#include <utility>
#include <vector>

#include "cdpr/errors.hpp"

namespace cdpr {
namespace {

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

// Unnormalized forward DFT, power-of-two length:
//   X_j = sum_k x_k exp(-2 pi i j k / n).
struct Radix2Plan {
  int n;
  std::vector<int> rev;
  std::vector<cplx> roots;  // roots[k] = exp(-2 pi i k / n), k < n/2

  explicit Radix2Plan(int n_) : n(n_), rev(static_cast<std::size_t>(n_)) {
    int lg = 0;
    while ((1 << lg) < n) ++lg;
    for (int i = 0; i < n; ++i) {
      int r = 0;
      for (int b = 0; b < lg; ++b) {
        if (i & (1 << b)) r |= 1 << (lg - 1 - b);
      }
      rev[static_cast<std::size_t>(i)] = r;
    }
    roots.resize(static_cast<std::size_t>(n / 2));
    for (int k = 0; k < n / 2; ++k) {
      const double a = -2.0 * M_PI * k / n;
      roots[static_cast<std::size_t>(k)] = cplx(std::cos(a), std::sin(a));
    }
  }

  void forward(cplx* x) const {
    for (int i = 0; i < n; ++i) {
      if (rev[static_cast<std::size_t>(i)] > i) x[i] = std::exchange(x[rev[static_cast<std::size_t>(i)]], x[i]);
    }
    for (int len = 2; len <= n; len <<= 1) {
      const int half = len / 2;
      const int stride = n / len;
      for (int start = 0; start < n; start += len) {
        for (int k = 0; k < half; ++k) {
          const cplx w = roots[static_cast<std::size_t>(k * stride)];
          const cplx a = x[start + k];
          const cplx b = x[start + k + half] * w;
          x[start + k] = a + b;
          x[start + k + half] = a - b;
        }
      }
    }
  }
};

// Bluestein reduction of arbitrary length to a power-of-two convolution.
// chirp[k] = exp(-pi i k^2 / n) with k^2 reduced mod 2n before the angle is
// formed, so long lengths lose no precision to large arguments.
struct BluesteinPlan {
  int n;
  int m;
  std::vector<cplx> chirp;
  std::vector<cplx> kernel_fft;  // forward m-FFT of the symmetric conj-chirp
  std::shared_ptr<const Radix2Plan> sub;

  BluesteinPlan(int n_, std::shared_ptr<const Radix2Plan> sub_)
      : n(n_), m(sub_->n), chirp(static_cast<std::size_t>(n_)), sub(std::move(sub_)) {
    for (int k = 0; k < n; ++k) {
      const auto q = static_cast<unsigned long long>(k) * k % (2ull * n);
      const double a = -M_PI * static_cast<double>(q) / n;
      chirp[static_cast<std::size_t>(k)] = cplx(std::cos(a), std::sin(a));
    }
    std::vector<cplx> kernel(static_cast<std::size_t>(m), cplx(0.0, 0.0));
    for (int k = 0; k < n; ++k) {
      const cplx b = std::conj(chirp[static_cast<std::size_t>(k)]);
      kernel[static_cast<std::size_t>(k)] = b;
      if (k > 0) kernel[static_cast<std::size_t>(m - k)] = b;
    }
    sub->forward(kernel.data());
    kernel_fft = std::move(kernel);
  }

  void forward(cplx* x) const {
    std::vector<cplx> a(static_cast<std::size_t>(m), cplx(0.0, 0.0));
    for (int k = 0; k < n; ++k) a[static_cast<std::size_t>(k)] = x[k] * chirp[static_cast<std::size_t>(k)];
    sub->forward(a.data());
    for (int t = 0; t < m; ++t) a[static_cast<std::size_t>(t)] *= kernel_fft[static_cast<std::size_t>(t)];
    // inverse sub-FFT by conjugation
    for (cplx& v : a) v = std::conj(v);
    sub->forward(a.data());
    const double inv_m = 1.0 / m;
    for (int j = 0; j < n; ++j) {
      x[j] = std::conj(a[static_cast<std::size_t>(j)]) * inv_m * chirp[static_cast<std::size_t>(j)];
    }
  }
};

std::mutex g_plan_mutex;
std::map<int, std::shared_ptr<const Radix2Plan>> g_radix2_plans;
std::map<int, std::shared_ptr<const BluesteinPlan>> g_bluestein_plans;

std::shared_ptr<const Radix2Plan> radix2_plan(int n) {
  std::lock_guard<std::mutex> lock(g_plan_mutex);
  auto& slot = g_radix2_plans[n];
  if (!slot) slot = std::make_shared<Radix2Plan>(n);
  return slot;
}

std::shared_ptr<const BluesteinPlan> bluestein_plan(int n) {
  int m = 1;
  while (m < 2 * n - 1) m <<= 1;
  auto sub = radix2_plan(m);
  std::lock_guard<std::mutex> lock(g_plan_mutex);
  auto& slot = g_bluestein_plans[n];
  if (!slot) slot = std::make_shared<BluesteinPlan>(n, std::move(sub));
  return slot;
}

void forward_1d(cplx* x, int n) {
  if (n == 1) return;
  if (is_pow2(n)) {
    radix2_plan(n)->forward(x);
  } else {
    bluestein_plan(n)->forward(x);
  }
}

// Unnormalized inverse: sum_k x_k exp(+2 pi i j k / n) = conj(forward(conj(x))).
void inverse_1d(cplx* x, int n) {
  for (int k = 0; k < n; ++k) x[k] = std::conj(x[k]);
  forward_1d(x, n);
  for (int k = 0; k < n; ++k) x[k] = std::conj(x[k]);
}

ComplexImage transform_2d(const ComplexImage& img, bool inverse, const char* context) {
  require_dims(img.width, img.height, context);
  if (img.data.size() != static_cast<std::size_t>(img.width) * img.height) {
    throw InvalidInput(std::string(context) + ": data length does not match dimensions");
  }
  ComplexImage out = img;
  const int w = img.width;
  const int h = img.height;
  for (int r = 0; r < h; ++r) {
    cplx* row = out.data.data() + static_cast<std::size_t>(r) * w;
    inverse ? inverse_1d(row, w) : forward_1d(row, w);
  }
  std::vector<cplx> col(static_cast<std::size_t>(h));
  for (int c = 0; c < w; ++c) {
    for (int r = 0; r < h; ++r) col[static_cast<std::size_t>(r)] = out.at(r, c);
    inverse ? inverse_1d(col.data(), h) : forward_1d(col.data(), h);
    for (int r = 0; r < h; ++r) out.at(r, c) = col[static_cast<std::size_t>(r)];
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(w) * h);
  for (cplx& z : out.data) z *= scale;
  return out;
}

ComplexImage roll(const ComplexImage& img, int dr, int dc) {
  ComplexImage out(img.width, img.height);
  for (int r = 0; r < img.height; ++r) {
    const int rr = (r + dr) % img.height;
    for (int c = 0; c < img.width; ++c) {
      out.at(rr, (c + dc) % img.width) = img.at(r, c);
    }
  }
  return out;
}

}  // namespace

ComplexImage dft2(const ComplexImage& img) { return transform_2d(img, false, "dft2"); }

ComplexImage idft2(const ComplexImage& img) { return transform_2d(img, true, "idft2"); }

ComplexImage fftshift_center(const ComplexImage& img) {
  return roll(img, img.height / 2, img.width / 2);
}

ComplexImage unshift(const ComplexImage& img) {
  return roll(img, (img.height + 1) / 2, (img.width + 1) / 2);
}

int centered_index(int i, int n) { return i < (n + 1) / 2 ? i : i - n; }

bool in_high_band(int row, int col, int width, int height, double limit_fraction) {
  const double limit_r = limit_fraction * (height / 2);
  const double limit_c = limit_fraction * (width / 2);
  return std::abs(centered_index(row, height)) > limit_r ||
         std::abs(centered_index(col, width)) > limit_c;
}

}  // namespace cdpr
