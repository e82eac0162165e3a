#include "cdpr/image.hpp"

#include <cmath>
#include <string>

#include "cdpr/errors.hpp"

namespace cdpr {

void require_dims(int w, int h, const char* context) {
  if (w < 1 || h < 1) {
    throw InvalidInput(std::string(context) + ": dimensions must be >= 1, got " +
                       std::to_string(w) + "x" + std::to_string(h));
  }
}

void require_same_dims(int w1, int h1, int w2, int h2, const char* context) {
  if (w1 != w2 || h1 != h2) {
    throw InvalidInput(std::string(context) + ": dimension mismatch " + std::to_string(w1) +
                       "x" + std::to_string(h1) + " vs " + std::to_string(w2) + "x" +
                       std::to_string(h2));
  }
}

ComplexImage::ComplexImage(int w, int h) : ComplexImage(w, h, cplx(0.0, 0.0)) {}

ComplexImage::ComplexImage(int w, int h, cplx fill) : width(w), height(h) {
  require_dims(w, h, "ComplexImage");
  data.assign(static_cast<std::size_t>(w) * h, fill);
}

RealImage::RealImage(int w, int h) : RealImage(w, h, 0.0) {}

RealImage::RealImage(int w, int h, double fill) : width(w), height(h) {
  require_dims(w, h, "RealImage");
  data.assign(static_cast<std::size_t>(w) * h, fill);
}

void require_finite(const ComplexImage& img, const char* context) {
  for (const cplx& z : img.data) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
      throw InvalidInput(std::string(context) + ": non-finite complex value");
    }
  }
}

void require_finite_nonneg(const RealImage& img, const char* context) {
  for (double v : img.data) {
    if (!std::isfinite(v) || v < 0.0) {
      throw InvalidInput(std::string(context) + ": values must be finite and >= 0");
    }
  }
}

double norm2(const ComplexImage& img) {
  double s = 0.0;
  for (const cplx& z : img.data) s += std::norm(z);
  return s;
}

double norm2(const RealImage& img) {
  double s = 0.0;
  for (double v : img.data) s += v * v;
  return s;
}

}  // namespace cdpr
