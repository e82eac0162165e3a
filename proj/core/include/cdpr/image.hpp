#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace cdpr {

using cplx = std::complex<double>;

// All grids are row-major with the origin at the top-left corner;
// accessors take (row, col).

struct ComplexImage {
  int width = 0;
  int height = 0;
  std::vector<cplx> data;

  ComplexImage() = default;
  ComplexImage(int w, int h);  // zero-filled; throws InvalidInput for w or h < 1
  ComplexImage(int w, int h, cplx fill);

  cplx& at(int row, int col) {
    return data[static_cast<std::size_t>(row) * width + col];
  }
  const cplx& at(int row, int col) const {
    return data[static_cast<std::size_t>(row) * width + col];
  }
  std::size_t size() const { return data.size(); }
};

struct RealImage {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  RealImage() = default;
  RealImage(int w, int h);
  RealImage(int w, int h, double fill);

  double& at(int row, int col) {
    return data[static_cast<std::size_t>(row) * width + col];
  }
  double at(int row, int col) const {
    return data[static_cast<std::size_t>(row) * width + col];
  }
  std::size_t size() const { return data.size(); }
};

// Boundary checks used at module entry points. `context` names the caller
// in the error message.
void require_dims(int w, int h, const char* context);
void require_same_dims(int w1, int h1, int w2, int h2, const char* context);
void require_finite(const ComplexImage& img, const char* context);
void require_finite_nonneg(const RealImage& img, const char* context);

double norm2(const ComplexImage& img);  // sum of |z|^2
double norm2(const RealImage& img);     // sum of v^2

}  // namespace cdpr
