#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "stfnet/numeric.hpp"
#include "stfnet/rng.hpp"
#include "stfnet/tensor.hpp"

namespace testing {

using stfnet::cdouble;
using stfnet::ComplexTensor;
using stfnet::RealTensor;
using stfnet::Shape;

inline RealTensor random_real(Shape shape, stfnet::Rng& rng, double scale = 1.0) {
  RealTensor t(std::move(shape));
  for (auto& v : t.data()) v = scale * rng.normal();
  return t;
}

inline ComplexTensor random_complex(Shape shape, stfnet::Rng& rng, double scale = 1.0) {
  ComplexTensor t(std::move(shape));
  for (auto& v : t.re()) v = scale * rng.normal();
  for (auto& v : t.im()) v = scale * rng.normal();
  return t;
}

inline std::vector<double> random_vector(std::size_t n, stfnet::Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

inline double max_abs_diff(const RealTensor& a, const RealTensor& b) {
  if (a.shape() != b.shape()) return INFINITY;
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_abs_diff(const ComplexTensor& a, const ComplexTensor& b) {
  if (a.shape() != b.shape()) return INFINITY;
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.get(i) - b.get(i)));
  return m;
}

inline double max_abs(const ComplexTensor& a) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.get(i)));
  return m;
}

// Complex tensor whose (m, ., d) columns are half-spectra of real chunks.
inline ComplexTensor real_half_spectra(std::size_t chunks, std::size_t tau, std::size_t features,
                                       stfnet::Rng& rng) {
  const std::size_t bins = tau / 2 + 1;
  ComplexTensor t({chunks, bins, features});
  std::vector<double> chunk(tau);
  for (std::size_t m = 0; m < chunks; ++m)
    for (std::size_t d = 0; d < features; ++d) {
      for (auto& v : chunk) v = rng.normal();
      const auto spec = stfnet::dft_real(chunk);
      for (std::size_t k = 0; k < bins; ++k) t.set(t.index(m, k, d), spec[k]);
    }
  return t;
}

}  // namespace testing
