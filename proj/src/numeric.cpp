#include "stfnet/numeric.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <mutex>
#include <numbers>

#include "stfnet/error.hpp"

namespace stfnet {

bool is_power_of_two(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

int log2_exact(std::size_t n) {
  if (!is_power_of_two(n)) throw ConfigError(std::to_string(n) + " is not a power of two");
  int p = 0;
  while ((std::size_t{1} << p) != n) ++p;
  return p;
}

namespace {

constexpr int kMaxLog2 = 31;

// exp(-j 2 pi k / n) for k < n/2, built once per length.
const std::vector<cdouble>& twiddles(int log2n) {
  static std::array<std::once_flag, kMaxLog2> flags;
  static std::array<std::vector<cdouble>, kMaxLog2> tables;
  std::call_once(flags[log2n], [log2n] {
    const std::size_t n = std::size_t{1} << log2n;
    auto& table = tables[log2n];
    table.resize(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k) {
      const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
      table[k] = {std::cos(angle), std::sin(angle)};
    }
  });
  return tables[log2n];
}

void bit_reverse(std::span<cdouble> data) {
  const std::size_t n = data.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }
}

void check_symmetry(std::span<const cdouble> spectrum, std::size_t tau) {
  if (std::abs(spectrum[0].imag()) > kSymmetryTolerance)
    throw DomainError("DC bin has imaginary part " + std::to_string(spectrum[0].imag()) +
                      "; not the spectrum of a real sequence");
  if (tau % 2 == 0 && std::abs(spectrum.back().imag()) > kSymmetryTolerance)
    throw DomainError("Nyquist bin has imaginary part " +
                      std::to_string(spectrum.back().imag()) +
                      "; not the spectrum of a real sequence");
}

}  // namespace

void fft_inplace(std::span<cdouble> data, bool inverse) {
  const std::size_t n = data.size();
  if (n <= 1) return;
  const int log2n = log2_exact(n);
  if (log2n >= kMaxLog2) throw ShapeError("FFT length too large");
  const auto& table = twiddles(log2n);
  bit_reverse(data);
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t stride = n / len;
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t k = 0; k < half; ++k) {
        cdouble w = table[k * stride];
        if (inverse) w = std::conj(w);
        const cdouble a = data[start + k];
        const cdouble b = data[start + k + half] * w;
        data[start + k] = a + b;
        data[start + k + half] = a - b;
      }
    }
  }
}

std::vector<cdouble> dft_real_direct(std::span<const double> x) {
  const std::size_t tau = x.size();
  const std::size_t bins = half_spectrum_size(tau);
  std::vector<cdouble> out(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    cdouble acc{};
    for (std::size_t t = 0; t < tau; ++t) {
      // Reduce k*t mod tau before scaling keeps the angle small and exact.
      const double angle = -2.0 * std::numbers::pi * static_cast<double>((k * t) % tau) /
                           static_cast<double>(tau);
      acc += x[t] * cdouble(std::cos(angle), std::sin(angle));
    }
    out[k] = acc;
  }
  return out;
}

std::vector<cdouble> dft_real(std::span<const double> x) {
  const std::size_t tau = x.size();
  if (tau == 0) throw ShapeError("dft_real of an empty sequence");
  if (!is_power_of_two(tau)) return dft_real_direct(x);
  std::vector<cdouble> buffer(x.begin(), x.end());
  fft_inplace(buffer, false);
  buffer.resize(half_spectrum_size(tau));
  return buffer;
}

namespace {

// Full tau-point spectrum from a half-spectrum, DC/Nyquist projected real.
std::vector<cdouble> extend_conjugate(std::span<const cdouble> spectrum, std::size_t tau) {
  const std::size_t bins = spectrum.size();
  std::vector<cdouble> full(tau);
  full[0] = spectrum[0].real();
  for (std::size_t k = 1; k < bins; ++k) {
    full[k] = spectrum[k];
    full[tau - k] = std::conj(spectrum[k]);
  }
  if (tau % 2 == 0) full[tau / 2] = spectrum[bins - 1].real();
  return full;
}

std::vector<cdouble> inverse_unnormalized(std::vector<cdouble> full) {
  const std::size_t tau = full.size();
  if (is_power_of_two(tau)) {
    fft_inplace(full, true);
    return full;
  }
  std::vector<cdouble> out(tau);
  for (std::size_t t = 0; t < tau; ++t) {
    cdouble acc{};
    for (std::size_t k = 0; k < tau; ++k) {
      const double angle =
          2.0 * std::numbers::pi * static_cast<double>((k * t) % tau) / static_cast<double>(tau);
      acc += full[k] * cdouble(std::cos(angle), std::sin(angle));
    }
    out[t] = acc;
  }
  return out;
}

}  // namespace

std::vector<double> idft_real(std::span<const cdouble> spectrum, std::size_t tau,
                              SymmetryPolicy policy) {
  if (tau == 0) throw ShapeError("idft_real with tau = 0");
  if (spectrum.size() != half_spectrum_size(tau))
    throw ShapeError("idft_real: expected " + std::to_string(half_spectrum_size(tau)) +
                     " bins for tau = " + std::to_string(tau) + ", got " +
                     std::to_string(spectrum.size()));
  if (policy == SymmetryPolicy::Strict) check_symmetry(spectrum, tau);
  const auto time = inverse_unnormalized(extend_conjugate(spectrum, tau));
  std::vector<double> out(tau);
  const double scale = 1.0 / static_cast<double>(tau);
  for (std::size_t t = 0; t < tau; ++t) out[t] = time[t].real() * scale;
  return out;
}

std::vector<double> dft_real_adjoint(std::span<const cdouble> grad, std::size_t tau) {
  if (grad.size() != half_spectrum_size(tau))
    throw ShapeError("dft_real_adjoint: gradient length does not match tau");
  std::vector<cdouble> full(tau);
  std::copy(grad.begin(), grad.end(), full.begin());
  const auto time = inverse_unnormalized(std::move(full));
  std::vector<double> out(tau);
  for (std::size_t t = 0; t < tau; ++t) out[t] = time[t].real();
  return out;
}

std::vector<cdouble> idft_real_adjoint(std::span<const double> grad, std::size_t tau) {
  if (grad.size() != tau) throw ShapeError("idft_real_adjoint: gradient length must equal tau");
  auto out = dft_real(grad);
  const double interior = 2.0 / static_cast<double>(tau);
  const double edge = 1.0 / static_cast<double>(tau);
  const std::size_t bins = out.size();
  for (std::size_t k = 0; k < bins; ++k) {
    const bool is_edge = k == 0 || (tau % 2 == 0 && k == bins - 1);
    out[k] = is_edge ? cdouble(out[k].real() * edge, 0.0) : out[k] * interior;
  }
  return out;
}

ComplexTensor to_complex_tensor(const std::vector<cdouble>& values) {
  return ComplexTensor({values.size()}, values);
}

ComplexTensor dft_real_tensor(const RealTensor& x) {
  if (x.rank() != 1) throw ShapeError("dft_real expects a rank-1 tensor");
  return to_complex_tensor(dft_real(x.data()));
}

RealTensor idft_real_tensor(const ComplexTensor& spectrum, std::size_t tau) {
  if (spectrum.rank() != 1) throw ShapeError("idft_real expects a rank-1 tensor");
  const auto values = spectrum.to_complex();
  return RealTensor({tau}, idft_real(values, tau));
}

cdouble cmul(cdouble a, cdouble b) noexcept {
  return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

namespace {

void require_same_shape(const ComplexTensor& a, const ComplexTensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shapes " + shape_string(a.shape()) + " and " +
                     shape_string(b.shape()) + " differ");
}

}  // namespace

ComplexTensor cmul(const ComplexTensor& a, const ComplexTensor& b) {
  require_same_shape(a, b, "cmul");
  ComplexTensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out.set(i, cmul(a.get(i), b.get(i)));
  return out;
}

ComplexTensor cadd(const ComplexTensor& a, const ComplexTensor& b) {
  require_same_shape(a, b, "cadd");
  ComplexTensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out.set(i, a.get(i) + b.get(i));
  return out;
}

ComplexTensor cconj(const ComplexTensor& a) {
  ComplexTensor out = a;
  for (auto& v : out.im()) v = -v;
  return out;
}

RealTensor cmagnitude(const ComplexTensor& a) {
  RealTensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = std::hypot(a.re()[i], a.im()[i]);
  return out;
}

ComplexTensor matmul_complex(const ComplexTensor& a, const ComplexTensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
    throw ShapeError("matmul_complex: cannot multiply " + shape_string(a.shape()) + " by " +
                     shape_string(b.shape()));
  const std::size_t n = a.dim(0), inner = a.dim(1), p = b.dim(1);
  ComplexTensor out({n, p});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < inner; ++j) {
      const cdouble aij = a.get(i * inner + j);
      for (std::size_t k = 0; k < p; ++k) out.add(i * p + k, cmul(aij, b.get(j * p + k)));
    }
  return out;
}

void softmax_inplace(std::span<double> v) {
  if (v.empty()) return;
  const double peak = *std::max_element(v.begin(), v.end());
  double total = 0.0;
  for (auto& x : v) {
    x = std::exp(x - peak);
    total += x;
  }
  for (auto& x : v) x /= total;
}

RealTensor softmax_real(const RealTensor& v) {
  if (v.rank() != 1) throw ShapeError("softmax_real expects a rank-1 tensor");
  RealTensor out = v;
  softmax_inplace(out.data());
  return out;
}

}  // namespace stfnet
