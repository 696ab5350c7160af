#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "stfnet/tensor.hpp"

namespace stfnet {

/// How idft_real treats imaginary parts of the DC and Nyquist bins, which
/// must vanish for a half-spectrum of a real sequence.
enum class SymmetryPolicy {
  Strict,   ///< DomainError if either exceeds kSymmetryTolerance
  Project,  ///< silently discard them
};

inline constexpr double kSymmetryTolerance = 1e-9;

bool is_power_of_two(std::size_t n) noexcept;
int log2_exact(std::size_t n);

/// Number of non-redundant bins of a length-`tau` real DFT.
inline std::size_t half_spectrum_size(std::size_t tau) noexcept { return tau / 2 + 1; }

/// In-place complex FFT, length must be a power of two. `inverse` flips the
/// exponent sign; no normalization is applied in either direction.
void fft_inplace(std::span<cdouble> data, bool inverse);

/// Half-spectrum X[k] = sum_t x[t] exp(-j 2 pi k t / tau), k < tau/2 + 1.
/// Radix-2 FFT for power-of-two lengths, direct summation otherwise.
std::vector<cdouble> dft_real(std::span<const double> x);
/// Always the O(tau^2) direct sum.
std::vector<cdouble> dft_real_direct(std::span<const double> x);

/// Inverse of dft_real via conjugate-symmetric extension and 1/tau scaling.
std::vector<double> idft_real(std::span<const cdouble> spectrum, std::size_t tau,
                              SymmetryPolicy policy = SymmetryPolicy::Strict);

// Adjoints of the two maps above, treating (re, im) planes as independent
// reals. Gradients are packed as d/d(re) + j d/d(im).
std::vector<double> dft_real_adjoint(std::span<const cdouble> grad, std::size_t tau);
std::vector<cdouble> idft_real_adjoint(std::span<const double> grad, std::size_t tau);

ComplexTensor dft_real_tensor(const RealTensor& x);
RealTensor idft_real_tensor(const ComplexTensor& spectrum, std::size_t tau);

ComplexTensor to_complex_tensor(const std::vector<cdouble>& values);

// Elementwise and contraction helpers.
cdouble cmul(cdouble a, cdouble b) noexcept;
ComplexTensor cmul(const ComplexTensor& a, const ComplexTensor& b);
ComplexTensor cadd(const ComplexTensor& a, const ComplexTensor& b);
ComplexTensor cconj(const ComplexTensor& a);
RealTensor cmagnitude(const ComplexTensor& a);
/// (n, m) x (m, p) -> (n, p).
ComplexTensor matmul_complex(const ComplexTensor& a, const ComplexTensor& b);
/// Numerically stable softmax of a rank-1 tensor.
RealTensor softmax_real(const RealTensor& v);
void softmax_inplace(std::span<double> v);

}  // namespace stfnet
