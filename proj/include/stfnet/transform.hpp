#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "stfnet/numeric.hpp"
#include "stfnet/tensor.hpp"

namespace stfnet {

/// One STFT view of a (T, D) signal: data has shape (M, K, D) with
/// M = T / tau chunks and K = tau / 2 + 1 bins. Bin k sits at k * fs / tau.
struct SpectralRep {
  ComplexTensor data;
  std::size_t tau = 0;
  double fs = 1.0;

  std::size_t chunks() const { return data.dim(0); }
  std::size_t bins() const { return data.dim(1); }
  std::size_t features() const { return data.dim(2); }
  double bin_frequency(std::size_t k) const {
    return static_cast<double>(k) * fs / static_cast<double>(tau);
  }
};

/// STFTs of one signal at several power-of-two window widths, ascending.
struct Hologram {
  std::vector<SpectralRep> reps;
  std::vector<std::size_t> window_set;
};

/// Throws ConfigError unless the set is non-empty, strictly ascending and
/// made of powers of two.
void validate_window_set(const std::vector<std::size_t>& window_set);

/// Rectangular, non-overlapping STFT (hop = tau).
SpectralRep stft(const RealTensor& x, std::size_t tau, double fs);
/// Chunk-wise inverse of stft. With SymmetryPolicy::Project the imaginary
/// parts of the DC and Nyquist bins are ignored.
RealTensor istft(const SpectralRep& rep, SymmetryPolicy policy = SymmetryPolicy::Strict);

Hologram multi_stft(const RealTensor& x, const std::vector<std::size_t>& window_set, double fs);

/// Bin of the tau_j grid at the same physical frequency as bin `k` of the
/// finer-frequency tau_i grid (tau_i > tau_j), if one exists.
std::optional<std::size_t> freq_align(std::size_t k, std::size_t tau_i, std::size_t tau_j);

/// Sum over the tau_i / tau_j chunks of rep j that cover chunk m of rep i,
/// at the bin aligned with bin k of rep i. Shape (D,).
ComplexTensor time_align_sum(const Hologram& hologram, std::size_t i, std::size_t j,
                             std::size_t m, std::size_t k);

}  // namespace stfnet
