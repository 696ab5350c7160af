#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <utility>

#include "stfnet/tensor.hpp"
#include "stfnet/transform.hpp"

namespace stfnet {

enum class InterpMode { Linear, Spectral };
enum class PaddingMode { Spectral, Zero };

/// One attention matrix W_m of shape (S, S) per resolution ratio S,
/// shared across bins, features and chunks.
using InterleaveWeights = std::map<std::size_t, ComplexTensor>;

/// Global frequency template W_f of shape (K_base, D, O), defined on the
/// grid of window tau_base and resampled for other windows.
struct FilterWeights {
  ComplexTensor weights;
  std::size_t tau_base = 0;
  InterpMode interp = InterpMode::Linear;
};

/// Local frequency kernel W_c of shape (1, S_k, D, O), S_k odd, laid out
/// against the bin spacing of window tau_conv_base.
struct ConvWeights {
  ComplexTensor weights;
  std::size_t tau_conv_base = 0;
  PaddingMode padding = PaddingMode::Spectral;
};

/// Low-pass pooling keeping frequencies up to rho * fs / 2, rho = 1 / decimation.
struct PoolSpec {
  std::size_t decimation = 1;

  double rho() const { return 1.0 / static_cast<double>(decimation); }
  /// rho must be 1, 1/2, 1/4, ...
  static PoolSpec from_rho(double rho);
};

// ---- hologram interleaving -------------------------------------------------

/// Where bin k of rep i draws its merge input from: the finest rep j whose
/// grid contains that frequency, and the ratio S = tau_i / tau_j.
struct InterleaveSource {
  std::size_t rep = 0;
  std::size_t bin = 0;
  std::size_t ratio = 0;
};
std::optional<InterleaveSource> interleave_source(const std::vector<std::size_t>& window_set,
                                                  std::size_t i, std::size_t k);

/// Distinct ratios tau_i / tau_j (i > j) of a window set; one W_m each.
std::vector<std::size_t> interleave_ratios(const std::vector<std::size_t>& window_set);

/// y = S * softmax(|W z|)^T z for one merge input z of length S. When
/// `projected`/`attention` are non-empty they receive W z and the weights.
cdouble interleave_merge(std::span<const cdouble> z, std::span<const double> w_re,
                         std::span<const double> w_im, std::span<cdouble> projected = {},
                         std::span<double> attention = {});

Hologram interleave(const Hologram& h, const InterleaveWeights& w);

// ---- filtering ------------------------------------------------------------

ComplexTensor interpolate_linear(const ComplexTensor& w, std::size_t tau_base,
                                 std::size_t tau_target);
ComplexTensor interpolate_spectral(const ComplexTensor& w, std::size_t tau_base,
                                   std::size_t tau_target,
                                   SymmetryPolicy policy = SymmetryPolicy::Strict);
/// Frequency stride subsampling for tau_target < tau_base.
ComplexTensor subsample_filter(const ComplexTensor& w, std::size_t tau_base,
                               std::size_t tau_target);
/// Identity, subsampling or interpolation depending on tau_target.
ComplexTensor resolve_filter(const ComplexTensor& w, std::size_t tau_base, std::size_t tau_target,
                             InterpMode mode, SymmetryPolicy policy = SymmetryPolicy::Strict);

/// Y[m, k, :] = X[m, k, :] W[k, :, :]; x is (M, K, D), w is (K, D, O).
ComplexTensor apply_filter(const ComplexTensor& x, const ComplexTensor& w);
SpectralRep stfnet_filter(const SpectralRep& rep, const FilterWeights& w);

// ---- convolution ----------------------------------------------------------

/// Source bin for padded position q (may be negative or >= K) and whether it
/// is conjugated. Valid for -K < q <= 2K - 2.
std::pair<std::size_t, bool> spectral_mirror(long q, std::size_t bins, std::size_t tau);

ComplexTensor spectral_pad(const SpectralRep& rep, std::size_t pad_left, std::size_t pad_right);
ComplexTensor pad_frequency(const ComplexTensor& x, std::size_t tau, std::size_t pad_left,
                            std::size_t pad_right, PaddingMode mode);

struct ConvGeometry {
  std::size_t dilation = 0;  ///< r; taps are r + 1 bins apart
  std::size_t span = 0;      ///< (S_k - 1)(r + 1) + 1
  std::size_t pad_left = 0;
  std::size_t pad_right = 0;
};
ConvGeometry conv_geometry(std::size_t kernel_size, std::size_t tau, std::size_t tau_conv_base,
                           std::size_t bins);

/// Y[m, k, o] = sum_{s, d} P[m, k + s (r + 1), d] W[0, s, d, o], k < out_bins.
ComplexTensor correlate_frequency(const ComplexTensor& padded, const ComplexTensor& kernel,
                                  std::size_t dilation, std::size_t out_bins);
SpectralRep stfnet_conv(const SpectralRep& rep, const ConvWeights& w);

// ---- pooling ---------------------------------------------------------------

SpectralRep stfnet_pool(const SpectralRep& rep, const PoolSpec& p);
Hologram stfnet_pool(const Hologram& h, const PoolSpec& p);

}  // namespace stfnet
