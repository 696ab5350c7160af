#include "stfnet/specops.hpp"

#include <algorithm>
#include <cmath>

#include "stfnet/error.hpp"

namespace stfnet {

PoolSpec PoolSpec::from_rho(double rho) {
  if (!(rho > 0.0) || rho > 1.0) throw ConfigError("pooling rho must lie in (0, 1]");
  const double inverse = 1.0 / rho;
  const auto decimation = static_cast<std::size_t>(std::llround(inverse));
  if (std::abs(inverse - static_cast<double>(decimation)) > 1e-12 || !is_power_of_two(decimation))
    throw ConfigError("pooling rho must be 1, 1/2, 1/4, ...");
  return PoolSpec{decimation};
}

// ---- hologram interleaving -------------------------------------------------

std::optional<InterleaveSource> interleave_source(const std::vector<std::size_t>& window_set,
                                                  std::size_t i, std::size_t k) {
  for (std::size_t j = 0; j < i; ++j) {
    if (auto bin = freq_align(k, window_set[i], window_set[j]))
      return InterleaveSource{j, *bin, window_set[i] / window_set[j]};
  }
  return std::nullopt;
}

std::vector<std::size_t> interleave_ratios(const std::vector<std::size_t>& window_set) {
  std::vector<std::size_t> ratios;
  for (std::size_t i = 0; i < window_set.size(); ++i)
    for (std::size_t j = 0; j < i; ++j) {
      const std::size_t s = window_set[i] / window_set[j];
      if (std::find(ratios.begin(), ratios.end(), s) == ratios.end()) ratios.push_back(s);
    }
  std::sort(ratios.begin(), ratios.end());
  return ratios;
}

cdouble interleave_merge(std::span<const cdouble> z, std::span<const double> w_re,
                         std::span<const double> w_im, std::span<cdouble> projected,
                         std::span<double> attention) {
  const std::size_t s = z.size();
  double scores[64];
  std::vector<double> heap;
  double* a = scores;
  if (s > 64) {
    heap.resize(s);
    a = heap.data();
  }
  for (std::size_t r = 0; r < s; ++r) {
    double ur = 0.0, ui = 0.0;
    for (std::size_t c = 0; c < s; ++c) {
      const double wr = w_re[r * s + c], wi = w_im[r * s + c];
      ur += wr * z[c].real() - wi * z[c].imag();
      ui += wr * z[c].imag() + wi * z[c].real();
    }
    if (!projected.empty()) projected[r] = {ur, ui};
    a[r] = std::hypot(ur, ui);
  }
  softmax_inplace(std::span<double>(a, s));
  cdouble y{};
  for (std::size_t r = 0; r < s; ++r) y += a[r] * z[r];
  if (!attention.empty()) std::copy(a, a + s, attention.begin());
  return static_cast<double>(s) * y;
}

Hologram interleave(const Hologram& h, const InterleaveWeights& w) {
  Hologram out = h;
  std::vector<cdouble> z;
  for (std::size_t i = 1; i < h.reps.size(); ++i) {
    const auto& rep = h.reps[i];
    auto& target = out.reps[i].data;
    for (std::size_t k = 0; k < rep.bins(); ++k) {
      const auto src = interleave_source(h.window_set, i, k);
      if (!src) continue;
      const auto found = w.find(src->ratio);
      if (found == w.end())
        throw ShapeError("interleave: no weight matrix for ratio " + std::to_string(src->ratio));
      const auto& wm = found->second;
      if (wm.shape() != Shape{src->ratio, src->ratio})
        throw ShapeError("interleave: weight for ratio " + std::to_string(src->ratio) +
                         " has shape " + shape_string(wm.shape()));
      const auto& fine = h.reps[src->rep].data;
      z.resize(src->ratio);
      for (std::size_t m = 0; m < rep.chunks(); ++m)
        for (std::size_t d = 0; d < rep.features(); ++d) {
          for (std::size_t s = 0; s < src->ratio; ++s)
            z[s] = fine.get(fine.index(src->ratio * m + s, src->bin, d));
          target.set(target.index(m, k, d), interleave_merge(z, wm.re(), wm.im()));
        }
    }
  }
  return out;
}

// ---- filtering ------------------------------------------------------------

namespace {

void check_filter_shape(const ComplexTensor& w, std::size_t tau_base) {
  if (w.rank() != 3) throw ShapeError("filter weights must be (K, D, O), got " + shape_string(w.shape()));
  if (w.dim(0) != half_spectrum_size(tau_base))
    throw ShapeError("filter weights have " + std::to_string(w.dim(0)) + " bins but tau_base " +
                     std::to_string(tau_base) + " needs " +
                     std::to_string(half_spectrum_size(tau_base)));
}

}  // namespace

ComplexTensor interpolate_linear(const ComplexTensor& w, std::size_t tau_base,
                                 std::size_t tau_target) {
  check_filter_shape(w, tau_base);
  if (tau_target <= tau_base) throw ConfigError("interpolate_linear needs tau_target > tau_base");
  const std::size_t bins = half_spectrum_size(tau_target);
  const std::size_t cols = w.dim(1) * w.dim(2);
  ComplexTensor out({bins, w.dim(1), w.dim(2)});
  for (std::size_t k = 0; k < bins; ++k) {
    // Position k * tau_base / tau_target on the base grid, kept rational.
    const std::size_t numer = k * tau_base;
    const std::size_t left = numer / tau_target;
    const std::size_t rem = numer % tau_target;
    for (std::size_t c = 0; c < cols; ++c) {
      if (rem == 0) {
        out.set(k * cols + c, w.get(left * cols + c));
        continue;
      }
      const double frac = static_cast<double>(rem) / static_cast<double>(tau_target);
      out.set(k * cols + c, w.get(left * cols + c) * (1.0 - frac) + w.get((left + 1) * cols + c) * frac);
    }
  }
  return out;
}

ComplexTensor interpolate_spectral(const ComplexTensor& w, std::size_t tau_base,
                                   std::size_t tau_target, SymmetryPolicy policy) {
  check_filter_shape(w, tau_base);
  if (tau_target <= tau_base) throw ConfigError("interpolate_spectral needs tau_target > tau_base");
  const std::size_t base_bins = w.dim(0), bins = half_spectrum_size(tau_target);
  const std::size_t cols = w.dim(1) * w.dim(2);
  ComplexTensor out({bins, w.dim(1), w.dim(2)});
  std::vector<cdouble> column(base_bins);
  std::vector<double> padded(tau_target);
  for (std::size_t c = 0; c < cols; ++c) {
    for (std::size_t k = 0; k < base_bins; ++k) column[k] = w.get(k * cols + c);
    const auto impulse = idft_real(column, tau_base, policy);
    std::fill(padded.begin(), padded.end(), 0.0);
    std::copy(impulse.begin(), impulse.end(), padded.begin());
    const auto spectrum = dft_real(padded);
    for (std::size_t k = 0; k < bins; ++k) out.set(k * cols + c, spectrum[k]);
  }
  return out;
}

ComplexTensor subsample_filter(const ComplexTensor& w, std::size_t tau_base,
                               std::size_t tau_target) {
  check_filter_shape(w, tau_base);
  if (tau_target > tau_base || tau_base % tau_target != 0)
    throw ConfigError("subsample_filter needs tau_target dividing tau_base");
  const std::size_t stride = tau_base / tau_target, bins = half_spectrum_size(tau_target);
  const std::size_t cols = w.dim(1) * w.dim(2);
  ComplexTensor out({bins, w.dim(1), w.dim(2)});
  for (std::size_t k = 0; k < bins; ++k)
    for (std::size_t c = 0; c < cols; ++c) out.set(k * cols + c, w.get(k * stride * cols + c));
  return out;
}

ComplexTensor resolve_filter(const ComplexTensor& w, std::size_t tau_base, std::size_t tau_target,
                             InterpMode mode, SymmetryPolicy policy) {
  check_filter_shape(w, tau_base);
  if (tau_target == tau_base) return w;
  if (tau_target < tau_base) return subsample_filter(w, tau_base, tau_target);
  return mode == InterpMode::Linear ? interpolate_linear(w, tau_base, tau_target)
                                    : interpolate_spectral(w, tau_base, tau_target, policy);
}

ComplexTensor apply_filter(const ComplexTensor& x, const ComplexTensor& w) {
  if (x.rank() != 3 || w.rank() != 3 || x.dim(1) != w.dim(0) || x.dim(2) != w.dim(1))
    throw ShapeError("filter: input " + shape_string(x.shape()) + " incompatible with weights " +
                     shape_string(w.shape()));
  const std::size_t chunks = x.dim(0), bins = x.dim(1), in = x.dim(2), out_f = w.dim(2);
  ComplexTensor y({chunks, bins, out_f});
  auto yr = y.re();
  auto yi = y.im();
  const auto xr = x.re(), xi = x.im(), wr = w.re(), wi = w.im();
  for (std::size_t m = 0; m < chunks; ++m)
    for (std::size_t k = 0; k < bins; ++k) {
      const std::size_t xbase = (m * bins + k) * in, ybase = (m * bins + k) * out_f;
      for (std::size_t d = 0; d < in; ++d) {
        const double ar = xr[xbase + d], ai = xi[xbase + d];
        const std::size_t wbase = (k * in + d) * out_f;
        for (std::size_t o = 0; o < out_f; ++o) {
          yr[ybase + o] += ar * wr[wbase + o] - ai * wi[wbase + o];
          yi[ybase + o] += ar * wi[wbase + o] + ai * wr[wbase + o];
        }
      }
    }
  return y;
}

SpectralRep stfnet_filter(const SpectralRep& rep, const FilterWeights& w) {
  if (rep.features() != w.weights.dim(1))
    throw ShapeError("filter: rep has " + std::to_string(rep.features()) +
                     " features, weights expect " + std::to_string(w.weights.dim(1)));
  const auto resolved = resolve_filter(w.weights, w.tau_base, rep.tau, w.interp);
  return SpectralRep{apply_filter(rep.data, resolved), rep.tau, rep.fs};
}

// ---- convolution ----------------------------------------------------------

std::pair<std::size_t, bool> spectral_mirror(long q, std::size_t bins, std::size_t tau) {
  const long k = static_cast<long>(bins);
  if (q >= 0 && q < k) return {static_cast<std::size_t>(q), false};
  if (q < 0 && -q < k) return {static_cast<std::size_t>(-q), true};
  if (q >= k && q <= static_cast<long>(tau) && static_cast<long>(tau) - q < k)
    return {static_cast<std::size_t>(static_cast<long>(tau) - q), true};
  throw ShapeError("spectral padding index " + std::to_string(q) + " exceeds the mirror range");
}

ComplexTensor pad_frequency(const ComplexTensor& x, std::size_t tau, std::size_t pad_left,
                            std::size_t pad_right, PaddingMode mode) {
  if (x.rank() != 3) throw ShapeError("pad expects an (M, K, D) tensor");
  const std::size_t chunks = x.dim(0), bins = x.dim(1), features = x.dim(2);
  if (bins != half_spectrum_size(tau)) throw ShapeError("pad: bins do not match tau");
  if (pad_left >= bins || pad_right >= bins)
    throw ShapeError("spectral padding (" + std::to_string(pad_left) + ", " +
                     std::to_string(pad_right) + ") exceeds mirror range of " +
                     std::to_string(bins) + " bins");
  const std::size_t width = bins + pad_left + pad_right;
  ComplexTensor out({chunks, width, features});
  for (std::size_t p = 0; p < width; ++p) {
    const long q = static_cast<long>(p) - static_cast<long>(pad_left);
    const bool inside = q >= 0 && q < static_cast<long>(bins);
    if (!inside && mode == PaddingMode::Zero) continue;
    const auto [src, conj] = spectral_mirror(q, bins, tau);
    for (std::size_t m = 0; m < chunks; ++m)
      for (std::size_t d = 0; d < features; ++d) {
        const cdouble v = x.get(x.index(m, src, d));
        out.set(out.index(m, p, d), conj ? std::conj(v) : v);
      }
  }
  return out;
}

ComplexTensor spectral_pad(const SpectralRep& rep, std::size_t pad_left, std::size_t pad_right) {
  return pad_frequency(rep.data, rep.tau, pad_left, pad_right, PaddingMode::Spectral);
}

ConvGeometry conv_geometry(std::size_t kernel_size, std::size_t tau, std::size_t tau_conv_base,
                           std::size_t bins) {
  if (kernel_size % 2 == 0) throw ConfigError("convolution kernel size must be odd");
  if (tau < tau_conv_base || tau % tau_conv_base != 0)
    throw ConfigError("window " + std::to_string(tau) + " is not a multiple of the conv base " +
                      std::to_string(tau_conv_base));
  ConvGeometry g;
  g.dilation = tau / tau_conv_base - 1;
  g.span = (kernel_size - 1) * (g.dilation + 1) + 1;
  if (g.span > 2 * bins - 1)
    throw ShapeError("dilated kernel span " + std::to_string(g.span) + " exceeds 2K - 1 = " +
                     std::to_string(2 * bins - 1));
  g.pad_left = (g.span - 1) / 2;
  g.pad_right = g.span - 1 - g.pad_left;
  return g;
}

ComplexTensor correlate_frequency(const ComplexTensor& padded, const ComplexTensor& kernel,
                                  std::size_t dilation, std::size_t out_bins) {
  if (kernel.rank() != 4 || kernel.dim(0) != 1 || padded.rank() != 3 ||
      kernel.dim(2) != padded.dim(2))
    throw ShapeError("conv: kernel " + shape_string(kernel.shape()) + " incompatible with input " +
                     shape_string(padded.shape()));
  const std::size_t chunks = padded.dim(0), width = padded.dim(1), in = padded.dim(2);
  const std::size_t taps = kernel.dim(1), out_f = kernel.dim(3);
  if (out_bins + (taps - 1) * (dilation + 1) > width)
    throw ShapeError("conv: padded input too narrow for kernel span");
  ComplexTensor y({chunks, out_bins, out_f});
  auto yr = y.re();
  auto yi = y.im();
  const auto pr = padded.re(), pi = padded.im(), wr = kernel.re(), wi = kernel.im();
  for (std::size_t m = 0; m < chunks; ++m)
    for (std::size_t k = 0; k < out_bins; ++k) {
      const std::size_t ybase = (m * out_bins + k) * out_f;
      for (std::size_t s = 0; s < taps; ++s) {
        const std::size_t pbase = (m * width + k + s * (dilation + 1)) * in;
        for (std::size_t d = 0; d < in; ++d) {
          const double ar = pr[pbase + d], ai = pi[pbase + d];
          const std::size_t wbase = (s * in + d) * out_f;
          for (std::size_t o = 0; o < out_f; ++o) {
            yr[ybase + o] += ar * wr[wbase + o] - ai * wi[wbase + o];
            yi[ybase + o] += ar * wi[wbase + o] + ai * wr[wbase + o];
          }
        }
      }
    }
  return y;
}

SpectralRep stfnet_conv(const SpectralRep& rep, const ConvWeights& w) {
  if (w.weights.rank() != 4) throw ShapeError("conv weights must be (1, S, D, O)");
  const auto g = conv_geometry(w.weights.dim(1), rep.tau, w.tau_conv_base, rep.bins());
  const auto padded = pad_frequency(rep.data, rep.tau, g.pad_left, g.pad_right, w.padding);
  return SpectralRep{correlate_frequency(padded, w.weights, g.dilation, rep.bins()), rep.tau, rep.fs};
}

// ---- pooling ---------------------------------------------------------------

SpectralRep stfnet_pool(const SpectralRep& rep, const PoolSpec& p) {
  if (!is_power_of_two(p.decimation)) throw ConfigError("pooling decimation must be a power of two");
  if (rep.tau % p.decimation != 0 || rep.tau / p.decimation < 2)
    throw ConfigError("pooling rho = 1/" + std::to_string(p.decimation) +
                      " leaves fewer than 2 samples of window " + std::to_string(rep.tau));
  const std::size_t tau = rep.tau / p.decimation, bins = half_spectrum_size(tau);
  const std::size_t chunks = rep.chunks(), features = rep.features();
  SpectralRep out{ComplexTensor({chunks, bins, features}), tau, rep.fs / static_cast<double>(p.decimation)};
  for (std::size_t m = 0; m < chunks; ++m)
    for (std::size_t k = 0; k < bins; ++k)
      for (std::size_t d = 0; d < features; ++d)
        out.data.set(out.data.index(m, k, d), rep.data.get(rep.data.index(m, k, d)));
  return out;
}

Hologram stfnet_pool(const Hologram& h, const PoolSpec& p) {
  Hologram out;
  for (const auto& rep : h.reps) {
    out.reps.push_back(stfnet_pool(rep, p));
    out.window_set.push_back(out.reps.back().tau);
  }
  return out;
}

}  // namespace stfnet
