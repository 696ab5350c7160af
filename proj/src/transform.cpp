#include "stfnet/transform.hpp"

#include "stfnet/error.hpp"

namespace stfnet {

void validate_window_set(const std::vector<std::size_t>& window_set) {
  if (window_set.empty()) throw ConfigError("window set is empty");
  for (std::size_t i = 0; i < window_set.size(); ++i) {
    if (!is_power_of_two(window_set[i]) || window_set[i] < 2)
      throw ConfigError("window width " + std::to_string(window_set[i]) +
                        " is not a power of two >= 2");
    if (i > 0 && window_set[i] <= window_set[i - 1])
      throw ConfigError("window set must be strictly ascending");
  }
}

SpectralRep stft(const RealTensor& x, std::size_t tau, double fs) {
  if (x.rank() != 2) throw ShapeError("stft expects a (T, D) signal, got " + shape_string(x.shape()));
  if (!is_power_of_two(tau)) throw ConfigError("stft window " + std::to_string(tau) + " is not a power of two");
  const std::size_t length = x.dim(0), features = x.dim(1);
  if (length % tau != 0)
    throw ShapeError("signal length " + std::to_string(length) + " is not divisible by window " +
                     std::to_string(tau));
  const std::size_t chunks = length / tau, bins = half_spectrum_size(tau);
  SpectralRep rep{ComplexTensor({chunks, bins, features}), tau, fs};
  std::vector<double> slice(tau);
  for (std::size_t m = 0; m < chunks; ++m)
    for (std::size_t d = 0; d < features; ++d) {
      for (std::size_t t = 0; t < tau; ++t) slice[t] = x.at(m * tau + t, d);
      const auto spectrum = dft_real(slice);
      for (std::size_t k = 0; k < bins; ++k) rep.data.set(rep.data.index(m, k, d), spectrum[k]);
    }
  return rep;
}

RealTensor istft(const SpectralRep& rep, SymmetryPolicy policy) {
  if (rep.data.rank() != 3) throw ShapeError("istft expects an (M, K, D) spectrum");
  const std::size_t chunks = rep.chunks(), bins = rep.bins(), features = rep.features();
  if (bins != half_spectrum_size(rep.tau))
    throw ShapeError("istft: " + std::to_string(bins) + " bins do not match tau " +
                     std::to_string(rep.tau));
  RealTensor out({chunks * rep.tau, features});
  std::vector<cdouble> spectrum(bins);
  for (std::size_t m = 0; m < chunks; ++m)
    for (std::size_t d = 0; d < features; ++d) {
      for (std::size_t k = 0; k < bins; ++k) spectrum[k] = rep.data.get(rep.data.index(m, k, d));
      const auto chunk = idft_real(spectrum, rep.tau, policy);
      for (std::size_t t = 0; t < rep.tau; ++t) out.at(m * rep.tau + t, d) = chunk[t];
    }
  return out;
}

Hologram multi_stft(const RealTensor& x, const std::vector<std::size_t>& window_set, double fs) {
  validate_window_set(window_set);
  if (x.rank() != 2) throw ShapeError("multi_stft expects a (T, D) signal");
  if (x.dim(0) % window_set.back() != 0)
    throw ConfigError("signal length " + std::to_string(x.dim(0)) +
                      " is not divisible by the largest window " +
                      std::to_string(window_set.back()));
  Hologram h;
  h.window_set = window_set;
  h.reps.reserve(window_set.size());
  for (auto tau : window_set) h.reps.push_back(stft(x, tau, fs));
  return h;
}

std::optional<std::size_t> freq_align(std::size_t k, std::size_t tau_i, std::size_t tau_j) {
  if (tau_j == 0 || tau_i % tau_j != 0) return std::nullopt;
  const std::size_t ratio = tau_i / tau_j;
  if (k % ratio != 0) return std::nullopt;
  return k / ratio;
}

ComplexTensor time_align_sum(const Hologram& hologram, std::size_t i, std::size_t j,
                             std::size_t m, std::size_t k) {
  const auto& coarse = hologram.reps.at(i);
  const auto& fine = hologram.reps.at(j);
  if (coarse.tau <= fine.tau) throw AlignError("time_align_sum needs tau_i > tau_j");
  const auto kj = freq_align(k, coarse.tau, fine.tau);
  if (!kj || k >= coarse.bins())
    throw AlignError("bin " + std::to_string(k) + " of tau " + std::to_string(coarse.tau) +
                     " has no counterpart at tau " + std::to_string(fine.tau));
  if (m >= coarse.chunks()) throw AlignError("chunk index out of range");
  const std::size_t ratio = coarse.tau / fine.tau;
  const std::size_t features = fine.features();
  ComplexTensor out({features});
  for (std::size_t mj = ratio * m; mj < ratio * (m + 1); ++mj)
    for (std::size_t d = 0; d < features; ++d) out.add(d, fine.data.get(fine.data.index(mj, *kj, d)));
  return out;
}

}  // namespace stfnet
