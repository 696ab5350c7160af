#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "stfnet/autograd.hpp"
#include "stfnet/specops.hpp"

/// Differentiable primitives recorded on an ad::Tape. Forward values come
/// from the plain operations in numeric/transform/specops; every primitive
/// here carries an exact adjoint over the real and imaginary planes.
namespace stfnet::ad {

// ---- transforms -------------------------------------------------------------

/// (T, D) real -> (M, K, D) complex.
Var stft(Tape& tape, Var signal, std::size_t tau);
/// (M, K, D) complex -> (M * tau, D) real; DC/Nyquist imaginary parts ignored.
Var istft(Tape& tape, Var spectrum, std::size_t tau);

// ---- spectral operations ----------------------------------------------------

/// Interleaves a hologram given as one (M_i, K_i, D) node per window.
/// Returns one node per window; the finest is passed through unchanged.
std::vector<Var> interleave(Tape& tape, const std::vector<Var>& reps,
                            const std::vector<std::size_t>& window_set,
                            const std::map<std::size_t, Var>& weights);

/// Filter weights (K_base, D, O) resolved to the grid of `tau`.
Var resolve_filter(Tape& tape, Var weights, std::size_t tau_base, std::size_t tau,
                   InterpMode mode);
/// (M, K, D) x (K, D, O) -> (M, K, O).
Var filter(Tape& tape, Var spectrum, Var weights);

/// (M, K, D) -> (M, K + left + right, D).
Var pad_frequency(Tape& tape, Var spectrum, std::size_t tau, std::size_t pad_left,
                  std::size_t pad_right, PaddingMode mode);
/// Dilated cross-correlation along the frequency axis, kernel (1, S, D, O).
Var correlate(Tape& tape, Var padded, Var kernel, std::size_t dilation, std::size_t out_bins);
/// Spectral conv = pad + correlate, keeping (M, K).
Var conv(Tape& tape, Var spectrum, std::size_t tau, Var kernel, std::size_t tau_conv_base,
         PaddingMode mode);
/// Keeps bins [0, keep).
Var truncate_bins(Tape& tape, Var spectrum, std::size_t keep);

// ---- complex helpers --------------------------------------------------------

Var magnitude(Tape& tape, Var z);
Var matmul(Tape& tape, Var a, Var b);

// ---- real-valued layers -----------------------------------------------------

Var relu(Tape& tape, Var x);
Var softmax(Tape& tape, Var x);
/// Concatenates (T, F_i) tensors along the feature axis.
Var concat_features(Tape& tape, const std::vector<Var>& parts);
Var slice_features(Tape& tape, Var x, std::size_t begin, std::size_t count);
/// (T, F) -> (F).
Var mean_time(Tape& tape, Var x);
/// (T, F) -> (T / factor, F) by non-overlapping mean or max.
Var pool_time(Tape& tape, Var x, std::size_t factor, bool use_max);
Var flatten(Tape& tape, Var x);
/// W x + b with x (F), W (C, F), b (C).
Var dense(Tape& tape, Var x, Var weight, Var bias);
/// -log softmax(logits)[label], scalar.
Var cross_entropy(Tape& tape, Var logits, std::size_t label);
/// Real tensors of equal shape.
Var add(Tape& tape, Var a, Var b);
Var scale(Tape& tape, Var x, double factor);
/// sum of coeff * x over every real plane; the generic linear functional.
Var inner(Tape& tape, Var x, const Value& coeffs);

}  // namespace stfnet::ad
