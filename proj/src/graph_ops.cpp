#include "stfnet/graph_ops.hpp"

#include <algorithm>
#include <cmath>

#include "stfnet/error.hpp"
#include "stfnet/numeric.hpp"
#include "stfnet/transform.hpp"

namespace stfnet::ad {

namespace {

RealTensor scalar(double v) { return RealTensor({1}, {v}); }

std::uint64_t hash_mask(const std::vector<bool>& mask) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  std::uint64_t word = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    word = (word << 1) | (mask[i] ? 1 : 0);
    if (i % 64 == 63) {
      h = (h ^ word) * 0x100000001b3ULL;
      word = 0;
    }
  }
  return (h ^ word ^ mask.size()) * 0x100000001b3ULL;
}

}  // namespace

// ---- transforms -------------------------------------------------------------

Var stft(Tape& tape, Var signal, std::size_t tau) {
  auto rep = stfnet::stft(tape.real(signal), tau, 1.0);
  return tape.record(std::move(rep.data), {signal}, [signal, tau](Tape& t, Var self) {
    if (!t.requires_grad(signal)) return;
    const auto& g = t.complex_grad(self);
    auto& gx = t.real_grad(signal);
    const std::size_t chunks = g.dim(0), bins = g.dim(1), features = g.dim(2);
    std::vector<cdouble> column(bins);
    for (std::size_t m = 0; m < chunks; ++m)
      for (std::size_t d = 0; d < features; ++d) {
        for (std::size_t k = 0; k < bins; ++k) column[k] = g.get(g.index(m, k, d));
        const auto back = dft_real_adjoint(column, tau);
        for (std::size_t s = 0; s < tau; ++s) gx.at(m * tau + s, d) += back[s];
      }
  });
}

Var istft(Tape& tape, Var spectrum, std::size_t tau) {
  SpectralRep rep{tape.complex(spectrum), tau, 1.0};
  auto x = stfnet::istft(rep, SymmetryPolicy::Project);
  return tape.record(std::move(x), {spectrum}, [spectrum, tau](Tape& t, Var self) {
    if (!t.requires_grad(spectrum)) return;
    const auto& g = t.real_grad(self);
    auto& gs = t.complex_grad(spectrum);
    const std::size_t chunks = gs.dim(0), bins = gs.dim(1), features = gs.dim(2);
    std::vector<double> chunk(tau);
    for (std::size_t m = 0; m < chunks; ++m)
      for (std::size_t d = 0; d < features; ++d) {
        for (std::size_t s = 0; s < tau; ++s) chunk[s] = g.at(m * tau + s, d);
        const auto back = idft_real_adjoint(chunk, tau);
        for (std::size_t k = 0; k < bins; ++k) gs.add(gs.index(m, k, d), back[k]);
      }
  });
}

// ---- interleaving -----------------------------------------------------------

std::vector<Var> interleave(Tape& tape, const std::vector<Var>& reps,
                            const std::vector<std::size_t>& window_set,
                            const std::map<std::size_t, Var>& weights) {
  if (reps.size() != window_set.size()) throw ShapeError("interleave: one node per window expected");
  std::vector<Var> out{reps.front()};
  for (std::size_t i = 1; i < reps.size(); ++i) {
    const auto& coarse = tape.complex(reps[i]);
    ComplexTensor value = coarse;
    std::vector<Var> inputs(reps.begin(), reps.begin() + static_cast<long>(i) + 1);
    std::vector<cdouble> z;
    for (std::size_t k = 0; k < coarse.dim(1); ++k) {
      const auto src = interleave_source(window_set, i, k);
      if (!src) continue;
      const auto w = weights.find(src->ratio);
      if (w == weights.end())
        throw ShapeError("interleave: no weight matrix for ratio " + std::to_string(src->ratio));
      if (std::find_if(inputs.begin(), inputs.end(), [&](Var v) { return v.id == w->second.id; }) ==
          inputs.end())
        inputs.push_back(w->second);
      const auto& wm = tape.complex(w->second);
      const auto& fine = tape.complex(reps[src->rep]);
      z.resize(src->ratio);
      for (std::size_t m = 0; m < coarse.dim(0); ++m)
        for (std::size_t d = 0; d < coarse.dim(2); ++d) {
          for (std::size_t s = 0; s < src->ratio; ++s)
            z[s] = fine.get(fine.index(src->ratio * m + s, src->bin, d));
          value.set(value.index(m, k, d), interleave_merge(z, wm.re(), wm.im()));
        }
    }

    auto backward = [reps, window_set, weights, i](Tape& t, Var self) {
      const auto& g = t.complex_grad(self);
      const std::size_t chunks = g.dim(0), bins = g.dim(1), features = g.dim(2);
      std::vector<cdouble> z, u, gz;
      std::vector<double> a, ga;
      for (std::size_t k = 0; k < bins; ++k) {
        const auto src = interleave_source(window_set, i, k);
        if (!src) {
          if (!t.requires_grad(reps[i])) continue;
          auto& gc = t.complex_grad(reps[i]);
          for (std::size_t m = 0; m < chunks; ++m)
            for (std::size_t d = 0; d < features; ++d) gc.add(gc.index(m, k, d), g.get(g.index(m, k, d)));
          continue;
        }
        const std::size_t s_count = src->ratio;
        const Var wvar = weights.at(s_count);
        const Var fvar = reps[src->rep];
        const bool want_w = t.requires_grad(wvar), want_z = t.requires_grad(fvar);
        if (!want_w && !want_z) continue;
        const auto& wm = t.complex(wvar);
        const auto& fine = t.complex(fvar);
        ComplexTensor* gw = want_w ? &t.complex_grad(wvar) : nullptr;
        ComplexTensor* gf = want_z ? &t.complex_grad(fvar) : nullptr;
        z.resize(s_count);
        u.resize(s_count);
        gz.resize(s_count);
        a.resize(s_count);
        ga.resize(s_count);
        const double scale_s = static_cast<double>(s_count);
        for (std::size_t m = 0; m < chunks; ++m)
          for (std::size_t d = 0; d < features; ++d) {
            for (std::size_t s = 0; s < s_count; ++s)
              z[s] = fine.get(fine.index(s_count * m + s, src->bin, d));
            interleave_merge(z, wm.re(), wm.im(), u, a);
            const cdouble gy = g.get(g.index(m, k, d));
            double dot = 0.0;
            for (std::size_t s = 0; s < s_count; ++s) {
              ga[s] = scale_s * (gy.real() * z[s].real() + gy.imag() * z[s].imag());
              dot += a[s] * ga[s];
              gz[s] = scale_s * a[s] * gy;
            }
            for (std::size_t r = 0; r < s_count; ++r) {
              const double gn = a[r] * (ga[r] - dot);
              const double mag = std::abs(u[r]);
              if (mag == 0.0 || gn == 0.0) continue;  // subgradient 0 at the origin
              const cdouble gu = gn * u[r] / mag;
              for (std::size_t c = 0; c < s_count; ++c) {
                if (gw) gw->add(r * s_count + c, gu * std::conj(z[c]));
                gz[c] += std::conj(wm.get(r * s_count + c)) * gu;
              }
            }
            if (gf)
              for (std::size_t s = 0; s < s_count; ++s)
                gf->add(gf->index(s_count * m + s, src->bin, d), gz[s]);
          }
      }
    };
    out.push_back(tape.record(std::move(value), inputs, backward));
  }
  return out;
}

// ---- filtering --------------------------------------------------------------

Var resolve_filter(Tape& tape, Var weights, std::size_t tau_base, std::size_t tau,
                   InterpMode mode) {
  if (tau == tau_base) return weights;
  const auto& w = tape.complex(weights);
  const std::size_t cols = w.dim(1) * w.dim(2);
  if (tau < tau_base) {
    auto value = subsample_filter(w, tau_base, tau);
    const std::size_t stride = tau_base / tau;
    return tape.record(std::move(value), {weights}, [weights, stride, cols](Tape& t, Var self) {
      const auto& g = t.complex_grad(self);
      auto& gw = t.complex_grad(weights);
      for (std::size_t k = 0; k < g.dim(0); ++k)
        for (std::size_t c = 0; c < cols; ++c) gw.add(k * stride * cols + c, g.get(k * cols + c));
    });
  }
  if (mode == InterpMode::Linear) {
    auto value = interpolate_linear(w, tau_base, tau);
    return tape.record(std::move(value), {weights}, [weights, tau_base, tau, cols](Tape& t, Var self) {
      const auto& g = t.complex_grad(self);
      auto& gw = t.complex_grad(weights);
      for (std::size_t k = 0; k < g.dim(0); ++k) {
        const std::size_t left = k * tau_base / tau, rem = k * tau_base % tau;
        const double frac = static_cast<double>(rem) / static_cast<double>(tau);
        for (std::size_t c = 0; c < cols; ++c) {
          const cdouble gk = g.get(k * cols + c);
          if (rem == 0) {
            gw.add(left * cols + c, gk);
          } else {
            gw.add(left * cols + c, gk * (1.0 - frac));
            gw.add((left + 1) * cols + c, gk * frac);
          }
        }
      }
    });
  }
  auto value = interpolate_spectral(w, tau_base, tau, SymmetryPolicy::Project);
  return tape.record(std::move(value), {weights}, [weights, tau_base, tau, cols](Tape& t, Var self) {
    const auto& g = t.complex_grad(self);
    auto& gw = t.complex_grad(weights);
    const std::size_t bins = g.dim(0), base_bins = gw.dim(0);
    std::vector<cdouble> column(bins);
    for (std::size_t c = 0; c < cols; ++c) {
      for (std::size_t k = 0; k < bins; ++k) column[k] = g.get(k * cols + c);
      auto padded = dft_real_adjoint(column, tau);
      padded.resize(tau_base);  // adjoint of zero padding
      const auto back = idft_real_adjoint(padded, tau_base);
      for (std::size_t k = 0; k < base_bins; ++k) gw.add(k * cols + c, back[k]);
    }
  });
}

Var filter(Tape& tape, Var spectrum, Var weights) {
  auto value = apply_filter(tape.complex(spectrum), tape.complex(weights));
  return tape.record(std::move(value), {spectrum, weights}, [spectrum, weights](Tape& t, Var self) {
    const auto& g = t.complex_grad(self);
    const auto& x = t.complex(spectrum);
    const auto& w = t.complex(weights);
    const std::size_t chunks = x.dim(0), bins = x.dim(1), in = x.dim(2), out_f = w.dim(2);
    const auto gr = g.re(), gi = g.im(), xr = x.re(), xi = x.im(), wr = w.re(), wi = w.im();
    if (t.requires_grad(spectrum)) {
      auto& gx = t.complex_grad(spectrum);
      auto gxr = gx.re(), gxi = gx.im();
      for (std::size_t m = 0; m < chunks; ++m)
        for (std::size_t k = 0; k < bins; ++k) {
          const std::size_t gbase = (m * bins + k) * out_f, xbase = (m * bins + k) * in;
          for (std::size_t d = 0; d < in; ++d) {
            const std::size_t wbase = (k * in + d) * out_f;
            double accr = 0.0, acci = 0.0;
            for (std::size_t o = 0; o < out_f; ++o) {
              // g * conj(w)
              accr += gr[gbase + o] * wr[wbase + o] + gi[gbase + o] * wi[wbase + o];
              acci += gi[gbase + o] * wr[wbase + o] - gr[gbase + o] * wi[wbase + o];
            }
            gxr[xbase + d] += accr;
            gxi[xbase + d] += acci;
          }
        }
    }
    if (t.requires_grad(weights)) {
      auto& gw = t.complex_grad(weights);
      auto gwr = gw.re(), gwi = gw.im();
      for (std::size_t m = 0; m < chunks; ++m)
        for (std::size_t k = 0; k < bins; ++k) {
          const std::size_t gbase = (m * bins + k) * out_f, xbase = (m * bins + k) * in;
          for (std::size_t d = 0; d < in; ++d) {
            // conj(x) * g
            const double ar = xr[xbase + d], ai = -xi[xbase + d];
            const std::size_t wbase = (k * in + d) * out_f;
            for (std::size_t o = 0; o < out_f; ++o) {
              gwr[wbase + o] += ar * gr[gbase + o] - ai * gi[gbase + o];
              gwi[wbase + o] += ar * gi[gbase + o] + ai * gr[gbase + o];
            }
          }
        }
    }
  });
}

// ---- convolution ------------------------------------------------------------

Var pad_frequency(Tape& tape, Var spectrum, std::size_t tau, std::size_t pad_left,
                  std::size_t pad_right, PaddingMode mode) {
  auto value = stfnet::pad_frequency(tape.complex(spectrum), tau, pad_left, pad_right, mode);
  return tape.record(std::move(value), {spectrum}, [=](Tape& t, Var self) {
    if (!t.requires_grad(spectrum)) return;
    const auto& g = t.complex_grad(self);
    auto& gx = t.complex_grad(spectrum);
    const std::size_t chunks = gx.dim(0), bins = gx.dim(1), features = gx.dim(2);
    for (std::size_t p = 0; p < g.dim(1); ++p) {
      const long q = static_cast<long>(p) - static_cast<long>(pad_left);
      const bool inside = q >= 0 && q < static_cast<long>(bins);
      if (!inside && mode == PaddingMode::Zero) continue;
      const auto [src, conj] = spectral_mirror(q, bins, tau);
      for (std::size_t m = 0; m < chunks; ++m)
        for (std::size_t d = 0; d < features; ++d) {
          const cdouble v = g.get(g.index(m, p, d));
          gx.add(gx.index(m, src, d), conj ? std::conj(v) : v);
        }
    }
  });
}

Var correlate(Tape& tape, Var padded, Var kernel, std::size_t dilation, std::size_t out_bins) {
  auto value = correlate_frequency(tape.complex(padded), tape.complex(kernel), dilation, out_bins);
  return tape.record(std::move(value), {padded, kernel}, [=](Tape& t, Var self) {
    const auto& g = t.complex_grad(self);
    const auto& p = t.complex(padded);
    const auto& w = t.complex(kernel);
    const std::size_t chunks = p.dim(0), width = p.dim(1), in = p.dim(2);
    const std::size_t taps = w.dim(1), out_f = w.dim(3);
    const bool want_p = t.requires_grad(padded), want_w = t.requires_grad(kernel);
    ComplexTensor* gp = want_p ? &t.complex_grad(padded) : nullptr;
    ComplexTensor* gw = want_w ? &t.complex_grad(kernel) : nullptr;
    for (std::size_t m = 0; m < chunks; ++m)
      for (std::size_t k = 0; k < out_bins; ++k)
        for (std::size_t s = 0; s < taps; ++s) {
          const std::size_t prow = (m * width + k + s * (dilation + 1)) * in;
          for (std::size_t d = 0; d < in; ++d) {
            const cdouble pv = p.get(prow + d);
            cdouble acc{};
            for (std::size_t o = 0; o < out_f; ++o) {
              const cdouble gv = g.get((m * out_bins + k) * out_f + o);
              const std::size_t widx = (s * in + d) * out_f + o;
              if (gp) acc += gv * std::conj(w.get(widx));
              if (gw) gw->add(widx, std::conj(pv) * gv);
            }
            if (gp) gp->add(prow + d, acc);
          }
        }
  });
}

Var conv(Tape& tape, Var spectrum, std::size_t tau, Var kernel, std::size_t tau_conv_base,
         PaddingMode mode) {
  const auto& x = tape.complex(spectrum);
  const auto& w = tape.complex(kernel);
  if (w.rank() != 4) throw ShapeError("conv weights must be (1, S, D, O)");
  const auto g = conv_geometry(w.dim(1), tau, tau_conv_base, x.dim(1));
  const std::size_t bins = x.dim(1);
  const Var padded = pad_frequency(tape, spectrum, tau, g.pad_left, g.pad_right, mode);
  return correlate(tape, padded, kernel, g.dilation, bins);
}

Var truncate_bins(Tape& tape, Var spectrum, std::size_t keep) {
  const auto& x = tape.complex(spectrum);
  if (x.rank() != 3 || keep == 0 || keep > x.dim(1)) throw ShapeError("truncate_bins: bad bin count");
  const std::size_t chunks = x.dim(0), bins = x.dim(1), features = x.dim(2);
  ComplexTensor value({chunks, keep, features});
  for (std::size_t m = 0; m < chunks; ++m)
    for (std::size_t k = 0; k < keep; ++k)
      for (std::size_t d = 0; d < features; ++d) value.set(value.index(m, k, d), x.get(x.index(m, k, d)));
  return tape.record(std::move(value), {spectrum}, [=](Tape& t, Var self) {
    const auto& g = t.complex_grad(self);
    auto& gx = t.complex_grad(spectrum);
    for (std::size_t m = 0; m < chunks; ++m)
      for (std::size_t k = 0; k < keep; ++k)
        for (std::size_t d = 0; d < features; ++d)
          gx.add((m * bins + k) * features + d, g.get(g.index(m, k, d)));
  });
}

// ---- complex helpers --------------------------------------------------------

Var magnitude(Tape& tape, Var z) {
  auto value = cmagnitude(tape.complex(z));
  return tape.record(std::move(value), {z}, [z](Tape& t, Var self) {
    const auto& g = t.real_grad(self);
    const auto& x = t.complex(z);
    const auto& y = t.real(self);
    auto& gz = t.complex_grad(z);
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (y[i] == 0.0) continue;
      gz.add(i, g[i] * x.get(i) / y[i]);
    }
  });
}

Var matmul(Tape& tape, Var a, Var b) {
  auto value = matmul_complex(tape.complex(a), tape.complex(b));
  return tape.record(std::move(value), {a, b}, [a, b](Tape& t, Var self) {
    const auto& g = t.complex_grad(self);
    const auto& av = t.complex(a);
    const auto& bv = t.complex(b);
    const std::size_t n = av.dim(0), inner = av.dim(1), p = bv.dim(1);
    if (t.requires_grad(a)) {
      auto& ga = t.complex_grad(a);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < inner; ++j)
          for (std::size_t k = 0; k < p; ++k)
            ga.add(i * inner + j, g.get(i * p + k) * std::conj(bv.get(j * p + k)));
    }
    if (t.requires_grad(b)) {
      auto& gb = t.complex_grad(b);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < inner; ++j)
          for (std::size_t k = 0; k < p; ++k)
            gb.add(j * p + k, std::conj(av.get(i * inner + j)) * g.get(i * p + k));
    }
  });
}

// ---- real-valued layers -----------------------------------------------------

Var relu(Tape& tape, Var x) {
  RealTensor value = tape.real(x);
  std::vector<bool> mask(value.size());
  for (std::size_t i = 0; i < value.size(); ++i) {
    mask[i] = value[i] > 0.0;
    if (!mask[i]) value[i] = 0.0;
  }
  tape.note_branch(hash_mask(mask));
  return tape.record(std::move(value), {x}, [x, mask = std::move(mask)](Tape& t, Var self) {
    const auto& g = t.real_grad(self);
    auto& gx = t.real_grad(x);
    for (std::size_t i = 0; i < mask.size(); ++i)
      if (mask[i]) gx[i] += g[i];
  });
}

Var softmax(Tape& tape, Var x) {
  auto value = softmax_real(tape.real(x));
  return tape.record(std::move(value), {x}, [x](Tape& t, Var self) {
    const auto& g = t.real_grad(self);
    const auto& y = t.real(self);
    auto& gx = t.real_grad(x);
    double dot = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) dot += y[i] * g[i];
    for (std::size_t i = 0; i < y.size(); ++i) gx[i] += y[i] * (g[i] - dot);
  });
}

Var concat_features(Tape& tape, const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_features of nothing");
  const std::size_t length = tape.real(parts.front()).dim(0);
  std::size_t total = 0;
  for (auto p : parts) {
    const auto& v = tape.real(p);
    if (v.rank() != 2 || v.dim(0) != length)
      throw ShapeError("concat_features: parts disagree in length");
    total += v.dim(1);
  }
  RealTensor value({length, total});
  std::size_t offset = 0;
  for (auto p : parts) {
    const auto& v = tape.real(p);
    for (std::size_t i = 0; i < length; ++i)
      for (std::size_t f = 0; f < v.dim(1); ++f) value.at(i, offset + f) = v.at(i, f);
    offset += v.dim(1);
  }
  return tape.record(std::move(value), parts, [parts](Tape& t, Var self) {
    const auto& g = t.real_grad(self);
    std::size_t offset = 0;
    for (auto p : parts) {
      const std::size_t width = t.real(p).dim(1);
      if (t.requires_grad(p)) {
        auto& gp = t.real_grad(p);
        for (std::size_t i = 0; i < g.dim(0); ++i)
          for (std::size_t f = 0; f < width; ++f) gp.at(i, f) += g.at(i, offset + f);
      }
      offset += width;
    }
  });
}

Var slice_features(Tape& tape, Var x, std::size_t begin, std::size_t count) {
  const auto& v = tape.real(x);
  if (v.rank() != 2 || begin + count > v.dim(1) || count == 0)
    throw ShapeError("slice_features: range outside " + shape_string(v.shape()));
  RealTensor value({v.dim(0), count});
  for (std::size_t i = 0; i < v.dim(0); ++i)
    for (std::size_t f = 0; f < count; ++f) value.at(i, f) = v.at(i, begin + f);
  return tape.record(std::move(value), {x}, [x, begin, count](Tape& t, Var self) {
    const auto& g = t.real_grad(self);
    auto& gx = t.real_grad(x);
    for (std::size_t i = 0; i < g.dim(0); ++i)
      for (std::size_t f = 0; f < count; ++f) gx.at(i, begin + f) += g.at(i, f);
  });
}

Var mean_time(Tape& tape, Var x) {
  const auto& v = tape.real(x);
  if (v.rank() != 2) throw ShapeError("mean_time expects (T, F)");
  const std::size_t length = v.dim(0), width = v.dim(1);
  RealTensor value({width});
  for (std::size_t i = 0; i < length; ++i)
    for (std::size_t f = 0; f < width; ++f) value[f] += v.at(i, f);
  for (std::size_t f = 0; f < width; ++f) value[f] /= static_cast<double>(length);
  return tape.record(std::move(value), {x}, [x, length, width](Tape& t, Var self) {
    const auto& g = t.real_grad(self);
    auto& gx = t.real_grad(x);
    const double inv = 1.0 / static_cast<double>(length);
    for (std::size_t i = 0; i < length; ++i)
      for (std::size_t f = 0; f < width; ++f) gx.at(i, f) += g[f] * inv;
  });
}

Var pool_time(Tape& tape, Var x, std::size_t factor, bool use_max) {
  const auto& v = tape.real(x);
  if (v.rank() != 2 || factor == 0 || v.dim(0) % factor != 0)
    throw ShapeError("pool_time: length not divisible by factor");
  const std::size_t length = v.dim(0) / factor, width = v.dim(1);
  RealTensor value({length, width});
  std::vector<std::size_t> argmax(use_max ? length * width : 0);
  for (std::size_t i = 0; i < length; ++i)
    for (std::size_t f = 0; f < width; ++f) {
      if (use_max) {
        std::size_t best = i * factor;
        for (std::size_t s = i * factor + 1; s < (i + 1) * factor; ++s)
          if (v.at(s, f) > v.at(best, f)) best = s;
        argmax[i * width + f] = best;
        value.at(i, f) = v.at(best, f);
      } else {
        double acc = 0.0;
        for (std::size_t s = i * factor; s < (i + 1) * factor; ++s) acc += v.at(s, f);
        value.at(i, f) = acc / static_cast<double>(factor);
      }
    }
  if (use_max) {
    std::uint64_t h = 0;
    for (auto a : argmax) h = h * 1099511628211ULL + a;
    tape.note_branch(h);
  }
  return tape.record(std::move(value), {x}, [=, argmax = std::move(argmax)](Tape& t, Var self) {
    const auto& g = t.real_grad(self);
    auto& gx = t.real_grad(x);
    for (std::size_t i = 0; i < length; ++i)
      for (std::size_t f = 0; f < width; ++f) {
        if (use_max) {
          gx.at(argmax[i * width + f], f) += g.at(i, f);
        } else {
          for (std::size_t s = i * factor; s < (i + 1) * factor; ++s)
            gx.at(s, f) += g.at(i, f) / static_cast<double>(factor);
        }
      }
  });
}

Var flatten(Tape& tape, Var x) {
  const auto& v = tape.real(x);
  auto value = v.reshaped({v.size()});
  return tape.record(std::move(value), {x}, [x](Tape& t, Var self) {
    const auto& g = t.real_grad(self);
    auto& gx = t.real_grad(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
}

Var dense(Tape& tape, Var x, Var weight, Var bias) {
  const auto& xv = tape.real(x);
  const auto& w = tape.real(weight);
  const auto& b = tape.real(bias);
  if (xv.rank() != 1 || w.rank() != 2 || w.dim(1) != xv.size() || b.size() != w.dim(0))
    throw ShapeError("dense: input " + shape_string(xv.shape()) + ", weight " +
                     shape_string(w.shape()) + ", bias " + shape_string(b.shape()));
  const std::size_t rows = w.dim(0), cols = w.dim(1);
  RealTensor value({rows});
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = b[r];
    for (std::size_t c = 0; c < cols; ++c) acc += w.at(r, c) * xv[c];
    value[r] = acc;
  }
  return tape.record(std::move(value), {x, weight, bias}, [=](Tape& t, Var self) {
    const auto& g = t.real_grad(self);
    const auto& xv2 = t.real(x);
    const auto& w2 = t.real(weight);
    if (t.requires_grad(x)) {
      auto& gx = t.real_grad(x);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) gx[c] += w2.at(r, c) * g[r];
    }
    if (t.requires_grad(weight)) {
      auto& gw = t.real_grad(weight);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) gw.at(r, c) += g[r] * xv2[c];
    }
    if (t.requires_grad(bias)) {
      auto& gb = t.real_grad(bias);
      for (std::size_t r = 0; r < rows; ++r) gb[r] += g[r];
    }
  });
}

Var cross_entropy(Tape& tape, Var logits, std::size_t label) {
  const auto& z = tape.real(logits);
  if (z.rank() != 1 || label >= z.size()) throw ShapeError("cross_entropy: label out of range");
  const double peak = *std::max_element(z.data().begin(), z.data().end());
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) total += std::exp(z[i] - peak);
  const double loss = peak + std::log(total) - z[label];
  return tape.record(scalar(loss), {logits}, [logits, label](Tape& t, Var self) {
    const double g = t.real_grad(self)[0];
    auto p = softmax_real(t.real(logits));
    auto& gz = t.real_grad(logits);
    for (std::size_t i = 0; i < p.size(); ++i) gz[i] += g * (p[i] - (i == label ? 1.0 : 0.0));
  });
}

Var add(Tape& tape, Var a, Var b) {
  RealTensor value = tape.real(a);
  const auto& bv = tape.real(b);
  if (bv.shape() != value.shape()) throw ShapeError("add: shape mismatch");
  for (std::size_t i = 0; i < value.size(); ++i) value[i] += bv[i];
  return tape.record(std::move(value), {a, b}, [a, b](Tape& t, Var self) {
    const auto& g = t.real_grad(self);
    for (Var in : {a, b}) {
      if (!t.requires_grad(in)) continue;
      auto& gi = t.real_grad(in);
      for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i];
    }
  });
}

Var scale(Tape& tape, Var x, double factor) {
  Value value = tape.value(x);
  for (auto plane : planes(value))
    for (auto& v : plane) v *= factor;
  return tape.record(std::move(value), {x}, [x, factor](Tape& t, Var self) {
    const Value g = std::holds_alternative<RealTensor>(t.value(self)) ? Value(t.real_grad(self))
                                                                      : Value(t.complex_grad(self));
    if (std::holds_alternative<RealTensor>(g)) {
      auto& gx = t.real_grad(x);
      Value tmp = gx;
      accumulate(tmp, g, factor);
      gx = std::get<RealTensor>(std::move(tmp));
    } else {
      auto& gx = t.complex_grad(x);
      Value tmp = gx;
      accumulate(tmp, g, factor);
      gx = std::get<ComplexTensor>(std::move(tmp));
    }
  });
}

Var inner(Tape& tape, Var x, const Value& coeffs) {
  const Value& v = tape.value(x);
  if (v.index() != coeffs.index() || shape_of(v) != shape_of(coeffs))
    throw ShapeError("inner: coefficient shape mismatch");
  double total = 0.0;
  const auto vp = planes(v);
  const auto cp = planes(coeffs);
  for (std::size_t p = 0; p < vp.size(); ++p)
    for (std::size_t i = 0; i < vp[p].size(); ++i) total += vp[p][i] * cp[p][i];
  return tape.record(scalar(total), {x}, [x, coeffs](Tape& t, Var self) {
    const double g = t.real_grad(self)[0];
    if (std::holds_alternative<RealTensor>(coeffs)) {
      auto& gx = t.real_grad(x);
      const auto& c = std::get<RealTensor>(coeffs);
      for (std::size_t i = 0; i < c.size(); ++i) gx[i] += g * c[i];
    } else {
      auto& gx = t.complex_grad(x);
      const auto& c = std::get<ComplexTensor>(coeffs);
      for (std::size_t i = 0; i < c.size(); ++i) gx.add(i, g * c.get(i));
    }
  });
}

}  // namespace stfnet::ad
