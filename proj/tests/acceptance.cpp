// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "stfnet/cli.hpp"
#include "stfnet/graph_ops.hpp"
#include "stfnet/model.hpp"
#include "stfnet/optim.hpp"
#include "stfnet/rng.hpp"
#include "stfnet/specops.hpp"
#include "stfnet/tensor_io.hpp"
#include "stfnet/train.hpp"
#include "stfnet/transform.hpp"

using namespace stfnet;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

struct Clock {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

int failures = 0;

void report(const char* id, bool pass, double seconds, const std::string& detail) {
  std::printf("%s %s (%.1f s) %s\n", id, pass ? "PASS" : "FAIL", seconds, detail.c_str());
  std::fflush(stdout);
  failures += pass ? 0 : 1;
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

RealTensor random_real(Shape s, Rng& rng) {
  RealTensor t(std::move(s));
  for (auto& v : t.data()) v = rng.normal();
  return t;
}

ComplexTensor random_complex(Shape s, Rng& rng) {
  ComplexTensor t(std::move(s));
  for (auto& v : t.re()) v = rng.normal();
  for (auto& v : t.im()) v = rng.normal();
  return t;
}

double max_diff(const ComplexTensor& a, const ComplexTensor& b) {
  if (a.shape() != b.shape()) return INFINITY;
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.get(i) - b.get(i)));
  return m;
}

std::vector<cdouble> naive_full_dft(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<cdouble> out(n);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t t = 0; t < n; ++t)
      out[k] += x[t] * std::polar(1.0, -2.0 * kPi * static_cast<double>((k * t) % n) / static_cast<double>(n));
  return out;
}

// ---- A1 ---------------------------------------------------------------------

void transform_invariants() {
  Clock clock;
  Rng rng(101);
  const std::vector<std::size_t> ws{16, 32, 64, 128};
  double round_trip = 0.0, parseval = 0.0, align = 0.0;
  std::size_t identities = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const auto x = random_real({512, 3}, rng);
    double energy = 0.0;
    for (double v : x.data()) energy += v * v;
    const auto h = multi_stft(x, ws, 100.0);
    for (const auto& rep : h.reps) {
      const auto back = istft(rep);
      for (std::size_t i = 0; i < x.size(); ++i) round_trip = std::max(round_trip, std::abs(back[i] - x[i]));
      double e = 0.0;
      for (std::size_t m = 0; m < rep.chunks(); ++m)
        for (std::size_t k = 0; k < rep.bins(); ++k)
          for (std::size_t d = 0; d < rep.features(); ++d)
            e += (k == 0 || k + 1 == rep.bins() ? 1.0 : 2.0) * std::norm(rep.data.get(rep.data.index(m, k, d)));
      parseval = std::max(parseval, std::abs(e / static_cast<double>(rep.tau) - energy) / energy);
    }
    for (std::size_t i = 1; i < ws.size(); ++i)
      for (std::size_t j = 0; j < i; ++j)
        for (std::size_t m = 0; m < h.reps[i].chunks(); ++m)
          for (std::size_t k = 0; k < h.reps[i].bins(); ++k) {
            if (!freq_align(k, ws[i], ws[j])) continue;
            const auto sum = time_align_sum(h, i, j, m, k);
            for (std::size_t d = 0; d < 3; ++d)
              align = std::max(align, std::abs(sum.get(d) - h.reps[i].data.get(h.reps[i].data.index(m, k, d))));
            ++identities;
          }
  }
  const double t = clock.seconds();
  report("A1", round_trip < 1e-9 && parseval < 1e-8 && align < 1e-9 && t < 10.0, t,
         "round-trip " + sci(round_trip) + ", Parseval rel " + sci(parseval) + ", aligned sums " + sci(align) +
             " over " + std::to_string(identities) + " (chunk, bin) pairs");
}

// ---- A2 ---------------------------------------------------------------------

void zero_interleave_identity() {
  Clock clock;
  Rng rng(102);
  const std::vector<std::size_t> ws{16, 32, 64, 128};
  InterleaveWeights w;
  for (auto s : interleave_ratios(ws)) w[s] = ComplexTensor({s, s});
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto h = multi_stft(random_real({512, 2}, rng), ws, 100.0);
    const auto out = interleave(h, w);
    for (std::size_t i = 0; i < ws.size(); ++i) worst = std::max(worst, max_diff(out.reps[i].data, h.reps[i].data));
  }
  const double t = clock.seconds();
  report("A2", worst <= 1e-12 && t < 5.0, t, "max deviation " + sci(worst) + " over 100 holograms");
}

// ---- A3 ---------------------------------------------------------------------

void operation_oracles() {
  Clock clock;
  Rng rng(103);
  // Filtering against circular convolution, one chunk.
  double conv_err = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t tau = 64, in = 2, out_f = 3;
    const auto x = random_real({tau, in}, rng);
    std::vector<std::vector<double>> h(in * out_f);
    ComplexTensor w({tau / 2 + 1, in, out_f});
    for (std::size_t d = 0; d < in; ++d)
      for (std::size_t o = 0; o < out_f; ++o) {
        auto& imp = h[d * out_f + o];
        imp.resize(tau);
        for (auto& v : imp) v = rng.normal();
        const auto spec = dft_real(imp);
        for (std::size_t k = 0; k < spec.size(); ++k) w.set((k * in + d) * out_f + o, spec[k]);
      }
    const auto y = istft(stfnet_filter(stft(x, tau, 1.0), FilterWeights{w, tau, InterpMode::Linear}));
    for (std::size_t o = 0; o < out_f; ++o)
      for (std::size_t t = 0; t < tau; ++t) {
        double ref = 0.0;
        for (std::size_t d = 0; d < in; ++d)
          for (std::size_t s = 0; s < tau; ++s) ref += x.at(s, d) * h[d * out_f + o][(t + tau - s) % tau];
        conv_err = std::max(conv_err, std::abs(y.at(t, o) - ref));
      }
  }
  // Interpolations keep base-grid samples.
  double node_err = 0.0;
  for (auto mode : {InterpMode::Linear, InterpMode::Spectral}) {
    auto base = random_complex({17, 2, 3}, rng);
    for (std::size_t c = 0; c < 6; ++c) {
      base.im()[c] = 0.0;
      base.im()[16 * 6 + c] = 0.0;
    }
    for (std::size_t target : {64u, 128u, 256u}) {
      const auto up = resolve_filter(base, 32, target, mode);
      const std::size_t ratio = target / 32;
      for (std::size_t k = 0; k < 17; ++k)
        for (std::size_t c = 0; c < 6; ++c)
          node_err = std::max(node_err, std::abs(up.get(k * ratio * 6 + c) - base.get(k * 6 + c)));
    }
  }
  // Dilation against a zero-stuffed kernel.
  double dil_err = 0.0;
  for (std::size_t r : {1u, 3u, 7u}) {
    const std::size_t taps = 3, span = (taps - 1) * (r + 1) + 1, bins = 33;
    const auto padded = random_complex({2, bins + span - 1, 2}, rng);
    const auto w = random_complex({1, taps, 2, 4}, rng);
    ComplexTensor stuffed({1, span, 2, 4});
    for (std::size_t s = 0; s < taps; ++s)
      for (std::size_t c = 0; c < 8; ++c) stuffed.set(s * (r + 1) * 8 + c, w.get(s * 8 + c));
    dil_err = std::max(dil_err, max_diff(correlate_frequency(padded, w, r, bins),
                                         correlate_frequency(padded, stuffed, 0, bins)));
  }
  // Spectral padding against full-spectrum DFT bins.
  double pad_err = 0.0;
  for (std::size_t tau : {8u, 16u, 32u, 64u}) {
    const auto x = random_real({tau * 2, 2}, rng);
    const auto rep = stft(x, tau, 1.0);
    const std::size_t bins = tau / 2 + 1;
    const auto padded = spectral_pad(rep, bins - 1, bins - 2);
    for (std::size_t m = 0; m < 2; ++m)
      for (std::size_t d = 0; d < 2; ++d) {
        std::vector<double> chunk(tau);
        for (std::size_t t = 0; t < tau; ++t) chunk[t] = x.at(m * tau + t, d);
        const auto full = naive_full_dft(chunk);
        for (std::size_t p = 0; p < padded.dim(1); ++p) {
          const long q = static_cast<long>(p) - static_cast<long>(bins - 1);
          const auto bin = static_cast<std::size_t>((q + static_cast<long>(tau)) % static_cast<long>(tau));
          pad_err = std::max(pad_err, std::abs(padded.get(padded.index(m, p, d)) - full[bin]));
        }
      }
  }
  // Pooling of band-limited signals.
  double pool_err = 0.0;
  for (std::size_t tau : {32u, 64u, 128u})
    for (std::size_t dec : {2u, 4u}) {
      RealTensor x({512, 2});
      for (std::size_t d = 0; d < 2; ++d)
        for (std::size_t k = 0; k < tau / (2 * dec); ++k) {
          const double amp = rng.normal(), phase = rng.uniform(0.0, 2.0 * kPi);
          for (std::size_t t = 0; t < 512; ++t)
            x.at(t, d) += amp * std::cos(2.0 * kPi * static_cast<double>(k * t) / static_cast<double>(tau) + phase);
        }
      const auto y = istft(stfnet_pool(stft(x, tau, 100.0), PoolSpec{dec}), SymmetryPolicy::Project);
      for (std::size_t n = 0; n < 512 / dec; ++n)
        for (std::size_t d = 0; d < 2; ++d)
          pool_err = std::max(pool_err, std::abs(y.at(n, d) / static_cast<double>(dec) - x.at(n * dec, d)));
    }
  const double t = clock.seconds();
  const bool pass = conv_err < 1e-8 && node_err < 1e-12 && dil_err < 1e-12 && pad_err < 1e-12 &&
                    pool_err < 1e-8 && t < 30.0;
  report("A3", pass, t,
         "filter/circular-conv " + sci(conv_err) + ", interpolation nodes " + sci(node_err) + ", dilation " +
             sci(dil_err) + ", padding " + sci(pad_err) + ", pooling " + sci(pool_err));
}

// ---- A4 ---------------------------------------------------------------------

using Builder = std::function<ad::Var(ad::Tape&, const std::vector<ad::Var>&)>;

// Gradcheck of <op(inputs), u> with respect to every input.
ad::GradcheckReport op_gradcheck(const Builder& build, const std::vector<ad::Value>& inputs, std::uint64_t seed) {
  ad::ParamStore params;
  for (std::size_t i = 0; i < inputs.size(); ++i) params.add("in" + std::to_string(i), inputs[i]);
  ad::Value u;
  {
    ad::Tape tape;
    std::vector<ad::Var> vars;
    for (const auto& [name, p] : params) vars.push_back(tape.parameter(name, p.value));
    u = ad::zeros_like(tape.value(build(tape, vars)));
    Rng rng(seed);
    for (auto plane : ad::planes(u))
      for (auto& v : plane) v = rng.normal();
  }
  ad::Objective objective = [&](const ad::ParamStore& p, bool want_grad) {
    ad::Tape tape;
    std::vector<ad::Var> vars;
    for (const auto& [name, param] : p) vars.push_back(tape.parameter(name, param.value));
    const auto loss = ad::inner(tape, build(tape, vars), u);
    ad::Evaluation e;
    e.loss = tape.real(loss)[0];
    e.kink = tape.kink_signature();
    if (want_grad) {
      tape.backward(loss);
      e.grads = tape.gradients();
    }
    return e;
  };
  return ad::gradcheck(objective, params, 1e-5, 1e-4);
}

double worst_error(const ad::GradcheckReport& r) {
  double w = 0.0;
  for (const auto& e : r.entries) w = std::max(w, e.max_rel_error);
  return w;
}

ModelSpec gradcheck_network(OpKind op) {
  ModelSpec spec = default_model_spec();
  spec.length = 64;
  spec.interleave_init_scale = 0.5;
  for (auto* stack : {&spec.sensor_stack, &spec.merged_stack})
    for (auto& b : *stack) {
      b.window_set = {8, 16, 32};
      b.out_features = 12;
      b.op = op;
    }
  if (op == OpKind::Conv) {
    spec.sensor_stack[1].padding = PaddingMode::Zero;
  } else {
    spec.sensor_stack[1].interp = InterpMode::Spectral;
    spec.merged_stack[0].tau_base = 16;
  }
  return spec;
}

ad::GradcheckReport network_gradcheck(const ModelSpec& spec, Rng& rng) {
  const auto params = init_params(spec, 7);
  const auto batch = random_real({2, spec.length, spec.input_dims()}, rng);
  const std::vector<int> labels{1, 4};
  const std::vector<std::size_t> idx{0, 1};
  ad::Objective objective = [&](const ad::ParamStore& p, bool want_grad) {
    return batch_loss(spec, p, batch, labels, idx, want_grad);
  };
  return ad::gradcheck(objective, params, 1e-5, 1e-4);
}

void gradient_checks() {
  Clock clock;
  Rng rng(104);
  std::vector<std::pair<std::string, ad::GradcheckReport>> results;
  const std::vector<std::size_t> ws{8, 16, 32};
  auto add = [&](const std::string& name, const Builder& b, const std::vector<ad::Value>& in) {
    results.emplace_back(name, op_gradcheck(b, in, results.size() + 1));
  };
  const auto signal = random_real({64, 2}, rng);
  const auto h = multi_stft(signal, ws, 1.0);
  add("stft", [](ad::Tape& t, const std::vector<ad::Var>& x) { return ad::stft(t, x[0], 16); }, {signal});
  add("istft", [](ad::Tape& t, const std::vector<ad::Var>& x) { return ad::istft(t, x[0], 16); },
      {random_complex({4, 9, 2}, rng)});
  add("interleave",
      [&](ad::Tape& t, const std::vector<ad::Var>& x) {
        const auto out = ad::interleave(t, {x[0], x[1], x[2]}, ws, {{2, x[3]}, {4, x[4]}});
        return ad::concat_features(t, {ad::istft(t, out[1], 16), ad::istft(t, out[2], 32)});
      },
      {h.reps[0].data, h.reps[1].data, h.reps[2].data, random_complex({2, 2}, rng), random_complex({4, 4}, rng)});
  for (auto mode : {InterpMode::Linear, InterpMode::Spectral}) {
    const std::string tag = mode == InterpMode::Linear ? "linear" : "spectral";
    add("resolve_filter up " + tag,
        [mode](ad::Tape& t, const std::vector<ad::Var>& x) { return ad::resolve_filter(t, x[0], 8, 32, mode); },
        {random_complex({5, 2, 3}, rng)});
  }
  add("resolve_filter subsample",
      [](ad::Tape& t, const std::vector<ad::Var>& x) { return ad::resolve_filter(t, x[0], 32, 8, InterpMode::Linear); },
      {random_complex({17, 2, 3}, rng)});
  add("filter", [](ad::Tape& t, const std::vector<ad::Var>& x) { return ad::filter(t, x[0], x[1]); },
      {random_complex({2, 9, 2}, rng), random_complex({9, 2, 3}, rng)});
  for (auto mode : {PaddingMode::Spectral, PaddingMode::Zero}) {
    const std::string tag = mode == PaddingMode::Spectral ? "spectral" : "zero";
    add("conv dilated " + tag,
        [mode](ad::Tape& t, const std::vector<ad::Var>& x) { return ad::conv(t, x[0], 32, x[1], 8, mode); },
        {random_complex({2, 17, 2}, rng), random_complex({1, 3, 2, 3}, rng)});
  }
  add("pool", [](ad::Tape& t, const std::vector<ad::Var>& x) { return ad::istft(t, ad::truncate_bins(t, x[0], 5), 8); },
      {random_complex({2, 9, 2}, rng)});
  add("magnitude", [](ad::Tape& t, const std::vector<ad::Var>& x) { return ad::magnitude(t, x[0]); },
      {random_complex({3, 4}, rng)});
  add("relu+concat", [](ad::Tape& t, const std::vector<ad::Var>& x) {
        return ad::relu(t, ad::concat_features(t, {x[0], x[1]}));
      },
      {random_real({8, 2}, rng), random_real({8, 3}, rng)});
  add("mean+dense+cross_entropy",
      [](ad::Tape& t, const std::vector<ad::Var>& x) {
        return ad::cross_entropy(t, ad::dense(t, ad::mean_time(t, x[0]), x[1], x[2]), 1);
      },
      {random_real({8, 4}, rng), random_real({3, 4}, rng), random_real({3}, rng)});

  ModelSpec single = gradcheck_network(OpKind::Filter);
  single.sensor_stack[2].pool_rho.reset();
  single.sensor_stack.resize(1);
  single.merged_stack.resize(1);
  results.emplace_back("block filter", network_gradcheck(single, rng));
  results.emplace_back("default network (filter)", network_gradcheck(gradcheck_network(OpKind::Filter), rng));
  results.emplace_back("default network (conv)", network_gradcheck(gradcheck_network(OpKind::Conv), rng));

  bool pass = true;
  double worst = 0.0;
  std::size_t checked = 0, skipped = 0;
  std::string failed;
  for (const auto& [name, r] : results) {
    pass = pass && r.pass;
    worst = std::max(worst, worst_error(r));
    for (const auto& e : r.entries) {
      checked += e.checked;
      skipped += e.skipped;
    }
    if (!r.pass) failed += " " + name;
  }
  const double t = clock.seconds();
  report("A4", pass && t < 300.0, t,
         std::to_string(results.size()) + " checks, " + std::to_string(checked) + " scalars, worst rel " + sci(worst) +
             ", " + std::to_string(skipped) + " kink-skipped" + (failed.empty() ? "" : ", failed:" + failed));
}

// ---- A5 ---------------------------------------------------------------------

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

ModelSpec toneband_stfnet() {
  ModelSpec spec;
  spec.length = 512;
  spec.classes = 6;
  spec.sensors = {{"x", 1}};
  BlockConfig block;
  block.window_set = {16, 32, 64, 128};
  block.out_features = 16;
  block.interleave = false;
  spec.sensor_stack = {};
  spec.merged_stack = {block};
  return spec;
}

// Best test accuracy over the epochs and the first epoch reaching `goal`.
std::pair<double, std::size_t> best_test(const std::vector<EpochRecord>& log, double goal) {
  double best = 0.0;
  std::size_t first = 0;
  for (const auto& r : log) {
    if (r.split != "test") continue;
    best = std::max(best, r.metrics.accuracy);
    if (!first && r.metrics.accuracy >= goal) first = r.epoch;
  }
  return {best, first};
}

void synthetic_learning() {
  Clock clock;
  const auto train_set = generate({{"kind", "toneband"}, {"n", 2000}, {"classes", 6}, {"snr_db", 10}, {"seed", 1}});
  const auto test_set = generate({{"kind", "toneband"}, {"n", 500}, {"classes", 6}, {"snr_db", 10}, {"seed", 2}});
  const auto stfnet = toneband_stfnet();
  ModelSpec mlp = stfnet;
  mlp.kind = ModelKind::Mlp;
  std::vector<double> acc_stfnet, acc_mlp;
  std::string epochs;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    TrainConfig cfg;
    cfg.adam.lr = 0.01;
    cfg.batch = 32;
    cfg.seed = seed;
    cfg.epochs = 10;
    const auto [a, first] = best_test(train(stfnet, train_set, &test_set, cfg).log, 0.95);
    acc_stfnet.push_back(a);
    epochs += (epochs.empty() ? "" : ",") + std::to_string(first);
    cfg.epochs = 50;
    acc_mlp.push_back(best_test(train(mlp, train_set, &test_set, cfg).log, 0.95).first);
  }
  const double ms = median(acc_stfnet), mm = median(acc_mlp);
  const double t = clock.seconds();
  char detail[256];
  std::snprintf(detail, sizeof detail,
                "median test accuracy STFNet %.3f (%zu params, first epoch >= 0.95: %s) vs MLP %.3f "
                "(%zu params, 50 epochs), gap %.1f points",
                ms, parameter_count(stfnet), epochs.c_str(), mm, parameter_count(mlp), 100.0 * (ms - mm));
  report("A5", ms >= 0.95 && ms - mm >= 0.10 && t < 1800.0, t, detail);
}

// ---- A6, A7 -------------------------------------------------------------------

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("stfnet_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  if (code != 0) std::fprintf(stderr, "%s", err.str().c_str());
  return code;
}

void ablation_direction() {
  Clock clock;
  const auto dir = scratch_dir("ablation");
  json cfg = json::parse(R"({
    "model": {
      "length": 512, "fs": 100, "classes": 4,
      "sensors": [{"name": "x", "dims": 1}],
      "sensor_stack": [],
      "merged_stack": [{"window_set": [16, 32, 64, 128], "out_features": 16, "interleave": false}]
    },
    "train": {"lr": 0.01, "batch": 32, "epochs": 15},
    "data": {
      "generator": {"kind": "mixedres", "n": 800, "classes": 4, "snr_db": 10, "seed": 1},
      "test_generator": {"kind": "mixedres", "n": 400, "classes": 4, "snr_db": 10, "seed": 2}
    },
    "ablation": {"seeds": [0, 1, 2, 3, 4]}
  })");
  cfg["output_dir"] = (dir / "out").string();
  std::ofstream(dir / "ablation.json") << cfg.dump(2);
  const int code = run_cli({"stfnet", "ablate", "--config", (dir / "ablation.json").string()});
  const double t = clock.seconds();
  if (code != 0) {
    report("A6", false, t, "ablate exited with " + std::to_string(code));
    return;
  }
  const auto result = json::parse(read_file(dir / "out" / "ablation.json"));
  std::string detail;
  for (const auto& v : result["variants"]) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%s%s %.3f", detail.empty() ? "" : ", ", v["name"].get<std::string>().c_str(),
                  v["median_accuracy"].get<double>());
    detail += buf;
  }
  report("A6", result["multi_ge_best_single"].get<bool>(), t,
         "median accuracy " + detail + "; best single " + result["best_single"]["name"].get<std::string>());
  fs::remove_all(dir);
}

void determinism() {
  Clock clock;
  const auto dir = scratch_dir("determinism");
  json cfg = json::parse(R"({
    "model": {
      "length": 512, "classes": 6, "sensors": [{"name": "x", "dims": 1}],
      "sensor_stack": [], "interleave_init_scale": 0.01,
      "merged_stack": [{"window_set": [16, 32, 64, 128], "out_features": 8}]
    },
    "train": {"lr": 0.01, "batch": 16, "epochs": 2, "seed": 11},
    "data": {
      "generator": {"kind": "toneband", "n": 120, "classes": 6, "snr_db": 10, "seed": 5},
      "test_count": 30
    }
  })");
  std::string runs[2];
  for (int r = 0; r < 2; ++r) {
    cfg["output_dir"] = (dir / ("run" + std::to_string(r))).string();
    std::ofstream(dir / "config.json") << cfg.dump(2);
    const int code = run_cli({"stfnet", "train", "--config", (dir / "config.json").string(), "--jobs",
                              r == 0 ? "1" : "2"});
    if (code != 0) {
      report("A7", false, clock.seconds(), "train exited with " + std::to_string(code));
      return;
    }
    runs[r] = read_file(dir / ("run" + std::to_string(r)) / "metrics.json");
  }
  const double t = clock.seconds();
  report("A7", !runs[0].empty() && runs[0] == runs[1], t,
         "metrics.json " + std::to_string(runs[0].size()) + " bytes, " +
             (runs[0] == runs[1] ? "byte-identical" : "differs") + " across two runs (1 and 2 threads)");
  fs::remove_all(dir);
}

}  // namespace

int main(int argc, char** argv) {
  // Optional filter: acceptance A1 A3 ...
  std::vector<std::string> only(argv + 1, argv + argc);
  auto want = [&](const char* id) { return only.empty() || std::find(only.begin(), only.end(), id) != only.end(); };
  try {
    if (want("A1")) transform_invariants();
    if (want("A2")) zero_interleave_identity();
    if (want("A3")) operation_oracles();
    if (want("A4")) gradient_checks();
    if (want("A5")) synthetic_learning();
    if (want("A6")) ablation_direction();
    if (want("A7")) determinism();
  } catch (const std::exception& e) {
    std::printf("acceptance aborted: %s\n", e.what());
    return 2;
  }
  return failures == 0 ? 0 : 1;
}
