#include "stfnet/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <thread>

#include "stfnet/error.hpp"
#include "stfnet/graph_ops.hpp"
#include "stfnet/rng.hpp"
#include "stfnet/transform.hpp"

namespace stfnet {

using nlohmann::json;

std::size_t BlockConfig::resolved_tau_base() const {
  return tau_base != 0 ? tau_base : window_set.back();
}

std::size_t BlockConfig::resolved_tau_conv_base() const {
  return tau_conv_base != 0 ? tau_conv_base : window_set.front();
}

std::size_t ModelSpec::input_dims() const {
  std::size_t total = 0;
  for (const auto& s : sensors) total += s.dims;
  return total;
}

ModelSpec default_model_spec() {
  ModelSpec spec;
  BlockConfig block;
  spec.sensor_stack = {block, block, block};
  spec.sensor_stack.back().pool_rho = 0.5;
  spec.merged_stack = {block, block, block};
  return spec;
}

// ---- validation -------------------------------------------------------------

namespace {

// Returns the output length of the block for an input of `length` samples.
std::size_t check_block(const BlockConfig& b, std::size_t length, const std::string& where) {
  try {
    validate_window_set(b.window_set);
  } catch (const ConfigError& e) {
    throw ConfigError(where + ": " + e.what());
  }
  const std::size_t n = b.window_set.size();
  const std::size_t largest = b.window_set.back();
  if (length % largest != 0)
    throw ConfigError(where + ": signal length " + std::to_string(length) +
                      " is not divisible by window " + std::to_string(largest));
  if (b.out_features == 0 || b.out_features % n != 0)
    throw ConfigError(where + ": out_features must be a positive multiple of the window count");
  if (b.op == OpKind::Filter) {
    const std::size_t base = b.resolved_tau_base();
    if (base < 2 || !is_power_of_two(base))
      throw ConfigError(where + ": tau_base must be a power of two >= 2");
  } else {
    if (b.kernel_size % 2 == 0) throw ConfigError(where + ": kernel_size must be odd");
    const std::size_t base = b.resolved_tau_conv_base();
    if (!is_power_of_two(base) || base > b.window_set.front())
      throw ConfigError(where + ": tau_conv_base must be a power of two <= the smallest window");
    for (auto tau : b.window_set) {
      try {
        conv_geometry(b.kernel_size, tau, base, half_spectrum_size(tau));
      } catch (const Error& e) {
        throw ConfigError(where + ": " + e.what());
      }
    }
  }
  if (b.pool_rho) {
    const PoolSpec pool = PoolSpec::from_rho(*b.pool_rho);
    for (auto tau : b.window_set)
      if (tau / pool.decimation < 2 || tau % pool.decimation != 0)
        throw ConfigError(where + ": pooling leaves window " + std::to_string(tau) +
                          " with fewer than 2 samples");
    return length / pool.decimation;
  }
  return length;
}

template <class E>
std::string enum_name(E value, const std::vector<std::pair<E, std::string>>& names) {
  for (const auto& [v, n] : names)
    if (v == value) return n;
  throw ConfigError("unnamed enum value");
}

template <class E>
E enum_value(const json& j, const std::vector<std::pair<E, std::string>>& names,
             const std::string& key) {
  const auto text = j.get<std::string>();
  for (const auto& [v, n] : names)
    if (n == text) return v;
  throw ConfigError("unknown value '" + text + "' for " + key);
}

const std::vector<std::pair<OpKind, std::string>> kOpNames{{OpKind::Filter, "filter"},
                                                           {OpKind::Conv, "conv"}};
const std::vector<std::pair<InterpMode, std::string>> kInterpNames{
    {InterpMode::Linear, "linear"}, {InterpMode::Spectral, "spectral"}};
const std::vector<std::pair<PaddingMode, std::string>> kPaddingNames{
    {PaddingMode::Spectral, "spectral"}, {PaddingMode::Zero, "zero"}};
const std::vector<std::pair<ModelKind, std::string>> kKindNames{{ModelKind::Stfnet, "stfnet"},
                                                                {ModelKind::Mlp, "mlp"}};

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

json block_to_json(const BlockConfig& b) {
  json j;
  j["window_set"] = b.window_set;
  j["op"] = enum_name(b.op, kOpNames);
  j["out_features"] = b.out_features;
  j["interleave"] = b.interleave;
  j["pool_rho"] = b.pool_rho ? json(*b.pool_rho) : json(nullptr);
  j["interp"] = enum_name(b.interp, kInterpNames);
  j["tau_base"] = b.tau_base;
  j["kernel_size"] = b.kernel_size;
  j["tau_conv_base"] = b.tau_conv_base;
  j["padding"] = enum_name(b.padding, kPaddingNames);
  return j;
}

BlockConfig block_from_json(const json& j, const std::string& where) {
  check_keys(j,
             {"window_set", "op", "out_features", "interleave", "pool_rho", "interp", "tau_base",
              "kernel_size", "tau_conv_base", "padding"},
             where);
  BlockConfig b;
  if (j.contains("window_set")) b.window_set = j["window_set"].get<std::vector<std::size_t>>();
  if (j.contains("op")) b.op = enum_value(j["op"], kOpNames, "op");
  if (j.contains("out_features")) b.out_features = j["out_features"].get<std::size_t>();
  if (j.contains("interleave")) b.interleave = j["interleave"].get<bool>();
  if (j.contains("pool_rho") && !j["pool_rho"].is_null()) b.pool_rho = j["pool_rho"].get<double>();
  if (j.contains("interp")) b.interp = enum_value(j["interp"], kInterpNames, "interp");
  if (j.contains("tau_base")) b.tau_base = j["tau_base"].get<std::size_t>();
  if (j.contains("kernel_size")) b.kernel_size = j["kernel_size"].get<std::size_t>();
  if (j.contains("tau_conv_base")) b.tau_conv_base = j["tau_conv_base"].get<std::size_t>();
  if (j.contains("padding")) b.padding = enum_value(j["padding"], kPaddingNames, "padding");
  return b;
}

}  // namespace

void validate(const ModelSpec& spec) {
  if (spec.classes < 2) throw ConfigError("model needs at least 2 classes");
  if (spec.sensors.empty()) throw ConfigError("model needs at least one sensor");
  for (const auto& s : spec.sensors)
    if (s.dims == 0) throw ConfigError("sensor '" + s.name + "' has no dimensions");
  if (spec.length == 0) throw ConfigError("model length must be positive");
  if (!(spec.fs > 0.0)) throw ConfigError("fs must be positive");
  if (spec.kind == ModelKind::Mlp) return;
  if (spec.sensor_stack.empty() && spec.merged_stack.empty())
    throw ConfigError("model has no blocks");
  std::size_t length = spec.length;
  for (std::size_t i = 0; i < spec.sensor_stack.size(); ++i)
    length = check_block(spec.sensor_stack[i], length, "sensor_stack[" + std::to_string(i) + "]");
  for (std::size_t i = 0; i < spec.merged_stack.size(); ++i)
    length = check_block(spec.merged_stack[i], length, "merged_stack[" + std::to_string(i) + "]");
}

json to_json(const ModelSpec& spec) {
  json j;
  j["kind"] = enum_name(spec.kind, kKindNames);
  j["length"] = spec.length;
  j["fs"] = spec.fs;
  j["classes"] = spec.classes;
  j["sensors"] = json::array();
  for (const auto& s : spec.sensors) j["sensors"].push_back({{"name", s.name}, {"dims", s.dims}});
  j["sensor_stack"] = json::array();
  for (const auto& b : spec.sensor_stack) j["sensor_stack"].push_back(block_to_json(b));
  j["merged_stack"] = json::array();
  for (const auto& b : spec.merged_stack) j["merged_stack"].push_back(block_to_json(b));
  j["tied_sensor_init"] = spec.tied_sensor_init;
  j["interleave_init_scale"] = spec.interleave_init_scale;
  j["init_gain"] = spec.init_gain;
  j["mlp_hidden"] = spec.mlp_hidden;
  return j;
}

ModelSpec model_spec_from_json(const json& j) {
  check_keys(j,
             {"kind", "length", "fs", "classes", "sensors", "sensor_stack", "merged_stack",
              "tied_sensor_init", "interleave_init_scale", "init_gain", "mlp_hidden"},
             "model");
  ModelSpec spec = default_model_spec();
  try {
    if (j.contains("kind")) spec.kind = enum_value(j["kind"], kKindNames, "kind");
    if (j.contains("length")) spec.length = j["length"].get<std::size_t>();
    if (j.contains("fs")) spec.fs = j["fs"].get<double>();
    if (j.contains("classes")) spec.classes = j["classes"].get<std::size_t>();
    if (j.contains("sensors")) {
      spec.sensors.clear();
      for (const auto& s : j["sensors"]) {
        check_keys(s, {"name", "dims"}, "sensor");
        spec.sensors.push_back({s.value("name", std::string("s") + std::to_string(spec.sensors.size())),
                                s.value("dims", std::size_t{1})});
      }
    }
    for (const char* key : {"sensor_stack", "merged_stack"}) {
      if (!j.contains(key)) continue;
      auto& stack = std::string(key) == "sensor_stack" ? spec.sensor_stack : spec.merged_stack;
      stack.clear();
      for (std::size_t i = 0; i < j[key].size(); ++i)
        stack.push_back(block_from_json(j[key][i], std::string(key) + "[" + std::to_string(i) + "]"));
    }
    if (j.contains("tied_sensor_init")) spec.tied_sensor_init = j["tied_sensor_init"].get<bool>();
    if (j.contains("interleave_init_scale"))
      spec.interleave_init_scale = j["interleave_init_scale"].get<double>();
    if (j.contains("init_gain")) spec.init_gain = j["init_gain"].get<double>();
    if (j.contains("mlp_hidden")) spec.mlp_hidden = j["mlp_hidden"].get<std::size_t>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  validate(spec);
  return spec;
}

ModelSpec single_resolution(const ModelSpec& spec, std::size_t tau) {
  ModelSpec out = spec;
  for (auto* stack : {&out.sensor_stack, &out.merged_stack})
    for (auto& b : *stack) {
      b.window_set = {tau};
      b.tau_base = 0;
      b.tau_conv_base = 0;
    }
  return out;
}

// ---- parameters -------------------------------------------------------------

namespace {

ComplexTensor uniform_complex(Shape shape, double half_width, Rng& rng) {
  ComplexTensor t(std::move(shape));
  for (auto& v : t.re()) v = rng.uniform(-half_width, half_width);
  for (auto& v : t.im()) v = rng.uniform(-half_width, half_width);
  return t;
}

RealTensor uniform_real(Shape shape, double half_width, Rng& rng) {
  RealTensor t(std::move(shape));
  for (auto& v : t.data()) v = rng.uniform(-half_width, half_width);
  return t;
}

// Adds the parameters of one stack; returns the output feature width.
std::size_t init_stack(ad::ParamStore& store, const std::vector<BlockConfig>& stack,
                       const std::string& prefix, std::size_t in_features, const ModelSpec& spec,
                       Rng& rng) {
  std::size_t d = in_features;
  for (std::size_t i = 0; i < stack.size(); ++i) {
    const auto& b = stack[i];
    const std::string name = prefix + ".block" + std::to_string(i);
    if (b.interleave)
      for (auto s : interleave_ratios(b.window_set))
        store.add(name + ".interleave.S" + std::to_string(s),
                  uniform_complex({s, s}, spec.interleave_init_scale, rng));
    const std::size_t width = b.width_per_resolution();
    if (b.op == OpKind::Filter) {
      const std::size_t k = half_spectrum_size(b.resolved_tau_base());
      const double half = spec.init_gain / std::sqrt(static_cast<double>(d * k));
      store.add(name + ".filter", uniform_complex({k, d, width}, half, rng),
                ad::Constraint::RealDcNyquist);
    } else {
      const double half = spec.init_gain / std::sqrt(static_cast<double>(d * b.kernel_size));
      store.add(name + ".conv", uniform_complex({1, b.kernel_size, d, width}, half, rng));
    }
    d = b.out_features;
  }
  return d;
}

std::size_t stack_width(const std::vector<BlockConfig>& stack, std::size_t in_features) {
  return stack.empty() ? in_features : stack.back().out_features;
}

std::size_t stfnet_parameter_count(const ModelSpec& spec) {
  ModelSpec copy = spec;
  copy.kind = ModelKind::Stfnet;
  copy.interleave_init_scale = 0.0;
  return init_params(copy, 0).scalar_count();
}

}  // namespace

std::size_t mlp_hidden_width(const ModelSpec& spec) {
  if (spec.mlp_hidden != 0) return spec.mlp_hidden;
  const double budget = static_cast<double>(stfnet_parameter_count(spec));
  const double in = static_cast<double>(spec.length * spec.input_dims());
  const double c = static_cast<double>(spec.classes);
  // (in + 1) h + (h + 1) c = budget
  const double h = (budget - c) / (in + 1.0 + c);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(h)));
}

ad::ParamStore init_params(const ModelSpec& spec, std::uint64_t seed) {
  validate(spec);
  ad::ParamStore store;
  Rng root(seed);
  if (spec.kind == ModelKind::Mlp) {
    Rng rng = root.fork(4000);
    const std::size_t in = spec.length * spec.input_dims();
    const std::size_t h = mlp_hidden_width(spec);
    store.add("mlp.hidden.weight", uniform_real({h, in}, 1.0 / std::sqrt(static_cast<double>(in)), rng));
    store.add("mlp.hidden.bias", RealTensor({h}));
    store.add("mlp.out.weight",
              uniform_real({spec.classes, h}, 1.0 / std::sqrt(static_cast<double>(h)), rng));
    store.add("mlp.out.bias", RealTensor({spec.classes}));
    return store;
  }
  std::size_t fused = 0;
  for (std::size_t s = 0; s < spec.sensors.size(); ++s) {
    Rng rng = root.fork(spec.tied_sensor_init ? 1000 : 1000 + s);
    init_stack(store, spec.sensor_stack, "sensor" + std::to_string(s), spec.sensors[s].dims, spec,
               rng);
    fused += stack_width(spec.sensor_stack, spec.sensors[s].dims);
  }
  Rng merged = root.fork(2000);
  const std::size_t features = init_stack(store, spec.merged_stack, "merged", fused, spec, merged);
  Rng head = root.fork(3000);
  store.add("head.weight", uniform_real({spec.classes, features},
                                        1.0 / std::sqrt(static_cast<double>(features)), head));
  store.add("head.bias", RealTensor({spec.classes}));
  return store;
}

std::size_t parameter_count(const ModelSpec& spec) {
  if (spec.kind == ModelKind::Mlp) {
    const std::size_t h = mlp_hidden_width(spec);
    return (spec.length * spec.input_dims() + 1) * h + (h + 1) * spec.classes;
  }
  return stfnet_parameter_count(spec);
}

ParamVars register_params(ad::Tape& tape, const ad::ParamStore& params) {
  ParamVars vars;
  for (const auto& [name, p] : params) vars.emplace(name, tape.parameter(name, p.value));
  return vars;
}

// ---- forward ----------------------------------------------------------------

ad::Var block_forward(ad::Tape& tape, ad::Var x, const BlockConfig& cfg, const ParamVars& params,
                      const std::string& prefix) {
  const auto& ws = cfg.window_set;
  std::vector<ad::Var> reps;
  for (auto tau : ws) reps.push_back(ad::stft(tape, x, tau));
  if (cfg.interleave && ws.size() > 1) {
    std::map<std::size_t, ad::Var> weights;
    for (auto s : interleave_ratios(ws))
      weights.emplace(s, params.at(prefix + ".interleave.S" + std::to_string(s)));
    reps = ad::interleave(tape, reps, ws, weights);
  }
  const std::size_t decimation = cfg.pool_rho ? PoolSpec::from_rho(*cfg.pool_rho).decimation : 1;
  std::vector<ad::Var> outputs;
  for (std::size_t i = 0; i < ws.size(); ++i) {
    const std::size_t tau = ws[i];
    ad::Var y;
    if (cfg.op == OpKind::Filter) {
      const auto w = ad::resolve_filter(tape, params.at(prefix + ".filter"), cfg.resolved_tau_base(),
                                        tau, cfg.interp);
      y = ad::filter(tape, reps[i], w);
    } else {
      y = ad::conv(tape, reps[i], tau, params.at(prefix + ".conv"), cfg.resolved_tau_conv_base(),
                   cfg.padding);
    }
    std::size_t tau_out = tau;
    if (decimation > 1) {
      tau_out = tau / decimation;
      y = ad::truncate_bins(tape, y, half_spectrum_size(tau_out));
    }
    outputs.push_back(ad::istft(tape, y, tau_out));
  }
  const auto merged = outputs.size() == 1 ? outputs.front() : ad::concat_features(tape, outputs);
  return ad::relu(tape, merged);
}

namespace {

std::vector<ad::Var> sensor_stacks(ad::Tape& tape, ad::Var x, const ModelSpec& spec,
                                   const ParamVars& params) {
  const auto& input = tape.real(x);
  if (input.rank() != 2 || input.dim(1) != spec.input_dims() || input.dim(0) != spec.length)
    throw ShapeError("model input " + shape_string(input.shape()) + " does not match (" +
                     std::to_string(spec.length) + ", " + std::to_string(spec.input_dims()) + ")");
  std::vector<ad::Var> out;
  std::size_t offset = 0;
  for (std::size_t s = 0; s < spec.sensors.size(); ++s) {
    const std::size_t dims = spec.sensors[s].dims;
    ad::Var h = spec.sensors.size() == 1 ? x : ad::slice_features(tape, x, offset, dims);
    offset += dims;
    const std::string prefix = "sensor" + std::to_string(s);
    for (std::size_t b = 0; b < spec.sensor_stack.size(); ++b)
      h = block_forward(tape, h, spec.sensor_stack[b], params, prefix + ".block" + std::to_string(b));
    out.push_back(h);
  }
  return out;
}

}  // namespace

ad::Var sample_forward(ad::Tape& tape, ad::Var x, const ModelSpec& spec, const ParamVars& params) {
  if (spec.kind == ModelKind::Mlp) {
    const auto& input = tape.real(x);
    if (input.size() != spec.length * spec.input_dims())
      throw ShapeError("model input " + shape_string(input.shape()) + " has the wrong size");
    auto h = ad::dense(tape, ad::flatten(tape, x), params.at("mlp.hidden.weight"),
                       params.at("mlp.hidden.bias"));
    h = ad::relu(tape, h);
    return ad::dense(tape, h, params.at("mlp.out.weight"), params.at("mlp.out.bias"));
  }
  const auto parts = sensor_stacks(tape, x, spec, params);
  ad::Var h = parts.size() == 1 ? parts.front() : ad::concat_features(tape, parts);
  for (std::size_t b = 0; b < spec.merged_stack.size(); ++b)
    h = block_forward(tape, h, spec.merged_stack[b], params, "merged.block" + std::to_string(b));
  const auto pooled = ad::mean_time(tape, h);
  return ad::dense(tape, pooled, params.at("head.weight"), params.at("head.bias"));
}

std::vector<RealTensor> sensor_features(const ModelSpec& spec, const ad::ParamStore& params,
                                        const RealTensor& sample) {
  ad::Tape tape;
  const auto vars = register_params(tape, params);
  const auto parts = sensor_stacks(tape, tape.constant(sample), spec, vars);
  std::vector<RealTensor> out;
  for (auto p : parts) out.push_back(tape.real(p));
  return out;
}

RealTensor sample_at(const RealTensor& batch, std::size_t i) {
  if (batch.rank() != 3 || i >= batch.dim(0)) throw ShapeError("sample index out of range");
  const std::size_t stride = batch.dim(1) * batch.dim(2);
  const auto begin = batch.data().begin() + static_cast<long>(i * stride);
  return RealTensor({batch.dim(1), batch.dim(2)}, std::vector<double>(begin, begin + static_cast<long>(stride)));
}

RealTensor model_forward(const RealTensor& batch, const ModelSpec& spec,
                         const ad::ParamStore& params) {
  if (batch.rank() != 3) throw ShapeError("model_forward expects (B, T, D)");
  RealTensor logits({batch.dim(0), spec.classes});
  for (std::size_t i = 0; i < batch.dim(0); ++i) {
    ad::Tape tape;
    const auto vars = register_params(tape, params);
    const auto out = sample_forward(tape, tape.constant(sample_at(batch, i)), spec, vars);
    const auto& z = tape.real(out);
    for (std::size_t c = 0; c < spec.classes; ++c) logits.at(i, c) = z[c];
  }
  return logits;
}

ad::Evaluation batch_loss(const ModelSpec& spec, const ad::ParamStore& params,
                          const RealTensor& batch, const std::vector<int>& labels,
                          const std::vector<std::size_t>& indices, bool want_grad,
                          std::size_t jobs) {
  if (indices.empty()) throw ShapeError("batch_loss of an empty batch");
  std::vector<ad::Evaluation> per(indices.size());
  auto run = [&](std::size_t begin, std::size_t end) {
    for (std::size_t n = begin; n < end; ++n) {
      const std::size_t i = indices[n];
      ad::Tape tape;
      const auto vars = register_params(tape, params);
      const auto logits = sample_forward(tape, tape.constant(sample_at(batch, i)), spec, vars);
      const auto loss = ad::cross_entropy(tape, logits, static_cast<std::size_t>(labels.at(i)));
      per[n].loss = tape.real(loss)[0];
      per[n].kink = tape.kink_signature();
      if (want_grad) {
        tape.backward(loss);
        per[n].grads = tape.gradients();
      }
    }
  };
  jobs = std::clamp<std::size_t>(jobs, 1, indices.size());
  if (jobs == 1) {
    run(0, indices.size());
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (indices.size() + jobs - 1) / jobs;
    for (std::size_t begin = 0; begin < indices.size(); begin += chunk)
      pool.emplace_back(run, begin, std::min(indices.size(), begin + chunk));
    for (auto& t : pool) t.join();
  }
  ad::Evaluation total;
  const double inv = 1.0 / static_cast<double>(indices.size());
  for (auto& e : per) {
    total.loss += e.loss * inv;
    total.kink = mix_seed(total.kink, e.kink);
    if (!want_grad) continue;
    for (auto& [name, g] : e.grads) {
      auto it = total.grads.find(name);
      if (it == total.grads.end()) {
        it = total.grads.emplace(name, ad::zeros_like(g)).first;
      }
      ad::accumulate(it->second, g, inv);
    }
  }
  return total;
}

}  // namespace stfnet
