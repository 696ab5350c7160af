#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stfnet/autograd.hpp"
#include "stfnet/optim.hpp"
#include "stfnet/specops.hpp"

namespace stfnet {

enum class OpKind { Filter, Conv };

/// One STFNet block: multi_stft -> interleave -> per-resolution op ->
/// optional pooling -> istft -> concat (ascending tau) -> ReLU.
struct BlockConfig {
  std::vector<std::size_t> window_set{16, 32, 64, 128};
  OpKind op = OpKind::Filter;
  std::size_t out_features = 32;
  bool interleave = true;
  std::optional<double> pool_rho;
  InterpMode interp = InterpMode::Linear;
  std::size_t tau_base = 0;       ///< filter base window; 0 means max(window_set)
  std::size_t kernel_size = 3;    ///< conv only, odd
  std::size_t tau_conv_base = 0;  ///< conv only; 0 means min(window_set)
  PaddingMode padding = PaddingMode::Spectral;

  std::size_t resolved_tau_base() const;
  std::size_t resolved_tau_conv_base() const;
  std::size_t width_per_resolution() const { return out_features / window_set.size(); }
};

struct SensorSpec {
  std::string name;
  std::size_t dims = 1;
};

enum class ModelKind { Stfnet, Mlp };

struct ModelSpec {
  ModelKind kind = ModelKind::Stfnet;
  std::size_t length = 512;  ///< samples per input window (T)
  double fs = 100.0;
  std::size_t classes = 6;
  std::vector<SensorSpec> sensors{{"acc", 3}, {"gyro", 3}};
  std::vector<BlockConfig> sensor_stack;
  std::vector<BlockConfig> merged_stack;
  /// Every sensor stack starts from the same random draws.
  bool tied_sensor_init = false;
  /// Uniform init half-width of the interleave matrices; 0 gives the exact
  /// zero start.
  double interleave_init_scale = 1e-3;
  /// Multiplier on the 1/sqrt(D * K) filter/conv init half-width.
  double init_gain = 1.0;
  /// MLP control hidden width; 0 picks the width whose parameter count is
  /// closest to the STFNet described by the same stacks.
  std::size_t mlp_hidden = 0;

  std::size_t input_dims() const;
};

/// The default architecture: two 3-axis sensors, three per-sensor blocks
/// (the third pooled at rho = 1/2), three merged blocks, width 32,
/// windows {16, 32, 64, 128}, 6 classes, T = 512 at 100 Hz.
ModelSpec default_model_spec();

/// Throws ConfigError on any inconsistency (widths, window sets, lengths
/// through pooling, kernel sizes, class count).
void validate(const ModelSpec& spec);

nlohmann::json to_json(const ModelSpec& spec);
/// Missing keys take defaults; unknown keys raise ConfigError.
ModelSpec model_spec_from_json(const nlohmann::json& j);

/// Same spec with every block's window set replaced by {tau} (base windows
/// reset to their defaults).
ModelSpec single_resolution(const ModelSpec& spec, std::size_t tau);

/// Random initial parameters, deterministic in `seed`.
ad::ParamStore init_params(const ModelSpec& spec, std::uint64_t seed);
std::size_t parameter_count(const ModelSpec& spec);
/// Hidden width used by the MLP control for this spec.
std::size_t mlp_hidden_width(const ModelSpec& spec);

/// Parameters registered on one tape, by name.
using ParamVars = std::map<std::string, ad::Var>;
ParamVars register_params(ad::Tape& tape, const ad::ParamStore& params);

/// One block on the tape; x is (T, D), result (T', O). `prefix` names the
/// block's parameters, e.g. "sensor0.block1".
ad::Var block_forward(ad::Tape& tape, ad::Var x, const BlockConfig& cfg, const ParamVars& params,
                      const std::string& prefix);

/// Logits (C) for one (T, D_total) sample.
ad::Var sample_forward(ad::Tape& tape, ad::Var x, const ModelSpec& spec, const ParamVars& params);

/// Pre-fusion features of one sample, one (T', F) tensor per sensor.
std::vector<RealTensor> sensor_features(const ModelSpec& spec, const ad::ParamStore& params,
                                        const RealTensor& sample);

/// (B, T, D_total) -> (B, C) logits.
RealTensor model_forward(const RealTensor& batch, const ModelSpec& spec,
                         const ad::ParamStore& params);

/// Sample i of a (N, T, D) tensor as (T, D).
RealTensor sample_at(const RealTensor& batch, std::size_t i);

/// Mean cross-entropy over the batch and its gradient, one tape per
/// sample; gradients are summed in sample order whatever `jobs` is.
ad::Evaluation batch_loss(const ModelSpec& spec, const ad::ParamStore& params,
                          const RealTensor& batch, const std::vector<int>& labels,
                          const std::vector<std::size_t>& indices, bool want_grad,
                          std::size_t jobs = 1);

}  // namespace stfnet
