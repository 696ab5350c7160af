#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stfnet/data.hpp"
#include "stfnet/model.hpp"
#include "stfnet/optim.hpp"

namespace stfnet {

struct TrainConfig {
  ad::AdamConfig adam;
  std::size_t batch = 32;
  std::size_t epochs = 10;
  std::uint64_t seed = 0;
  /// Threads per mini-batch; results do not depend on it.
  std::size_t jobs = 1;
};

struct Metrics {
  double loss = 0.0;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
};

/// Accuracy and macro-F1; F1 is averaged over classes present in either
/// the truth or the predictions.
Metrics classification_metrics(const std::vector<int>& truth, const std::vector<int>& predicted,
                               double loss = 0.0);

struct EpochRecord {
  std::size_t epoch = 0;
  std::string split;  ///< "train" or "test"
  Metrics metrics;
};

struct TrainResult {
  ad::ParamStore params;
  NormStats stats;
  std::vector<EpochRecord> log;
};

/// Predictions and mean loss of a (normalized) dataset.
struct Prediction {
  std::vector<int> predicted;
  Metrics metrics;
};
Prediction predict(const ModelSpec& spec, const ad::ParamStore& params, const Dataset& ds,
                   std::size_t jobs = 1);

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Z-score statistics come from `train` only and are applied to both sets.
/// `test` may be null; if given, test metrics are logged every epoch.
TrainResult train(const ModelSpec& spec, const Dataset& train, const Dataset* test,
                  const TrainConfig& cfg, const EpochCallback& on_epoch = {});

struct FoldResult {
  int group = 0;
  Metrics metrics;
  TrainResult trained;
};

/// Mean and 95 % normal-approximation half-width 1.96 s / sqrt(n).
struct Summary {
  double mean = 0.0;
  double half_width = 0.0;
};
Summary summarize(const std::vector<double>& values);

/// Leave-one-group-out: one fold per group id, in ascending order.
/// Folds run on up to `fold_jobs` threads; results are ordered by group.
std::vector<FoldResult> leave_one_group_out(const ModelSpec& spec, const Dataset& ds,
                                            const TrainConfig& cfg, std::size_t fold_jobs = 1);

// ---- checkpoints ------------------------------------------------------------

struct Checkpoint {
  ModelSpec spec;
  ad::ParamStore params;
  NormStats stats;
};

/// Directory with manifest.json and one binary tensor file per parameter.
void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace stfnet
