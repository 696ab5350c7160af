#include "stfnet/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <thread>

#include "stfnet/error.hpp"
#include "stfnet/graph_ops.hpp"
#include "stfnet/rng.hpp"
#include "stfnet/tensor_io.hpp"

namespace stfnet {

using nlohmann::json;

Metrics classification_metrics(const std::vector<int>& truth, const std::vector<int>& predicted,
                               double loss) {
  if (truth.size() != predicted.size() || truth.empty())
    throw ShapeError("metrics need equally many, non-zero truths and predictions");
  Metrics m;
  m.loss = loss;
  std::size_t correct = 0;
  std::set<int> classes(truth.begin(), truth.end());
  classes.insert(predicted.begin(), predicted.end());
  for (std::size_t i = 0; i < truth.size(); ++i) correct += truth[i] == predicted[i];
  m.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());
  double f1_sum = 0.0;
  for (int c : classes) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      tp += truth[i] == c && predicted[i] == c;
      fp += truth[i] != c && predicted[i] == c;
      fn += truth[i] == c && predicted[i] != c;
    }
    const double denom = static_cast<double>(2 * tp + fp + fn);
    f1_sum += denom > 0 ? 2.0 * static_cast<double>(tp) / denom : 0.0;
  }
  m.macro_f1 = f1_sum / static_cast<double>(classes.size());
  return m;
}

Prediction predict(const ModelSpec& spec, const ad::ParamStore& params, const Dataset& ds,
                   std::size_t jobs) {
  const std::size_t n = ds.size();
  std::vector<int> predicted(n);
  std::vector<double> losses(n);
  auto run = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      ad::Tape tape;
      const auto vars = register_params(tape, params);
      const auto logits = sample_forward(tape, tape.constant(sample_at(ds.samples, i)), spec, vars);
      const auto loss = ad::cross_entropy(tape, logits, static_cast<std::size_t>(ds.labels[i]));
      const auto z = tape.real(logits).data();
      predicted[i] = static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
      losses[i] = tape.real(loss)[0];
    }
  };
  jobs = std::clamp<std::size_t>(jobs, 1, n);
  if (jobs == 1) {
    run(0, n);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + jobs - 1) / jobs;
    for (std::size_t b = 0; b < n; b += chunk) pool.emplace_back(run, b, std::min(n, b + chunk));
    for (auto& t : pool) t.join();
  }
  double loss = 0.0;
  for (double l : losses) loss += l;
  return {predicted, classification_metrics(ds.labels, predicted, loss / static_cast<double>(n))};
}

TrainResult train(const ModelSpec& spec, const Dataset& train_set, const Dataset* test,
                  const TrainConfig& cfg, const EpochCallback& on_epoch) {
  validate(spec);
  if (train_set.length() != spec.length || train_set.dims() != spec.input_dims())
    throw ConfigError("dataset windows (" + std::to_string(train_set.length()) + ", " +
                      std::to_string(train_set.dims()) + ") do not match the model input (" +
                      std::to_string(spec.length) + ", " + std::to_string(spec.input_dims()) + ")");
  if (train_set.classes > spec.classes)
    throw ConfigError("dataset has more classes than the model");
  if (cfg.batch == 0 || cfg.epochs == 0) throw ConfigError("batch and epochs must be positive");

  TrainResult result;
  result.stats = zscore_stats(train_set);
  const Dataset train_norm = normalize(train_set, result.stats);
  Dataset test_norm;
  if (test) test_norm = normalize(*test, result.stats);

  Rng root(cfg.seed);
  result.params = init_params(spec, root.fork(1).next());
  ad::Adam adam(cfg.adam);
  Rng order_rng = root.fork(2);
  std::vector<std::size_t> order(train_norm.size());

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    order_rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      const std::vector<std::size_t> batch(order.begin() + static_cast<long>(start),
                                           order.begin() + static_cast<long>(std::min(order.size(), start + cfg.batch)));
      const auto eval = batch_loss(spec, result.params, train_norm.samples, train_norm.labels, batch,
                                   true, cfg.jobs);
      adam.step(result.params, eval.grads);
    }
    // Train metrics with the end-of-epoch parameters.
    EpochRecord rec{epoch, "train", predict(spec, result.params, train_norm, cfg.jobs).metrics};
    result.log.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (test) {
      EpochRecord t{epoch, "test", predict(spec, result.params, test_norm, cfg.jobs).metrics};
      result.log.push_back(t);
      if (on_epoch) on_epoch(t);
    }
  }
  return result;
}

Summary summarize(const std::vector<double>& values) {
  Summary s;
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  for (double v : values) s.mean += v;
  s.mean /= n;
  if (values.size() < 2) return s;
  double var = 0.0;
  for (double v : values) var += (v - s.mean) * (v - s.mean);
  var /= n - 1.0;
  s.half_width = 1.96 * std::sqrt(var) / std::sqrt(n);
  return s;
}

std::vector<FoldResult> leave_one_group_out(const ModelSpec& spec, const Dataset& ds,
                                            const TrainConfig& cfg, std::size_t fold_jobs) {
  const auto ids = group_ids(ds);
  if (ids.size() < 2) throw ConfigError("leave-one-group-out needs at least 2 groups");
  std::vector<FoldResult> folds(ids.size());
  auto run_fold = [&](std::size_t f) {
    std::vector<std::size_t> train_idx, test_idx;
    for (std::size_t i = 0; i < ds.size(); ++i)
      (ds.groups[i] == ids[f] ? test_idx : train_idx).push_back(i);
    if (test_idx.empty() || train_idx.empty())
      throw ConfigError("group " + std::to_string(ids[f]) + " leaves an empty fold");
    const Dataset train_set = subset(ds, train_idx);
    const Dataset test_set = subset(ds, test_idx);
    TrainConfig fold_cfg = cfg;
    fold_cfg.seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(ids[f]));
    folds[f].group = ids[f];
    folds[f].trained = train(spec, train_set, nullptr, fold_cfg);
    folds[f].metrics =
        predict(spec, folds[f].trained.params, normalize(test_set, folds[f].trained.stats), cfg.jobs).metrics;
  };
  fold_jobs = std::clamp<std::size_t>(fold_jobs, 1, ids.size());
  if (fold_jobs == 1) {
    for (std::size_t f = 0; f < ids.size(); ++f) run_fold(f);
    return folds;
  }
  std::vector<std::exception_ptr> errors(ids.size());
  std::size_t next = 0;
  while (next < ids.size()) {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < fold_jobs && next < ids.size(); ++w, ++next)
      pool.emplace_back([&, f = next] {
        try {
          run_fold(f);
        } catch (...) {
          errors[f] = std::current_exception();
        }
      });
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return folds;
}

// ---- checkpoints ------------------------------------------------------------

void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& ckpt) {
  std::filesystem::create_directories(dir / "params");
  json manifest;
  manifest["model"] = to_json(ckpt.spec);
  manifest["normalization"] = to_json(ckpt.stats);
  manifest["params"] = json::array();
  for (const auto& [name, p] : ckpt.params) {
    const std::string file = "params/" + name + ".bin";
    write_tensor(dir / file, p.value);
    manifest["params"].push_back(
        {{"name", name},
         {"file", file},
         {"constraint", p.constraint == ad::Constraint::RealDcNyquist ? "real-dc-nyquist" : "none"}});
  }
  write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  json manifest;
  try {
    manifest = json::parse(read_file(dir / "manifest.json"));
  } catch (const json::exception& e) {
    throw DataError("bad manifest in " + dir.string() + ": " + e.what());
  }
  Checkpoint ckpt;
  ckpt.spec = model_spec_from_json(manifest.at("model"));
  ckpt.stats = norm_stats_from_json(manifest.at("normalization"));
  for (const auto& entry : manifest.at("params")) {
    const auto name = entry.at("name").get<std::string>();
    const auto constraint = entry.value("constraint", std::string("none")) == "real-dc-nyquist"
                                ? ad::Constraint::RealDcNyquist
                                : ad::Constraint::None;
    ckpt.params.add(name, read_tensor(dir / entry.at("file").get<std::string>()), constraint);
  }
  // Shapes must match what the spec would create.
  const auto reference = init_params(ckpt.spec, 0);
  if (reference.size() != ckpt.params.size())
    throw DataError("checkpoint parameters do not match its model");
  for (const auto& [name, p] : reference)
    if (!ckpt.params.contains(name) || ad::shape_of(ckpt.params.at(name).value) != ad::shape_of(p.value))
      throw DataError("checkpoint parameter '" + name + "' is missing or misshapen");
  return ckpt;
}

}  // namespace stfnet
