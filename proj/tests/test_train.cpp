#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "stfnet/error.hpp"
#include "stfnet/tensor_io.hpp"
#include "stfnet/train.hpp"

using namespace stfnet;
namespace fs = std::filesystem;

namespace {

ModelSpec tiny_spec() {
  ModelSpec spec;
  spec.length = 128;
  spec.classes = 3;
  spec.sensors = {{"x", 1}};
  BlockConfig block;
  block.window_set = {16, 32, 64};
  block.out_features = 6;
  spec.sensor_stack = {};
  spec.merged_stack = {block};
  return spec;
}

Dataset tiny_data(std::size_t n, std::uint64_t seed) {
  return generate({{"kind", "toneband"}, {"n", n}, {"classes", 3}, {"length", 128},
                   {"groups", 3}, {"seed", seed}, {"snr_db", 10}});
}

bool same_params(const ad::ParamStore& a, const ad::ParamStore& b) {
  if (a.size() != b.size()) return false;
  for (const auto& [name, p] : a) {
    if (!b.contains(name)) return false;
    const auto pa = ad::planes(p.value);
    const auto pb = ad::planes(b.at(name).value);
    for (std::size_t i = 0; i < pa.size(); ++i)
      if (!std::equal(pa[i].begin(), pa[i].end(), pb[i].begin(), pb[i].end())) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("classification metrics") {
  const auto m = classification_metrics({0, 0, 1, 1}, {0, 1, 1, 1}, 0.25);
  CHECK(m.accuracy == 0.75);
  CHECK(m.macro_f1 == doctest::Approx((2.0 / 3.0 + 0.8) / 2.0));
  CHECK(m.loss == 0.25);
  // A class that is only predicted still counts towards macro-F1.
  CHECK(classification_metrics({0, 0}, {0, 2}).macro_f1 == doctest::Approx((2.0 / 3.0 + 0.0) / 2.0));
  CHECK(classification_metrics({1, 2, 3}, {1, 2, 3}).macro_f1 == 1.0);
  CHECK_THROWS_AS(classification_metrics({0}, {0, 1}), ShapeError);

  const auto s = summarize({1.0, 2.0, 3.0});
  CHECK(s.mean == doctest::Approx(2.0));
  CHECK(s.half_width == doctest::Approx(1.96 / std::sqrt(3.0)));
  CHECK(summarize({4.0}).half_width == 0.0);
}

TEST_CASE("one epoch on a handful of samples") {
  const auto spec = tiny_spec();
  const auto train_set = tiny_data(8, 1), test_set = tiny_data(6, 2);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch = 4;
  std::vector<EpochRecord> seen;
  const auto result = train(spec, train_set, &test_set, cfg, [&](const EpochRecord& r) { seen.push_back(r); });
  REQUIRE(result.log.size() == 2);
  CHECK(result.log[0].split == "train");
  CHECK(result.log[1].split == "test");
  CHECK(seen.size() == 2);
  for (const auto& r : result.log) {
    CHECK(r.epoch == 1);
    CHECK(std::isfinite(r.metrics.loss));
    CHECK(r.metrics.accuracy >= 0.0);
    CHECK(r.metrics.accuracy <= 1.0);
  }
  CHECK(result.stats.mean.size() == 1);
  CHECK(same_params(result.params, result.params));

  auto wrong = spec;
  wrong.length = 256;
  CHECK_THROWS_AS(train(wrong, train_set, nullptr, cfg), ConfigError);
  cfg.batch = 0;
  CHECK_THROWS_AS(train(spec, train_set, nullptr, cfg), ConfigError);
}

TEST_CASE("full-batch adam lowers the loss step by step") {
  const auto spec = tiny_spec();
  const auto ds = tiny_data(12, 3);
  const auto norm = normalize(ds, zscore_stats(ds));
  auto params = init_params(spec, 5);
  ad::Adam adam(ad::AdamConfig{1e-3});
  std::vector<std::size_t> all(ds.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  double previous = INFINITY;
  for (int step = 0; step < 6; ++step) {
    const auto e = batch_loss(spec, params, norm.samples, norm.labels, all, true);
    CHECK(e.loss <= previous);
    previous = e.loss;
    adam.step(params, e.grads);
  }
}

TEST_CASE("training is deterministic and independent of the thread count") {
  const auto spec = tiny_spec();
  const auto ds = tiny_data(12, 4);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch = 5;
  cfg.seed = 17;
  const auto a = train(spec, ds, nullptr, cfg);
  const auto b = train(spec, ds, nullptr, cfg);
  cfg.jobs = 3;
  const auto c = train(spec, ds, nullptr, cfg);
  CHECK(same_params(a.params, b.params));
  CHECK(same_params(a.params, c.params));
  CHECK(a.log[1].metrics.loss == c.log[1].metrics.loss);
  cfg.seed = 18;
  CHECK_FALSE(same_params(a.params, train(spec, ds, nullptr, cfg).params));
}

TEST_CASE("leave one group out trains one fold per group") {
  const auto spec = tiny_spec();
  const auto ds = tiny_data(18, 5);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch = 6;
  const auto folds = leave_one_group_out(spec, ds, cfg);
  REQUIRE(folds.size() == 3);
  for (std::size_t f = 0; f < 3; ++f) {
    CHECK(folds[f].group == static_cast<int>(f));
    CHECK(folds[f].metrics.accuracy >= 0.0);
  }
  const auto parallel = leave_one_group_out(spec, ds, cfg, 2);
  for (std::size_t f = 0; f < 3; ++f) CHECK(same_params(folds[f].trained.params, parallel[f].trained.params));

  auto one_group = ds;
  for (auto& g : one_group.groups) g = 0;
  CHECK_THROWS_AS(leave_one_group_out(spec, one_group, cfg), ConfigError);
}

TEST_CASE("checkpoints round trip") {
  const auto dir = fs::temp_directory_path() / "stfnet_test_ckpt";
  fs::remove_all(dir);
  auto spec = tiny_spec();
  spec.merged_stack[0].op = OpKind::Conv;
  Checkpoint ckpt{spec, init_params(spec, 9), NormStats{{0.5}, {2.0}}};
  save_checkpoint(dir, ckpt);
  CHECK(fs::exists(dir / "manifest.json"));
  const auto back = load_checkpoint(dir);
  CHECK(to_json(back.spec) == to_json(spec));
  CHECK(same_params(back.params, ckpt.params));
  CHECK(back.stats.mean == ckpt.stats.mean);
  CHECK(back.params.at("merged.block0.conv").constraint == ad::Constraint::None);

  write_tensor(dir / "params" / "head.bias.bin", RealTensor({7}));
  CHECK_THROWS_AS(load_checkpoint(dir), DataError);
  fs::remove_all(dir);
  CHECK_THROWS_AS(load_checkpoint(dir), DataError);
}
