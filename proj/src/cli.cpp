#include "stfnet/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "stfnet/error.hpp"
#include "stfnet/tensor_io.hpp"
#include "stfnet/transform.hpp"

namespace stfnet::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

}  // namespace

RunConfig parse_run_config(const json& j) {
  check_keys(j, {"model", "train", "data", "eval", "gradcheck", "ablation", "inspect", "output_dir"},
             "config");
  RunConfig cfg;
  try {
    if (j.contains("model")) cfg.model = model_spec_from_json(j["model"]);
    if (j.contains("train")) {
      const auto& t = j["train"];
      check_keys(t, {"lr", "beta1", "beta2", "eps", "batch", "epochs", "seed"}, "train");
      cfg.train.adam.lr = t.value("lr", cfg.train.adam.lr);
      cfg.train.adam.beta1 = t.value("beta1", cfg.train.adam.beta1);
      cfg.train.adam.beta2 = t.value("beta2", cfg.train.adam.beta2);
      cfg.train.adam.eps = t.value("eps", cfg.train.adam.eps);
      cfg.train.batch = t.value("batch", cfg.train.batch);
      cfg.train.epochs = t.value("epochs", cfg.train.epochs);
      cfg.train.seed = t.value("seed", cfg.train.seed);
      if (!(cfg.train.adam.lr > 0.0) || cfg.train.batch == 0 || cfg.train.epochs == 0)
        throw ConfigError("train needs lr > 0, batch > 0 and epochs > 0");
    }
    if (!j.contains("data")) throw ConfigError("config needs a data section");
    const auto& d = j["data"];
    check_keys(d,
               {"path", "generator", "csv", "test_path", "test_generator", "test_count",
                "test_fraction"},
               "data");
    if (d.contains("path")) cfg.data.path = d["path"].get<std::string>();
    if (d.contains("generator")) cfg.data.generator = d["generator"];
    if (d.contains("csv")) {
      const auto& c = d["csv"];
      check_keys(c, {"path", "fs", "seg_len", "time_col", "feature_cols", "label_col", "group_col"},
                 "data.csv");
      CsvIngestConfig csv;
      csv.path = c.at("path").get<std::string>();
      csv.fs = c.value("fs", csv.fs);
      csv.seg_len = c.value("seg_len", csv.seg_len);
      csv.time_col = c.value("time_col", csv.time_col);
      csv.feature_cols = c.at("feature_cols").get<std::vector<std::string>>();
      csv.label_col = c.value("label_col", csv.label_col);
      csv.group_col = c.value("group_col", csv.group_col);
      cfg.data.csv = csv;
    }
    if (int(cfg.data.path.has_value()) + int(cfg.data.generator.has_value()) +
            int(cfg.data.csv.has_value()) != 1)
      throw ConfigError("data needs exactly one of path, generator and csv");
    if (d.contains("test_path")) cfg.data.test_path = d["test_path"].get<std::string>();
    if (d.contains("test_generator")) cfg.data.test_generator = d["test_generator"];
    cfg.data.test_count = d.value("test_count", std::size_t{0});
    cfg.data.test_fraction = d.value("test_fraction", 0.0);
    if (cfg.data.test_fraction < 0.0 || cfg.data.test_fraction >= 1.0)
      throw ConfigError("test_fraction must lie in [0, 1)");
    if (j.contains("eval")) {
      check_keys(j["eval"], {"mode"}, "eval");
      const auto mode = j["eval"].value("mode", std::string("holdout"));
      if (mode == "holdout") cfg.eval = EvalMode::Holdout;
      else if (mode == "leave-one-group-out") cfg.eval = EvalMode::LeaveOneGroupOut;
      else throw ConfigError("unknown eval mode '" + mode + "'");
    }
    if (j.contains("gradcheck")) {
      const auto& g = j["gradcheck"];
      check_keys(g, {"batch", "step", "tolerance", "max_elements"}, "gradcheck");
      cfg.gradcheck.batch = g.value("batch", cfg.gradcheck.batch);
      cfg.gradcheck.step = g.value("step", cfg.gradcheck.step);
      cfg.gradcheck.tolerance = g.value("tolerance", cfg.gradcheck.tolerance);
      cfg.gradcheck.max_elements = g.value("max_elements", cfg.gradcheck.max_elements);
      if (cfg.gradcheck.batch == 0 || cfg.gradcheck.batch > 4)
        throw ConfigError("gradcheck batch must be 1..4");
    }
    if (j.contains("ablation")) {
      const auto& a = j["ablation"];
      check_keys(a, {"seeds", "taus"}, "ablation");
      if (a.contains("seeds")) cfg.ablation.seeds = a["seeds"].get<std::vector<std::uint64_t>>();
      if (a.contains("taus")) cfg.ablation.taus = a["taus"].get<std::vector<std::size_t>>();
      if (cfg.ablation.seeds.empty()) throw ConfigError("ablation needs at least one seed");
    }
    if (j.contains("inspect")) {
      check_keys(j["inspect"], {"window_set"}, "inspect");
      cfg.inspect_window_set = j["inspect"].value("window_set", std::vector<std::size_t>{});
      if (!cfg.inspect_window_set.empty()) validate_window_set(cfg.inspect_window_set);
    }
    if (j.contains("output_dir")) cfg.output_dir = j["output_dir"].get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (const char* env = std::getenv("STFNET_OUT"); env && *env) cfg.output_dir = env;
  return cfg;
}

RunConfig load_run_config(const fs::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw ConfigError(std::string("cannot read config: ") + e.what());
  }
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  RunConfig cfg = parse_run_config(j);
  // Relative data paths are taken from the config's directory.
  const auto base = path.parent_path();
  for (auto* p : {&cfg.data.path, &cfg.data.test_path})
    if (*p && p->value().is_relative()) *p = base / p->value();
  if (cfg.data.csv && cfg.data.csv->path.is_relative()) cfg.data.csv->path = base / cfg.data.csv->path;
  return cfg;
}

Split load_data(const DataSection& data, bool need_test) {
  Split split;
  if (data.path) split.train = load_dataset(*data.path);
  else if (data.csv) split.train = ingest_csv(*data.csv);
  else split.train = generate(*data.generator);
  if (data.test_path) {
    split.test = load_dataset(*data.test_path);
  } else if (data.test_generator) {
    split.test = generate(*data.test_generator);
  } else if (data.test_count > 0 || data.test_fraction > 0.0) {
    const std::size_t n = split.train.size();
    const std::size_t count =
        data.test_count > 0 ? data.test_count
                            : static_cast<std::size_t>(data.test_fraction * static_cast<double>(n) + 0.5);
    if (count == 0 || count >= n) throw ConfigError("holdout split leaves an empty side");
    std::vector<std::size_t> head(n - count), tail(count);
    for (std::size_t i = 0; i < n - count; ++i) head[i] = i;
    for (std::size_t i = 0; i < count; ++i) tail[i] = n - count + i;
    split.test = subset(split.train, tail);
    split.train = subset(split.train, head);
  }
  if (need_test && !split.test) throw ConfigError("holdout evaluation needs test data");
  if (split.test && (split.test->length() != split.train.length() ||
                     split.test->dims() != split.train.dims()))
    throw DataError("train and test windows differ in shape");
  return split;
}

// ---- commands ---------------------------------------------------------------

namespace {

struct Options {
  std::string config;
  bool json_output = false;
  std::size_t jobs = 1;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> checkpoint;
  std::size_t sample = 0;
};

struct Context {
  RunConfig cfg;
  Options opt;
  std::ostream& out;
};

class CheckFailed : public Error {
 public:
  using Error::Error;
};

json metrics_json(const Metrics& m) {
  return {{"loss", m.loss}, {"accuracy", m.accuracy}, {"macro_f1", m.macro_f1}};
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

std::string csv_rows(const std::vector<EpochRecord>& log, const std::string& prefix = "") {
  std::string out;
  for (const auto& r : log)
    out += std::to_string(r.epoch) + "," + prefix + r.split + "," + fmt(r.metrics.loss) + "," +
           fmt(r.metrics.accuracy) + "," + fmt(r.metrics.macro_f1) + "\n";
  return out;
}

const char* kCsvHeader = "epoch,split,loss,accuracy,macro_f1\n";

void check_model_fits(const ModelSpec& spec, const Dataset& ds) {
  if (ds.length() != spec.length || ds.dims() != spec.input_dims())
    throw ConfigError("data windows (" + std::to_string(ds.length()) + ", " +
                      std::to_string(ds.dims()) + ") do not match the model input (" +
                      std::to_string(spec.length) + ", " + std::to_string(spec.input_dims()) + ")");
  if (ds.classes > spec.classes) throw ConfigError("data has more classes than the model");
}

void emit(Context& ctx, const json& result, const std::string& human) {
  if (ctx.opt.json_output) ctx.out << result.dump() << "\n";
  else ctx.out << human;
}

int cmd_generate(Context& ctx) {
  const auto split = load_data(ctx.cfg.data, false);
  const fs::path dir = ctx.cfg.output_dir;
  save_dataset(dir / "dataset", split.train);
  json result{{"dataset", (dir / "dataset").string()}, {"samples", split.train.size()}};
  std::string human = "wrote " + std::to_string(split.train.size()) + " samples to " +
                      (dir / "dataset").string() + "\n";
  if (split.test) {
    save_dataset(dir / "test_dataset", *split.test);
    result["test_dataset"] = (dir / "test_dataset").string();
    result["test_samples"] = split.test->size();
    human += "wrote " + std::to_string(split.test->size()) + " samples to " +
             (dir / "test_dataset").string() + "\n";
  }
  emit(ctx, result, human);
  return kOk;
}

json fold_summary(const std::vector<std::pair<int, Metrics>>& folds) {
  std::vector<double> acc, f1;
  json list = json::array();
  for (const auto& [g, m] : folds) {
    acc.push_back(m.accuracy);
    f1.push_back(m.macro_f1);
    json entry = metrics_json(m);
    entry["group"] = g;
    list.push_back(entry);
  }
  const auto a = summarize(acc), f = summarize(f1);
  return {{"mode", "leave-one-group-out"},
          {"folds", list},
          {"accuracy", {{"mean", a.mean}, {"ci95_half_width", a.half_width}}},
          {"macro_f1", {{"mean", f.mean}, {"ci95_half_width", f.half_width}}}};
}

int cmd_train(Context& ctx) {
  auto& cfg = ctx.cfg;
  const bool holdout = cfg.eval == EvalMode::Holdout;
  const auto split = load_data(cfg.data, holdout);
  check_model_fits(cfg.model, split.train);
  const fs::path dir = cfg.output_dir;
  fs::create_directories(dir);
  json metrics;
  std::string csv = kCsvHeader;
  std::string human;
  if (holdout) {
    auto progress = [&](const EpochRecord& r) {
      if (!ctx.opt.json_output)
        ctx.out << "epoch " << r.epoch << " " << r.split << " loss " << r.metrics.loss << " acc "
                << r.metrics.accuracy << " f1 " << r.metrics.macro_f1 << "\n";
    };
    const auto result = train(cfg.model, split.train, &*split.test, cfg.train, progress);
    save_checkpoint(dir / "checkpoint", {cfg.model, result.params, result.stats});
    csv += csv_rows(result.log);
    const auto& last_train = result.log[result.log.size() - 2];
    const auto& last_test = result.log.back();
    metrics = {{"mode", "holdout"},
               {"model", cfg.model.kind == ModelKind::Mlp ? "mlp" : "stfnet"},
               {"parameters", parameter_count(cfg.model)},
               {"epochs", cfg.train.epochs},
               {"seed", cfg.train.seed},
               {"train", metrics_json(last_train.metrics)},
               {"test", metrics_json(last_test.metrics)}};
    human = "test accuracy " + fmt(last_test.metrics.accuracy) + ", macro-F1 " +
            fmt(last_test.metrics.macro_f1) + "\n";
  } else {
    Dataset all = split.train;
    if (split.test) throw ConfigError("leave-one-group-out takes a single dataset, not a test set");
    const auto folds = leave_one_group_out(cfg.model, all, cfg.train, ctx.opt.jobs);
    std::vector<std::pair<int, Metrics>> summary;
    for (const auto& f : folds) {
      save_checkpoint(dir / "checkpoint" / ("fold" + std::to_string(f.group)),
                      {cfg.model, f.trained.params, f.trained.stats});
      const std::string prefix = "fold" + std::to_string(f.group) + "-";
      csv += csv_rows(f.trained.log, prefix);
      csv += std::to_string(cfg.train.epochs) + "," + prefix + "test," + fmt(f.metrics.loss) + "," +
             fmt(f.metrics.accuracy) + "," + fmt(f.metrics.macro_f1) + "\n";
      summary.emplace_back(f.group, f.metrics);
    }
    metrics = fold_summary(summary);
    metrics["model"] = cfg.model.kind == ModelKind::Mlp ? "mlp" : "stfnet";
    metrics["parameters"] = parameter_count(cfg.model);
    metrics["epochs"] = cfg.train.epochs;
    metrics["seed"] = cfg.train.seed;
    human = "accuracy " + fmt(metrics["accuracy"]["mean"].get<double>()) + " +/- " +
            fmt(metrics["accuracy"]["ci95_half_width"].get<double>()) + " over " +
            std::to_string(folds.size()) + " folds\n";
  }
  write_file_atomic(dir / "metrics.csv", csv);
  write_file_atomic(dir / "metrics.json", metrics.dump(2) + "\n");
  emit(ctx, metrics, human);
  return kOk;
}

fs::path checkpoint_dir(const Context& ctx) {
  return ctx.opt.checkpoint ? fs::path(*ctx.opt.checkpoint) : ctx.cfg.output_dir / "checkpoint";
}

int cmd_evaluate(Context& ctx) {
  auto& cfg = ctx.cfg;
  const bool holdout = cfg.eval == EvalMode::Holdout;
  const auto split = load_data(cfg.data, holdout);
  const fs::path ckdir = checkpoint_dir(ctx);
  json metrics;
  std::string human;
  if (holdout) {
    const auto ckpt = load_checkpoint(ckdir);
    check_model_fits(ckpt.spec, *split.test);
    const auto pred = predict(ckpt.spec, ckpt.params, normalize(*split.test, ckpt.stats), ctx.opt.jobs);
    json confusion = json::array();
    for (std::size_t t = 0; t < ckpt.spec.classes; ++t) {
      std::vector<std::size_t> row(ckpt.spec.classes, 0);
      for (std::size_t i = 0; i < pred.predicted.size(); ++i)
        if (split.test->labels[i] == static_cast<int>(t)) ++row[static_cast<std::size_t>(pred.predicted[i])];
      confusion.push_back(row);
    }
    metrics = {{"mode", "holdout"}, {"test", metrics_json(pred.metrics)}, {"confusion", confusion}};
    human = "test accuracy " + fmt(pred.metrics.accuracy) + ", macro-F1 " + fmt(pred.metrics.macro_f1) + "\n";
  } else {
    const Dataset& all = split.train;
    std::vector<std::pair<int, Metrics>> folds;
    for (int g : group_ids(all)) {
      const auto ckpt = load_checkpoint(ckdir / ("fold" + std::to_string(g)));
      check_model_fits(ckpt.spec, all);
      std::vector<std::size_t> idx;
      for (std::size_t i = 0; i < all.size(); ++i)
        if (all.groups[i] == g) idx.push_back(i);
      const auto held = normalize(subset(all, idx), ckpt.stats);
      folds.emplace_back(g, predict(ckpt.spec, ckpt.params, held, ctx.opt.jobs).metrics);
    }
    metrics = fold_summary(folds);
    human = "accuracy " + fmt(metrics["accuracy"]["mean"].get<double>()) + " +/- " +
            fmt(metrics["accuracy"]["ci95_half_width"].get<double>()) + ", macro-F1 " +
            fmt(metrics["macro_f1"]["mean"].get<double>()) + " +/- " +
            fmt(metrics["macro_f1"]["ci95_half_width"].get<double>()) + "\n";
  }
  const fs::path dir = cfg.output_dir / "evaluation";
  fs::create_directories(dir);
  write_file_atomic(dir / "metrics.json", metrics.dump(2) + "\n");
  emit(ctx, metrics, human);
  return kOk;
}

int cmd_gradcheck(Context& ctx) {
  auto& cfg = ctx.cfg;
  Split split = load_data(cfg.data, false);
  check_model_fits(cfg.model, split.train);
  const std::size_t b = std::min(cfg.gradcheck.batch, split.train.size());
  std::vector<std::size_t> idx(b);
  for (std::size_t i = 0; i < b; ++i) idx[i] = i;
  const Dataset batch = normalize(subset(split.train, idx), zscore_stats(split.train));
  const auto params = init_params(cfg.model, cfg.train.seed);
  const auto& spec = cfg.model;
  const std::size_t jobs = ctx.opt.jobs;
  ad::Objective objective = [&](const ad::ParamStore& p, bool want_grad) {
    return batch_loss(spec, p, batch.samples, batch.labels, idx, want_grad, jobs);
  };
  const auto report = ad::gradcheck(objective, params, cfg.gradcheck.step, cfg.gradcheck.tolerance,
                                    cfg.gradcheck.max_elements);
  json entries = json::array();
  std::string human;
  for (const auto& e : report.entries) {
    entries.push_back({{"name", e.name},
                       {"checked", e.checked},
                       {"skipped_at_kinks", e.skipped},
                       {"max_abs_error", e.max_abs_error},
                       {"max_rel_error", e.max_rel_error},
                       {"pass", e.pass}});
    human += (e.pass ? "ok   " : "FAIL ") + e.name + " rel " + fmt(e.max_rel_error) + "\n";
  }
  json result{{"step", report.step},
              {"tolerance", report.tolerance},
              {"batch", b},
              {"pass", report.pass},
              {"parameters", entries}};
  fs::create_directories(cfg.output_dir);
  write_file_atomic(cfg.output_dir / "gradcheck.json", result.dump(2) + "\n");
  human += report.pass ? "gradcheck passed\n" : "gradcheck FAILED\n";
  emit(ctx, result, human);
  if (!report.pass) throw CheckFailed("gradient check failed");
  return kOk;
}

int cmd_inspect(Context& ctx) {
  auto& cfg = ctx.cfg;
  std::optional<Checkpoint> ckpt;
  if (ctx.opt.checkpoint) ckpt = load_checkpoint(*ctx.opt.checkpoint);
  const auto split = load_data(cfg.data, false);
  const Dataset& ds = split.train;
  if (ctx.opt.sample >= ds.size())
    throw ConfigError("--sample " + std::to_string(ctx.opt.sample) + " is out of range");
  const ModelSpec& spec = ckpt ? ckpt->spec : cfg.model;
  std::vector<std::size_t> ws = cfg.inspect_window_set;
  if (ws.empty()) {
    const auto& stack = !spec.sensor_stack.empty() ? spec.sensor_stack : spec.merged_stack;
    ws = stack.empty() ? std::vector<std::size_t>{16, 32, 64, 128} : stack.front().window_set;
  }
  Dataset one = subset(ds, {ctx.opt.sample});
  if (ckpt) one = normalize(one, ckpt->stats);
  const RealTensor x = sample_at(one.samples, 0);
  if (x.dim(0) % ws.back() != 0)
    throw ConfigError("sample length is not divisible by window " + std::to_string(ws.back()));
  const auto h = multi_stft(x, ws, ds.fs);
  const fs::path dir = cfg.output_dir / "inspect" / ("sample" + std::to_string(ctx.opt.sample));
  fs::create_directories(dir);
  std::string csv = "tau,chunk,bin,frequency_hz,feature,re,im,magnitude\n";
  json reps = json::array();
  std::string human;
  for (const auto& rep : h.reps) {
    const std::string stem = "rep_tau" + std::to_string(rep.tau);
    write_tensor(dir / (stem + ".bin"), rep.data);
    const json side{{"tau", rep.tau}, {"fs", rep.fs}, {"M", rep.chunks()}, {"K", rep.bins()}, {"D", rep.features()}};
    write_file_atomic(dir / (stem + ".json"), side.dump(2) + "\n");
    std::vector<double> energy(rep.bins(), 0.0);
    for (std::size_t m = 0; m < rep.chunks(); ++m)
      for (std::size_t k = 0; k < rep.bins(); ++k)
        for (std::size_t d = 0; d < rep.features(); ++d) {
          const auto v = rep.data.get(rep.data.index(m, k, d));
          energy[k] += std::norm(v);
          csv += std::to_string(rep.tau) + "," + std::to_string(m) + "," + std::to_string(k) + "," +
                 fmt(rep.bin_frequency(k)) + "," + std::to_string(d) + "," + fmt(v.real()) + "," +
                 fmt(v.imag()) + "," + fmt(std::abs(v)) + "\n";
        }
    const auto peak = static_cast<std::size_t>(std::max_element(energy.begin(), energy.end()) - energy.begin());
    json entry = side;
    entry["dominant_bin"] = peak;
    entry["dominant_frequency_hz"] = rep.bin_frequency(peak);
    reps.push_back(entry);
    human += "tau " + std::to_string(rep.tau) + ": M=" + std::to_string(rep.chunks()) + " K=" +
             std::to_string(rep.bins()) + " dominant bin " + std::to_string(peak) + " (" +
             fmt(rep.bin_frequency(peak)) + " Hz)\n";
  }
  write_file_atomic(dir / "spectra.csv", csv);
  json result{{"sample", ctx.opt.sample}, {"label", ds.labels[ctx.opt.sample]}, {"representations", reps}};
  if (ckpt) {
    check_model_fits(ckpt->spec, ds);
    const auto logits = model_forward(one.samples, ckpt->spec, ckpt->params);
    std::vector<double> z(logits.data().begin(), logits.data().end());
    result["logits"] = z;
    result["predicted"] = std::max_element(z.begin(), z.end()) - z.begin();
  }
  write_file_atomic(dir / "summary.json", result.dump(2) + "\n");
  emit(ctx, result, human);
  return kOk;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

int cmd_ablate(Context& ctx) {
  auto& cfg = ctx.cfg;
  if (cfg.model.kind != ModelKind::Stfnet) throw ConfigError("ablate needs an stfnet model");
  const auto split = load_data(cfg.data, true);
  check_model_fits(cfg.model, split.train);
  std::vector<std::size_t> taus = cfg.ablation.taus;
  if (taus.empty()) {
    std::set<std::size_t> all;
    for (const auto* stack : {&cfg.model.sensor_stack, &cfg.model.merged_stack})
      for (const auto& b : *stack) all.insert(b.window_set.begin(), b.window_set.end());
    taus.assign(all.begin(), all.end());
  }
  std::vector<std::pair<std::string, ModelSpec>> variants{{"multi", cfg.model}};
  for (auto tau : taus) variants.emplace_back("single_tau" + std::to_string(tau), single_resolution(cfg.model, tau));
  json result{{"seeds", cfg.ablation.seeds}, {"variants", json::array()}};
  std::string csv = "variant,seed,accuracy,macro_f1\n";
  std::string human;
  double multi_median = 0.0, best_single = -1.0;
  std::string best_name;
  for (const auto& [name, spec] : variants) {
    validate(spec);
    std::vector<double> acc;
    json runs = json::array();
    for (auto seed : cfg.ablation.seeds) {
      TrainConfig tc = cfg.train;
      tc.seed = seed;
      tc.jobs = ctx.opt.jobs;
      const auto r = train(spec, split.train, &*split.test, tc);
      const auto& m = r.log.back().metrics;
      acc.push_back(m.accuracy);
      runs.push_back({{"seed", seed}, {"accuracy", m.accuracy}, {"macro_f1", m.macro_f1}});
      csv += name + "," + std::to_string(seed) + "," + fmt(m.accuracy) + "," + fmt(m.macro_f1) + "\n";
      if (!ctx.opt.json_output)
        ctx.out << name << " seed " << seed << " accuracy " << m.accuracy << "\n";
    }
    const double med = median(acc);
    result["variants"].push_back({{"name", name},
                                  {"parameters", parameter_count(spec)},
                                  {"runs", runs},
                                  {"median_accuracy", med}});
    if (name == "multi") {
      multi_median = med;
    } else if (med > best_single) {
      best_single = med;
      best_name = name;
    }
    human += name + ": median accuracy " + fmt(med) + "\n";
  }
  result["multi_median_accuracy"] = multi_median;
  result["best_single"] = {{"name", best_name}, {"median_accuracy", best_single}};
  result["multi_ge_best_single"] = multi_median >= best_single;
  human += std::string("multi-resolution ") + (multi_median >= best_single ? ">=" : "<") +
           " best single-resolution (" + best_name + ")\n";
  fs::create_directories(cfg.output_dir);
  write_file_atomic(cfg.output_dir / "ablation.json", result.dump(2) + "\n");
  write_file_atomic(cfg.output_dir / "ablation.csv", csv);
  emit(ctx, result, human);
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"STFNet: multi-resolution spectral networks for sensing signals", "stfnet"};
  app.require_subcommand(1);
  Options opt;
  struct Command {
    const char* name;
    const char* help;
    int (*fn)(Context&);
  };
  const Command commands[] = {
      {"generate", "write a synthetic dataset", cmd_generate},
      {"train", "train a model and write a checkpoint and metrics", cmd_train},
      {"evaluate", "evaluate a checkpoint", cmd_evaluate},
      {"gradcheck", "compare tape gradients with finite differences", cmd_gradcheck},
      {"inspect", "dump the multi-resolution spectra of one sample", cmd_inspect},
      {"ablate", "multi- versus single-resolution comparison over seeds", cmd_ablate},
  };
  std::vector<CLI::App*> subs;
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", opt.config, "run configuration (JSON)")->required();
    sub->add_flag("--json", opt.json_output, "machine-readable output on stdout");
    sub->add_option("--jobs", opt.jobs, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--seed", opt.seed, "overrides train.seed");
    sub->add_option("--checkpoint", opt.checkpoint, "checkpoint directory");
    sub->add_option("--sample", opt.sample, "sample index for inspect");
    subs.push_back(sub);
  }
  std::vector<std::string> rest(args.rbegin(), args.rend() - 1);  // CLI11 takes reversed args
  try {
    app.parse(rest);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }
  auto fail = [&](int code, const std::string& kind, const std::string& message) {
    err << "error: " << message << "\n";
    if (opt.json_output) out << json{{"error", kind}, {"message", message}}.dump() << "\n";
    return code;
  };
  try {
    RunConfig cfg = load_run_config(opt.config);
    if (opt.seed) cfg.train.seed = *opt.seed;
    cfg.train.jobs = opt.jobs;
    Context ctx{std::move(cfg), opt, out};
    for (std::size_t i = 0; i < subs.size(); ++i)
      if (subs[i]->parsed()) return commands[i].fn(ctx);
    return kOtherError;
  } catch (const CheckFailed& e) {
    return fail(kCheckFailed, "check", e.what());
  } catch (const ConfigError& e) {
    return fail(kConfigError, "config", e.what());
  } catch (const DataError& e) {
    return fail(kDataError, "data", e.what());
  } catch (const std::exception& e) {
    return fail(kOtherError, "other", e.what());
  }
}

}  // namespace stfnet::cli
