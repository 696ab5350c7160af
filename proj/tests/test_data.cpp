#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "stfnet/data.hpp"
#include "stfnet/error.hpp"
#include "stfnet/transform.hpp"

using namespace stfnet;
namespace fs = std::filesystem;

namespace {

std::vector<double> column(const Dataset& ds, std::size_t i, std::size_t d) {
  std::vector<double> out(ds.length());
  for (std::size_t t = 0; t < ds.length(); ++t) out[t] = ds.samples[(i * ds.length() + t) * ds.dims() + d];
  return out;
}

std::size_t peak(const std::vector<double>& x) {
  const auto s = dft_real_direct(x);
  std::size_t best = 1;
  for (std::size_t k = 1; k < s.size(); ++k)
    if (std::abs(s[k]) > std::abs(s[best])) best = k;
  return best;
}

// Cosine similarity of two magnitude spectra.
double spectral_similarity(const std::vector<double>& a, const std::vector<double>& b) {
  const auto sa = dft_real(a), sb = dft_real(b);
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t k = 0; k < sa.size(); ++k) {
    ab += std::abs(sa[k]) * std::abs(sb[k]);
    aa += std::norm(sa[k]);
    bb += std::norm(sb[k]);
  }
  return ab / std::sqrt(aa * bb);
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("stfnet_test_data_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

}  // namespace

TEST_CASE("toneband classes peak at their bins and are balanced") {
  ToneBandConfig cfg;
  cfg.n_per_class = 5;
  cfg.dims = 2;
  cfg.snr_db = std::numeric_limits<double>::infinity();
  cfg.seed = 3;
  const auto ds = gen_toneband(cfg);
  CHECK(ds.size() == 30);
  CHECK(ds.samples.shape() == Shape{30, 512, 2});
  std::vector<int> count(6, 0);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    ++count[static_cast<std::size_t>(ds.labels[i])];
    const std::size_t bin = 4 * (static_cast<std::size_t>(ds.labels[i]) + 1) * 4;
    for (std::size_t d = 0; d < 2; ++d) {
      const auto x = column(ds, i, d);
      CHECK(peak(x) == bin);
      // Unit-amplitude tone: power 1/2.
      double p = 0.0;
      for (double v : x) p += v * v;
      CHECK(p / 512.0 == doctest::Approx(0.5).epsilon(1e-9));
    }
    CHECK(ds.groups[i] >= 0);
    CHECK(ds.groups[i] < 4);
  }
  for (int c : count) CHECK(c == 5);
  CHECK(ds.class_names[0] == "tone_bin4");
}

TEST_CASE("toneband noise follows the requested snr") {
  ToneBandConfig cfg;
  cfg.n_per_class = 20;
  cfg.snr_db = 10.0;
  cfg.seed = 4;
  const auto noisy = gen_toneband(cfg);
  cfg.snr_db = std::numeric_limits<double>::infinity();
  const auto clean = gen_toneband(cfg);
  double signal = 0.0, noise = 0.0;
  double sim = 0.0;
  for (std::size_t i = 0; i < noisy.size(); ++i) {
    const auto a = column(noisy, i, 0), b = column(clean, i, 0);
    for (std::size_t t = 0; t < a.size(); ++t) {
      signal += b[t] * b[t];
      noise += (a[t] - b[t]) * (a[t] - b[t]);
    }
    sim += spectral_similarity(a, b);
    CHECK(peak(a) == peak(b));
  }
  CHECK(10.0 * std::log10(signal / noise) == doctest::Approx(10.0).epsilon(0.02));
  CHECK(sim / static_cast<double>(noisy.size()) > 0.8);
}

TEST_CASE("generators are deterministic in their seed") {
  const nlohmann::json spec{{"kind", "mixedres"}, {"n", 12}, {"seed", 9}, {"snr_db", 5}};
  const auto a = generate(spec), b = generate(spec);
  CHECK(std::equal(a.samples.data().begin(), a.samples.data().end(), b.samples.data().begin()));
  CHECK(a.labels == b.labels);
  auto other = spec;
  other["seed"] = 10;
  CHECK_FALSE(std::equal(a.samples.data().begin(), a.samples.data().end(), generate(other).samples.data().begin()));
}

TEST_CASE("transient bursts occupy their class segment") {
  TransientConfig cfg;
  cfg.classes = 4;
  cfg.n_per_class = 2;
  const auto ds = gen_transient(cfg);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto x = column(ds, i, 0);
    const std::size_t segment = 512 / 4, c = static_cast<std::size_t>(ds.labels[i]);
    double inside = 0.0, outside = 0.0;
    for (std::size_t t = 0; t < 512; ++t) (t / segment == c ? inside : outside) += x[t] * x[t];
    CHECK(outside == 0.0);
    CHECK(inside > 0.0);
    const auto rep = stft(RealTensor({512, 1}, x), 16, 100.0);
    std::size_t best = 0;
    for (std::size_t k = 1; k < rep.bins(); ++k)
      if (std::abs(rep.data.get(rep.data.index(c * 8 + 3, k, 0))) > std::abs(rep.data.get(rep.data.index(c * 8 + 3, best, 0))))
        best = k;
    CHECK(best == 3);
  }
}

TEST_CASE("mixedres tones need fine resolution and bursts need fine timing") {
  MixedResConfig cfg;
  cfg.n_per_class = 3;
  cfg.snr_db = std::numeric_limits<double>::infinity();
  const auto ds = gen_mixedres(cfg);
  CHECK(ds.classes == 4);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto x = column(ds, i, 0);
    double power = 0.0;
    for (double v : x) power += v * v;
    CHECK(power / 512.0 == doctest::Approx(0.5).epsilon(1e-9));
    const auto c = static_cast<std::size_t>(ds.labels[i]);
    if (c < 2) {
      CHECK(peak(x) == (39 + 2 * c) * 4);
    } else {
      const std::size_t offset = c == 2 ? 0 : 8;
      for (std::size_t t = 0; t < 512; ++t) {
        const bool on = t % 32 >= offset && t % 32 < offset + 16;
        if (!on) CHECK(x[t] == 0.0);
      }
    }
  }
  // The two tones sit on either side of the same tau = 16 bin.
  std::vector<double> mag16[2];
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto c = static_cast<std::size_t>(ds.labels[i]);
    if (c >= 2 || !mag16[c].empty()) continue;
    const auto rep = stft(RealTensor({512, 1}, column(ds, i, 0)), 16, 100.0);
    for (std::size_t k = 0; k < rep.bins(); ++k) {
      double e = 0.0;
      for (std::size_t m = 0; m < rep.chunks(); ++m) e += std::norm(rep.data.get(rep.data.index(m, k, 0)));
      mag16[c].push_back(e);
    }
  }
  for (const auto& m : mag16) CHECK(std::max_element(m.begin(), m.end()) - m.begin() == 5);
}

TEST_CASE("generator configuration errors") {
  CHECK_THROWS_AS(generate({{"kind", "chirp"}}), ConfigError);
  CHECK_THROWS_AS(generate({{"kind", "toneband"}, {"n", 6}, {"wobble", 1}}), ConfigError);
  CHECK_THROWS_AS(generate({{"kind", "toneband"}}), ConfigError);
  CHECK_THROWS_AS(generate({{"kind", "toneband"}, {"n", 6}, {"n_per_class", 1}}), ConfigError);
  CHECK_THROWS_AS(generate({{"kind", "toneband"}, {"n", 6}, {"bins", {4, 4, 8, 12, 16, 20}}}), ConfigError);
  CHECK_THROWS_AS(generate({{"kind", "mixedres"}, {"n", 8}, {"classes", 9}}), ConfigError);
  CHECK_THROWS_AS(generate({{"kind", "toneband"}, {"n", 6}, {"snr_db", "loud"}}), ConfigError);
  CHECK(generate({{"kind", "toneband"}, {"n", 6}, {"snr_db", "inf"}}).size() == 6);
}

TEST_CASE("dataset save and load round trip") {
  const auto dir = scratch("roundtrip");
  auto ds = generate({{"kind", "toneband"}, {"n", 12}, {"length", 128}, {"dims", 2}, {"seed", 1}});
  save_dataset(dir, ds);
  for (const char* f : {"data.bin", "labels.bin", "groups.bin", "meta.json"}) CHECK(fs::exists(dir / f));
  const auto back = load_dataset(dir);
  CHECK(back.samples.shape() == ds.samples.shape());
  CHECK(std::equal(ds.samples.data().begin(), ds.samples.data().end(), back.samples.data().begin()));
  CHECK(back.labels == ds.labels);
  CHECK(back.groups == ds.groups);
  CHECK(back.class_names == ds.class_names);
  CHECK(back.fs == ds.fs);
  CHECK(back.info["generator"] == "toneband");

  const auto sub = subset(ds, {1, 3});
  CHECK(sub.size() == 2);
  CHECK(sub.labels[1] == ds.labels[3]);
  CHECK(group_ids(ds) == std::vector<int>{0, 1});
  CHECK_THROWS_AS(load_dataset(dir / "missing"), DataError);
  ds.labels[0] = 99;
  CHECK_THROWS_AS(validate(ds), DataError);
  fs::remove_all(dir);
}

TEST_CASE("csv ingestion on a uniform grid is the identity") {
  const auto dir = scratch("uniform");
  std::string text = "timestamp,ax,ay,label,group\n";
  for (int t = 0; t < 16; ++t)
    text += std::to_string(t * 0.1) + "," + std::to_string(t) + "," + std::to_string(-2 * t) + "," +
            (t < 8 ? "walk" : "run") + ",s1\n";
  write(dir / "u.csv", text);
  CsvIngestConfig cfg{dir / "u.csv", 10.0, 4, "timestamp", {"ax", "ay"}};
  const auto ds = ingest_csv(cfg);
  REQUIRE(ds.samples.shape() == Shape{4, 4, 2});
  CHECK(ds.class_names == std::vector<std::string>{"run", "walk"});
  CHECK(ds.labels == std::vector<int>{1, 1, 0, 0});
  CHECK(ds.groups == std::vector<int>{0, 0, 0, 0});
  for (std::size_t i = 0; i < 16; ++i) {
    CHECK(ds.samples[i * 2] == doctest::Approx(static_cast<double>(i)).epsilon(1e-9));
    CHECK(ds.samples[i * 2 + 1] == doctest::Approx(-2.0 * static_cast<double>(i)).epsilon(1e-9));
  }
  fs::remove_all(dir);
}

TEST_CASE("csv ingestion interpolates irregular readings and drops mixed windows") {
  const auto dir = scratch("irregular");
  // x(t) = 3 t + 1 sampled irregularly; label switches at t = 0.45.
  write(dir / "i.csv",
        "group,label,timestamp,x\n"
        "b,still,0.0,1.0\n"
        "b,still,0.13,1.39\n"
        "b,still,0.31,1.93\n"
        "b,move,0.45,2.35\n"
        "b,move,0.8,3.4\n"
        "a,still,5.0,0.0\n"
        "a,still,5.35,0.7\n");
  CsvIngestConfig cfg{dir / "i.csv", 10.0, 2, "timestamp", {"x"}};
  const auto ds = ingest_csv(cfg);
  // Group a: t = 5.0 .. 5.3 -> 4 steps, 2 windows. Group b: 9 steps, windows
  // [0, 2) [2, 4) [4, 6) [6, 8); [4, 6) covers 0.4 (still) and 0.5 (move).
  REQUIRE(ds.size() == 5);
  CHECK(ds.groups == std::vector<int>{0, 0, 1, 1, 1});
  CHECK(ds.class_names == std::vector<std::string>{"move", "still"});
  CHECK(ds.labels == std::vector<int>{1, 1, 1, 1, 0});
  // Group a: linear from (5.0, 0) to (5.35, 0.7): x = 2 (t - 5).
  for (std::size_t n = 0; n < 4; ++n) CHECK(ds.samples[n] == doctest::Approx(0.2 * static_cast<double>(n)).epsilon(1e-9));
  // Group b windows hold t = 0.0 .. 0.3 and 0.6, 0.7.
  const double expect[] = {1.0, 1.3, 1.6, 1.9, 2.8, 3.1};
  for (std::size_t n = 0; n < 6; ++n) CHECK(ds.samples[4 + n] == doctest::Approx(expect[n]).epsilon(1e-9));
  fs::remove_all(dir);
}

TEST_CASE("csv ingestion errors carry line numbers") {
  const auto dir = scratch("errors");
  write(dir / "bad.csv", "timestamp,x,label,group\n0,1,a,g\n0.1,oops,a,g\n");
  CsvIngestConfig cfg{dir / "bad.csv", 10.0, 2, "timestamp", {"x"}};
  try {
    ingest_csv(cfg);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  write(dir / "short.csv", "timestamp,x,label,group\n0,1,a,g\n0.1,2,a\n");
  cfg.path = dir / "short.csv";
  CHECK_THROWS_AS(ingest_csv(cfg), ParseError);
  write(dir / "order.csv", "timestamp,x,label,group\n0,1,a,g\n0,2,b,g\n");
  cfg.path = dir / "order.csv";
  CHECK_THROWS_AS(ingest_csv(cfg), ParseError);
  cfg.feature_cols = {"y"};
  CHECK_THROWS_AS(ingest_csv(cfg), ConfigError);
  cfg.path = dir / "none.csv";
  CHECK_THROWS_AS(ingest_csv(cfg), DataError);
  fs::remove_all(dir);
}

TEST_CASE("z-score normalization") {
  Dataset ds;
  ds.samples = RealTensor({2, 3, 2}, {1, 5, 2, 5, 3, 5, 4, 5, 5, 5, 6, 5});
  ds.labels = {0, 1};
  ds.groups = {0, 0};
  ds.classes = 2;
  const auto stats = zscore_stats(ds);
  CHECK(stats.mean[0] == doctest::Approx(3.5));
  CHECK(stats.std[0] == doctest::Approx(std::sqrt(17.5 / 6.0)));
  CHECK(stats.std[1] == 0.0);
  const auto out = normalize(ds, stats);
  double m = 0.0, v = 0.0;
  for (std::size_t i = 0; i < 6; ++i) m += out.samples[i * 2];
  for (std::size_t i = 0; i < 6; ++i) v += out.samples[i * 2] * out.samples[i * 2];
  CHECK(std::abs(m) < 1e-12);
  CHECK(v / 6.0 == doctest::Approx(1.0).epsilon(1e-12));
  for (std::size_t i = 0; i < 6; ++i) CHECK(out.samples[i * 2 + 1] == 0.0);

  NormStats awkward{{0.1 + 0.2, 1.0 / 3.0}, {std::sqrt(2.0), 1e-300}};
  const auto back = norm_stats_from_json(nlohmann::json::parse(to_json(awkward).dump()));
  CHECK(back.mean == awkward.mean);
  CHECK(back.std == awkward.std);
  CHECK_THROWS_AS(normalize(ds, NormStats{{0.0}, {1.0}}), DataError);
}
