#include "stfnet/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "stfnet/error.hpp"
#include "stfnet/numeric.hpp"
#include "stfnet/rng.hpp"
#include "stfnet/tensor_io.hpp"

namespace stfnet {

using nlohmann::json;

void validate(const Dataset& ds) {
  if (ds.samples.rank() != 3) throw DataError("samples must be (N, T, D)");
  const std::size_t n = ds.samples.dim(0);
  if (ds.labels.size() != n || ds.groups.size() != n)
    throw DataError("labels/groups do not match the sample count");
  if (ds.classes < 2) throw DataError("dataset needs at least 2 classes");
  for (int l : ds.labels)
    if (l < 0 || static_cast<std::size_t>(l) >= ds.classes)
      throw DataError("label " + std::to_string(l) + " out of range");
  for (int g : ds.groups)
    if (g < 0) throw DataError("group id " + std::to_string(g) + " is negative");
  if (!ds.class_names.empty() && ds.class_names.size() != ds.classes)
    throw DataError("class_names does not match the class count");
}

std::vector<int> group_ids(const Dataset& ds) {
  std::set<int> ids(ds.groups.begin(), ds.groups.end());
  return {ids.begin(), ids.end()};
}

Dataset subset(const Dataset& ds, const std::vector<std::size_t>& indices) {
  Dataset out;
  out.fs = ds.fs;
  out.classes = ds.classes;
  out.class_names = ds.class_names;
  out.info = ds.info;
  const std::size_t t = ds.length(), d = ds.dims(), stride = t * d;
  std::vector<double> data;
  data.reserve(indices.size() * stride);
  for (auto i : indices) {
    if (i >= ds.size()) throw DataError("subset index out of range");
    const auto src = ds.samples.data().subspan(i * stride, stride);
    data.insert(data.end(), src.begin(), src.end());
    out.labels.push_back(ds.labels[i]);
    out.groups.push_back(ds.groups[i]);
  }
  if (indices.empty()) throw DataError("empty subset");
  out.samples = RealTensor({indices.size(), t, d}, std::move(data));
  return out;
}

namespace {

RealTensor ints_to_tensor(const std::vector<int>& v) {
  RealTensor t({v.size()});
  for (std::size_t i = 0; i < v.size(); ++i) t[i] = v[i];
  return t;
}

std::vector<int> tensor_to_ints(const RealTensor& t) {
  std::vector<int> v;
  for (double x : t.data()) {
    if (x != std::floor(x)) throw DataError("non-integer label or group");
    v.push_back(static_cast<int>(x));
  }
  return v;
}

}  // namespace

void save_dataset(const std::filesystem::path& dir, const Dataset& ds) {
  validate(ds);
  std::filesystem::create_directories(dir);
  write_tensor(dir / "data.bin", ds.samples);
  write_tensor(dir / "labels.bin", ints_to_tensor(ds.labels));
  write_tensor(dir / "groups.bin", ints_to_tensor(ds.groups));
  json meta = ds.info;
  meta["fs"] = ds.fs;
  meta["T"] = ds.length();
  meta["D"] = ds.dims();
  meta["C"] = ds.classes;
  meta["class_names"] = ds.class_names;
  write_file_atomic(dir / "meta.json", meta.dump(2) + "\n");
}

Dataset load_dataset(const std::filesystem::path& dir) {
  Dataset ds;
  json meta;
  try {
    meta = json::parse(read_file(dir / "meta.json"));
    ds.fs = meta.at("fs").get<double>();
    ds.classes = meta.at("C").get<std::size_t>();
    ds.class_names = meta.value("class_names", std::vector<std::string>{});
  } catch (const json::exception& e) {
    throw DataError("bad meta.json in " + dir.string() + ": " + e.what());
  }
  ds.samples = read_real_tensor(dir / "data.bin");
  ds.labels = tensor_to_ints(read_real_tensor(dir / "labels.bin"));
  ds.groups = tensor_to_ints(read_real_tensor(dir / "groups.bin"));
  if (ds.samples.rank() != 3 || meta.at("T").get<std::size_t>() != ds.length() ||
      meta.at("D").get<std::size_t>() != ds.dims())
    throw DataError("meta.json disagrees with data.bin in " + dir.string());
  for (const char* key : {"fs", "T", "D", "C", "class_names"}) meta.erase(key);
  ds.info = meta;
  validate(ds);
  return ds;
}

// ---- generators -------------------------------------------------------------

std::size_t GeneratorCommon::total() const {
  if ((n == 0) == (n_per_class == 0)) throw ConfigError("set exactly one of n and n_per_class");
  return n != 0 ? n : n_per_class * classes;
}

namespace {

double noise_sigma(double snr_db, double amplitude) {
  if (std::isinf(snr_db) && snr_db > 0) return 0.0;
  return amplitude / std::sqrt(2.0 * std::pow(10.0, snr_db / 10.0));
}

void check_common(const GeneratorCommon& g) {
  if (g.classes < 2) throw ConfigError("generator needs at least 2 classes");
  if (g.length == 0 || g.dims == 0 || g.groups == 0) throw ConfigError("generator sizes must be positive");
  if (!(g.fs > 0.0)) throw ConfigError("fs must be positive");
  if (g.total() < g.groups) throw ConfigError("fewer samples than groups");
}

// Labels round-robin over classes, groups round-robin over the class-major
// index so every group gets every class when sizes allow.
Dataset skeleton(const GeneratorCommon& g, const std::string& kind) {
  Dataset ds;
  const std::size_t n = g.total();
  ds.samples = RealTensor({n, g.length, g.dims});
  for (std::size_t i = 0; i < n; ++i) {
    ds.labels.push_back(static_cast<int>(i % g.classes));
    ds.groups.push_back(static_cast<int>((i / g.classes) % g.groups));
  }
  ds.fs = g.fs;
  ds.classes = g.classes;
  ds.info["generator"] = kind;
  return ds;
}

void add_noise(Dataset& ds, double sigma, Rng& rng) {
  if (sigma == 0.0) return;
  for (auto& v : ds.samples.data()) v += sigma * rng.normal();
}

std::size_t peak_bin(std::span<const double> x) {
  const auto spec = dft_real(x);
  std::size_t best = 0;
  for (std::size_t k = 1; k < spec.size(); ++k)
    if (std::abs(spec[k]) > std::abs(spec[best])) best = k;
  return best;
}

std::vector<double> column(const RealTensor& samples, std::size_t i, std::size_t d) {
  const std::size_t t = samples.dim(1), dims = samples.dim(2);
  std::vector<double> out(t);
  for (std::size_t s = 0; s < t; ++s) out[s] = samples[(i * t + s) * dims + d];
  return out;
}

}  // namespace

Dataset gen_toneband(const ToneBandConfig& cfg) {
  check_common(cfg);
  if (cfg.length % 128 != 0) throw ConfigError("toneband length must be a multiple of 128");
  std::vector<std::size_t> bins = cfg.bins;
  if (bins.empty())
    for (std::size_t c = 0; c < cfg.classes; ++c) bins.push_back(4 * (c + 1));
  if (bins.size() != cfg.classes) throw ConfigError("toneband needs one bin per class");
  if (std::set<std::size_t>(bins.begin(), bins.end()).size() != bins.size())
    throw ConfigError("toneband class frequencies collide");
  for (auto b : bins)
    if (b == 0 || b >= 64) throw ConfigError("toneband bins must lie in 1..63");

  Dataset ds = skeleton(cfg, "toneband");
  Rng rng(cfg.seed);
  const double scale = static_cast<double>(cfg.length) / 128.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double f = static_cast<double>(bins[static_cast<std::size_t>(ds.labels[i])]) / 128.0;
    for (std::size_t d = 0; d < cfg.dims; ++d) {
      const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      for (std::size_t t = 0; t < cfg.length; ++t)
        ds.samples[(i * cfg.length + t) * cfg.dims + d] =
            std::cos(2.0 * std::numbers::pi * f * static_cast<double>(t) + phase);
    }
  }
  // Every clean sample peaks at its class bin before noise is added.
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto want = static_cast<std::size_t>(
        std::llround(static_cast<double>(bins[static_cast<std::size_t>(ds.labels[i])]) * scale));
    for (std::size_t d = 0; d < cfg.dims; ++d)
      if (peak_bin(column(ds.samples, i, d)) != want)
        throw DataError("toneband self-check failed at sample " + std::to_string(i));
  }
  add_noise(ds, noise_sigma(cfg.snr_db, 1.0), rng);
  for (std::size_t c = 0; c < cfg.classes; ++c)
    ds.class_names.push_back("tone_bin" + std::to_string(bins[c]));
  ds.info["bins_tau128"] = bins;
  ds.info["snr_db"] = std::isinf(cfg.snr_db) ? json("inf") : json(cfg.snr_db);
  return ds;
}

namespace {

// Chunk energies of one clean column at window `tau`.
std::vector<double> chunk_energy(std::span<const double> x, std::size_t tau) {
  std::vector<double> e(x.size() / tau, 0.0);
  for (std::size_t t = 0; t < x.size(); ++t) e[t / tau] += x[t] * x[t];
  return e;
}

}  // namespace

Dataset gen_transient(const TransientConfig& cfg) {
  check_common(cfg);
  const std::size_t segment = cfg.length / cfg.classes;
  if (cfg.length % 16 != 0 || cfg.burst_length % 16 != 0 || cfg.burst_length == 0)
    throw ConfigError("transient length and burst_length must be multiples of 16");
  if (cfg.burst_length > segment - segment % 16)
    throw ConfigError("transient bursts do not fit in one class segment");
  if (cfg.carrier_bin == 0 || cfg.carrier_bin >= 8) throw ConfigError("carrier_bin must lie in 1..7");

  Dataset ds = skeleton(cfg, "transient");
  Rng rng(cfg.seed);
  const double f = static_cast<double>(cfg.carrier_bin) / 16.0;
  std::vector<std::size_t> starts;
  for (std::size_t c = 0; c < cfg.classes; ++c) {
    // Centre the burst in its segment, snapped to the 16-sample grid.
    const std::size_t centre = c * segment + (segment - cfg.burst_length) / 2;
    starts.push_back(centre / 16 * 16);
  }
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const std::size_t start = starts[static_cast<std::size_t>(ds.labels[i])];
    for (std::size_t d = 0; d < cfg.dims; ++d) {
      const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      for (std::size_t t = start; t < start + cfg.burst_length; ++t)
        ds.samples[(i * cfg.length + t) * cfg.dims + d] =
            std::cos(2.0 * std::numbers::pi * f * static_cast<double>(t) + phase);
    }
  }
  // Clean energy at tau = 16 sits exactly on the class's chunks.
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const std::size_t first = starts[static_cast<std::size_t>(ds.labels[i])] / 16;
    const std::size_t last = first + cfg.burst_length / 16;
    const auto e = chunk_energy(column(ds.samples, i, 0), 16);
    for (std::size_t m = 0; m < e.size(); ++m)
      if ((e[m] > 0.0) != (m >= first && m < last))
        throw DataError("transient self-check failed at sample " + std::to_string(i));
  }
  add_noise(ds, noise_sigma(cfg.snr_db, 1.0), rng);
  for (std::size_t c = 0; c < cfg.classes; ++c)
    ds.class_names.push_back("burst_at" + std::to_string(starts[c]));
  ds.info["burst_starts"] = starts;
  ds.info["snr_db"] = std::isinf(cfg.snr_db) ? json("inf") : json(cfg.snr_db);
  return ds;
}

Dataset gen_mixedres(const MixedResConfig& cfg) {
  check_common(cfg);
  static const std::size_t kOffsets[] = {0, 8, 4};
  const std::size_t tones = (cfg.classes + 1) / 2, timed = cfg.classes - tones;
  if (timed > 3) throw ConfigError("mixedres supports at most 3 timing classes");
  if (cfg.length % 128 != 0) throw ConfigError("mixedres length must be a multiple of 128");
  const std::size_t last_tone = cfg.tone_bin + cfg.tone_step * (tones - 1);
  if (cfg.tone_bin == 0 || cfg.tone_step == 0 || last_tone >= 64)
    throw ConfigError("tone bins must lie in 1..63");
  if (cfg.carrier_bin == 0 || cfg.carrier_bin >= 8) throw ConfigError("carrier_bin must lie in 1..7");
  for (std::size_t c = 0; c < tones; ++c)
    if (cfg.carrier_bin * 8 == cfg.tone_bin + cfg.tone_step * c)
      throw ConfigError("carrier collides with a tone bin");

  Dataset ds = skeleton(cfg, "mixedres");
  Rng rng(cfg.seed);
  const double burst_amp = std::sqrt(2.0);  // 50 % duty at equal power
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto c = static_cast<std::size_t>(ds.labels[i]);
    for (std::size_t d = 0; d < cfg.dims; ++d) {
      const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      for (std::size_t t = 0; t < cfg.length; ++t) {
        double v;
        if (c < tones) {
          const double f = static_cast<double>(cfg.tone_bin + cfg.tone_step * c) / 128.0;
          v = std::cos(2.0 * std::numbers::pi * f * static_cast<double>(t) + phase);
        } else {
          const std::size_t o = kOffsets[c - tones];
          const std::size_t pos = t % 32;
          const double f = static_cast<double>(cfg.carrier_bin) / 16.0;
          v = pos >= o && pos < o + 16
                  ? burst_amp * std::cos(2.0 * std::numbers::pi * f * static_cast<double>(t) + phase)
                  : 0.0;
        }
        ds.samples[(i * cfg.length + t) * cfg.dims + d] = v;
      }
    }
  }
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto c = static_cast<std::size_t>(ds.labels[i]);
    const auto x = column(ds.samples, i, 0);
    bool ok;
    if (c < tones) {
      ok = peak_bin(x) == (cfg.tone_bin + cfg.tone_step * c) * (cfg.length / 128);
    } else {
      // Support of the tau = 16 energy track follows the class offset.
      const auto e = chunk_energy(x, 16);
      const bool split = kOffsets[c - tones] != 0;
      ok = true;
      for (std::size_t m = 0; m < e.size(); ++m) ok = ok && ((e[m] > 0.0) == (split || m % 2 == 0));
    }
    if (!ok) throw DataError("mixedres self-check failed at sample " + std::to_string(i));
  }
  add_noise(ds, noise_sigma(cfg.snr_db, 1.0), rng);
  for (std::size_t c = 0; c < cfg.classes; ++c)
    ds.class_names.push_back(c < tones ? "tone_bin" + std::to_string(cfg.tone_bin + cfg.tone_step * c)
                                       : "burst_offset" + std::to_string(kOffsets[c - tones]));
  ds.info["snr_db"] = std::isinf(cfg.snr_db) ? json("inf") : json(cfg.snr_db);
  return ds;
}

namespace {

double snr_from_json(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
    throw ConfigError("snr_db must be a number or \"inf\"");
  }
  return j.get<double>();
}

void read_common(const json& j, GeneratorCommon& g) {
  if (j.contains("n_per_class")) g.n_per_class = j["n_per_class"].get<std::size_t>();
  if (j.contains("n")) g.n = j["n"].get<std::size_t>();
  if (j.contains("classes")) g.classes = j["classes"].get<std::size_t>();
  if (j.contains("length")) g.length = j["length"].get<std::size_t>();
  if (j.contains("dims")) g.dims = j["dims"].get<std::size_t>();
  if (j.contains("fs")) g.fs = j["fs"].get<double>();
  if (j.contains("snr_db")) g.snr_db = snr_from_json(j["snr_db"]);
  if (j.contains("groups")) g.groups = j["groups"].get<std::size_t>();
  if (j.contains("seed")) g.seed = j["seed"].get<std::uint64_t>();
}

}  // namespace

Dataset generate(const json& spec) {
  static const std::set<std::string> common{"kind",   "n_per_class", "n",      "classes", "length",
                                            "dims",   "fs",          "snr_db", "groups",  "seed"};
  auto allow = [&](std::set<std::string> extra) {
    extra.insert(common.begin(), common.end());
    for (const auto& [key, value] : spec.items())
      if (!extra.count(key)) throw ConfigError("unknown generator key '" + key + "'");
  };
  try {
    const auto kind = spec.at("kind").get<std::string>();
    if (kind == "toneband") {
      allow({"bins"});
      ToneBandConfig cfg;
      read_common(spec, cfg);
      if (spec.contains("bins")) cfg.bins = spec["bins"].get<std::vector<std::size_t>>();
      return gen_toneband(cfg);
    }
    if (kind == "transient") {
      allow({"carrier_bin", "burst_length"});
      TransientConfig cfg;
      read_common(spec, cfg);
      cfg.carrier_bin = spec.value("carrier_bin", cfg.carrier_bin);
      cfg.burst_length = spec.value("burst_length", cfg.burst_length);
      return gen_transient(cfg);
    }
    if (kind == "mixedres") {
      allow({"tone_bin", "tone_step", "carrier_bin"});
      MixedResConfig cfg;
      read_common(spec, cfg);
      cfg.tone_bin = spec.value("tone_bin", cfg.tone_bin);
      cfg.tone_step = spec.value("tone_step", cfg.tone_step);
      cfg.carrier_bin = spec.value("carrier_bin", cfg.carrier_bin);
      return gen_mixedres(cfg);
    }
    throw ConfigError("unknown generator kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("generator: ") + e.what());
  }
}

// ---- ingestion --------------------------------------------------------------

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
    } else if (ch == ',' && !quoted) {
      out.push_back(field);
      field.clear();
    } else if (ch != '\r') {
      field += ch;
    }
  }
  out.push_back(field);
  return out;
}

double parse_number(const std::string& text, std::size_t line, const std::string& column) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size() || !std::isfinite(v)) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ParseError(line, "column '" + column + "' holds non-numeric value '" + text + "'");
  }
}

struct Reading {
  double time;
  std::vector<double> values;
  std::string label;
};

}  // namespace

Dataset ingest_csv(const CsvIngestConfig& cfg) {
  if (!(cfg.fs > 0.0) || cfg.seg_len == 0) throw ConfigError("ingest needs fs > 0 and seg_len > 0");
  if (cfg.feature_cols.empty()) throw ConfigError("ingest needs at least one feature column");
  std::ifstream in(cfg.path);
  if (!in) throw DataError("cannot open " + cfg.path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "missing header");
  const auto header = split_csv_line(line);
  auto find = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ConfigError("column '" + name + "' not in " + cfg.path.string());
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t time_idx = find(cfg.time_col), label_idx = find(cfg.label_col),
                    group_idx = find(cfg.group_col);
  std::vector<std::size_t> feature_idx;
  for (const auto& c : cfg.feature_cols) feature_idx.push_back(find(c));

  std::map<std::string, std::vector<Reading>> by_group;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw ParseError(line_no, "expected " + std::to_string(header.size()) + " fields, got " +
                                    std::to_string(fields.size()));
    Reading r;
    r.time = parse_number(fields[time_idx], line_no, cfg.time_col);
    for (std::size_t f = 0; f < feature_idx.size(); ++f)
      r.values.push_back(parse_number(fields[feature_idx[f]], line_no, cfg.feature_cols[f]));
    r.label = fields[label_idx];
    auto& rows = by_group[fields[group_idx]];
    if (!rows.empty() && !(r.time > rows.back().time))
      throw ParseError(line_no, "timestamps must increase within a group");
    rows.push_back(std::move(r));
  }

  std::set<std::string> label_text;
  for (const auto& [g, rows] : by_group)
    for (const auto& r : rows) label_text.insert(r.label);
  if (label_text.size() < 2) throw DataError("ingested data has fewer than 2 labels");
  const std::vector<std::string> names(label_text.begin(), label_text.end());
  auto label_of = [&](const std::string& s) {
    return static_cast<int>(std::lower_bound(names.begin(), names.end(), s) - names.begin());
  };

  const std::size_t dims = cfg.feature_cols.size();
  std::vector<double> data;
  std::vector<int> labels, groups;
  int next_group = 0;
  for (const auto& [g, rows] : by_group) {
    const double t0 = rows.front().time, t_end = rows.back().time;
    const auto steps = static_cast<std::size_t>(std::floor((t_end - t0) * cfg.fs + 1e-9)) + 1;
    std::vector<double> grid(steps * dims);
    std::vector<int> grid_label(steps);
    std::size_t left = 0;
    for (std::size_t n = 0; n < steps; ++n) {
      const double t = t0 + static_cast<double>(n) / cfg.fs;
      while (left + 1 < rows.size() && rows[left + 1].time <= t) ++left;
      const auto& a = rows[left];
      grid_label[n] = label_of(a.label);
      if (left + 1 == rows.size() || t == a.time) {
        for (std::size_t d = 0; d < dims; ++d) grid[n * dims + d] = a.values[d];
        continue;
      }
      const auto& b = rows[left + 1];
      const double w = (t - a.time) / (b.time - a.time);
      for (std::size_t d = 0; d < dims; ++d)
        grid[n * dims + d] = a.values[d] + w * (b.values[d] - a.values[d]);
    }
    bool any = false;
    for (std::size_t start = 0; start + cfg.seg_len <= steps; start += cfg.seg_len) {
      const int label = grid_label[start];
      bool uniform = true;
      for (std::size_t n = start; n < start + cfg.seg_len; ++n) uniform = uniform && grid_label[n] == label;
      if (!uniform) continue;
      data.insert(data.end(), grid.begin() + static_cast<long>(start * dims),
                  grid.begin() + static_cast<long>((start + cfg.seg_len) * dims));
      labels.push_back(label);
      groups.push_back(next_group);
      any = true;
    }
    if (any) ++next_group;
  }
  if (labels.empty()) throw DataError("no complete window in " + cfg.path.string());
  Dataset ds;
  ds.samples = RealTensor({labels.size(), cfg.seg_len, dims}, std::move(data));
  ds.labels = std::move(labels);
  ds.groups = std::move(groups);
  ds.fs = cfg.fs;
  ds.classes = names.size();
  ds.class_names = names;
  ds.info["source"] = cfg.path.filename().string();
  validate(ds);
  return ds;
}

// ---- normalization ----------------------------------------------------------

NormStats zscore_stats(const Dataset& ds) {
  const std::size_t n = ds.size(), t = ds.length(), d = ds.dims();
  NormStats s;
  s.mean.assign(d, 0.0);
  s.std.assign(d, 0.0);
  const double count = static_cast<double>(n * t);
  for (std::size_t i = 0; i < n * t; ++i)
    for (std::size_t f = 0; f < d; ++f) s.mean[f] += ds.samples[i * d + f];
  for (auto& m : s.mean) m /= count;
  for (std::size_t i = 0; i < n * t; ++i)
    for (std::size_t f = 0; f < d; ++f) {
      const double c = ds.samples[i * d + f] - s.mean[f];
      s.std[f] += c * c;
    }
  for (auto& v : s.std) v = std::sqrt(v / count);
  return s;
}

Dataset normalize(const Dataset& ds, const NormStats& stats) {
  const std::size_t d = ds.dims();
  if (stats.mean.size() != d || stats.std.size() != d)
    throw DataError("normalization stats have " + std::to_string(stats.mean.size()) +
                    " features, data has " + std::to_string(d));
  Dataset out = ds;
  auto x = out.samples.data();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const std::size_t f = i % d;
    x[i] = stats.std[f] <= stats.eps ? 0.0 : (x[i] - stats.mean[f]) / stats.std[f];
  }
  return out;
}

json to_json(const NormStats& stats) {
  return {{"mean", stats.mean}, {"std", stats.std}, {"eps", stats.eps}};
}

NormStats norm_stats_from_json(const json& j) {
  try {
    NormStats s;
    s.mean = j.at("mean").get<std::vector<double>>();
    s.std = j.at("std").get<std::vector<double>>();
    s.eps = j.value("eps", s.eps);
    if (s.mean.size() != s.std.size()) throw DataError("mean/std length mismatch");
    return s;
  } catch (const json::exception& e) {
    throw DataError(std::string("bad normalization stats: ") + e.what());
  }
}

}  // namespace stfnet
