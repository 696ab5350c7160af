#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "stfnet/tensor.hpp"

namespace stfnet {

struct Dataset {
  RealTensor samples;  ///< (N, T, D)
  std::vector<int> labels;
  std::vector<int> groups;
  double fs = 100.0;
  std::size_t classes = 0;
  std::vector<std::string> class_names;
  /// Extra metadata kept in meta.json (generator settings, holdout split).
  nlohmann::json info = nlohmann::json::object();

  std::size_t size() const { return labels.size(); }
  std::size_t length() const { return samples.dim(1); }
  std::size_t dims() const { return samples.dim(2); }
};

/// Labels in range, one label and a non-negative group id per sample.
/// Group ids need not be contiguous (subsets keep the original ids).
void validate(const Dataset& ds);
Dataset subset(const Dataset& ds, const std::vector<std::size_t>& indices);
/// Distinct group ids in ascending order.
std::vector<int> group_ids(const Dataset& ds);

void save_dataset(const std::filesystem::path& dir, const Dataset& ds);
Dataset load_dataset(const std::filesystem::path& dir);

// ---- generators -------------------------------------------------------------

/// Fields shared by all generators. Either `n_per_class` (balanced) or a
/// total `n` (labels assigned round-robin) sets the size.
struct GeneratorCommon {
  std::size_t n_per_class = 0;
  std::size_t n = 0;
  std::size_t classes = 6;
  std::size_t length = 512;
  std::size_t dims = 1;
  double fs = 100.0;
  double snr_db = 10.0;  ///< infinity disables noise
  std::size_t groups = 4;
  std::uint64_t seed = 0;

  std::size_t total() const;
};

/// Tones on the tau = 128 bin grid, one bin per class, uniform random phase
/// per sample and dimension, unit amplitude plus white noise at snr_db.
struct ToneBandConfig : GeneratorCommon {
  std::vector<std::size_t> bins;  ///< empty: 4 (c + 1)
};
Dataset gen_toneband(const ToneBandConfig& cfg);

/// Same carrier everywhere; class c places one burst inside the c-th of C
/// equal time segments.
struct TransientConfig : GeneratorCommon {
  TransientConfig() { classes = 2; snr_db = std::numeric_limits<double>::infinity(); }
  std::size_t carrier_bin = 3;  ///< on the tau = 16 grid
  std::size_t burst_length = 64;
};
Dataset gen_transient(const TransientConfig& cfg);

/// First half of the classes: continuous tones on tau = 128 bins spaced by
/// tone_step, placed symmetrically about a tau = 16 bin by default (need
/// fine frequency resolution). Second half: a gated carrier with one
/// 16-sample burst per 32 samples, shifted by a class offset of 0, 8 or 4
/// samples (visible only at tau = 16). Both halves have equal power.
struct MixedResConfig : GeneratorCommon {
  MixedResConfig() { classes = 4; }
  std::size_t tone_bin = 39;    ///< first tone, tau = 128 grid
  std::size_t tone_step = 2;
  std::size_t carrier_bin = 3;  ///< tau = 16 grid
};
Dataset gen_mixedres(const MixedResConfig& cfg);

/// Generator from a JSON description {"kind": "toneband" | "transient" |
/// "mixedres", ...fields}. Unknown keys raise ConfigError.
Dataset generate(const nlohmann::json& spec);

// ---- ingestion --------------------------------------------------------------

struct CsvIngestConfig {
  std::filesystem::path path;
  double fs = 100.0;
  std::size_t seg_len = 512;
  std::string time_col = "timestamp";
  std::vector<std::string> feature_cols;
  std::string label_col = "label";
  std::string group_col = "group";
};

/// Per group: linear interpolation onto a uniform fs grid from the first
/// timestamp, labels held from the previous reading, non-overlapping
/// seg_len windows; windows that contain a label change are dropped.
/// Labels and groups are numbered in sorted order of their text.
Dataset ingest_csv(const CsvIngestConfig& cfg);

// ---- normalization ----------------------------------------------------------

struct NormStats {
  std::vector<double> mean;
  std::vector<double> std;
  double eps = 1e-8;
};

/// Per-feature mean and population std over every sample and time step.
NormStats zscore_stats(const Dataset& ds);
/// (x - mean) / std; features with std <= eps map to 0.
Dataset normalize(const Dataset& ds, const NormStats& stats);
nlohmann::json to_json(const NormStats& stats);
NormStats norm_stats_from_json(const nlohmann::json& j);

}  // namespace stfnet
