#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stfnet/data.hpp"
#include "stfnet/model.hpp"
#include "stfnet/train.hpp"

namespace stfnet::cli {

enum ExitCode : int {
  kOk = 0,
  kOtherError = 1,
  kConfigError = 2,
  kDataError = 3,
  kCheckFailed = 4,
};

enum class EvalMode { Holdout, LeaveOneGroupOut };

struct DataSection {
  std::optional<std::filesystem::path> path;
  std::optional<nlohmann::json> generator;
  std::optional<CsvIngestConfig> csv;
  std::optional<std::filesystem::path> test_path;
  std::optional<nlohmann::json> test_generator;
  std::size_t test_count = 0;
  double test_fraction = 0.0;
};

struct GradcheckSection {
  std::size_t batch = 2;
  double step = 1e-5;
  double tolerance = 1e-4;
  std::size_t max_elements = 0;
};

struct AblationSection {
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::vector<std::size_t> taus;  ///< empty: every window of the model
};

struct RunConfig {
  ModelSpec model = default_model_spec();
  TrainConfig train;
  DataSection data;
  EvalMode eval = EvalMode::Holdout;
  GradcheckSection gradcheck;
  AblationSection ablation;
  std::vector<std::size_t> inspect_window_set;
  std::filesystem::path output_dir = "stfnet_out";
};

/// Validates the whole document; unknown keys raise ConfigError.
RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

struct Split {
  Dataset train;
  std::optional<Dataset> test;
};
/// Loads or generates the data section. With `need_test`, a holdout test
/// set must be derivable.
Split load_data(const DataSection& data, bool need_test);

/// Runs one command line (argv[0] is the program name). Human-readable
/// output goes to `out` unless --json is set, errors to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace stfnet::cli
