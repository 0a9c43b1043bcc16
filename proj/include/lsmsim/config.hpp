#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "lsmsim/memristor.hpp"
#include "lsmsim/readout.hpp"

namespace lsmsim {

/// How noise levels are interpreted. `relative`: read and write noise are
/// fractions of the conductance spread (so of the weight spread). `absolute`:
/// read noise is µS and write noise is the fractional programming error.
enum class NoiseUnits { relative, absolute };

struct DataSection {
  /// rate | temporal | native | nmnist
  std::string source = "rate";
  std::filesystem::path path;  // native manifest directory or N-MNIST root
  std::size_t classes = 4;
  std::size_t channels = 32;
  std::size_t steps = 40;
  std::size_t train_per_class = 30;
  std::size_t test_per_class = 20;
  double rate_low = 0.02;   // background rate of inactive channels
  double rate_high = 0.3;   // rate of active channels
  double active_fraction = 0.25;
  std::size_t groups = 3;   // temporal task: channel groups firing in turn
  bool merge_polarity = true;
  std::size_t crop = 16;    // N-MNIST centre crop side
  std::size_t limit = 0;    // cap on samples per split, 0 = all
};

struct LsmSection {
  std::size_t h = 64;
  std::size_t width = 1;
  std::size_t depth = 1;
  double scale = 0.08;      // 1/µS
  double rec_scale = 0.04;  // 1/µS
  double u_th = 1.0;
  double decay = 0.9;
  double cond_mean = 33.0;
  double cond_std = 3.0;
  double sparsity = 0.0;
  Forming forming = Forming::dense;
  std::size_t array_size = 512;
};

struct NoiseSection {
  double input = 0.0;
  double read = 0.0;
  double write = 0.0;
  NoiseUnits units = NoiseUnits::relative;
};

struct ZeroShotSection {
  std::size_t seen = 5;
  std::size_t unseen = 2;
  std::size_t latent = 4;
  std::size_t proj_dim = 64;
  double temperature = 0.2;
  double latent_noise = 0.3;
};

struct SweepSection {
  std::string param = "noise.input";
  std::vector<std::string> values{"0"};
  std::size_t repeats = 10;
};

struct SeedSection {
  std::uint64_t weights = 1;
  std::uint64_t data = 2;
  std::uint64_t train = 3;
};

struct ExperimentConfig {
  DataSection data;
  LsmSection lsm;
  NoiseSection noise;
  TrainConfig train{0.05, 10, 16, 0, Optimizer::momentum, 0.9};
  ZeroShotSection zeroshot;
  SweepSection sweep;
  SeedSection seed;
  std::vector<double> exit_thresholds;  // early-exit evaluation, empty = off
  std::filesystem::path out = "out";
  std::size_t workers = 1;

  /// Throws ConfigError on inconsistent settings.
  void validate() const;
};

/// One configuration key: dotted name, help text and typed accessors.
struct ConfigKey {
  std::string name;
  std::string help;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

const std::vector<ConfigKey>& config_keys();

/// Sets one key from text. Unknown keys and unparsable values throw ConfigError.
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);
std::string get_config_value(const ExperimentConfig& cfg, const std::string& key);

/// Applies a flat `section.key = value` file. `#` starts a comment.
void apply_config_file(ExperimentConfig& cfg, const std::filesystem::path& path);

/// Environment name of a key: LSMSIM_ + upper-case name with dots as underscores.
std::string env_name(const std::string& key);
/// Applies every LSMSIM_* variable that names a known key.
void apply_environment(ExperimentConfig& cfg, const std::function<const char*(const char*)>& getenv);

/// All keys and values, sorted by key; written next to every output.
std::map<std::string, std::string> config_snapshot(const ExperimentConfig& cfg);

}  // namespace lsmsim
