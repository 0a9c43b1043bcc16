#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "lsmsim/config.hpp"
#include "lsmsim/events.hpp"
#include "lsmsim/synthetic.hpp"

namespace lsmsim {

/// One split of a dataset. Tensors are produced on demand so large event
/// datasets never sit in memory as dense rasters.
struct Split {
  std::vector<std::size_t> labels;
  std::vector<std::string> ids;
  std::function<SpikeTensor(std::size_t)> load;
  std::size_t size() const { return labels.size(); }
};

struct Dataset {
  Split train;
  Split test;
  std::size_t num_classes = 0;
  std::size_t channels = 0;
  std::size_t steps = 0;
  std::vector<std::string> warnings;
};

/// Environment variable consulted for the N-MNIST root when data.path is empty.
inline constexpr const char* kNmnistEnv = "LSMSIM_NMNIST_DIR";

/// Builds the dataset named by cfg.data. Synthetic sources are generated from
/// seed.data; `native` reads <path>/manifest.csv; `nmnist` reads the
/// Train/Test/<digit>/*.bin layout. A missing dataset throws DatasetMissing.
Dataset load_dataset(const ExperimentConfig& cfg);

/// Split from in-memory samples, e.g. a synthetic task.
Split memory_split(std::vector<LabeledTensor> samples, const std::string& prefix);

/// Manifest columns: file,label,split with split in {train, test}. Files are
/// native event files relative to the manifest directory.
struct ManifestEntry {
  std::filesystem::path file;
  std::size_t label = 0;
  std::string split;
};
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& dir);
void write_manifest(const std::filesystem::path& dir, const std::vector<ManifestEntry>& entries);

/// Resolves the N-MNIST root from cfg.data.path or the environment; empty if
/// neither names an existing directory.
std::filesystem::path nmnist_root(const ExperimentConfig& cfg);
/// Sorted (file, label) list of one N-MNIST split ("Train" or "Test").
std::vector<ManifestEntry> list_nmnist(const std::filesystem::path& root, const std::string& split);

/// Every `limit`-th subsample keeping the original order; limit 0 keeps all.
std::vector<ManifestEntry> subsample(std::vector<ManifestEntry> entries, std::size_t limit);

}  // namespace lsmsim
