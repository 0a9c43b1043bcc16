#include "lsmsim/dataset.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <sstream>

#include "lsmsim/error.hpp"
#include "lsmsim/event_io.hpp"
#include "lsmsim/rng.hpp"

namespace fs = std::filesystem;

namespace lsmsim {

Split memory_split(std::vector<LabeledTensor> samples, const std::string& prefix) {
  auto shared = std::make_shared<std::vector<LabeledTensor>>(std::move(samples));
  Split s;
  for (std::size_t i = 0; i < shared->size(); ++i) {
    s.labels.push_back((*shared)[i].label);
    s.ids.push_back(prefix + std::to_string(i));
  }
  s.load = [shared](std::size_t i) { return (*shared)[i].x; };
  return s;
}

std::vector<ManifestEntry> read_manifest(const fs::path& dir) {
  const fs::path path = dir / "manifest.csv";
  std::ifstream in(path);
  if (!in) throw DatasetMissing("no manifest at " + path.string());
  std::string line;
  std::getline(in, line);
  if (line.rfind("file,label,split", 0) != 0) throw DataError(path.string() + ": bad header '" + line + "'");
  std::vector<ManifestEntry> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string file, label, split;
    if (!std::getline(ss, file, ',') || !std::getline(ss, label, ',') || !std::getline(ss, split)) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected file,label,split");
    }
    if (!split.empty() && split.back() == '\r') split.pop_back();
    if (split != "train" && split != "test") {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": split must be train or test");
    }
    try {
      out.push_back({file, static_cast<std::size_t>(std::stoul(label)), split});
    } catch (const std::exception&) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": bad label '" + label + "'");
    }
  }
  return out;
}

void write_manifest(const fs::path& dir, const std::vector<ManifestEntry>& entries) {
  std::ofstream out(dir / "manifest.csv");
  if (!out) throw DataError("cannot write " + (dir / "manifest.csv").string());
  out << "file,label,split\n";
  for (const auto& e : entries) out << e.file.generic_string() << ',' << e.label << ',' << e.split << '\n';
}

fs::path nmnist_root(const ExperimentConfig& cfg) {
  fs::path root = cfg.data.path;
  if (root.empty()) {
    if (const char* env = std::getenv(kNmnistEnv)) root = env;
  }
  if (root.empty() || !fs::is_directory(root / "Train") || !fs::is_directory(root / "Test")) return {};
  return root;
}

std::vector<ManifestEntry> list_nmnist(const fs::path& root, const std::string& split) {
  std::vector<ManifestEntry> out;
  for (std::size_t digit = 0; digit < 10; ++digit) {
    const fs::path dir = root / split / std::to_string(digit);
    if (!fs::is_directory(dir)) throw DatasetMissing("N-MNIST directory " + dir.string() + " is missing");
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".bin") {
        out.push_back({entry.path(), digit, split == "Train" ? "train" : "test"});
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.file < b.file; });
  return out;
}

std::vector<ManifestEntry> subsample(std::vector<ManifestEntry> entries, std::size_t limit) {
  if (limit == 0 || entries.size() <= limit) return entries;
  std::vector<ManifestEntry> out;
  out.reserve(limit);
  for (std::size_t k = 0; k < limit; ++k) out.push_back(entries[k * entries.size() / limit]);
  return out;
}

namespace {

Split file_split(const std::vector<ManifestEntry>& entries, std::function<SpikeTensor(const fs::path&)> read) {
  Split s;
  auto files = std::make_shared<std::vector<fs::path>>();
  for (const auto& e : entries) {
    s.labels.push_back(e.label);
    s.ids.push_back(e.file.filename().string());
    files->push_back(e.file);
  }
  s.load = [files, read = std::move(read)](std::size_t i) { return read((*files)[i]); };
  return s;
}

std::size_t count_classes(const std::vector<ManifestEntry>& entries) {
  std::size_t n = 0;
  for (const auto& e : entries) n = std::max(n, e.label + 1);
  return n;
}

Dataset load_native(const ExperimentConfig& cfg) {
  if (cfg.data.path.empty()) throw ConfigError("data.source=native needs data.path");
  const fs::path dir = cfg.data.path;
  auto entries = read_manifest(dir);
  std::vector<ManifestEntry> train, test;
  for (auto& e : entries) {
    e.file = dir / e.file;
    (e.split == "train" ? train : test).push_back(e);
  }
  if (train.empty() || test.empty()) throw DataError(dir.string() + ": manifest needs train and test entries");
  Dataset d;
  d.num_classes = count_classes(entries);
  d.steps = cfg.data.steps;
  const auto first = load_events(train.front().file);
  d.channels = first.num_channels * (cfg.data.merge_polarity ? 1 : 2);
  const std::size_t steps = cfg.data.steps;
  const bool merge = cfg.data.merge_polarity;
  const std::uint32_t channels = first.num_channels;
  auto read = [steps, merge, channels](const fs::path& p) {
    const auto stream = load_events(p);
    if (stream.num_channels != channels) {
      throw DataError(p.string() + ": " + std::to_string(stream.num_channels) + " channels, expected " +
                      std::to_string(channels));
    }
    return bin_events(stream, steps, merge);
  };
  d.train = file_split(subsample(train, cfg.data.limit), read);
  d.test = file_split(subsample(test, cfg.data.limit), read);
  return d;
}

Dataset load_nmnist(const ExperimentConfig& cfg) {
  const fs::path root = nmnist_root(cfg);
  if (root.empty()) {
    throw DatasetMissing("N-MNIST not found; set data.path or " + std::string(kNmnistEnv) +
                         " to a directory with Train/ and Test/");
  }
  constexpr std::size_t kSide = 34;
  const std::size_t crop = cfg.data.crop;
  if (crop == 0 || crop > kSide) throw ConfigError("data.crop must be in [1, 34]");
  const std::size_t steps = cfg.data.steps;
  const bool merge = cfg.data.merge_polarity;
  auto read = [steps, merge, crop](const fs::path& p) {
    auto stream = load_nmnist_file(p);
    stream.num_channels = kSide * kSide;
    if (merge) return center_crop(bin_events(stream, steps, true), kSide, kSide, crop, crop);
    // Crop each polarity half separately, then stack them.
    const auto both = bin_events(stream, steps, false);
    SpikeTensor pos(steps, kSide * kSide), neg(steps, kSide * kSide);
    for (std::size_t t = 0; t < steps; ++t)
      for (std::size_t c = 0; c < kSide * kSide; ++c) {
        pos.set(t, c, both.at(t, c));
        neg.set(t, c, both.at(t, c + kSide * kSide));
      }
    const auto a = center_crop(pos, kSide, kSide, crop, crop);
    const auto b = center_crop(neg, kSide, kSide, crop, crop);
    SpikeTensor out(steps, 2 * crop * crop);
    for (std::size_t t = 0; t < steps; ++t)
      for (std::size_t c = 0; c < crop * crop; ++c) {
        out.set(t, c, a.at(t, c));
        out.set(t, c + crop * crop, b.at(t, c));
      }
    return out;
  };
  Dataset d;
  d.num_classes = 10;
  d.steps = steps;
  d.channels = crop * crop * (merge ? 1 : 2);
  d.train = file_split(subsample(list_nmnist(root, "Train"), cfg.data.limit), read);
  d.test = file_split(subsample(list_nmnist(root, "Test"), cfg.data.limit), read);
  if (d.train.size() == 0 || d.test.size() == 0) throw DatasetMissing("N-MNIST at " + root.string() + " is empty");
  return d;
}

}  // namespace

Dataset load_dataset(const ExperimentConfig& cfg) {
  const auto& src = cfg.data.source;
  if (src == "native") return load_native(cfg);
  if (src == "nmnist") return load_nmnist(cfg);

  Dataset d;
  d.num_classes = cfg.data.classes;
  d.channels = cfg.data.channels;
  d.steps = cfg.data.steps;
  const std::uint64_t train_seed = derive_seed(cfg.seed.data, 0x5452);
  const std::uint64_t test_seed = derive_seed(cfg.seed.data, 0x5445);
  if (src == "rate") {
    SyntheticTaskSpec spec;
    spec.num_classes = cfg.data.classes;
    spec.channels = cfg.data.channels;
    spec.steps = cfg.data.steps;
    spec.templates = rate_templates(spec.num_classes, spec.channels, cfg.data.active_fraction, cfg.data.rate_low,
                                    cfg.data.rate_high, derive_seed(cfg.seed.data, 0x544D));
    spec.samples_per_class = cfg.data.train_per_class;
    spec.seed = train_seed;
    auto train = gen_synthetic(spec);
    spec.samples_per_class = cfg.data.test_per_class;
    spec.seed = test_seed;
    auto test = gen_synthetic(spec);
    d.warnings = train.warnings;
    d.train = memory_split(std::move(train.samples), "train-");
    d.test = memory_split(std::move(test.samples), "test-");
    return d;
  }
  if (src == "temporal") {
    TemporalTaskSpec spec;
    spec.num_classes = cfg.data.classes;
    spec.channels = cfg.data.channels;
    spec.steps = cfg.data.steps;
    spec.groups = cfg.data.groups;
    spec.low = cfg.data.rate_low;
    spec.high = cfg.data.rate_high;
    spec.order_seed = derive_seed(cfg.seed.data, 0x544D);
    spec.samples_per_class = cfg.data.train_per_class;
    spec.seed = train_seed;
    auto train = gen_temporal(spec);
    spec.samples_per_class = cfg.data.test_per_class;
    spec.seed = test_seed;
    auto test = gen_temporal(spec);
    d.train = memory_split(std::move(train.samples), "train-");
    d.test = memory_split(std::move(test.samples), "test-");
    return d;
  }
  throw ConfigError("unknown data.source '" + src + "'");
}

}  // namespace lsmsim
