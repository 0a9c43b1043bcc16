#include "lsmsim/config.hpp"

#include <charconv>
#include <fstream>
#include <fmt/format.h>

#include "lsmsim/error.hpp"

namespace lsmsim {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  const std::string v = trim(text);
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc{} || ptr != v.data() + v.size()) {
    throw ConfigError("config key '" + key + "': cannot parse '" + text + "' as a number");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& text) {
  const std::string v = trim(text);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key '" + key + "': expected true/false, got '" + text + "'");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
  return out;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t k = 0; k < items.size(); ++k) out += (k ? "," : "") + items[k];
  return out;
}

std::string fmt_double(double v) { return fmt::format("{}", v); }


template <typename Get>
ConfigKey size_key(std::string name, std::string help, Get get) {
  return {name, std::move(help),
          [get, name](ExperimentConfig& c, const std::string& v) { get(c) = parse_number<std::size_t>(name, v); },
          [get](const ExperimentConfig& c) { return std::to_string(get(c)); }};
}

template <typename Get>
ConfigKey u64_key(std::string name, std::string help, Get get) {
  return {name, std::move(help),
          [get, name](ExperimentConfig& c, const std::string& v) { get(c) = parse_number<std::uint64_t>(name, v); },
          [get](const ExperimentConfig& c) { return std::to_string(get(c)); }};
}

template <typename Get>
ConfigKey real_key(std::string name, std::string help, Get get) {
  return {name, std::move(help),
          [get, name](ExperimentConfig& c, const std::string& v) { get(c) = parse_number<double>(name, v); },
          [get](const ExperimentConfig& c) { return fmt_double(get(c)); }};
}

template <typename Get>
ConfigKey text_key(std::string name, std::string help, Get get) {
  return {name, std::move(help), [get](ExperimentConfig& c, const std::string& v) { get(c) = trim(v); },
          [get](const ExperimentConfig& c) { return std::string(get(c)); }};
}

template <typename Get>
ConfigKey bool_key(std::string name, std::string help, Get get) {
  return {name, std::move(help),
          [get, name](ExperimentConfig& c, const std::string& v) { get(c) = parse_bool(name, v); },
          [get](const ExperimentConfig& c) { return std::string(get(c) ? "true" : "false"); }};
}

std::vector<ConfigKey> build_keys() {
  using C = ExperimentConfig;
  std::vector<ConfigKey> k;
  k.push_back(text_key("data.source", "rate | temporal | native | nmnist", [](auto& c) -> auto& { return c.data.source; }));
  k.push_back({"data.path", "native dataset directory or N-MNIST root",
               [](C& c, const std::string& v) { c.data.path = trim(v); },
               [](const C& c) { return c.data.path.string(); }});
  k.push_back(size_key("data.classes", "synthetic class count", [](auto& c) -> auto& { return c.data.classes; }));
  k.push_back(size_key("data.channels", "synthetic input channels U", [](auto& c) -> auto& { return c.data.channels; }));
  k.push_back(size_key("data.steps", "time steps T", [](auto& c) -> auto& { return c.data.steps; }));
  k.push_back(size_key("data.train_per_class", "synthetic training samples per class",
                       [](auto& c) -> auto& { return c.data.train_per_class; }));
  k.push_back(size_key("data.test_per_class", "synthetic test samples per class",
                       [](auto& c) -> auto& { return c.data.test_per_class; }));
  k.push_back(real_key("data.rate_low", "background spike probability", [](auto& c) -> auto& { return c.data.rate_low; }));
  k.push_back(real_key("data.rate_high", "active spike probability", [](auto& c) -> auto& { return c.data.rate_high; }));
  k.push_back(real_key("data.active_fraction", "fraction of channels active per rate template",
                       [](auto& c) -> auto& { return c.data.active_fraction; }));
  k.push_back(size_key("data.groups", "temporal task channel groups", [](auto& c) -> auto& { return c.data.groups; }));
  k.push_back(bool_key("data.merge_polarity", "merge event polarities into one channel",
                       [](auto& c) -> auto& { return c.data.merge_polarity; }));
  k.push_back(size_key("data.crop", "N-MNIST centre crop side", [](auto& c) -> auto& { return c.data.crop; }));
  k.push_back(size_key("data.limit", "max samples per split (0 = all)", [](auto& c) -> auto& { return c.data.limit; }));

  k.push_back(size_key("lsm.h", "neurons per reservoir", [](auto& c) -> auto& { return c.lsm.h; }));
  k.push_back(size_key("lsm.width", "parallel reservoirs", [](auto& c) -> auto& { return c.lsm.width; }));
  k.push_back(size_key("lsm.depth", "stacked reservoirs", [](auto& c) -> auto& { return c.lsm.depth; }));
  k.push_back(real_key("lsm.scale", "input weight scale (1/uS)", [](auto& c) -> auto& { return c.lsm.scale; }));
  k.push_back(real_key("lsm.rec_scale", "recurrent weight scale (1/uS)", [](auto& c) -> auto& { return c.lsm.rec_scale; }));
  k.push_back(real_key("lsm.u_th", "firing threshold", [](auto& c) -> auto& { return c.lsm.u_th; }));
  k.push_back(real_key("lsm.decay", "membrane retention per step", [](auto& c) -> auto& { return c.lsm.decay; }));
  k.push_back(real_key("lsm.cond_mean", "conductance mean (uS)", [](auto& c) -> auto& { return c.lsm.cond_mean; }));
  k.push_back(real_key("lsm.cond_std", "conductance std (uS)", [](auto& c) -> auto& { return c.lsm.cond_std; }));
  k.push_back(real_key("lsm.sparsity", "zero fraction for sparse forming", [](auto& c) -> auto& { return c.lsm.sparsity; }));
  k.push_back({"lsm.forming", "dense | sparse",
               [](C& c, const std::string& v) {
                 try {
                   c.lsm.forming = parse_forming(trim(v));
                 } catch (const Error& e) {
                   throw ConfigError(std::string("config key 'lsm.forming': ") + e.what());
                 }
               },
               [](const C& c) { return std::string(to_string(c.lsm.forming)); }});
  k.push_back(size_key("lsm.array_size", "minimum crossbar side", [](auto& c) -> auto& { return c.lsm.array_size; }));

  k.push_back(real_key("noise.input", "input flip probability", [](auto& c) -> auto& { return c.noise.input; }));
  k.push_back(real_key("noise.read", "read noise level", [](auto& c) -> auto& { return c.noise.read; }));
  k.push_back(real_key("noise.write", "write noise level", [](auto& c) -> auto& { return c.noise.write; }));
  k.push_back({"noise.units", "relative | absolute",
               [](C& c, const std::string& v) {
                 const auto t = trim(v);
                 if (t == "relative") c.noise.units = NoiseUnits::relative;
                 else if (t == "absolute") c.noise.units = NoiseUnits::absolute;
                 else throw ConfigError("config key 'noise.units': expected relative or absolute, got '" + v + "'");
               },
               [](const C& c) { return std::string(c.noise.units == NoiseUnits::relative ? "relative" : "absolute"); }});

  k.push_back(real_key("train.lr", "learning rate", [](auto& c) -> auto& { return c.train.lr; }));
  k.push_back(size_key("train.epochs", "epochs", [](auto& c) -> auto& { return c.train.epochs; }));
  k.push_back(size_key("train.batch", "mini-batch size", [](auto& c) -> auto& { return c.train.batch_size; }));
  k.push_back({"train.optimizer", "sgd | momentum",
               [](C& c, const std::string& v) {
                 try {
                   c.train.optimizer = parse_optimizer(trim(v));
                 } catch (const Error& e) {
                   throw ConfigError(std::string("config key 'train.optimizer': ") + e.what());
                 }
               },
               [](const C& c) { return std::string(c.train.optimizer == Optimizer::sgd ? "sgd" : "momentum"); }});
  k.push_back(real_key("train.momentum", "momentum coefficient", [](auto& c) -> auto& { return c.train.momentum; }));

  k.push_back(size_key("zeroshot.seen", "seen classes", [](auto& c) -> auto& { return c.zeroshot.seen; }));
  k.push_back(size_key("zeroshot.unseen", "held-out classes", [](auto& c) -> auto& { return c.zeroshot.unseen; }));
  k.push_back(size_key("zeroshot.latent", "shared latent dimension", [](auto& c) -> auto& { return c.zeroshot.latent; }));
  k.push_back(size_key("zeroshot.proj_dim", "projection dimension", [](auto& c) -> auto& { return c.zeroshot.proj_dim; }));
  k.push_back(real_key("zeroshot.temperature", "contrastive temperature",
                       [](auto& c) -> auto& { return c.zeroshot.temperature; }));
  k.push_back(real_key("zeroshot.latent_noise", "per-sample latent jitter",
                       [](auto& c) -> auto& { return c.zeroshot.latent_noise; }));

  k.push_back(text_key("sweep.param", "key varied by the sweep", [](auto& c) -> auto& { return c.sweep.param; }));
  k.push_back({"sweep.values", "comma-separated grid values",
               [](C& c, const std::string& v) { c.sweep.values = split_list(v); },
               [](const C& c) { return join(c.sweep.values); }});
  k.push_back(size_key("sweep.repeats", "repeat seeds per grid point", [](auto& c) -> auto& { return c.sweep.repeats; }));

  k.push_back(u64_key("seed.weights", "conductance seed", [](auto& c) -> auto& { return c.seed.weights; }));
  k.push_back(u64_key("seed.data", "data and input-noise seed", [](auto& c) -> auto& { return c.seed.data; }));
  k.push_back(u64_key("seed.train", "readout training seed", [](auto& c) -> auto& { return c.seed.train; }));

  k.push_back({"eval.exit_thresholds", "early-exit confidence thresholds; 'never' disables",
               [](C& c, const std::string& v) {
                 c.exit_thresholds.clear();
                 for (const auto& item : split_list(v)) {
                   if (item.empty()) continue;
                   c.exit_thresholds.push_back(item == "never" ? kNeverExit
                                                               : parse_number<double>("eval.exit_thresholds", item));
                 }
               },
               [](const C& c) {
                 std::vector<std::string> items;
                 for (double t : c.exit_thresholds) items.push_back(t == kNeverExit ? "never" : fmt_double(t));
                 return join(items);
               }});
  k.push_back({"out", "output directory", [](C& c, const std::string& v) { c.out = trim(v); },
               [](const C& c) { return c.out.string(); }});
  k.push_back(size_key("workers", "worker threads", [](auto& c) -> auto& { return c.workers; }));
  return k;
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = build_keys();
  return keys;
}

namespace {

const ConfigKey& find_key(const std::string& key) {
  for (const auto& k : config_keys())
    if (k.name == key) return k;
  throw ConfigError("unknown config key '" + key + "'");
}

}  // namespace

void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  find_key(trim(key)).set(cfg, value);
}

std::string get_config_value(const ExperimentConfig& cfg, const std::string& key) {
  return find_key(trim(key)).get(cfg);
}

void apply_config_file(ExperimentConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    }
    try {
      set_config_value(cfg, line.substr(0, eq), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

std::string env_name(const std::string& key) {
  std::string out = "LSMSIM_";
  for (char c : key) out += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

void apply_environment(ExperimentConfig& cfg, const std::function<const char*(const char*)>& getenv) {
  for (const auto& k : config_keys()) {
    const std::string name = env_name(k.name);
    if (const char* v = getenv(name.c_str())) {
      try {
        k.set(cfg, v);
      } catch (const ConfigError& e) {
        throw ConfigError(name + ": " + e.what());
      }
    }
  }
}

std::map<std::string, std::string> config_snapshot(const ExperimentConfig& cfg) {
  std::map<std::string, std::string> out;
  for (const auto& k : config_keys()) out[k.name] = k.get(cfg);
  return out;
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  const auto& s = data.source;
  if (s != "rate" && s != "temporal" && s != "native" && s != "nmnist") {
    fail("data.source must be rate, temporal, native or nmnist, got '" + s + "'");
  }
  if ((s == "rate" || s == "temporal") && data.classes < 2) fail("data.classes must be >= 2");
  if (data.steps == 0) fail("data.steps must be >= 1");
  if (data.channels == 0) fail("data.channels must be >= 1");
  if (!(data.rate_low >= 0.0 && data.rate_low <= 1.0 && data.rate_high >= 0.0 && data.rate_high <= 1.0)) {
    fail("data.rate_low and data.rate_high must lie in [0, 1]");
  }
  if (!(data.active_fraction > 0.0 && data.active_fraction <= 1.0)) fail("data.active_fraction must be in (0, 1]");
  if (s == "temporal" && (data.groups < 2 || data.groups > data.channels || data.groups > data.steps)) {
    fail("data.groups must be in [2, min(channels, steps)]");
  }
  if (lsm.h == 0 || lsm.width == 0 || lsm.depth == 0) fail("lsm.h, lsm.width and lsm.depth must be >= 1");
  if (!(lsm.scale > 0.0) || !(lsm.rec_scale >= 0.0)) fail("lsm.scale must be > 0 and lsm.rec_scale >= 0");
  try {
    LifParams{lsm.u_th, lsm.decay, 0.0}.validate();
  } catch (const Error& e) {
    fail(e.what());
  }
  if (!(noise.input >= 0.0 && noise.input <= 1.0)) fail("noise.input must be in [0, 1]");
  if (!(noise.read >= 0.0) || !(noise.write >= 0.0)) fail("noise.read and noise.write must be >= 0");
  try {
    train.validate();
  } catch (const Error& e) {
    fail(e.what());
  }
  if (zeroshot.seen < 2 || zeroshot.unseen < 1) fail("zeroshot.seen must be >= 2 and zeroshot.unseen >= 1");
  if (zeroshot.latent == 0 || zeroshot.proj_dim == 0) fail("zeroshot.latent and zeroshot.proj_dim must be >= 1");
  if (!(zeroshot.temperature > 0.0)) fail("zeroshot.temperature must be > 0");
  if (sweep.values.empty()) fail("sweep.values must not be empty");
  if (sweep.repeats == 0) fail("sweep.repeats must be >= 1");
  for (double t : exit_thresholds)
    if (!(t >= 0.0)) fail("eval.exit_thresholds must be >= 0");
  if (workers == 0) fail("workers must be >= 1");
}

}  // namespace lsmsim
