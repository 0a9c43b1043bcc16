#include "lsmsim/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "lsmsim/config.hpp"
#include "lsmsim/dataset.hpp"
#include "lsmsim/error.hpp"
#include "lsmsim/event_io.hpp"
#include "lsmsim/experiments.hpp"
#include "lsmsim/randomness.hpp"

namespace fs = std::filesystem;

namespace lsmsim {
namespace {

struct CommonArgs {
  std::string config_file;
  std::vector<std::string> sets;
  std::map<std::string, std::string> flags;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("-c,--config", args.config_file, "key = value config file")->check(CLI::ExistingFile);
  cmd->add_option("--set", args.sets, "override, key=value (repeatable)");
  for (const auto& k : config_keys()) {
    cmd->add_option_function<std::string>(
           "--" + k.name, [&args, name = k.name](const std::string& v) { args.flags[name] = v; }, k.help)
        ->group("Config keys");
  }
}

ExperimentConfig resolve_config(const CommonArgs& args) {
  ExperimentConfig cfg;
  if (!args.config_file.empty()) apply_config_file(cfg, args.config_file);
  apply_environment(cfg, [](const char* name) { return std::getenv(name); });
  for (const auto& s : args.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    set_config_value(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  for (const auto& [k, v] : args.flags) set_config_value(cfg, k, v);
  cfg.validate();
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

void prepare_out(const ExperimentConfig& cfg) {
  fs::create_directories(cfg.out);
  std::string text;
  for (const auto& [k, v] : config_snapshot(cfg)) text += k + " = " + v + "\n";
  write_text(cfg.out / "config.txt", text);
}

void write_confusion(const fs::path& path, const EvalReport& r) {
  std::string text = "truth\\pred";
  for (std::size_t c = 0; c < r.confusion.size(); ++c) text += fmt::format(",{}", c);
  text += "\n";
  for (std::size_t t = 0; t < r.confusion.size(); ++t) {
    text += std::to_string(t);
    for (auto n : r.confusion[t]) text += fmt::format(",{}", n);
    text += "\n";
  }
  write_text(path, text);
}

void write_supervised(const ExperimentConfig& cfg, const SupervisedReport& rep) {
  write_json(cfg.out / "metrics.json", rep.to_json());
  write_confusion(cfg.out / "confusion.csv", rep.eval);
  write_json(cfg.out / "cost.json", rep.cost.to_json());
}

int cmd_gen_data(const ExperimentConfig& cfg) {
  if (cfg.data.source != "rate" && cfg.data.source != "temporal") {
    throw ConfigError("gen-data needs data.source = rate or temporal");
  }
  const auto data = load_dataset(cfg);
  const fs::path root = cfg.out / "data";
  std::vector<ManifestEntry> entries;
  std::uint64_t spikes = 0;
  for (const auto* split : {&data.train, &data.test}) {
    const std::string name = split == &data.train ? "train" : "test";
    fs::create_directories(root / name);
    for (std::size_t i = 0; i < split->size(); ++i) {
      const auto x = split->load(i);
      spikes += x.popcount();
      const fs::path rel = fs::path(name) / (split->ids[i] + ".evt");
      save_events(root / rel, raster_to_events(x));
      entries.push_back({rel, split->labels[i], name});
    }
  }
  write_manifest(root, entries);
  write_json(cfg.out / "metrics.json", {{"dataset", root.generic_string()},
                                        {"train_samples", data.train.size()},
                                        {"test_samples", data.test.size()},
                                        {"classes", data.num_classes},
                                        {"channels", data.channels},
                                        {"steps", data.steps},
                                        {"total_input_spikes", spikes},
                                        {"warnings", data.warnings}});
  return kExitOk;
}

int cmd_train(const ExperimentConfig& cfg, const std::string& checkpoint) {
  const auto rep = run_supervised(cfg);
  write_supervised(cfg, rep);
  save_checkpoint(checkpoint.empty() ? cfg.out / "readout.bin" : fs::path(checkpoint), rep.model);
  for (const auto& w : rep.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << fmt::format("test accuracy {:.4f}\n", rep.eval.accuracy);
  return kExitOk;
}

int cmd_eval(const ExperimentConfig& cfg, const std::string& checkpoint) {
  const auto model = load_checkpoint(checkpoint);
  const auto rep = run_eval(cfg, model);
  write_supervised(cfg, rep);
  std::cout << fmt::format("test accuracy {:.4f}\n", rep.eval.accuracy);
  return kExitOk;
}

int cmd_zeroshot(const ExperimentConfig& cfg) {
  const auto rep = run_zero_shot(cfg);
  write_json(cfg.out / "metrics.json", rep.to_json());
  std::ofstream emb(cfg.out / "embeddings.csv", std::ios::binary);
  write_embeddings_csv(emb, rep.embeddings);
  for (const auto& w : rep.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << fmt::format("unseen top-1 {:.4f} (untrained {:.4f}), seen top-1 {:.4f}\n", rep.unseen.top1,
                           rep.baseline_unseen.top1, rep.seen.top1);
  return kExitOk;
}

int cmd_sweep(const ExperimentConfig& cfg) {
  const auto rep = run_sweep(cfg, cfg.out / "sweep.csv");
  auto j = rep.to_json();
  j["param"] = cfg.sweep.param;
  j["repeats"] = cfg.sweep.repeats;
  write_json(cfg.out / "metrics.json", j);
  std::size_t failed = 0;
  for (const auto& r : rep.rows) failed += r.status != "ok";
  std::cout << fmt::format("{} rows, {} failed\n", rep.rows.size(), failed);
  return kExitOk;
}

int cmd_ablate(const ExperimentConfig& cfg) {
  const auto rep = run_ablation(cfg);
  write_json(cfg.out / "metrics.json", rep.to_json());
  for (const auto& r : rep.rows) std::cout << fmt::format("{:<9} {:.4f}\n", to_string(r.kind), r.accuracy);
  return kExitOk;
}

int cmd_cost(const ExperimentConfig& cfg) {
  const auto j = run_cost(cfg);
  write_json(cfg.out / "cost.json", j);
  nlohmann::json summary;
  for (const auto& a : j["architectures"]) summary[a["name"].get<std::string>()] = a["train_cost_vs_lsm"];
  write_json(cfg.out / "metrics.json", {{"train_cost_vs_lsm", summary},
                                        {"energy_digital_j", j["energy"]["digital_system"]["overall_j"]},
                                        {"energy_hybrid_j", j["energy"]["hybrid_system"]["overall_j"]}});
  return kExitOk;
}

int cmd_rng_test(const ExperimentConfig& cfg, std::size_t rows, std::size_t cols) {
  const auto arr = sample_conductance(rows, cols, {cfg.lsm.cond_mean, cfg.lsm.cond_std, cfg.lsm.sparsity},
                                      cfg.lsm.forming, cfg.seed.weights);
  const auto bits = extract_bits(arr);
  const auto mono = monobit_test(bits);
  const auto runs = runs_test(bits);
  std::size_t ones = 0;
  for (auto b : bits) ones += b;
  auto res = [](const RandomnessResult& r) {
    return nlohmann::json{{"p_value", r.p_value}, {"applicable", r.applicable}, {"passed", r.passed()}};
  };
  write_json(cfg.out / "metrics.json",
             {{"rows", rows}, {"cols", cols}, {"bits", bits.size()}, {"ones", ones},
              {"monobit", res(mono)}, {"runs", res(runs)}, {"alpha", kRandomnessAlpha}});
  std::cout << fmt::format("monobit p={:.4g} {}, runs p={:.4g} {}\n", mono.p_value, mono.passed() ? "pass" : "fail",
                           runs.p_value, runs.passed() ? "pass" : "fail");
  return kExitOk;
}

int cmd_import_nmnist(const ExperimentConfig& cfg, const std::string& dest_arg) {
  const fs::path root = nmnist_root(cfg);
  if (root.empty()) {
    throw DatasetMissing("N-MNIST not found; set data.path or " + std::string(kNmnistEnv));
  }
  const fs::path dest = dest_arg.empty() ? cfg.out / "nmnist" : fs::path(dest_arg);
  std::vector<ManifestEntry> entries;
  for (const std::string split : {"Train", "Test"}) {
    const auto files = subsample(list_nmnist(root, split), cfg.data.limit);
    const std::string name = split == "Train" ? "train" : "test";
    fs::create_directories(dest / name);
    for (const auto& e : files) {
      auto stream = load_nmnist_file(e.file);
      stream.num_channels = 34 * 34;
      const fs::path rel = fs::path(name) / std::to_string(e.label) / (e.file.stem().string() + ".evt");
      fs::create_directories((dest / rel).parent_path());
      save_events(dest / rel, stream);
      entries.push_back({rel, e.label, name});
    }
  }
  write_manifest(dest, entries);
  write_json(cfg.out / "metrics.json", {{"imported", entries.size()}, {"dest", dest.generic_string()}});
  return kExitOk;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Memristive liquid state machine simulator"};
  app.require_subcommand(1);
  CommonArgs args;
  std::string checkpoint, dest;
  std::size_t rng_rows = 512, rng_cols = 512;

  auto* gen = app.add_subcommand("gen-data", "write a synthetic dataset as native event files");
  auto* train = app.add_subcommand("train", "LSM features, readout training and evaluation");
  auto* eval = app.add_subcommand("eval", "evaluate a saved readout, optionally with early exit");
  auto* zs = app.add_subcommand("zeroshot", "contrastive crossmodal training and zero-shot retrieval");
  auto* sweep = app.add_subcommand("sweep", "grid over one config key with repeat seeds");
  auto* ablate = app.add_subcommand("ablate", "LSM features against max/avg/sum pooling");
  auto* cost = app.add_subcommand("cost", "operation counts and energy estimates");
  auto* rng = app.add_subcommand("rng-test", "bits from a sampled crossbar through monobit and runs tests");
  auto* imp = app.add_subcommand("import-nmnist", "convert N-MNIST binaries to native event files");
  for (auto* cmd : {gen, train, eval, zs, sweep, ablate, cost, rng, imp}) add_common(cmd, args);
  train->add_option("--checkpoint", checkpoint, "where to save the readout (default <out>/readout.bin)");
  eval->add_option("--checkpoint", checkpoint, "readout to evaluate")->required();
  rng->add_option("--rows", rng_rows, "array rows");
  rng->add_option("--cols", rng_cols, "array columns");
  imp->add_option("--dest", dest, "output directory (default <out>/nmnist)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    const auto cfg = resolve_config(args);
    prepare_out(cfg);
    if (gen->parsed()) return cmd_gen_data(cfg);
    if (train->parsed()) return cmd_train(cfg, checkpoint);
    if (eval->parsed()) return cmd_eval(cfg, checkpoint);
    if (zs->parsed()) return cmd_zeroshot(cfg);
    if (sweep->parsed()) return cmd_sweep(cfg);
    if (ablate->parsed()) return cmd_ablate(cfg);
    if (cost->parsed()) return cmd_cost(cfg);
    if (rng->parsed()) return cmd_rng_test(cfg, rng_rows, rng_cols);
    if (imp->parsed()) return cmd_import_nmnist(cfg, dest);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DatasetMissing& e) {
    std::cerr << "skipped: " << e.what() << "\n";
    return kExitSkipped;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace lsmsim
