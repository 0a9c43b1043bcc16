// Acceptance gate. Prints one PASS/FAIL/SKIP line per criterion; with --only N
// runs a single criterion so ctest can list them separately.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "lsmsim/cli.hpp"
#include "lsmsim/config.hpp"
#include "lsmsim/contrastive.hpp"
#include "lsmsim/cost_model.hpp"
#include "lsmsim/dataset.hpp"
#include "lsmsim/experiments.hpp"
#include "lsmsim/randomness.hpp"
#include "lsmsim/readout.hpp"
#include "lsmsim/rng.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace lsmsim;

namespace {

enum class Status { pass, fail, skip };

struct Outcome {
  Status status = Status::fail;
  std::string detail;
};

Outcome verdict(bool ok, std::string detail) { return {ok ? Status::pass : Status::fail, std::move(detail)}; }

struct Context {
  fs::path cli;
  fs::path work;
  fs::path configs;
};

ExperimentConfig load_config(const Context& ctx, const std::string& name) {
  ExperimentConfig cfg;
  apply_config_file(cfg, ctx.configs / name);
  return cfg;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  Matrix m(r, c);
  for (auto& v : m.data) v = rng.normal();
  return m;
}

// 1
Outcome gradient_suite(const Context&) {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(2024);
  std::size_t instances = 0, bad = 0;
  double worst = 0.0;
  auto check = [&](double analytic, double numeric) {
    const double e = oracle::rel_error(analytic, numeric);
    worst = std::max(worst, e);
    return e <= 1e-6;
  };
  for (int n = 0; n < 60; ++n, ++instances) {
    const std::size_t C = 2 + rng.below(9);
    std::vector<double> z(C);
    for (auto& v : z) v = rng.normal(0.0, 2.0);
    const std::size_t label = rng.below(C);
    const auto r = softmax_xent(z, label);
    const auto fd = oracle::numeric_gradient([&](const std::vector<double>& x) { return oracle::plain_xent(x, label); }, z);
    bool ok = true;
    for (std::size_t k = 0; k < C; ++k) ok = check(r.grad[k], fd[k]) && ok;
    bad += !ok;
  }
  for (int n = 0; n < 50; ++n, ++instances) {
    const std::size_t N = 2 + rng.below(5), D = 2 + rng.below(5);
    const Matrix v = random_matrix(N, D, rng), a = random_matrix(N, D, rng);
    const double tau = 0.1 + rng.uniform();
    const auto r = contrastive_loss(v, a, tau);
    const auto fv = oracle::numeric_gradient(
        [&](const std::vector<double>& p) {
          Matrix m = v;
          m.data = p;
          return oracle::plain_contrastive(m, a, tau);
        },
        v.data);
    const auto fa = oracle::numeric_gradient(
        [&](const std::vector<double>& p) {
          Matrix m = a;
          m.data = p;
          return oracle::plain_contrastive(v, m, tau);
        },
        a.data);
    bool ok = true;
    for (std::size_t k = 0; k < fv.size(); ++k) ok = check(r.grad_vision.data[k], fv[k]) && ok;
    for (std::size_t k = 0; k < fa.size(); ++k) ok = check(r.grad_audio.data[k], fa[k]) && ok;
    bad += !ok;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return verdict(bad == 0 && secs < 10.0, fmt::format("{} instances, {} over 1e-6, worst rel err {:.2e}, {:.2f} s",
                                                      instances, bad, worst, secs));
}

// 2
Outcome oracle_equivalence(const Context&) {
  const auto start = std::chrono::steady_clock::now();
  std::size_t mismatches = 0;
  for (std::uint64_t inst = 0; inst < 50; ++inst) {
    Rng pick(derive_seed(77, inst));
    const std::size_t T = 1 + pick.below(16), U = 1 + pick.below(8), h = 1 + pick.below(8);
    const double beta = pick.uniform();
    auto arr = std::make_shared<const ConductanceArray>(
        sample_conductance(h, U + h + 2, {}, Forming::dense, derive_seed(78, inst)));
    LsmConfig cfg;
    cfg.U = U;
    cfg.h = h;
    cfg.params = {1.0, beta, 0.0};
    cfg.input = differential_weights(arr, {0, h}, {0, U + 1}, 0.1 + 0.3 * pick.uniform());
    cfg.recurrent = differential_weights(arr, {0, h}, {U + 1, U + h + 2}, 0.3 * pick.uniform());
    SpikeTensor in(T, U);
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t u = 0; u < U; ++u) in.set(t, u, pick.bernoulli(0.5));
    const auto out = lsm_forward(in, cfg, inst);
    const auto ref = oracle::dense_lsm(in, cfg.input.weights, cfg.recurrent.weights, beta, 1.0);
    bool same = true;
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t i = 0; i < h; ++i) same = same && out.raster.at(t, i) == ref.raster[t][i];
    mismatches += !same;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return verdict(mismatches == 0 && secs < 5.0,
                 fmt::format("50 instances, {} raster mismatches, {:.3f} s", mismatches, secs));
}

// 3
Outcome cost_constants(const Context&) {
  const double eff = energy_efficiency(300.0, 624e12);
  HybridEvents one;
  one.array_vecs = one.adc_reads = one.mux_ops = 1;
  const double vec = hybrid_energy(OpsCount{}, one, EnergyModel::reference()).energy_hybrid;
  const double r7 = cost_ratio(10401792011ULL, 532491ULL);
  const double r9 = cost_ratio(354330ULL, 39706ULL);
  const bool ok = std::abs(eff - 4.808e-13) <= 1e-16 && std::abs(vec - 6.01e-9) <= 0.01e-9 &&
                  std::abs(r7 - 19534.21) <= 0.01 && std::abs(r9 - 8.92) <= 0.01;
  return verdict(ok, fmt::format("efficiency {:.6e} J/op, one vector {:.5f} nJ, ratios {:.4f} and {:.4f}", eff,
                                 vec * 1e9, r7, r9));
}

// 4
Outcome op_count_oracle(const Context&) {
  std::size_t mismatches = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(derive_seed(404, seed));
    Architecture arch{"random", {}};
    std::size_t width = 1 + rng.below(64);
    const std::size_t n = 2 + rng.below(5);
    for (std::size_t k = 0; k < n; ++k) {
      const std::string name = "l" + std::to_string(k);
      const auto pick = rng.below(4);
      if (pick == 0) {
        const std::size_t h = 1 + rng.below(40);
        arch.layers.push_back({name, LayerKind::lsm, width, h, 1 + rng.below(30), false});
        width = h;
      } else if (pick == 1) {
        arch.layers.push_back({name, LayerKind::counter, width, width, 1 + rng.below(30), false});
      } else {
        const std::size_t out = 1 + rng.below(40);
        arch.layers.push_back({name, LayerKind::dense, width, out, 1 + rng.below(3), rng.bernoulli(0.6)});
        width = out;
      }
    }
    const auto ops = count_ops(arch);
    const auto run = oracle::run_instrumented(arch, seed);
    mismatches += ops.forward_total != run.forward || ops.backward_total != run.backward;
  }
  return verdict(mismatches == 0, fmt::format("20 architectures, {} mismatches", mismatches));
}

// 5
Outcome temporal_separability(const Context& ctx) {
  const auto start = std::chrono::steady_clock::now();
  const auto base = load_config(ctx, "temporal.conf");
  std::vector<double> lsm, maxp, avgp, sump;
  for (std::size_t r = 0; r < 10; ++r) {
    const auto rep = run_ablation(repeat_config(base, r));
    lsm.push_back(rep.rows[0].accuracy);
    maxp.push_back(rep.rows[1].accuracy);
    avgp.push_back(rep.rows[2].accuracy);
    sump.push_back(rep.rows[3].accuracy);
  }
  const double best_pool = std::max({mean(maxp), mean(avgp), mean(sump)});
  const double margin = mean(lsm) - best_pool;
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return verdict(margin >= 0.05 && secs < 120.0,
                 fmt::format("LSM {:.3f}, max {:.3f}, avg {:.3f}, sum {:.3f}, margin {:+.1f} pts, {:.1f} s", mean(lsm),
                             mean(maxp), mean(avgp), mean(sump), 100.0 * margin, secs));
}

std::vector<double> sweep_means(const Context& ctx, ExperimentConfig cfg, const std::string& param,
                                const std::vector<std::string>& values, const std::string& tag) {
  cfg.sweep.param = param;
  cfg.sweep.values = values;
  cfg.sweep.repeats = 10;
  const fs::path dir = ctx.work / ("sweep-" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto rep = run_sweep(cfg, dir / "sweep.csv");
  std::vector<double> means(values.size(), 0.0);
  std::vector<std::size_t> n(values.size(), 0);
  for (const auto& r : rep.rows) {
    if (r.status != "ok") throw std::runtime_error("sweep row failed: " + r.message);
    means[r.point] += r.accuracy;
    ++n[r.point];
  }
  for (std::size_t k = 0; k < means.size(); ++k) means[k] /= static_cast<double>(n[k]);
  return means;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) s += fmt::format("{}{:.3f}", k ? " " : "", v[k]);
  return s;
}

// 6
Outcome noise_trends(const Context& ctx) {
  const auto start = std::chrono::steady_clock::now();
  const auto base = load_config(ctx, "rate.conf");
  const auto input = sweep_means(ctx, base, "noise.input", {"0", "0.1", "0.2", "0.3"}, "input");
  const auto read = sweep_means(ctx, base, "noise.read", {"0", "0.25", "0.5", "1"}, "read");
  const auto write = sweep_means(ctx, base, "noise.write", {"0", "0.1"}, "write");
  const bool input_ok = std::is_sorted(input.rbegin(), input.rend());
  const bool read_ok = std::is_sorted(read.rbegin(), read.rend());
  const double write_drop = write[0] - write[1];
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return verdict(input_ok && read_ok && write_drop <= 0.02 && secs < 300.0,
                 fmt::format("input p 0/.1/.2/.3: {}; read 0/.25/.5/1: {}; write 10%: drop {:+.1f} pts; {:.1f} s",
                             join(input), join(read), 100.0 * write_drop, secs));
}

// 7
Outcome early_exit(const Context& ctx) {
  auto base = load_config(ctx, "rate.conf");
  base.exit_thresholds = {0.5, 0.7, 0.9, kNeverExit};
  std::vector<double> acc(4, 0.0), steps(4, 0.0);
  double baseline = 0.0;
  bool never_exact = true;
  for (std::size_t r = 0; r < 10; ++r) {
    const auto rep = run_supervised(repeat_config(base, r));
    baseline += rep.eval.accuracy / 10.0;
    for (std::size_t k = 0; k < 4; ++k) {
      acc[k] += rep.early_exit[k].accuracy / 10.0;
      steps[k] += rep.early_exit[k].mean_exit_step / 10.0;
    }
    never_exact = never_exact && rep.early_exit[3].matches_baseline && rep.early_exit[3].accuracy == rep.eval.accuracy;
  }
  const bool monotone = std::is_sorted(steps.begin(), steps.end());
  std::string chosen = "none";
  for (std::size_t k = 0; k < 3; ++k) {
    if (baseline - acc[k] <= 0.02 && steps[k] <= 0.85 * steps[3]) {
      chosen = fmt::format("{} (acc {:+.1f} pts, steps -{:.0f}%)", base.exit_thresholds[k],
                           100.0 * (acc[k] - baseline), 100.0 * (1.0 - steps[k] / steps[3]));
      break;
    }
  }
  return verdict(monotone && never_exact && chosen != "none",
                 fmt::format("mean exit steps 0.5/0.7/0.9/never: {}; accuracy: {}; never exact: {}; threshold {}",
                             join(steps), join(acc), never_exact ? "yes" : "no", chosen));
}

// 8
Outcome randomness(const Context&) {
  const auto arr = sample_conductance(512, 512, {}, Forming::dense, 8);
  const auto bits = extract_bits(arr);
  const auto mono = monobit_test(bits);
  const auto runs = runs_test(bits);
  ConductanceArray flat{512, 512, Matrix(512, 512), Forming::dense, 0, {}};
  std::fill(flat.g.data.begin(), flat.g.data.end(), 33.0);
  const auto flat_mono = monobit_test(extract_bits(flat));
  return verdict(mono.passed() && runs.passed() && !flat_mono.passed(),
                 fmt::format("512x512: monobit p={:.4f}, runs p={:.4f}; constant array monobit p={:.3g}",
                             mono.p_value, runs.p_value, flat_mono.p_value));
}

// 9
Outcome nmnist(const Context& ctx) {
  auto cfg = load_config(ctx, "nmnist.conf");
  if (nmnist_root(cfg).empty()) {
    return {Status::skip, fmt::format("dataset absent (set {} to the N-MNIST root)", kNmnistEnv)};
  }
  const auto start = std::chrono::steady_clock::now();
  const auto rep = run_supervised(cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return verdict(rep.eval.accuracy >= 0.85, fmt::format("test accuracy {:.4f}, {:.0f} s", rep.eval.accuracy, secs));
}

// 10
Outcome zero_shot(const Context& ctx) {
  const auto base = load_config(ctx, "zeroshot.conf");
  std::vector<double> unseen, baseline, seen;
  for (std::size_t r = 0; r < 10; ++r) {
    const auto rep = run_zero_shot(repeat_config(base, r));
    unseen.push_back(rep.unseen.top1);
    baseline.push_back(rep.baseline_unseen.top1);
    seen.push_back(rep.seen.top1);
  }
  const bool ok = mean(unseen) >= 0.75 && std::abs(mean(baseline) - 0.5) <= 0.1;
  return verdict(ok, fmt::format("unseen top-1 {:.3f} (chance 0.5), untrained {:.3f}, seen top-1 {:.3f}",
                                 mean(unseen), mean(baseline), mean(seen)));
}

// 11
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism(const Context& ctx) {
  const fs::path root = ctx.work / "determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const std::string small = "--data.train_per_class 8 --data.test_per_class 4 --lsm.h 24";
  const fs::path ckpt = root / "readout.bin";
  const std::string cfgdir = ctx.configs.string();
  struct Cmd {
    std::string name, args;
  };
  std::vector<Cmd> cmds{
      {"gen-data", small},
      {"train", small + " --eval.exit_thresholds 0.9,never --checkpoint " + ckpt.string()},
      {"eval", small + " --eval.exit_thresholds 0.8 --checkpoint " + ckpt.string()},
      {"zeroshot", "-c " + cfgdir + "/zeroshot.conf " + small},
      {"sweep", small + " --sweep.param lsm.u_th --sweep.values 0.8,1.2 --sweep.repeats 2"},
      {"ablate", small},
      {"cost", ""},
      {"rng-test", "--rows 64 --cols 64"},
  };
  ExperimentConfig probe;
  apply_environment(probe, [](const char* n) { return std::getenv(n); });
  const bool have_nmnist = !nmnist_root(probe).empty();
  if (have_nmnist) cmds.push_back({"import-nmnist", "--data.limit 20 --dest " + (root / "imported").string()});

  std::vector<std::string> failures;
  for (const auto& c : cmds) {
    std::string first;
    bool ok = true;
    for (int pass = 0; pass < 2 && ok; ++pass) {
      const fs::path out = root / c.name;
      fs::remove_all(out);
      if (c.name == "import-nmnist") fs::remove_all(root / "imported");
      const std::string line = fmt::format("\"{}\" {} {} --out \"{}\" > \"{}\" 2>&1", ctx.cli.string(), c.name, c.args,
                                           out.string(), (root / (c.name + ".log")).string());
      const int rc = std::system(line.c_str());
      if (rc != 0) {
        failures.push_back(c.name + " exited " + std::to_string(rc));
        ok = false;
        break;
      }
      const std::string text = slurp(out / "metrics.json");
      if (text.empty()) {
        failures.push_back(c.name + " wrote no metrics.json");
        ok = false;
      } else if (pass == 0) {
        first = text;
      } else if (text != first) {
        failures.push_back(c.name + " metrics differ");
        ok = false;
      }
    }
    // eval consumes the checkpoint written by train; keep it stable.
  }
  std::string detail = fmt::format("{} commands rerun{}", cmds.size(), have_nmnist ? "" : ", import-nmnist not run (dataset absent)");
  for (const auto& f : failures) detail += "; " + f;
  return verdict(failures.empty(), detail);
}

struct Criterion {
  int id;
  std::string name;
  std::function<Outcome(const Context&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  Context ctx;
  int only = 0;
  std::string cli, work, configs = LSMSIM_CONFIG_DIR;
  app.add_option("--cli", cli, "path to the lsmsim executable")->required();
  app.add_option("--work", work, "scratch directory")->required();
  app.add_option("--configs", configs, "directory with task configs");
  app.add_option("--only", only, "run one criterion");
  CLI11_PARSE(app, argc, argv);
  ctx.cli = fs::absolute(cli);
  ctx.work = fs::absolute(work);
  ctx.configs = configs;
  fs::create_directories(ctx.work);

  const std::vector<Criterion> all{
      {1, "gradient suite", gradient_suite},
      {2, "oracle equivalence", oracle_equivalence},
      {3, "cost-model constants", cost_constants},
      {4, "op-count oracle", op_count_oracle},
      {5, "synthetic separability", temporal_separability},
      {6, "noise trends", noise_trends},
      {7, "early exit", early_exit},
      {8, "randomness", randomness},
      {9, "N-MNIST accuracy", nmnist},
      {10, "synthetic zero-shot", zero_shot},
      {11, "determinism", determinism},
  };
  bool any_fail = false, any_skip = false;
  for (const auto& c : all) {
    if (only != 0 && c.id != only) continue;
    Outcome o;
    try {
      o = c.run(ctx);
    } catch (const std::exception& e) {
      o = {Status::fail, std::string("exception: ") + e.what()};
    }
    const char* tag = o.status == Status::pass ? "PASS" : o.status == Status::skip ? "SKIP" : "FAIL";
    std::cout << fmt::format("[{}] {:>2}. {}: {}", tag, c.id, c.name, o.detail) << std::endl;
    any_fail = any_fail || o.status == Status::fail;
    any_skip = any_skip || o.status == Status::skip;
  }
  if (any_fail) return 1;
  return only != 0 && any_skip ? kExitSkipped : 0;
}
