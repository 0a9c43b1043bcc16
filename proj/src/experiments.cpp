#include "lsmsim/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <sstream>
#include <thread>
#include <tuple>

#include <fmt/format.h>

#include "lsmsim/error.hpp"
#include "lsmsim/rng.hpp"
#include "lsmsim/synthetic.hpp"

namespace lsmsim {

std::size_t Network::feature_dim() const {
  std::size_t n = 0;
  for (const auto& chain : chains)
    for (const auto& layer : chain) n += layer.h;
  return n;
}

std::size_t Network::reservoirs() const {
  std::size_t n = 0;
  for (const auto& chain : chains) n += chain.size();
  return n;
}

Network build_network(const ExperimentConfig& cfg, std::size_t input_channels, std::uint64_t stream) {
  const auto& L = cfg.lsm;
  const ConductanceDist dist{L.cond_mean, L.cond_std, L.sparsity};
  const bool relative = cfg.noise.units == NoiseUnits::relative;
  const double read_std = relative ? cfg.noise.read * L.cond_std : cfg.noise.read;
  const double write_frac = relative ? cfg.noise.write * L.cond_std / L.cond_mean : cfg.noise.write;

  Network net;
  net.input_channels = input_channels;
  for (std::size_t w = 0; w < L.width; ++w) {
    std::vector<LsmConfig> chain;
    for (std::size_t d = 0; d < L.depth; ++d) {
      const std::size_t in = d == 0 ? input_channels : L.h;
      const std::uint64_t seed = derive_seed(cfg.seed.weights, stream, w * L.depth + d);
      auto arr = sample_conductance(std::max(L.array_size, L.h), std::max(L.array_size, in + L.h + 2), dist,
                                    L.forming, seed);
      if (write_frac > 0.0) arr = apply_write_noise(arr, write_frac, derive_seed(seed, 0x5752495445));
      auto shared = std::make_shared<const ConductanceArray>(std::move(arr));
      LsmConfig layer;
      layer.U = in;
      layer.h = L.h;
      layer.params = {L.u_th, L.decay, 0.0};
      layer.input = differential_weights(shared, {0, L.h}, {0, in + 1}, L.scale, read_std);
      layer.recurrent = differential_weights(shared, {0, L.h}, {in + 1, in + L.h + 2}, L.rec_scale, read_std);
      layer.validate();
      chain.push_back(std::move(layer));
    }
    net.chains.push_back(std::move(chain));
  }
  return net;
}

SpikeCounts network_forward(const Network& net, const SpikeTensor& input, std::uint64_t trial_seed) {
  SpikeCounts out;
  out.T = input.steps();
  for (std::size_t w = 0; w < net.chains.size(); ++w) {
    const auto c = deep_forward(input, net.chains[w], layer_trial_seed(trial_seed, w));
    out.o.insert(out.o.end(), c.o.begin(), c.o.end());
  }
  return out;
}

std::string_view to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::lsm: return "lsm";
    case FeatureKind::max_pool: return "max_pool";
    case FeatureKind::avg_pool: return "avg_pool";
    case FeatureKind::sum_pool: return "sum_pool";
  }
  return "?";
}

std::uint64_t sample_seed(const ExperimentConfig& cfg, std::uint64_t split_tag, std::size_t index) {
  return derive_seed(cfg.seed.data, split_tag, index);
}

namespace {

std::uint64_t read_seed(const ExperimentConfig& cfg, std::uint64_t tag, std::size_t i) {
  return derive_seed(sample_seed(cfg, tag, i), 0x52454144);
}

/// Calls fn(i) for i in [0, n) on `workers` threads; fn writes its own slot.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t k = 0; k < workers; ++k) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::vector<double> pool_features(const SpikeTensor& x, FeatureKind kind) {
  const auto counts = x.channel_counts();
  std::vector<double> f(counts.size());
  for (std::size_t c = 0; c < counts.size(); ++c) {
    switch (kind) {
      case FeatureKind::max_pool: f[c] = counts[c] > 0 ? 1.0 : 0.0; break;
      case FeatureKind::avg_pool: f[c] = static_cast<double>(counts[c]) / static_cast<double>(x.steps()); break;
      default: f[c] = static_cast<double>(counts[c]); break;
    }
  }
  return f;
}

}  // namespace

SpikeTensor prepared_input(const ExperimentConfig& cfg, const Split& split, std::uint64_t tag, std::size_t i) {
  auto x = split.load(i);
  if (cfg.noise.input > 0.0) {
    x = inject_input_noise(x, cfg.noise.input, derive_seed(sample_seed(cfg, tag, i), 0x4E4F495345));
  }
  return x;
}

FeatureSet extract_features(const ExperimentConfig& cfg, const Network* net, const Split& split,
                            std::uint64_t tag, FeatureKind kind) {
  if (kind == FeatureKind::lsm && !net) throw Error("extract_features: LSM features need a network");
  FeatureSet fs;
  fs.samples.resize(split.size());
  std::vector<std::uint64_t> spikes(split.size(), 0);
  parallel_for(split.size(), cfg.workers, [&](std::size_t i) {
    const auto x = prepared_input(cfg, split, tag, i);
    Sample& s = fs.samples[i];
    s.label = split.labels[i];
    if (kind == FeatureKind::lsm) {
      const auto counts = network_forward(*net, x, read_seed(cfg, tag, i));
      for (auto c : counts.o) spikes[i] += c;
      s.x = counts.normalized();
    } else {
      s.x = pool_features(x, kind);
    }
  });
  for (auto s : spikes) fs.total_spikes += s;
  return fs;
}

FeatureScaler FeatureScaler::fit(const std::vector<Sample>& data, bool center) {
  if (data.empty()) throw Error("FeatureScaler: no samples");
  const std::size_t d = data.front().x.size();
  const double n = static_cast<double>(data.size());
  FeatureScaler s;
  s.mean.assign(d, 0.0);
  s.inv_scale.assign(d, 1.0);
  if (center) {
    for (const auto& x : data)
      for (std::size_t k = 0; k < d; ++k) s.mean[k] += x.x[k];
    for (auto& m : s.mean) m /= n;
  }
  std::vector<double> sq(d, 0.0);
  for (const auto& x : data)
    for (std::size_t k = 0; k < d; ++k) sq[k] += (x.x[k] - s.mean[k]) * (x.x[k] - s.mean[k]);
  for (std::size_t k = 0; k < d; ++k) {
    const double spread = std::sqrt(sq[k] / n);
    if (spread > 1e-12) s.inv_scale[k] = 1.0 / spread;
  }
  return s;
}

void FeatureScaler::apply(std::vector<Sample>& data) const {
  for (auto& x : data)
    for (std::size_t k = 0; k < x.x.size(); ++k) x.x[k] = (x.x[k] - mean[k]) * inv_scale[k];
}

LinearLayer FeatureScaler::fold(const LinearLayer& layer) const {
  LinearLayer out = layer;
  for (std::size_t o = 0; o < layer.out_dim(); ++o) {
    double shift = 0.0;
    for (std::size_t k = 0; k < layer.in_dim(); ++k) {
      out.W(o, k) = layer.W(o, k) * inv_scale[k];
      shift += out.W(o, k) * mean[k];
    }
    out.b[o] = layer.b[o] - shift;
  }
  return out;
}

namespace {

/// Trains a readout on rescaled copies of the features and returns it
/// folded back onto raw features.
TrainResult fit_readout(const ExperimentConfig& cfg, const std::vector<Sample>& train, std::size_t classes) {
  auto data = train;
  const auto st = FeatureScaler::fit(data, false);
  st.apply(data);
  TrainConfig tc = cfg.train;
  tc.seed = cfg.seed.train;
  auto r = train_supervised(data, tc, classes);
  r.model = st.fold(r.model);
  return r;
}

std::size_t readout_macs(std::size_t features, std::size_t classes) { return features * classes + classes; }

CostReport supervised_cost(const ExperimentConfig& cfg, const Network& net, std::size_t classes,
                           double mean_spikes) {
  const auto ops = count_ops(lsm_ann_architecture(net.input_channels, cfg.lsm.h, cfg.data.steps, classes,
                                                  cfg.lsm.width, cfg.lsm.depth));
  const auto events = lsm_events(cfg.lsm.h, cfg.data.steps, static_cast<std::uint64_t>(std::llround(mean_spikes)),
                                 readout_macs(net.feature_dim(), classes), net.reservoirs());
  return hybrid_energy(ops, events, EnergyModel::reference());
}

void evaluate_test(const ExperimentConfig& cfg, const Dataset& data, const Network& net, SupervisedReport& rep) {
  const auto test = extract_features(cfg, &net, data.test, kTestTag, FeatureKind::lsm);
  rep.eval = evaluate(rep.model, test.samples);
  rep.mean_spikes = static_cast<double>(test.total_spikes) / static_cast<double>(std::max<std::size_t>(1, test.samples.size()));
  rep.cost = supervised_cost(cfg, net, rep.num_classes, rep.mean_spikes);

  if (cfg.exit_thresholds.empty()) return;
  if (net.reservoirs() != 1) throw ConfigError("early exit needs lsm.width = lsm.depth = 1");
  const auto& layer = net.chains.front().front();
  std::vector<std::size_t> baseline(test.samples.size());
  for (std::size_t i = 0; i < baseline.size(); ++i) baseline[i] = predict(rep.model, test.samples[i].x);
  for (double th : cfg.exit_thresholds) {
    std::vector<EarlyExitResult> res(test.samples.size());
    parallel_for(res.size(), cfg.workers, [&](std::size_t i) {
      res[i] = early_exit_infer(prepared_input(cfg, data.test, kTestTag, i), layer, read_seed(cfg, kTestTag, i),
                                rep.model, th);
    });
    ExitPoint p;
    p.threshold = th;
    std::size_t correct = 0, steps = 0;
    for (std::size_t i = 0; i < res.size(); ++i) {
      correct += res[i].label == data.test.labels[i];
      steps += res[i].exit_step;
      p.matches_baseline = p.matches_baseline && res[i].label == baseline[i];
    }
    p.accuracy = static_cast<double>(correct) / static_cast<double>(res.size());
    p.mean_exit_step = static_cast<double>(steps) / static_cast<double>(res.size());
    rep.early_exit.push_back(p);
  }
}

nlohmann::json threshold_json(double th) {
  return th == kNeverExit ? nlohmann::json("never") : nlohmann::json(th);
}

}  // namespace

nlohmann::json SupervisedReport::to_json() const {
  nlohmann::json j;
  j["accuracy"] = eval.accuracy;
  j["test"] = eval.to_json();
  if (!train_eval.confusion.empty()) j["train_accuracy"] = train_eval.accuracy;
  if (!loss_curve.empty()) {
    j["loss_curve"] = loss_curve;
    j["final_loss"] = loss_curve.back();
  }
  j["num_classes"] = num_classes;
  j["mean_spikes_per_sample"] = mean_spikes;
  nlohmann::json exits = nlohmann::json::array();
  for (const auto& p : early_exit) {
    exits.push_back({{"threshold", threshold_json(p.threshold)},
                     {"accuracy", p.accuracy},
                     {"mean_exit_step", p.mean_exit_step},
                     {"matches_full_window", p.matches_baseline}});
  }
  j["early_exit"] = exits;
  j["cost"] = cost.to_json();
  j["warnings"] = warnings;
  return j;
}

SupervisedReport run_supervised(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto data = load_dataset(cfg);
  ExperimentConfig run = cfg;
  run.data.steps = data.steps;
  const auto net = build_network(run, data.channels);
  const auto train = extract_features(run, &net, data.train, kTrainTag, FeatureKind::lsm);

  SupervisedReport rep;
  rep.num_classes = data.num_classes;
  rep.warnings = data.warnings;
  auto fit = fit_readout(run, train.samples, data.num_classes);
  rep.model = std::move(fit.model);
  rep.loss_curve = std::move(fit.loss_curve);
  rep.train_eval = evaluate(rep.model, train.samples);
  evaluate_test(run, data, net, rep);
  return rep;
}

SupervisedReport run_eval(const ExperimentConfig& cfg, const LinearLayer& model) {
  cfg.validate();
  const auto data = load_dataset(cfg);
  ExperimentConfig run = cfg;
  run.data.steps = data.steps;
  const auto net = build_network(run, data.channels);
  if (model.in_dim() != net.feature_dim()) {
    throw ConfigError("checkpoint expects " + std::to_string(model.in_dim()) + " features, network gives " +
                      std::to_string(net.feature_dim()));
  }
  SupervisedReport rep;
  rep.num_classes = std::max(data.num_classes, model.out_dim());
  rep.warnings = data.warnings;
  rep.model = model;
  evaluate_test(run, data, net, rep);
  return rep;
}

nlohmann::json AblationReport::to_json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& r : rows) {
    rows_json.push_back({{"features", std::string(to_string(r.kind))},
                         {"accuracy", r.accuracy},
                         {"delta_vs_lsm", r.delta_vs_lsm},
                         {"ops", r.ops.to_json()}});
  }
  return {{"rows", rows_json}};
}

AblationReport run_ablation(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto data = load_dataset(cfg);
  ExperimentConfig run = cfg;
  run.data.steps = data.steps;
  const auto net = build_network(run, data.channels);
  AblationReport rep;
  for (auto kind : {FeatureKind::lsm, FeatureKind::max_pool, FeatureKind::avg_pool, FeatureKind::sum_pool}) {
    const auto train = extract_features(run, &net, data.train, kTrainTag, kind);
    const auto test = extract_features(run, &net, data.test, kTestTag, kind);
    const auto fit = fit_readout(run, train.samples, data.num_classes);
    AblationRow row;
    row.kind = kind;
    row.accuracy = evaluate(fit.model, test.samples).accuracy;
    row.ops = kind == FeatureKind::lsm
                  ? count_ops(lsm_ann_architecture(data.channels, run.lsm.h, data.steps, data.num_classes,
                                                   run.lsm.width, run.lsm.depth))
                  : count_ops(pooling_ann_architecture(data.channels, data.steps, data.num_classes));
    rep.rows.push_back(std::move(row));
  }
  for (auto& r : rep.rows) r.delta_vs_lsm = r.accuracy - rep.rows.front().accuracy;
  return rep;
}

ExperimentConfig repeat_config(const ExperimentConfig& cfg, std::size_t repeat) {
  ExperimentConfig c = cfg;
  if (repeat > 0) {
    constexpr std::uint64_t kRepeat = 0x524550454154;
    c.seed.weights = derive_seed(cfg.seed.weights, kRepeat, repeat);
    c.seed.data = derive_seed(cfg.seed.data, kRepeat, repeat);
    c.seed.train = derive_seed(cfg.seed.train, kRepeat, repeat);
  }
  return c;
}

ExperimentConfig sweep_point_config(const ExperimentConfig& cfg, const std::string& value, std::size_t repeat) {
  ExperimentConfig c = repeat_config(cfg, repeat);
  set_config_value(c, cfg.sweep.param, value);
  c.workers = 1;
  return c;
}

namespace {

constexpr const char* kSweepHeader = "point,param,value,repeat,seed_weights,seed_data,seed_train,status,accuracy,mean_spikes,message";

std::string csv_safe(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ';';
  return s;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::vector<SweepRow> read_sweep_csv(const std::filesystem::path& csv) {
  std::vector<SweepRow> rows;
  std::ifstream in(csv);
  if (!in) return rows;
  std::string line;
  std::getline(in, line);
  if (line != kSweepHeader) throw DataError(csv.string() + ": not a sweep file (bad header)");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 11) continue;  // a torn final line from an interrupted run
    SweepRow r;
    try {
      r.point = std::stoul(cells[0]);
      r.value = cells[2];
      r.repeat = std::stoul(cells[3]);
      r.status = cells[7];
      r.accuracy = std::stod(cells[8]);
      r.mean_spikes = std::stod(cells[9]);
    } catch (const std::exception&) {
      continue;
    }
    r.message = cells[10];
    rows.push_back(r);
  }
  return rows;
}

nlohmann::json SweepReport::to_json() const {
  std::map<std::size_t, std::vector<const SweepRow*>> by_point;
  for (const auto& r : rows) by_point[r.point].push_back(&r);
  nlohmann::json points = nlohmann::json::array();
  for (const auto& [point, rs] : by_point) {
    double sum = 0.0, sq = 0.0;
    std::size_t ok = 0;
    for (const auto* r : rs) {
      if (r->status != "ok") continue;
      sum += r->accuracy;
      sq += r->accuracy * r->accuracy;
      ++ok;
    }
    const double mean = ok ? sum / static_cast<double>(ok) : 0.0;
    const double var = ok > 1 ? std::max(0.0, (sq - ok * mean * mean) / static_cast<double>(ok - 1)) : 0.0;
    points.push_back({{"point", point},
                      {"value", rs.front()->value},
                      {"mean_accuracy", ok ? nlohmann::json(mean) : nlohmann::json(nullptr)},
                      {"std_accuracy", std::sqrt(var)},
                      {"ok", ok},
                      {"failed", rs.size() - ok}});
  }
  return {{"points", points}};
}

SweepReport run_sweep(const ExperimentConfig& cfg, const std::filesystem::path& csv, SweepWorker worker) {
  cfg.validate();
  if (!worker) {
    worker = [](const ExperimentConfig& c) {
      const auto rep = run_supervised(c);
      SweepRow r;
      r.accuracy = rep.eval.accuracy;
      r.mean_spikes = rep.mean_spikes;
      return r;
    };
  }
  // Rejects an unknown key before any work starts.
  {
    ExperimentConfig probe = cfg;
    set_config_value(probe, cfg.sweep.param, cfg.sweep.values.front());
  }

  std::map<std::pair<std::size_t, std::size_t>, SweepRow> done;
  for (const auto& r : read_sweep_csv(csv))
    if (r.status == "ok") done[{r.point, r.repeat}] = r;

  struct Job {
    std::size_t point, repeat;
  };
  std::vector<Job> jobs;
  for (std::size_t p = 0; p < cfg.sweep.values.size(); ++p)
    for (std::size_t r = 0; r < cfg.sweep.repeats; ++r)
      if (!done.count({p, r})) jobs.push_back({p, r});

  const bool fresh = !std::filesystem::exists(csv);
  std::ofstream out(csv, std::ios::app);
  if (!out) throw DataError("cannot open " + csv.string() + " for appending");
  if (fresh) out << kSweepHeader << '\n' << std::flush;

  std::vector<std::optional<SweepRow>> results(jobs.size());
  std::mutex commit_mutex;
  std::size_t next_commit = 0;
  parallel_for(jobs.size(), cfg.workers, [&](std::size_t j) {
    const auto& job = jobs[j];
    const std::string& value = cfg.sweep.values[job.point];
    SweepRow row;
    ExperimentConfig c;
    try {
      c = sweep_point_config(cfg, value, job.repeat);
      row = worker(c);
      row.status = "ok";
    } catch (const std::exception& e) {
      row = SweepRow{};
      row.status = "error";
      row.message = e.what();
    }
    row.point = job.point;
    row.value = value;
    row.repeat = job.repeat;
    std::lock_guard lock(commit_mutex);
    results[j] = row;
    while (next_commit < results.size() && results[next_commit]) {
      const auto& r = *results[next_commit];
      const auto pc = sweep_point_config(cfg, cfg.sweep.values[r.point], r.repeat);
      out << fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", r.point, cfg.sweep.param, csv_safe(r.value), r.repeat,
                         pc.seed.weights, pc.seed.data, pc.seed.train, r.status, r.accuracy, r.mean_spikes,
                         csv_safe(r.message));
      out.flush();
      ++next_commit;
    }
  });

  SweepReport rep;
  for (auto& [key, r] : done) rep.rows.push_back(r);
  for (auto& r : results) rep.rows.push_back(*r);
  std::sort(rep.rows.begin(), rep.rows.end(), [](const SweepRow& a, const SweepRow& b) {
    return std::tie(a.point, a.repeat) < std::tie(b.point, b.repeat);
  });
  return rep;
}

nlohmann::json ZeroShotReport::to_json() const {
  auto split = [](const ZeroShotSplitReport& s) {
    return nlohmann::json{{"classes", s.classes}, {"top1", s.top1}, {"k", s.k}, {"topk", s.topk}};
  };
  return {{"seen", split(seen)},
          {"unseen", split(unseen)},
          {"baseline", {{"seen", split(baseline_seen)}, {"unseen", split(baseline_unseen)}}},
          {"loss_curve", loss_curve},
          {"classes_seen_in_training", classes_seen},
          {"warnings", warnings}};
}

namespace {

std::vector<Sample> modality_features(const ExperimentConfig& cfg, const Network& net,
                                      const std::vector<PairedTensor>& pairs, bool vision, std::uint64_t tag) {
  std::vector<Sample> out(pairs.size());
  parallel_for(pairs.size(), cfg.workers, [&](std::size_t i) {
    const std::uint64_t s = derive_seed(sample_seed(cfg, tag, i), vision ? 0x56 : 0x41);
    SpikeTensor x = vision ? pairs[i].vision : pairs[i].audio;
    if (cfg.noise.input > 0.0) x = inject_input_noise(x, cfg.noise.input, derive_seed(s, 0x4E4F495345));
    out[i].x = network_forward(net, x, derive_seed(s, 0x52454144)).normalized();
    out[i].label = pairs[i].label;
  });
  return out;
}

Matrix stack(const std::vector<Sample>& rows, const std::vector<std::size_t>& pick) {
  Matrix m(pick.size(), rows.front().x.size());
  for (std::size_t r = 0; r < pick.size(); ++r) std::ranges::copy(rows[pick[r]].x, m.row(r).begin());
  return m;
}

ZeroShotSplitReport score_split(const LinearLayer& pv, const LinearLayer& pa, const std::vector<Sample>& vis,
                                const std::vector<Sample>& aud, const std::vector<std::size_t>& classes) {
  std::vector<std::size_t> pick, labels;
  for (std::size_t i = 0; i < vis.size(); ++i) {
    if (std::ranges::find(classes, vis[i].label) != classes.end()) {
      pick.push_back(i);
      labels.push_back(vis[i].label);
    }
  }
  const Matrix ev = project(pv, stack(vis, pick));
  const Matrix ea = project(pa, stack(aud, pick));
  const auto protos = build_prototypes(ev, labels, classes);
  std::vector<std::vector<std::size_t>> rankings;
  for (std::size_t r = 0; r < ea.rows; ++r) rankings.push_back(zero_shot_classify(ea.row(r), protos));
  ZeroShotSplitReport rep;
  rep.classes = classes;
  rep.k = std::min<std::size_t>(3, classes.size());
  rep.top1 = topk_accuracy(rankings, labels, 1);
  rep.topk = topk_accuracy(rankings, labels, rep.k);
  return rep;
}

}  // namespace

ZeroShotReport run_zero_shot(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto& z = cfg.zeroshot;
  PairedTaskSpec spec;
  spec.num_classes = z.seen + z.unseen;
  spec.latent = z.latent;
  spec.vision_channels = cfg.data.channels;
  spec.audio_channels = std::max<std::size_t>(1, cfg.data.channels * 3 / 4);
  spec.steps = cfg.data.steps;
  spec.low = cfg.data.rate_low;
  spec.high = cfg.data.rate_high;
  spec.jitter = z.latent_noise;
  spec.seed = derive_seed(cfg.seed.data, 0x5A45524F);

  std::vector<std::size_t> seen, unseen, all;
  for (std::size_t c = 0; c < spec.num_classes; ++c) {
    (c < z.seen ? seen : unseen).push_back(c);
    all.push_back(c);
  }
  const auto train_pairs = gen_paired(spec, seen, cfg.data.train_per_class, 1);
  const auto test_pairs = gen_paired(spec, all, cfg.data.test_per_class, 2);
  for (const auto& p : train_pairs) {
    if (p.label >= z.seen) {
      throw Error("held-out class " + std::to_string(p.label) + " leaked into the training pairs");
    }
  }

  const auto vnet = build_network(cfg, spec.vision_channels, 0x56495349);
  const auto anet = build_network(cfg, spec.audio_channels, 0x41554449);
  auto vtrain = modality_features(cfg, vnet, train_pairs, true, kTrainTag);
  auto atrain = modality_features(cfg, anet, train_pairs, false, kTrainTag);
  auto vtest = modality_features(cfg, vnet, test_pairs, true, kTestTag);
  auto atest = modality_features(cfg, anet, test_pairs, false, kTestTag);
  const auto vst = FeatureScaler::fit(vtrain, true);
  const auto ast = FeatureScaler::fit(atrain, true);
  for (auto* s : {&vtrain, &vtest}) vst.apply(*s);
  for (auto* s : {&atrain, &atest}) ast.apply(*s);

  std::vector<PairedSample> pairs(train_pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) pairs[i] = {vtrain[i].x, atrain[i].x, train_pairs[i].label};

  const auto pv0 = LinearLayer::random(z.proj_dim, vnet.feature_dim(), derive_seed(cfg.seed.train, 0x5056));
  const auto pa0 = LinearLayer::random(z.proj_dim, anet.feature_dim(), derive_seed(cfg.seed.train, 0x5041));
  TrainConfig tc = cfg.train;
  tc.seed = cfg.seed.train;
  auto trained = train_contrastive(pairs, pv0, pa0, tc, z.temperature);
  for (std::size_t c : trained.classes_seen) {
    if (c >= z.seen) throw Error("held-out class " + std::to_string(c) + " contributed to a training update");
  }

  ZeroShotReport rep;
  rep.seen = score_split(trained.vision, trained.audio, vtest, atest, seen);
  rep.unseen = score_split(trained.vision, trained.audio, vtest, atest, unseen);
  rep.baseline_seen = score_split(pv0, pa0, vtest, atest, seen);
  rep.baseline_unseen = score_split(pv0, pa0, vtest, atest, unseen);
  rep.loss_curve = trained.loss_curve;
  rep.classes_seen.assign(trained.classes_seen.begin(), trained.classes_seen.end());
  rep.warnings = trained.warnings;

  std::vector<std::size_t> every(test_pairs.size());
  std::iota(every.begin(), every.end(), 0);
  const Matrix ev = project(trained.vision, stack(vtest, every));
  const Matrix ea = project(trained.audio, stack(atest, every));
  for (std::size_t i = 0; i < test_pairs.size(); ++i) {
    const std::string id = fmt::format("test-{}", i);
    rep.embeddings.push_back({id, test_pairs[i].label, Modality::vision, {ev.row(i).begin(), ev.row(i).end()}});
    rep.embeddings.push_back({id, test_pairs[i].label, Modality::audio, {ea.row(i).begin(), ea.row(i).end()}});
  }
  return rep;
}

nlohmann::json run_cost(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::size_t U = cfg.data.source == "nmnist" ? cfg.data.crop * cfg.data.crop : cfg.data.channels;
  const std::size_t h = cfg.lsm.h, T = cfg.data.steps;
  const std::size_t classes = cfg.data.source == "nmnist" ? 10 : cfg.data.classes;
  const std::size_t reservoirs = cfg.lsm.width * cfg.lsm.depth;

  const auto lsm = count_ops(lsm_ann_architecture(U, h, T, classes, cfg.lsm.width, cfg.lsm.depth));
  nlohmann::json archs = nlohmann::json::array();
  auto add = [&](const Architecture& a) {
    const auto ops = count_ops(a);
    archs.push_back({{"name", a.name},
                     {"ops", ops.to_json()},
                     {"train_cost_vs_lsm", cost_ratio(ops, lsm, CostBasis::backward)},
                     {"forward_cost_vs_lsm", cost_ratio(ops, lsm, CostBasis::forward)}});
  };
  add(lsm_ann_architecture(U, h, T, classes, cfg.lsm.width, cfg.lsm.depth));
  add(pooling_ann_architecture(U, T, classes));
  for (auto kind : {LayerKind::rnn, LayerKind::srnn, LayerKind::gru, LayerKind::lstm}) {
    add(recurrent_ann_architecture(kind, U, h, T, classes));
  }
  const std::uint64_t spike_bound = static_cast<std::uint64_t>(h) * T * reservoirs;
  const auto events = lsm_events(h, T, spike_bound, readout_macs(h * reservoirs, classes), reservoirs);
  const auto energy = hybrid_energy(lsm, events, EnergyModel::reference());
  return {{"architectures", archs},
          {"energy", energy.to_json()},
          {"counter_increments", "upper bound h*T per reservoir"},
          {"dims", {{"U", U}, {"h", h}, {"T", T}, {"classes", classes}, {"reservoirs", reservoirs}}}};
}

}  // namespace lsmsim
