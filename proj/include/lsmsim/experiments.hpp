#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "lsmsim/config.hpp"
#include "lsmsim/contrastive.hpp"
#include "lsmsim/cost_model.hpp"
#include "lsmsim/dataset.hpp"
#include "lsmsim/lsm.hpp"
#include "lsmsim/readout.hpp"

namespace lsmsim {

/// width parallel chains of depth stacked reservoirs. Every reservoir owns a
/// crossbar: the input window sits at rows [0, h), columns [0, in+1) and the
/// recurrent window right after it at columns [in+1, in+h+2).
struct Network {
  std::vector<std::vector<LsmConfig>> chains;
  std::size_t input_channels = 0;
  std::size_t feature_dim() const;
  std::size_t reservoirs() const;
};

/// Conductances come from seed.weights (one stream per reservoir, offset by
/// `stream` so several networks of one experiment stay independent). Write
/// noise is applied once at construction.
Network build_network(const ExperimentConfig& cfg, std::size_t input_channels, std::uint64_t stream = 0);

/// Concatenated spike counts of every reservoir, chain by chain.
SpikeCounts network_forward(const Network& net, const SpikeTensor& input, std::uint64_t trial_seed);

enum class FeatureKind { lsm, max_pool, avg_pool, sum_pool };
std::string_view to_string(FeatureKind kind);

/// Per-sample trial seed: drives input noise and read noise.
std::uint64_t sample_seed(const ExperimentConfig& cfg, std::uint64_t split_tag, std::size_t index);
inline constexpr std::uint64_t kTrainTag = 0x545241494E;
inline constexpr std::uint64_t kTestTag = 0x54455354;

/// The tensor actually presented to the network: loaded, then input noise.
SpikeTensor prepared_input(const ExperimentConfig& cfg, const Split& split, std::uint64_t tag, std::size_t i);

struct FeatureSet {
  std::vector<Sample> samples;
  std::uint64_t total_spikes = 0;  // reservoir output spikes (LSM features only)
};

/// LSM features are counts normalized by T. Pool features work on the input
/// tensor per channel: max (0/1), mean, and raw sum.
FeatureSet extract_features(const ExperimentConfig& cfg, const Network* net, const Split& split,
                            std::uint64_t tag, FeatureKind kind);

/// Per-feature affine rescaling fitted on training features. Without centring
/// each feature is divided by its root-mean-square, so an all-zero vector (a
/// silent prefix during early exit) still maps to logits equal to the bias.
/// With centring it is a z-score. Features that are constant zero keep unit
/// scale.
struct FeatureScaler {
  std::vector<double> mean;  // all zero without centring
  std::vector<double> inv_scale;
  static FeatureScaler fit(const std::vector<Sample>& data, bool center);
  void apply(std::vector<Sample>& data) const;
  /// Folds the transform into a layer trained on rescaled inputs so the result
  /// consumes raw features.
  LinearLayer fold(const LinearLayer& layer) const;
};

struct ExitPoint {
  double threshold = 0.0;
  double accuracy = 0.0;
  double mean_exit_step = 0.0;
  bool matches_baseline = true;  // every prediction equals the full-window one
};

struct SupervisedReport {
  EvalReport eval;
  EvalReport train_eval;
  LinearLayer model;  // consumes raw normalized counts
  std::vector<double> loss_curve;
  double mean_spikes = 0.0;
  std::vector<ExitPoint> early_exit;
  CostReport cost;
  std::size_t num_classes = 0;
  std::vector<std::string> warnings;
  nlohmann::json to_json() const;
};

SupervisedReport run_supervised(const ExperimentConfig& cfg);

/// Evaluates a trained readout on the test split, including early exit.
SupervisedReport run_eval(const ExperimentConfig& cfg, const LinearLayer& model);

struct AblationRow {
  FeatureKind kind = FeatureKind::lsm;
  double accuracy = 0.0;
  double delta_vs_lsm = 0.0;
  OpsCount ops;
};
struct AblationReport {
  std::vector<AblationRow> rows;
  nlohmann::json to_json() const;
};
AblationReport run_ablation(const ExperimentConfig& cfg);

struct SweepRow {
  std::size_t point = 0;
  std::string value;
  std::size_t repeat = 0;
  std::string status;  // ok or error
  double accuracy = 0.0;
  double mean_spikes = 0.0;
  std::string message;
};

/// The same experiment under repeat seed `repeat`: repeat 0 is the config
/// itself, later repeats re-derive all three seeds.
ExperimentConfig repeat_config(const ExperimentConfig& cfg, std::size_t repeat);

/// Configuration of one sweep cell: the swept key set to `value` and all three
/// seeds re-derived from the repeat index.
ExperimentConfig sweep_point_config(const ExperimentConfig& cfg, const std::string& value, std::size_t repeat);

/// Runs every grid point × repeat. Rows already recorded as ok in `csv` are
/// not recomputed; new rows are appended in grid order as they complete.
/// `worker` defaults to run_supervised accuracy.
struct SweepReport {
  std::vector<SweepRow> rows;  // grid order
  nlohmann::json to_json() const;
};
using SweepWorker = std::function<SweepRow(const ExperimentConfig&)>;
SweepReport run_sweep(const ExperimentConfig& cfg, const std::filesystem::path& csv, SweepWorker worker = {});
std::vector<SweepRow> read_sweep_csv(const std::filesystem::path& csv);

struct ZeroShotSplitReport {
  std::vector<std::size_t> classes;
  double top1 = 0.0;
  double topk = 0.0;
  std::size_t k = 1;
};
struct ZeroShotReport {
  ZeroShotSplitReport seen;
  ZeroShotSplitReport unseen;
  ZeroShotSplitReport baseline_seen;    // untrained projections
  ZeroShotSplitReport baseline_unseen;
  std::vector<double> loss_curve;
  std::vector<std::size_t> classes_seen;
  std::vector<EmbeddingRow> embeddings;  // trained projections, test split
  std::vector<std::string> warnings;
  nlohmann::json to_json() const;
};

/// Synthetic correlated modalities: classes [0, seen) train the projections,
/// classes [seen, seen+unseen) are held out. Audio queries are ranked against
/// vision prototypes of the same split.
ZeroShotReport run_zero_shot(const ExperimentConfig& cfg);

/// Analytic costs of the configured LSM-ANN against pooling and recurrent
/// baselines. Without measured activity the counter events use the h·T bound.
nlohmann::json run_cost(const ExperimentConfig& cfg);

}  // namespace lsmsim
