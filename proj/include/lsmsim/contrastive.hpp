#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lsmsim/matrix.hpp"
#include "lsmsim/readout.hpp"

namespace lsmsim {

enum class Modality { vision, audio };

std::string_view to_string(Modality m);

/// Rows are projected features of one modality.
struct EmbeddingBatch {
  Matrix Z;
  Modality modality = Modality::vision;
};

/// S(v, a) = ⟨A_v, B_a⟩ / (‖A_v‖·‖B_a‖). Throws on a zero-norm row.
Matrix cosine_similarity_matrix(const Matrix& A, const Matrix& B);

struct ContrastiveLossResult {
  double loss = 0.0;
  Matrix grad_vision;  // ∂L/∂Z_v
  Matrix grad_audio;   // ∂L/∂Z_a
};

/// Symmetric contrastive loss over N matched pairs (row i of each batch):
/// L = ½·(mean_v CE(softmax(S_v·/τ), v) + mean_a CE(softmax(S_·a/τ), a)).
/// Gradients are taken through the cosine normalization.
ContrastiveLossResult contrastive_loss(const Matrix& vision, const Matrix& audio,
                                       double temperature = 1.0);

/// X·Wᵀ + b for a batch of row vectors.
Matrix project(const LinearLayer& layer, const Matrix& X);

struct PairedSample {
  std::vector<double> vision;
  std::vector<double> audio;
  std::size_t cls = 0;
};

struct ContrastiveTrainResult {
  LinearLayer vision;
  LinearLayer audio;
  std::vector<double> loss_curve;
  /// Classes of every sample that contributed a gradient to any update.
  std::set<std::size_t> classes_seen;
  std::vector<std::string> warnings;
};

/// Trains only the two projection layers. Each epoch shuffles the pairs and
/// walks them in mini-batches of cfg.batch_size.
ContrastiveTrainResult train_contrastive(std::span<const PairedSample> pairs, LinearLayer proj_vision,
                                         LinearLayer proj_audio, const TrainConfig& cfg,
                                         double temperature = 1.0);

/// One mean embedding per class, ordered by class id.
struct Prototypes {
  std::vector<std::size_t> class_ids;
  Matrix vectors;
};

/// `required` lists classes that must receive a prototype; a listed class with
/// no sample is an error. Classes present in `labels` are always included.
Prototypes build_prototypes(const Matrix& embeddings, std::span<const std::size_t> labels,
                            std::span<const std::size_t> required = {});

/// Class ids by descending cosine similarity to the query, ties by id.
std::vector<std::size_t> zero_shot_classify(std::span<const double> query, const Prototypes& protos);

/// Fraction of queries whose truth is within the first k ranks.
double topk_accuracy(std::span<const std::vector<std::size_t>> rankings,
                     std::span<const std::size_t> truths, std::size_t k);

struct EmbeddingRow {
  std::string id;
  std::size_t cls = 0;
  Modality modality = Modality::vision;
  std::vector<double> values;
};

/// CSV with header id,class,modality,d0..dD−1.
void write_embeddings_csv(std::ostream& out, std::span<const EmbeddingRow> rows);

}  // namespace lsmsim
