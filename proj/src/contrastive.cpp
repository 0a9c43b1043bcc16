#include "lsmsim/contrastive.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>

#include <fmt/format.h>

#include "lsmsim/error.hpp"
#include "lsmsim/rng.hpp"

namespace lsmsim {

std::string_view to_string(Modality m) { return m == Modality::vision ? "vision" : "audio"; }

namespace {

std::vector<double> row_norms(const Matrix& M, const char* which) {
  std::vector<double> n(M.rows);
  for (std::size_t i = 0; i < M.rows; ++i) {
    double s = 0.0;
    for (double v : M.row(i)) s += v * v;
    n[i] = std::sqrt(s);
    if (!(n[i] > 0.0) || !std::isfinite(n[i])) {
      throw Error(std::string("zero-norm or non-finite row ") + std::to_string(i) + " in " + which);
    }
  }
  return n;
}

Matrix normalize_rows(const Matrix& M, const std::vector<double>& norms) {
  Matrix out = M;
  for (std::size_t i = 0; i < M.rows; ++i) {
    for (double& v : out.row(i)) v /= norms[i];
  }
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

}  // namespace

Matrix cosine_similarity_matrix(const Matrix& A, const Matrix& B) {
  if (A.cols != B.cols) throw Error("cosine_similarity_matrix: embedding dimensions differ");
  const auto na = row_norms(A, "first batch");
  const auto nb = row_norms(B, "second batch");
  Matrix S(A.rows, B.rows);
  for (std::size_t v = 0; v < A.rows; ++v) {
    for (std::size_t a = 0; a < B.rows; ++a) S(v, a) = dot(A.row(v), B.row(a)) / (na[v] * nb[a]);
  }
  return S;
}

ContrastiveLossResult contrastive_loss(const Matrix& vision, const Matrix& audio, double temperature) {
  if (vision.rows == 0 || vision.rows != audio.rows || vision.cols != audio.cols) {
    throw Error("contrastive_loss: batches must be non-empty with equal shapes");
  }
  if (!(temperature > 0.0)) throw Error("contrastive_loss: temperature must be positive");
  const std::size_t n = vision.rows;
  const std::size_t d = vision.cols;
  const auto nv = row_norms(vision, "vision batch");
  const auto na = row_norms(audio, "audio batch");
  const Matrix zv = normalize_rows(vision, nv);
  const Matrix za = normalize_rows(audio, na);

  Matrix logits(n, n);
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t a = 0; a < n; ++a) logits(v, a) = dot(zv.row(v), za.row(a)) / temperature;
  }

  // dS accumulates ∂L/∂S; both directions contribute ½·(P − I)/(N·τ).
  Matrix dS(n, n);
  double loss_rows = 0.0;
  double loss_cols = 0.0;
  const double coef = 0.5 / (static_cast<double>(n) * temperature);
  std::vector<double> buf(n);
  for (std::size_t v = 0; v < n; ++v) {
    const auto r = softmax_xent(logits.row(v), v);
    loss_rows += r.loss;
    for (std::size_t a = 0; a < n; ++a) dS(v, a) += coef * r.grad[a];
  }
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t v = 0; v < n; ++v) buf[v] = logits(v, a);
    const auto r = softmax_xent(buf, a);
    loss_cols += r.loss;
    for (std::size_t v = 0; v < n; ++v) dS(v, a) += coef * r.grad[v];
  }

  ContrastiveLossResult out;
  out.loss = 0.5 * (loss_rows + loss_cols) / static_cast<double>(n);

  // Through ẑ = z/‖z‖: ∂L/∂z = (g − ẑ·⟨ẑ, g⟩)/‖z‖ with g = ∂L/∂ẑ.
  auto backprop = [&](const Matrix& own, const Matrix& other, const std::vector<double>& norms,
                      bool transpose) {
    Matrix grad(n, d);
    std::vector<double> g(d);
    for (std::size_t i = 0; i < n; ++i) {
      std::fill(g.begin(), g.end(), 0.0);
      for (std::size_t j = 0; j < n; ++j) {
        const double w = transpose ? dS(j, i) : dS(i, j);
        const auto o = other.row(j);
        for (std::size_t k = 0; k < d; ++k) g[k] += w * o[k];
      }
      const auto zi = own.row(i);
      const double proj = dot(zi, g);
      auto gi = grad.row(i);
      for (std::size_t k = 0; k < d; ++k) gi[k] = (g[k] - zi[k] * proj) / norms[i];
    }
    return grad;
  };
  out.grad_vision = backprop(zv, za, nv, false);
  out.grad_audio = backprop(za, zv, na, true);
  return out;
}

Matrix project(const LinearLayer& layer, const Matrix& X) {
  if (X.cols != layer.in_dim()) throw Error("project: feature dimension mismatch");
  Matrix Y(X.rows, layer.out_dim());
  for (std::size_t r = 0; r < X.rows; ++r) {
    const auto y = linear_forward(X.row(r), layer);
    std::copy(y.begin(), y.end(), Y.row(r).begin());
  }
  return Y;
}

namespace {

void accumulate_param_grads(const Matrix& X, const Matrix& dY, Matrix& gW, std::vector<double>& gb) {
  for (std::size_t r = 0; r < X.rows; ++r) {
    const auto x = X.row(r);
    const auto dy = dY.row(r);
    for (std::size_t o = 0; o < dy.size(); ++o) {
      auto w = gW.row(o);
      for (std::size_t i = 0; i < x.size(); ++i) w[i] += dy[o] * x[i];
      gb[o] += dy[o];
    }
  }
}

struct LayerOptimizer {
  Matrix vel_w;
  std::vector<double> vel_b;

  explicit LayerOptimizer(const LinearLayer& l) : vel_w(l.out_dim(), l.in_dim()), vel_b(l.out_dim(), 0.0) {}

  void apply(LinearLayer& layer, const Matrix& gW, const std::vector<double>& gb, const TrainConfig& cfg) {
    const bool mom = cfg.optimizer == Optimizer::momentum;
    for (std::size_t k = 0; k < gW.data.size(); ++k) {
      const double step = mom ? (vel_w.data[k] = cfg.momentum * vel_w.data[k] + gW.data[k]) : gW.data[k];
      layer.W.data[k] -= cfg.lr * step;
    }
    for (std::size_t o = 0; o < gb.size(); ++o) {
      const double step = mom ? (vel_b[o] = cfg.momentum * vel_b[o] + gb[o]) : gb[o];
      layer.b[o] -= cfg.lr * step;
    }
  }
};

}  // namespace

ContrastiveTrainResult train_contrastive(std::span<const PairedSample> pairs, LinearLayer proj_vision,
                                         LinearLayer proj_audio, const TrainConfig& cfg,
                                         double temperature) {
  cfg.validate();
  if (pairs.empty()) throw Error("train_contrastive: no training pairs");
  const std::size_t dv = proj_vision.in_dim();
  const std::size_t da = proj_audio.in_dim();
  if (proj_vision.out_dim() != proj_audio.out_dim()) {
    throw Error("train_contrastive: projection output dimensions differ");
  }
  for (const auto& p : pairs) {
    if (p.vision.size() != dv || p.audio.size() != da) {
      throw Error("train_contrastive: feature dimension does not match its projection layer");
    }
  }

  ContrastiveTrainResult res{std::move(proj_vision), std::move(proj_audio), {}, {}, {}};
  LayerOptimizer opt_v(res.vision);
  LayerOptimizer opt_a(res.audio);
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(cfg.seed, 0x434C4950 /* CLIP */));
  std::size_t degenerate_batches = 0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      const std::size_t n = stop - start;
      Matrix Xv(n, dv);
      Matrix Xa(n, da);
      for (std::size_t k = 0; k < n; ++k) {
        const auto& p = pairs[order[start + k]];
        std::copy(p.vision.begin(), p.vision.end(), Xv.row(k).begin());
        std::copy(p.audio.begin(), p.audio.end(), Xa.row(k).begin());
      }
      bool duplicated = false;
      for (std::size_t i = 0; i < n && !duplicated; ++i) {
        for (std::size_t j = i + 1; j < n && !duplicated; ++j) {
          duplicated = std::equal(Xv.row(i).begin(), Xv.row(i).end(), Xv.row(j).begin()) &&
                       std::equal(Xa.row(i).begin(), Xa.row(i).end(), Xa.row(j).begin());
        }
      }
      degenerate_batches += duplicated;

      const auto loss = contrastive_loss(project(res.vision, Xv), project(res.audio, Xa), temperature);
      epoch_loss += loss.loss;
      ++batches;
      Matrix gWv(res.vision.out_dim(), dv);
      Matrix gWa(res.audio.out_dim(), da);
      std::vector<double> gbv(res.vision.out_dim(), 0.0);
      std::vector<double> gba(res.audio.out_dim(), 0.0);
      accumulate_param_grads(Xv, loss.grad_vision, gWv, gbv);
      accumulate_param_grads(Xa, loss.grad_audio, gWa, gba);
      opt_v.apply(res.vision, gWv, gbv, cfg);
      opt_a.apply(res.audio, gWa, gba, cfg);
      for (std::size_t k = start; k < stop; ++k) res.classes_seen.insert(pairs[order[k]].cls);
    }
    res.loss_curve.push_back(epoch_loss / static_cast<double>(batches));
  }
  if (degenerate_batches > 0) {
    res.warnings.push_back(fmt::format(
        "{} mini-batch(es) contained duplicated identical pairs; their contrastive targets are degenerate",
        degenerate_batches));
  }
  return res;
}

Prototypes build_prototypes(const Matrix& embeddings, std::span<const std::size_t> labels,
                            std::span<const std::size_t> required) {
  if (labels.size() != embeddings.rows) throw Error("build_prototypes: one label per embedding required");
  std::map<std::size_t, std::pair<std::vector<double>, std::size_t>> sums;
  for (std::size_t c : required) sums.try_emplace(c, std::vector<double>(embeddings.cols, 0.0), 0);
  for (std::size_t r = 0; r < embeddings.rows; ++r) {
    auto& [sum, count] = sums.try_emplace(labels[r], std::vector<double>(embeddings.cols, 0.0), 0).first->second;
    const auto e = embeddings.row(r);
    for (std::size_t k = 0; k < e.size(); ++k) sum[k] += e[k];
    ++count;
  }
  if (sums.empty()) throw Error("build_prototypes: no classes");
  Prototypes p{{}, Matrix(sums.size(), embeddings.cols)};
  std::size_t row = 0;
  for (const auto& [cls, acc] : sums) {
    if (acc.second == 0) throw Error("build_prototypes: class " + std::to_string(cls) + " has no samples");
    p.class_ids.push_back(cls);
    auto dst = p.vectors.row(row++);
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = acc.first[k] / static_cast<double>(acc.second);
  }
  return p;
}

std::vector<std::size_t> zero_shot_classify(std::span<const double> query, const Prototypes& protos) {
  if (query.size() != protos.vectors.cols) throw Error("zero_shot_classify: query dimension mismatch");
  Matrix q(1, query.size());
  std::copy(query.begin(), query.end(), q.data.begin());
  const Matrix S = cosine_similarity_matrix(q, protos.vectors);
  std::vector<std::size_t> idx(protos.class_ids.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (S(0, a) != S(0, b)) return S(0, a) > S(0, b);
    return protos.class_ids[a] < protos.class_ids[b];
  });
  std::vector<std::size_t> ranked;
  ranked.reserve(idx.size());
  for (std::size_t i : idx) ranked.push_back(protos.class_ids[i]);
  return ranked;
}

double topk_accuracy(std::span<const std::vector<std::size_t>> rankings,
                     std::span<const std::size_t> truths, std::size_t k) {
  if (k == 0) throw Error("topk_accuracy: k must be >= 1");
  if (rankings.size() != truths.size() || rankings.empty()) {
    throw Error("topk_accuracy: need one non-empty ranking per truth");
  }
  std::size_t hits = 0;
  for (std::size_t q = 0; q < rankings.size(); ++q) {
    if (k > rankings[q].size()) {
      throw Error("topk_accuracy: k = " + std::to_string(k) + " exceeds the " +
                  std::to_string(rankings[q].size()) + " ranked classes");
    }
    const auto end = rankings[q].begin() + static_cast<std::ptrdiff_t>(k);
    hits += std::find(rankings[q].begin(), end, truths[q]) != end;
  }
  return static_cast<double>(hits) / static_cast<double>(rankings.size());
}

void write_embeddings_csv(std::ostream& out, std::span<const EmbeddingRow> rows) {
  const std::size_t d = rows.empty() ? 0 : rows.front().values.size();
  out << "id,class,modality";
  for (std::size_t k = 0; k < d; ++k) out << ",d" << k;
  out << '\n';
  for (const auto& r : rows) {
    if (r.values.size() != d) throw Error("write_embeddings_csv: ragged embedding rows");
    out << r.id << ',' << r.cls << ',' << to_string(r.modality);
    for (double v : r.values) out << ',' << fmt::format("{:.17g}", v);
    out << '\n';
  }
}

}  // namespace lsmsim
