#include <doctest.h>

#include <cmath>
#include <sstream>

#include "lsmsim/contrastive.hpp"
#include "lsmsim/error.hpp"
#include "lsmsim/rng.hpp"
#include "oracles.hpp"

using namespace lsmsim;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(r, c);
  for (auto& v : m.data) v = rng.normal();
  return m;
}

}  // namespace

TEST_CASE("cosine similarity basics") {
  Matrix a(2, 2), b(2, 2);
  a.data = {1, 0, 0, 2};
  b.data = {3, 0, -1, 0};
  const auto s = cosine_similarity_matrix(a, b);
  CHECK(s(0, 0) == doctest::Approx(1.0));
  CHECK(s(0, 1) == doctest::Approx(-1.0));
  CHECK(s(1, 0) == doctest::Approx(0.0));
  const auto self = cosine_similarity_matrix(random_matrix(5, 4, 1), random_matrix(5, 4, 1));
  for (std::size_t i = 0; i < 5; ++i) CHECK(self(i, i) == doctest::Approx(1.0));
  Matrix z(2, 2);
  z.data = {1, 1, 0, 0};
  CHECK_THROWS_WITH_AS(cosine_similarity_matrix(z, b), doctest::Contains("row 1"), Error);
}

TEST_CASE("single pair has zero loss") {
  const auto r = contrastive_loss(random_matrix(1, 5, 1), random_matrix(1, 5, 2));
  CHECK(r.loss == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("contrastive loss matches the oracle") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::size_t n = 2 + seed % 6, d = 2 + seed % 5;
    const auto v = random_matrix(n, d, seed);
    const auto a = random_matrix(n, d, 100 + seed);
    const double tau = 0.1 + 0.1 * static_cast<double>(seed % 5);
    CHECK(contrastive_loss(v, a, tau).loss == doctest::Approx(oracle::plain_contrastive(v, a, tau)).epsilon(1e-10));
  }
}

TEST_CASE("contrastive gradients match finite differences") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto v = random_matrix(4, 3, seed);
    const auto a = random_matrix(4, 3, 50 + seed);
    const double tau = 0.5;
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
    for (std::size_t k = 0; k < fv.size(); ++k) CHECK(oracle::rel_error(r.grad_vision.data[k], fv[k]) < 1e-6);
    for (std::size_t k = 0; k < fa.size(); ++k) CHECK(oracle::rel_error(r.grad_audio.data[k], fa[k]) < 1e-6);
  }
}

TEST_CASE("loss is symmetric and permutation invariant") {
  const auto v = random_matrix(6, 4, 3);
  const auto a = random_matrix(6, 4, 4);
  CHECK(contrastive_loss(v, a).loss == doctest::Approx(contrastive_loss(a, v).loss).epsilon(1e-13));
  const std::size_t perm[] = {3, 0, 5, 1, 4, 2};
  Matrix pv(6, 4), pa(6, 4);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t k = 0; k < 4; ++k) {
      pv(i, k) = v(perm[i], k);
      pa(i, k) = a(perm[i], k);
    }
  CHECK(contrastive_loss(pv, pa).loss == doctest::Approx(contrastive_loss(v, a).loss).epsilon(1e-13));
}

TEST_CASE("perfectly aligned pairs approach zero loss at low temperature") {
  Matrix e(3, 3);
  e.data = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  CHECK(contrastive_loss(e, e, 0.01).loss < 1e-30 + 1e-40);
  CHECK(contrastive_loss(e, e, 1.0).loss == doctest::Approx(std::log(1.0 + 2.0 * std::exp(-1.0))));
  CHECK_THROWS_AS(contrastive_loss(e, e, 0.0), Error);
  CHECK_THROWS_AS(contrastive_loss(e, random_matrix(2, 3, 1)), Error);
}

namespace {

std::vector<PairedSample> paired(std::size_t per_class, std::size_t classes, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Matrix> mix_v, mix_a;
  std::vector<PairedSample> out;
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t n = 0; n < per_class; ++n) {
      PairedSample p;
      p.cls = c;
      p.vision.assign(6, 0.0);
      p.audio.assign(5, 0.0);
      for (std::size_t k = 0; k < 6; ++k) p.vision[k] = (k == c ? 2.0 : 0.0) + rng.normal(0.0, 0.2);
      for (std::size_t k = 0; k < 5; ++k) p.audio[k] = ((4 - k) == c ? 2.0 : 0.0) + rng.normal(0.0, 0.2);
      out.push_back(std::move(p));
    }
  }
  return out;
}

}  // namespace

TEST_CASE("contrastive training aligns matched pairs") {
  const auto data = paired(20, 4, 1);
  TrainConfig cfg;
  cfg.lr = 0.5;
  cfg.epochs = 40;
  cfg.batch_size = 16;
  cfg.seed = 2;
  const auto pv = LinearLayer::random(4, 6, 3);
  const auto pa = LinearLayer::random(4, 5, 4);
  const auto r = train_contrastive(data, pv, pa, cfg, 0.5);
  CHECK(r.loss_curve.back() < r.loss_curve.front());
  CHECK(r.classes_seen == std::set<std::size_t>{0, 1, 2, 3});

  Matrix V(data.size(), 6), A(data.size(), 5);
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::copy(data[i].vision.begin(), data[i].vision.end(), V.row(i).begin());
    std::copy(data[i].audio.begin(), data[i].audio.end(), A.row(i).begin());
  }
  auto mean_diag = [&](const LinearLayer& lv, const LinearLayer& la) {
    const auto s = cosine_similarity_matrix(project(lv, V), project(la, A));
    double d = 0.0, all = 0.0;
    for (std::size_t i = 0; i < s.rows; ++i) {
      d += s(i, i);
      for (std::size_t j = 0; j < s.cols; ++j) all += s(i, j);
    }
    return d / s.rows - all / (s.rows * s.cols);
  };
  CHECK(mean_diag(r.vision, r.audio) - mean_diag(pv, pa) >= 0.2);

  const auto again = train_contrastive(data, pv, pa, cfg, 0.5);
  CHECK(again.vision == r.vision);
  CHECK(again.audio == r.audio);

  cfg.lr = 0.0;
  const auto frozen = train_contrastive(data, pv, pa, cfg, 0.5);
  CHECK(frozen.vision == pv);
  CHECK(frozen.audio == pa);
}

TEST_CASE("contrastive training warns on duplicated pairs") {
  auto data = paired(4, 2, 5);
  data.push_back(data[0]);
  TrainConfig cfg;
  cfg.epochs = 1;
  const auto r = train_contrastive(data, LinearLayer::random(3, 6, 1), LinearLayer::random(3, 5, 2), cfg);
  CHECK_FALSE(r.warnings.empty());
}

TEST_CASE("prototypes and zero-shot ranking") {
  Matrix emb(5, 2);
  emb.data = {1, 0, 3, 0, 0, 1, 0, 2, -1, 0};
  const std::vector<std::size_t> labels{7, 7, 2, 2, 4};
  const auto p = build_prototypes(emb, labels);
  CHECK(p.class_ids == std::vector<std::size_t>{2, 4, 7});
  CHECK(p.vectors(2, 0) == 2.0);
  CHECK(p.vectors(0, 1) == 1.5);

  const std::vector<double> q{1.0, 0.1};
  CHECK(zero_shot_classify(q, p) == std::vector<std::size_t>{7, 2, 4});
  // Equal similarity goes to the smaller id.
  const std::vector<double> diag{1.0, 1.0};
  CHECK(zero_shot_classify(diag, p).front() == 2);

  const std::vector<std::size_t> req{9};
  CHECK_THROWS_AS(build_prototypes(emb, labels, req), Error);
}

TEST_CASE("topk accuracy") {
  const std::vector<std::vector<std::size_t>> ranks{{1, 0, 2}, {0, 2, 1}, {2, 1, 0}};
  const std::vector<std::size_t> truth{1, 2, 0};
  CHECK(topk_accuracy(ranks, truth, 1) == doctest::Approx(1.0 / 3.0));
  CHECK(topk_accuracy(ranks, truth, 2) == doctest::Approx(2.0 / 3.0));
  CHECK(topk_accuracy(ranks, truth, 3) == 1.0);
  CHECK_THROWS_AS(topk_accuracy(ranks, truth, 4), Error);
}

TEST_CASE("embeddings csv layout") {
  std::vector<EmbeddingRow> rows{{"s0", 3, Modality::audio, {0.5, -1.0}}};
  std::stringstream ss;
  write_embeddings_csv(ss, rows);
  std::string header, line;
  std::getline(ss, header);
  std::getline(ss, line);
  CHECK(header == "id,class,modality,d0,d1");
  CHECK(line.rfind("s0,3,audio,0.5,", 0) == 0);
}
