#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include "lsmsim/config.hpp"
#include "lsmsim/dataset.hpp"
#include "lsmsim/error.hpp"
#include "lsmsim/experiments.hpp"
#include "lsmsim/synthetic.hpp"

using namespace lsmsim;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("lsmsim-harness-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("config keys round trip through get and set") {
  ExperimentConfig cfg;
  for (const auto& key : config_keys()) {
    const std::string v = get_config_value(cfg, key.name);
    ExperimentConfig copy;
    set_config_value(copy, key.name, v);
    CHECK_MESSAGE(get_config_value(copy, key.name) == v, key.name);
  }
  CHECK_THROWS_AS(set_config_value(cfg, "lsm.nope", "1"), ConfigError);
  CHECK_THROWS_AS(set_config_value(cfg, "lsm.h", "many"), ConfigError);
}

TEST_CASE("file then environment then explicit values") {
  const auto dir = scratch("precedence");
  {
    std::ofstream f(dir / "a.conf");
    f << "# comment\nlsm.h = 10\nlsm.decay = 0.5\ntrain.lr = 0.2\n";
  }
  ExperimentConfig cfg;
  apply_config_file(cfg, dir / "a.conf");
  CHECK(cfg.lsm.h == 10);
  const std::map<std::string, std::string> env{{"LSMSIM_LSM_DECAY", "0.7"}, {"LSMSIM_TRAIN_LR", "0.3"}};
  apply_environment(cfg, [&](const char* n) -> const char* {
    auto it = env.find(n);
    return it == env.end() ? nullptr : it->second.c_str();
  });
  set_config_value(cfg, "train.lr", "0.4");
  CHECK(cfg.lsm.h == 10);
  CHECK(cfg.lsm.decay == doctest::Approx(0.7));
  CHECK(cfg.train.lr == doctest::Approx(0.4));
  CHECK(env_name("data.train_per_class") == "LSMSIM_DATA_TRAIN_PER_CLASS");
}

TEST_CASE("malformed config file line is a config error") {
  const auto dir = scratch("malformed");
  {
    std::ofstream f(dir / "b.conf");
    f << "lsm.h 10\n";
  }
  ExperimentConfig cfg;
  CHECK_THROWS_AS(apply_config_file(cfg, dir / "b.conf"), ConfigError);
  CHECK_THROWS_AS(apply_config_file(cfg, dir / "missing.conf"), ConfigError);
}

TEST_CASE("validation rejects impossible settings") {
  ExperimentConfig cfg;
  cfg.lsm.h = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.noise.input = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("synthetic data depends only on the seed") {
  const auto tpl = rate_templates(3, 12, 0.25, 0.05, 0.5, 9);
  SyntheticTaskSpec spec{3, 12, 15, tpl, 4, 11};
  const auto a = gen_synthetic(spec), b = gen_synthetic(spec);
  REQUIRE(a.samples.size() == 12);
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    CHECK(a.samples[i].x == b.samples[i].x);
    CHECK(a.samples[i].label == i / 4);
  }
  spec.seed = 12;
  const auto c = gen_synthetic(spec);
  bool differs = false;
  for (std::size_t i = 0; i < a.samples.size(); ++i) differs = differs || !(a.samples[i].x == c.samples[i].x);
  CHECK(differs);
}

TEST_CASE("identical templates warn") {
  Matrix tpl(2, 4, 0.3);
  const auto d = gen_synthetic({2, 4, 5, tpl, 1, 0});
  CHECK_FALSE(d.warnings.empty());
}

TEST_CASE("temporal classes share channel rates and differ in order") {
  TemporalTaskSpec spec;
  spec.num_classes = 6;
  const auto orders = temporal_orders(spec);
  REQUIRE(orders.size() == 6);
  for (std::size_t a = 0; a < orders.size(); ++a)
    for (std::size_t b = a + 1; b < orders.size(); ++b) CHECK(orders[a] != orders[b]);
  const auto r0 = temporal_rates(spec, orders[0]), r1 = temporal_rates(spec, orders[1]);
  for (std::size_t u = 0; u < spec.channels; ++u) {
    double s0 = 0.0, s1 = 0.0;
    for (std::size_t t = 0; t < spec.steps; ++t) {
      s0 += r0(t, u);
      s1 += r1(t, u);
    }
    CHECK(s0 == doctest::Approx(s1));
  }
  spec.num_classes = 7;  // only 3! orders exist
  CHECK_THROWS(temporal_orders(spec));
}

TEST_CASE("paired modalities keep class centres across streams") {
  PairedTaskSpec spec;
  const auto a = gen_paired(spec, {0, 3}, 2, 1), b = gen_paired(spec, {0, 3}, 2, 1), c = gen_paired(spec, {0, 3}, 2, 2);
  REQUIRE(a.size() == 4);
  CHECK(a[0].vision == b[0].vision);
  CHECK(a[3].audio == b[3].audio);
  CHECK(a[2].label == 3);
  CHECK_FALSE(a[0].vision == c[0].vision);
  CHECK(a[0].audio.channels() == spec.audio_channels);
}

TEST_CASE("manifest round trip") {
  const auto dir = scratch("manifest");
  write_manifest(dir, {{"a.evt", 1, "train"}, {"b.evt", 0, "test"}});
  const auto m = read_manifest(dir);
  REQUIRE(m.size() == 2);
  CHECK(m[0].file == "a.evt");
  CHECK(m[1].label == 0);
  CHECK(m[1].split == "test");
}

TEST_CASE("missing N-MNIST is reported as missing") {
  ExperimentConfig cfg;
  cfg.data.source = "nmnist";
  cfg.data.path = (fs::temp_directory_path() / "lsmsim-no-such-dir").string();
  CHECK_THROWS_AS(load_dataset(cfg), DatasetMissing);
}

TEST_CASE("subsample keeps order and stride") {
  std::vector<ManifestEntry> e;
  for (std::size_t i = 0; i < 10; ++i) e.push_back({std::to_string(i), i, "train"});
  const auto s = subsample(e, 5);
  REQUIRE(s.size() == 5);
  for (std::size_t i = 1; i < s.size(); ++i) CHECK(s[i].label > s[i - 1].label);
  CHECK(subsample(e, 0).size() == 10);
}

TEST_CASE("repeat 0 is the config itself") {
  ExperimentConfig cfg;
  const auto r0 = repeat_config(cfg, 0), r1 = repeat_config(cfg, 1), r1b = repeat_config(cfg, 1);
  CHECK(r0.seed.weights == cfg.seed.weights);
  CHECK(r0.seed.data == cfg.seed.data);
  CHECK(r1.seed.weights != cfg.seed.weights);
  CHECK(r1.seed.train == r1b.seed.train);
}

TEST_CASE("sweep resumes without recomputing finished cells") {
  const auto dir = scratch("sweep");
  const auto csv = dir / "sweep.csv";
  ExperimentConfig cfg;
  cfg.sweep.param = "lsm.u_th";
  cfg.sweep.values = {"0.5", "1", "2"};
  cfg.sweep.repeats = 2;
  int calls = 0;
  auto worker = [&](const ExperimentConfig& c) {
    ++calls;
    SweepRow r;
    r.accuracy = c.lsm.u_th;
    if (c.lsm.u_th == 2.0 && calls < 10) throw std::runtime_error("boom");
    return r;
  };
  const auto first = run_sweep(cfg, csv, worker);
  CHECK(calls == 6);
  REQUIRE(first.rows.size() == 6);
  CHECK(first.rows[4].status == "error");
  CHECK(first.rows[0].accuracy == doctest::Approx(0.5));

  calls = 9;  // next failing cell now succeeds
  const auto second = run_sweep(cfg, csv, worker);
  CHECK(calls == 11);  // only the two failed cells rerun
  for (const auto& r : second.rows) CHECK(r.status == "ok");
  const auto rows = read_sweep_csv(csv);
  CHECK(rows.size() == 8);  // append only: error rows stay on disk

  const auto again = run_sweep(cfg, csv, worker);
  CHECK(calls == 11);
  CHECK(again.rows.size() == 6);
}

TEST_CASE("sweep with an unknown key fails before any work") {
  const auto dir = scratch("sweep-bad");
  ExperimentConfig cfg;
  cfg.sweep.param = "lsm.nope";
  cfg.sweep.values = {"1"};
  int calls = 0;
  CHECK_THROWS_AS(run_sweep(cfg, dir / "s.csv", [&](const ExperimentConfig&) {
                    ++calls;
                    return SweepRow{};
                  }),
                  ConfigError);
  CHECK(calls == 0);
}
