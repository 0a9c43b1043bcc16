#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "lsmsim/error.hpp"
#include "lsmsim/randomness.hpp"
#include "lsmsim/rng.hpp"

using namespace lsmsim;

TEST_CASE("extract_bits thresholds at the median") {
  ConductanceArray a{2, 2, Matrix(2, 2), Forming::dense, 0, {}};
  a.g.data = {1, 2, 3, 4};
  CHECK(extract_bits(a) == BitString{0, 0, 1, 1});
  a.g.data = {4, 1, 3, 2};
  CHECK(extract_bits(a) == BitString{1, 0, 1, 0});
  a.g.data = {7, 7, 7, 7};
  CHECK(extract_bits(a) == BitString{0, 0, 0, 0});
  ConductanceArray one{1, 1, Matrix(1, 1), Forming::dense, 0, {}};
  CHECK_THROWS_AS(extract_bits(one), Error);
}

TEST_CASE("extract_bits on an even tie-free array gives exactly half ones") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto a = sample_conductance(16, 10 + 2 * seed, {}, Forming::dense, seed);
    const auto bits = extract_bits(a);
    // Order-statistics check: a cell is 1 iff it ranks in the upper half.
    std::vector<double> sorted = a.g.data;
    std::sort(sorted.begin(), sorted.end());
    const double upper_min = sorted[sorted.size() / 2];
    for (std::size_t k = 0; k < bits.size(); ++k) CHECK(bits[k] == (a.g.data[k] >= upper_min ? 1 : 0));
    CHECK(std::count(bits.begin(), bits.end(), 1) * 2 == static_cast<long>(bits.size()));
  }
}

TEST_CASE("monobit test") {
  BitString balanced(200);
  for (std::size_t k = 0; k < balanced.size(); ++k) balanced[k] = k % 2;
  CHECK(monobit_test(balanced).p_value == 1.0);

  const BitString ones(100, 1);
  const auto r = monobit_test(ones);
  CHECK(r.p_value == doctest::Approx(1.52397060483e-23).epsilon(1e-9));
  CHECK_FALSE(r.passed());

  CHECK_THROWS_AS(monobit_test(BitString(99, 1)), Error);

  int passes = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    BitString bits(10000);
    for (auto& b : bits) b = rng.bernoulli(0.5);
    passes += monobit_test(bits).passed();
  }
  CHECK(passes >= 95);
}

TEST_CASE("runs test") {
  const BitString ones(200, 1);
  CHECK_FALSE(runs_test(ones).applicable);
  CHECK_FALSE(runs_test(ones).passed());

  BitString alt(100);
  for (std::size_t k = 0; k < alt.size(); ++k) alt[k] = k % 2;
  const auto r = runs_test(alt);
  CHECK(r.applicable);
  CHECK(r.p_value == doctest::Approx(1.52397060483e-23).epsilon(1e-9));
  CHECK_FALSE(r.passed());

  int passes = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(1000 + seed);
    BitString bits(10000);
    for (auto& b : bits) b = rng.bernoulli(0.5);
    passes += runs_test(bits).passed();
  }
  CHECK(passes >= 95);
}
