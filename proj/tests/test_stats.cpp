#include <catch2/catch_amalgamated.hpp>

#include "skillfuse/random.hpp"
#include "skillfuse/stats.hpp"

using namespace skillfuse;
using Catch::Approx;

// Reference values below were produced once with scipy.stats 1.15 and frozen.

namespace {

const std::vector<double> kEleven{148, 154, 158, 160, 161, 162, 166, 170, 182, 195, 236};

const std::vector<double> kThirty{0.345584,  0.821618,  0.330437,  -1.303157, 0.905356,  0.446375,  -0.536953, 0.581118,
                                  0.364572,  0.294132,  0.028422,  0.546713,  -0.736454, -0.16291,  -0.482119, 0.598846,
                                  0.039722,  -0.292457, -0.781908, -0.257192, 0.008142,  -0.275603, 1.294064,  1.006724,
                                  -2.711162, -1.889013, -0.174772, -0.42219,  0.213643,  0.217322};

const std::vector<double> kLarge25{0.5012,  0.7987,  0.2259,  -0.3906, 0.0453,  -0.4916, 0.5601,  1.8402, 0.0078,
                                   -0.1205, 0.9898,  0.8569,  0.6054,  -0.4305, 0.4707,  1.1953,  -0.8442, 0.0424,
                                   -1.4012, -0.7895, -1.3417, 0.2649,  -0.7674, 0.7713,  0.6568};
const std::vector<double> kLarge30{-0.1869, -2.5168, -0.5387, -0.0485, 0.1133,  -1.5301, -0.4778, -0.9785,
                                   -0.8088, 1.0609,  -0.8075, -0.0325, 0.8844,  -0.5836, -0.1117, 0.1105,
                                   0.0638,  -1.2251, 0.0761,  1.3588,  -1.5471, 0.8594,  0.1194,  -0.6415,
                                   2.0004,  0.7623,  -1.1993, 0.0745,  0.5767,  -0.1888};

std::vector<double> seq(double start, double step, int n) {
  std::vector<double> v;
  for (int i = 0; i < n; ++i) v.push_back(start + step * i);
  return v;
}

// Exhaustive one-sided permutation p-value of the U statistic.
double brute_force_p(const std::vector<double>& hi, const std::vector<double>& lo) {
  std::vector<double> pooled = hi;
  pooled.insert(pooled.end(), lo.begin(), lo.end());
  const std::size_t n = pooled.size(), n1 = hi.size();
  const double observed = mann_whitney_u(hi, lo);
  std::size_t total = 0, tail = 0;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != n1) continue;
    std::vector<double> x, y;
    for (std::size_t i = 0; i < n; ++i) ((mask >> i) & 1u ? x : y).push_back(pooled[i]);
    ++total;
    if (mann_whitney_u(x, y) >= observed - 1e-12) ++tail;
  }
  return static_cast<double>(tail) / static_cast<double>(total);
}

}  // namespace

TEST_CASE("type-7 quantiles and Tukey fences", "[assess][tukey]") {
  const std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8, 9, 100};
  const auto f = tukey_bounds(v);
  REQUIRE(f.q1 == Approx(3.25).margin(1e-12));
  REQUIRE(f.q3 == Approx(7.75).margin(1e-12));
  REQUIRE(f.upper == Approx(14.5).margin(1e-12));
  REQUIRE(tukey_fences(v) == std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9});

  const std::vector<double> same(7, 0.42);
  REQUIRE(tukey_fences(same) == same);
  const std::vector<double> calm{1, 2, 3, 4, 5};
  REQUIRE(tukey_fences(calm) == calm);
  REQUIRE_THROWS_AS(tukey_fences(std::vector<double>{1, 2, 3}), std::invalid_argument);
}

TEST_CASE("Tukey fences: a second pass only tightens", "[assess][tukey][property]") {
  // Quartiles are recomputed on the kept values, so a second pass can remove more.
  const std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8, 9, 15, 100};
  REQUIRE(tukey_fences(v).size() == 10);
  REQUIRE(tukey_fences(tukey_fences(v)).size() == 9);

  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(4 + rng.below(60));
    for (double& x : v) x = rng.normal() * (rng.uniform() < 0.1 ? 20.0 : 1.0);
    const auto once = tukey_fences(v);
    if (once.size() < 4) continue;
    const auto twice = tukey_fences(once);
    REQUIRE(twice.size() <= once.size());
    if (twice.size() == once.size()) REQUIRE(twice == once);
  }
}

TEST_CASE("Shapiro-Wilk against reference values", "[assess][shapiro]") {
  struct Case {
    std::vector<double> x;
    double w, p;
  };
  const std::vector<Case> cases{
      {kEleven, 0.7888146948631716, 0.006703814061898823},
      {seq(1, 1, 20), 0.9603751832429884, 0.5513717457916771},
      {{1, 2, 4}, 0.9642857142857142, 0.6368868450289689},
      {{1, 2, 3, 4, 10}, 0.8357883166461942, 0.1536125843490888},
      {{0.5, 1.2, 3.3, 0.1, 9.0, 2.2, 2.5, 4.0}, 0.8490137010905037, 0.09310093537905313},
      {kThirty, 0.9156725703723461, 0.02074263296497945},
  };
  for (const auto& c : cases) {
    const auto r = shapiro_wilk(c.x);
    REQUIRE(r.w == Approx(c.w).margin(1e-6));
    REQUIRE(r.p == Approx(c.p).margin(1e-5));
  }
  REQUIRE(shapiro_wilk(kEleven).p < 0.05);
  REQUIRE(shapiro_wilk(seq(1, 1, 20)).w > 0.95);
  REQUIRE_THROWS_AS(shapiro_wilk(std::vector<double>{1, 2}), std::invalid_argument);
  REQUIRE_THROWS_AS(shapiro_wilk(std::vector<double>(5, 3.0)), std::domain_error);
}

TEST_CASE("Shapiro-Wilk is location and scale invariant", "[assess][shapiro][property]") {
  std::vector<double> y;
  for (double v : kThirty) y.push_back(3.0 * v - 7.0);
  REQUIRE(shapiro_wilk(y).w == Approx(shapiro_wilk(kThirty).w).margin(1e-12));
}

TEST_CASE("Mann-Whitney U equals the pairwise count", "[assess][mannwhitney]") {
  const std::vector<double> a{1, 2, 3, 4, 5}, b{3, 4, 5, 6, 7};
  REQUIRE(mann_whitney_u(a, b) == 4.5);
  REQUIRE(mann_whitney_u(b, a) == 20.5);
  const auto r = mann_whitney_greater(b, a);
  REQUIRE(r.statistic == 20.5);
  REQUIRE(r.p_value == Approx(16.0 / 252.0).margin(1e-12));

  Rng rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n1 = 1 + rng.below(7), n2 = 1 + rng.below(6);
    std::vector<double> x(n1), y(n2);
    // coarse values so ties are common
    for (double& v : x) v = static_cast<double>(rng.below(6));
    for (double& v : y) v = static_cast<double>(rng.below(6));
    double count = 0;
    for (double p : x)
      for (double q : y) count += p > q ? 1.0 : p == q ? 0.5 : 0.0;
    REQUIRE(mann_whitney_u(x, y) == count);
    REQUIRE(mann_whitney_u(x, y) + mann_whitney_u(y, x) == static_cast<double>(n1 * n2));
    REQUIRE(mann_whitney_greater(x, y).p_value == Approx(brute_force_p(x, y)).margin(1e-12));
  }
}

TEST_CASE("Mann-Whitney p-values against reference values", "[assess][mannwhitney]") {
  const auto hi = seq(10.1, 0.1, 20), lo = seq(0.1, 0.1, 20);
  const auto exact = mann_whitney_greater(hi, lo);
  REQUIRE(exact.statistic == 400.0);
  REQUIRE(exact.p_value == Approx(7.254444551924842e-12).epsilon(1e-9));

  const std::vector<double> a{1.1, 2.2, 3.3, 4.4, 5.5, 6.6}, b{0.5, 1.0, 2.0, 2.5, 3.0};
  const auto small = mann_whitney_greater(a, b);
  REQUIRE(small.statistic == 25.0);
  REQUIRE(small.p_value == Approx(0.04112554112554113).margin(1e-12));

  const auto approx = mann_whitney_greater(kLarge25, kLarge30);
  REQUIRE(approx.statistic == 450.0);
  REQUIRE(approx.p_value == Approx(0.10396463624082208).margin(1e-9));
}

TEST_CASE("Welch t-test against reference values", "[assess][welch]") {
  const std::vector<double> a{1.1, 2.2, 3.3, 4.4, 5.5, 6.6}, b{0.5, 1.0, 2.0, 2.5, 3.0};
  const auto r = welch_t_greater(a, b);
  REQUIRE(r.statistic == Approx(2.1363054334475153).margin(1e-10));
  REQUIRE(r.df == Approx(7.625553637583154).margin(1e-9));
  REQUIRE(r.p_value == Approx(0.0334095477094086).margin(1e-10));

  const auto far = welch_t_greater(seq(10.1, 0.1, 20), seq(0.1, 0.1, 20));
  REQUIRE(far.statistic == Approx(53.45224838248487).margin(1e-8));
  REQUIRE(far.p_value < 1e-30);
}

TEST_CASE("significance protocol", "[assess][significance]") {
  SECTION("identical samples are not significant") {
    const auto r = significance_test(kThirty, kThirty);
    REQUIRE_FALSE(r.significant);
    REQUIRE(r.p_value >= 0.05);
  }
  SECTION("well separated samples") {
    const auto r = significance_test(seq(10.1, 0.1, 20), seq(0.1, 0.1, 20));
    REQUIRE(r.significant);
    REQUIRE(r.p_value < 0.001);
    REQUIRE(r.direction == Direction::a_greater);
    REQUIRE(r.normal_a);
    REQUIRE(r.test_used == TestKind::t_one_sided);
  }
  SECTION("a non-normal sample routes to Mann-Whitney") {
    const std::vector<double> two_point{0, 0, 0, 0, 0, 0, 1, 1, 1, 1};
    const auto r = significance_test(two_point, kLarge30);
    REQUIRE_FALSE(r.normal_a);
    REQUIRE(r.test_used == TestKind::mann_whitney_one_sided);
    REQUIRE(r.significant == (r.p_value < 0.05));
  }
  SECTION("constant samples are treated as non-normal") {
    const auto r = significance_test(std::vector<double>(10, 0.9), std::vector<double>(10, 0.8));
    REQUIRE(r.test_used == TestKind::mann_whitney_one_sided);
    REQUIRE(r.direction == Direction::a_greater);
    REQUIRE(r.significant);
  }
}

TEST_CASE("significance test is symmetric in its arguments", "[assess][significance][property]") {
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a(8 + rng.below(30)), b(8 + rng.below(30));
    const double shift = rng.uniform(-1.0, 1.0);
    for (double& v : a) v = rng.normal() + shift;
    for (double& v : b) v = rng.uniform() < 0.5 ? rng.normal() : std::exp(rng.normal());
    if (mean(tukey_fences(a)) == mean(tukey_fences(b))) continue;
    const auto ab = significance_test(a, b), ba = significance_test(b, a);
    REQUIRE(ab.p_value == ba.p_value);
    REQUIRE(ab.test_used == ba.test_used);
    REQUIRE(ab.direction != ba.direction);
  }
}
