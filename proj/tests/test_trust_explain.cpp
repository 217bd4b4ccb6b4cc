#include <catch2/catch_amalgamated.hpp>

#include "skillfuse/explain.hpp"
#include "skillfuse/trust.hpp"

using namespace skillfuse;
using Catch::Approx;

TEST_CASE("qa_trust examples", "[trust]") {
  REQUIRE(qa_trust({"t", 1, 1, 1.0}) == 1.0);
  REQUIRE(qa_trust({"t", 1, 0, 1.0}) == 0.0);
  REQUIRE(qa_trust({"t", 0, 0, 0.7}) == 0.7);
  REQUIRE(qa_trust({"t", 0, 1, 0.7}) == Approx(0.3).margin(1e-15));
  REQUIRE_THROWS_AS(qa_trust({"t", 0, 0, 1.2}), std::invalid_argument);
}

TEST_CASE("qa_trust monotonicity", "[trust][property]") {
  double prev_ok = -1, prev_bad = 2;
  for (int i = 0; i <= 100; ++i) {
    const double c = i / 100.0;
    const double ok = qa_trust({"t", 1, 1, c}), bad = qa_trust({"t", 1, 0, c});
    REQUIRE(ok > prev_ok);
    REQUIRE(bad < prev_bad);
    prev_ok = ok;
    prev_bad = bad;
  }
}

TEST_CASE("NetTrustScore", "[trust]") {
  const std::vector<PredictionRecord> three{{"a", 0, 0, 1.0}, {"b", 0, 0, 1.0}, {"c", 0, 0, 0.8}};
  REQUIRE(net_trust_score(three).at(0) == Approx(0.9333333333333333).margin(1e-15));

  const std::vector<PredictionRecord> perfect{{"a", 0, 0, 1.0}, {"b", 1, 1, 1.0}, {"c", 1, 1, 1.0}};
  const auto nts = net_trust_score(perfect);
  REQUIRE(nts.at(0) == 1.0);
  REQUIRE(nts.at(1) == 1.0);

  const std::vector<PredictionRecord> only_one{{"a", 1, 1, 0.9}, {"b", 1, 0, 0.6}};
  const auto partial = net_trust_score(only_one);
  REQUIRE_FALSE(partial.contains(0));
  REQUIRE(partial.at(1) == Approx(0.65));
  REQUIRE(net_trust_score(only_one, true).at(1) == Approx(0.9));
}

TEST_CASE("NTS closed form and permutation invariance", "[trust][property]") {
  Rng rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<PredictionRecord> recs(1 + rng.below(40));
    for (auto& r : recs) {
      r.true_class = static_cast<int>(rng.below(2));
      r.predicted_class = static_cast<int>(rng.below(2));
      r.confidence = 0.5 + 0.5 * rng.uniform();
    }
    const auto nts = net_trust_score(recs);
    for (const auto& [cls, v] : nts) {
      double s = 0;
      std::size_t n = 0;
      for (const auto& r : recs)
        if (r.true_class == cls) {
          s += r.predicted_class == r.true_class ? r.confidence : 1.0 - r.confidence;
          ++n;
        }
      REQUIRE(std::abs(v - s / static_cast<double>(n)) < 1e-12);
      REQUIRE((v >= 0.0 && v <= 1.0));
    }
    rng.shuffle(recs.begin(), recs.end());
    const auto again = net_trust_score(recs);
    for (const auto& [cls, v] : nts) REQUIRE(again.at(cls) == Approx(v).margin(1e-12));
  }
}

TEST_CASE("trust density curves", "[trust][density]") {
  const std::vector<double> point(30, 0.9);
  const auto c = trust_density(point);
  const auto peak = std::max_element(c.density.begin(), c.density.end()) - c.density.begin();
  REQUIRE(std::abs(c.grid[static_cast<std::size_t>(peak)] - 0.9) <= 1.0 / 255.0);
  REQUIRE(trapezoid(c.grid, c.density) == Approx(1.0).margin(1e-3));
  REQUIRE(c.bandwidth == 0.01);

  std::vector<double> bimodal(20, 0.1);
  bimodal.insert(bimodal.end(), 20, 0.9);
  const auto b = trust_density(bimodal);
  // reflection gives zero slope at the boundaries, so endpoints count as maxima
  const auto& d = b.density;
  std::size_t maxima = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const bool left = i == 0 || d[i] > d[i - 1];
    const bool right = i + 1 == d.size() || d[i] >= d[i + 1];
    if (left && right) ++maxima;
  }
  REQUIRE(maxima == 2);

  REQUIRE_THROWS_AS(trust_density(std::vector<double>{0.5}), std::invalid_argument);

  Rng rng(22);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> t(2 + rng.below(60));
    for (double& v : t) v = rng.uniform() < 0.3 ? 1.0 : rng.uniform();
    const auto d = trust_density(t);
    REQUIRE(trapezoid(d.grid, d.density) == Approx(1.0).margin(1e-3));
    for (double v : d.density) REQUIRE(v >= 0.0);
  }
}

TEST_CASE("mean and spread formatting", "[trust][format]") {
  REQUIRE(mean_pm_std(std::vector<double>{0.905, 0.926, 0.947}) == "0.926±.021");
  REQUIRE(mean_pm_std(std::vector<double>{}) == "n/a");
}

TEST_CASE("Spearman examples", "[explain][spearman]") {
  const std::vector<double> a{1, 2, 3, 4, 5};
  REQUIRE(*spearman_rho(a, a) == 1.0);
  const std::vector<double> rev{5, 4, 3, 2, 1};
  REQUIRE(*spearman_rho(a, rev) == -1.0);
  const std::vector<double> b{5, 6, 7, 8, 7};
  // ranks of b are [1, 2, 3.5, 5, 3.5]: rho = 8 / sqrt(10 * 9.5)
  REQUIRE(std::abs(*spearman_rho(a, b) - 8.0 / std::sqrt(95.0)) < 1e-12);
  REQUIRE(std::abs(*spearman_rho(a, b) - 0.8207826816681233) < 1e-12);
  REQUIRE_FALSE(spearman_rho(a, std::vector<double>(5, 1.0)).has_value());
  REQUIRE_FALSE(spearman_rho(a, std::vector<double>{1, 2, 3}).has_value());
}

TEST_CASE("Spearman is invariant under monotone transforms", "[explain][spearman][property]") {
  Rng rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(3 + rng.below(30)), y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = rng.normal();
      y[i] = x[i] + rng.normal();
    }
    std::vector<double> tx(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) tx[i] = std::exp(3.0 * x[i]) + 2.0;
    const auto r1 = spearman_rho(x, y), r2 = spearman_rho(tx, y);
    REQUIRE(r1.has_value());
    REQUIRE(std::abs(*r1 - *r2) < 1e-12);
  }
}

TEST_CASE("CAM normalization and resampling", "[explain][cam]") {
  const std::vector<double> mono{0.0, 1.0, 4.0, 9.0, 16.0, 25.0, 36.0};
  const auto r = normalize_resample_cam(mono);
  REQUIRE(r.size() == kCamLength);
  REQUIRE(r.front() == 0.0);
  REQUIRE(r.back() == 1.0);
  for (std::size_t i = 1; i < r.size(); ++i) REQUIRE(r[i] >= r[i - 1]);

  for (double v : normalize_resample_cam(std::vector<double>(9, 3.0))) REQUIRE(v == 0.5);
  const std::vector<double> raw{2, 6, 4, 10};
  REQUIRE(normalize_resample_cam(raw, 4) == std::vector<double>{0.0, 0.5, 0.25, 1.0});
  REQUIRE_THROWS_AS(normalize_resample_cam(std::vector<double>{1.0}), std::invalid_argument);

  const std::vector<std::vector<double>> same(4, r);
  REQUIRE(average_curves(same) == r);
}

namespace {

TrainedModel random_model(HeadKind head, std::uint64_t seed) {
  VbaNetConfig cfg;
  cfg.in_channels = 3;
  cfg.conv_filters = 6;
  cfg.se_reduction = 3;
  cfg.head = head;
  TrainedModel m;
  m.config = cfg;
  Rng rng(seed);
  m.parameters.resize(make_layout(cfg).total());
  for (double& v : m.parameters) v = rng.uniform(-0.5, 0.5);
  return m;
}

Matrix random_input(std::size_t T, Rng& rng) {
  Matrix x(T, 3);
  for (double& v : x.values()) v = rng.uniform();
  return x;
}

}  // namespace

TEST_CASE("CAM examples and logit identity", "[explain][cam]") {
  const Matrix maps = Matrix::from_rows({{1, 4}, {2, 1}, {3, 3}});
  REQUIRE(weighted_maps(maps, std::vector<double>{1, -1}) == std::vector<double>{-3, 1, 0});

  Rng rng(24);
  for (auto head : {HeadKind::classify, HeadKind::regress}) {
    auto m = random_model(head, 25);
    const Matrix x = random_input(17, rng);
    const auto out = forward(m, x).outputs;
    const auto layout = make_layout(m.config);
    const auto bias = layout.view(std::span<const double>(m.parameters), "head.b");
    for (std::size_t c = 0; c < m.config.outputs(); ++c) {
      const auto cam = compute_cam(m, x, c);
      REQUIRE(cam.size() == 17);
      REQUIRE(std::abs(mean(cam) + bias[c] - out[c]) < 1e-9);
    }
    REQUIRE_THROWS_AS(compute_cam(m, x, m.config.outputs()), std::invalid_argument);

    const auto& hw = layout.block("head.w");
    std::fill_n(m.parameters.begin() + static_cast<std::ptrdiff_t>(hw.offset), hw.size(), 0.0);
    for (double v : compute_cam(m, x, 0)) REQUIRE(v == 0.0);
  }
}

TEST_CASE("CAM is linear in the head weights", "[explain][cam][property]") {
  Rng rng(26);
  const Matrix x = random_input(12, rng);
  auto m1 = random_model(HeadKind::regress, 27);
  auto m2 = m1, m12 = m1;
  const auto hw = make_layout(m1.config).block("head.w");
  for (std::size_t i = 0; i < hw.size(); ++i) {
    m2.parameters[hw.offset + i] = rng.normal();
    m12.parameters[hw.offset + i] = m1.parameters[hw.offset + i] + m2.parameters[hw.offset + i];
  }
  const auto c1 = compute_cam(m1, x, 0), c2 = compute_cam(m2, x, 0), c12 = compute_cam(m12, x, 0);
  for (std::size_t t = 0; t < c1.size(); ++t) REQUIRE(std::abs(c12[t] - c1[t] - c2[t]) < 1e-12);
}
