#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "stratum/layered_geometry.hpp"

using namespace stratum;

TEST_CASE("layer config validation") {
  CHECK_THROWS_AS(LayerConfig(0.0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(LayerConfig(1.0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(LayerConfig(0.5, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(QuadratureSpec({0, 2, 3}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(QuadratureSpec({1, 1, 6}).validate(), std::invalid_argument);
}

TEST_CASE("phase indicator") {
  const LayerConfig cfg(0.25, 0.5);
  CHECK(phase(0.0, cfg) == Phase::Stiff);      // interface belongs to the stiff phase
  CHECK(phase(0.1, cfg) == Phase::Soft);
  CHECK(phase(0.125, cfg) == Phase::Stiff);
  CHECK(phase(0.3, cfg) == Phase::Stiff);
  CHECK(phase(0.55, cfg) == Phase::Soft);
  CHECK(phase(-0.45, cfg) == Phase::Soft);
  Vec x(3);
  x << 0.9, 0.9, 0.1;
  CHECK(phase(x, cfg) == Phase::Soft);
}

TEST_CASE("midsection projection") {
  const LayerConfig cfg(0.5, 0.2);
  // Period (0, 0.2]: soft (0, 0.1), stiff [0.1, 0.2], midsection 0.15.
  CHECK(midsection(0.05, cfg) == doctest::Approx(0.15));
  CHECK(midsection(0.2, cfg) == doctest::Approx(0.15));
  CHECK(midsection(0.21, cfg) == doctest::Approx(0.35));
  CHECK(cell_index(0.2, cfg) == 0);
  CHECK(cell_index(0.21, cfg) == 1);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int k = 0; k < 1000; ++k) {
    const double t = u(rng);
    const double m = midsection(t, cfg);
    CHECK(std::abs(m - t) <= cfg.eps);
    CHECK(phase(m, cfg) == Phase::Stiff);
  }
}

TEST_CASE("layer segments tile the interval") {
  const LayerConfig cfg(0.3, 0.07);
  const auto segs = layer_segments(0.013, 0.9, cfg);
  REQUIRE(!segs.empty());
  CHECK(segs.front().a == doctest::Approx(0.013));
  CHECK(segs.back().b == doctest::Approx(0.9));
  double soft = 0;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    CHECK(segs[i].b > segs[i].a);
    if (i) CHECK(segs[i].a == doctest::Approx(segs[i - 1].b));
    const double mid = 0.5 * (segs[i].a + segs[i].b);
    CHECK(phase(mid, cfg) == segs[i].phase);
    if (segs[i].phase == Phase::Soft) soft += segs[i].b - segs[i].a;
  }
  // Soft fraction tends to lambda, off by at most one layer.
  CHECK(std::abs(soft - 0.3 * (0.9 - 0.013)) <= 0.3 * 0.07 + 1e-12);
}

TEST_CASE("full strips and remnants") {
  const LayerConfig cfg(0.5, 0.3);
  const StripSet s = strips(CuboidDomain::unit(2), cfg);
  REQUIRE(s.full.size() == 3);
  CHECK(s.full[0].index == 0);
  CHECK(s.full[2].box.upper(1) == doctest::Approx(0.9));
  REQUIRE(s.partial.size() == 1);
  CHECK(s.partial[0].box.lower(1) == doctest::Approx(0.9));
  CHECK(s.partial[0].box.upper(1) == doctest::Approx(1.0));
}

TEST_CASE("layered integral: phase volumes and polynomial exactness") {
  for (int n : {2, 3}) {
    const CuboidDomain dom = CuboidDomain::unit(n);
    for (double eps : {0.25, 0.125, 0.1}) {
      const LayerConfig cfg(0.4, eps);
      const double m = std::round(1 / eps);
      const double soft = layered_integral(dom, cfg, PhaseFilter::Soft, [](const Vec&) { return 1.0; });
      const double stiff = layered_integral(dom, cfg, PhaseFilter::Stiff, [](const Vec&) { return 1.0; });
      if (std::abs(m * eps - 1) < 1e-12) CHECK(soft == doctest::Approx(0.4).epsilon(1e-13));
      CHECK(soft + stiff == doctest::Approx(1.0).epsilon(1e-13));
      // Degree-5 polynomial is integrated exactly by three Gauss points.
      auto poly = [n](const Vec& x) { return std::pow(x(0), 5) + x(n - 1) * x(n - 1) * x(0); };
      const double both = layered_integral(dom, cfg, PhaseFilter::Both, poly);
      CHECK(both == doctest::Approx(1.0 / 6 + 1.0 / 6).epsilon(1e-13));
    }
  }
}

TEST_CASE("layered integral: vector and matrix results, empty filters") {
  const CuboidDomain dom(Vec::Zero(2), Vec::Ones(2));
  const LayerConfig cfg(0.5, 0.25);
  const Vec v = layered_integral(dom, cfg, PhaseFilter::Both, [](const Vec& x) { return Vec(x); });
  CHECK(v(0) == doctest::Approx(0.5));
  CHECK(v(1) == doctest::Approx(0.5));
  const Mat M = layered_integral(dom, cfg, PhaseFilter::Stiff, [](const Vec&) { return Mat(Mat::Identity(2, 2)); });
  CHECK(M(0, 0) == doctest::Approx(0.5));
  CHECK(M(0, 1) == 0.0);
  // A thin domain entirely inside a stiff layer has no soft part.
  const CuboidDomain thin = dom.with_height(0.2, 0.24);
  const double z = layered_integral(thin, cfg, PhaseFilter::Soft, [](const Vec&) { return 1.0; });
  CHECK(z == 0.0);
  const Mat Z = layered_integral(thin, cfg, PhaseFilter::Soft, [](const Vec&) { return Mat(Mat::Ones(2, 2)); });
  CHECK(Z.rows() == 2);
  CHECK(Z.norm() == 0.0);
  CHECK_THROWS_AS(layered_integral(dom.with_height(0.5, 0.5), cfg, PhaseFilter::Both, [](const Vec&) { return 1.0; }),
                  std::invalid_argument);
}

TEST_CASE("layered integral is reproducible bit for bit") {
  const CuboidDomain dom = CuboidDomain::unit(3);
  const LayerConfig cfg(0.37, 1.0 / 64);
  auto f = [](const Vec& x) { return std::sin(40 * x(2)) * std::exp(x(0)) + x(1); };
  const double a = layered_integral(dom, cfg, PhaseFilter::Soft, f);
  const double b = layered_integral(dom, cfg, PhaseFilter::Soft, f);
  CHECK(a == b);
}

TEST_CASE("Gauss rules integrate their degree exactly") {
  for (int p = 1; p <= 5; ++p) {
    const GaussRule& g = gauss_rule(p);
    CHECK(g.size == p);
    for (int deg = 0; deg <= 2 * p - 1; ++deg) {
      double s = 0;
      for (int q = 0; q < p; ++q) s += g.w[q] * std::pow(g.x[q], deg);
      const double exact = deg % 2 ? 0.0 : 2.0 / (deg + 1);
      CHECK(s == doctest::Approx(exact).epsilon(1e-14));
    }
  }
  CHECK_THROWS(gauss_rule(6));
}
