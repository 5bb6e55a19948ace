#include <doctest.h>

#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include "qfc/errors.hpp"
#include "qfc/noise_link.hpp"

using namespace qfc;
using namespace qfc::noise;
using doctest::Approx;

namespace {

LinkBudget budget(double nc) {
  LinkBudget b;
  b.name = "test";
  b.eta_ext = 0.15;
  b.source_rate = 24e3;
  b.converter_noise = nc;
  b.dark_rate = 1.0;
  b.attenuation_db_per_km = 0.17;
  b.narrowband_filter_width = 5e-3;
  b.narrowband_filter_transmission = 0.5;
  return b;
}

}  // namespace

TEST_CASE("collection chain") {
  EfficiencyChain chain{{"fiber coupling", 0.72},
                        {"optics", 0.99},
                        {"bandpass", 0.92},
                        {"grating", 0.70}};
  const double p = chain_product(chain);
  CHECK(p == Approx(0.4590432).epsilon(1e-7));
  CHECK(0.723 * p == Approx(0.33189).epsilon(1e-4));
  CHECK(chain_product(EfficiencyChain{}) == 1.0);
  chain.push_back({"extra", 0.5});
  CHECK(chain_product(chain) == Approx(0.5 * p).epsilon(1e-15));
  chain.push_back({"bad", 0.0});
  CHECK_THROWS_AS(chain_product(chain), DomainError);
  CHECK_THROWS_AS(chain_product(EfficiencyChain{{"x", 1.5}}), DomainError);
}

TEST_CASE("generated noise spectral density") {
  NoiseMeasurement m{74.5, 39.6e3, 0.87};
  CHECK(nsd_generated(m, 0.459, 0.9) == Approx(110184.6).epsilon(1e-6));
  CHECK(nsd_generated({74.5, 0.0, 0.87}, 0.459, 0.9) == 0.0);
  CHECK(nsd_generated(m, 0.2295, 0.9) ==
        Approx(2.0 * nsd_generated(m, 0.459, 0.9)).epsilon(1e-14));

  // Homogeneity in every argument.
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> k(0.1, 10.0), e(0.05, 1.0);
  for (int i = 0; i < 100; ++i) {
    const NoiseMeasurement base{10.0, k(gen) * 1e4, k(gen)};
    const double col = e(gen), det = e(gen), c = k(gen);
    const double v = nsd_generated(base, col, det);
    NoiseMeasurement scaled = base;
    scaled.measured_rate *= c;
    CHECK(nsd_generated(scaled, col, det) == Approx(c * v).epsilon(1e-13));
    scaled = base;
    scaled.collection_bandwidth *= c;
    CHECK(nsd_generated(scaled, col, det) == Approx(v / c).epsilon(1e-13));
  }
  CHECK_THROWS_AS(nsd_generated({1.0, 1.0, 0.0}, 0.5, 0.9), DomainError);
  CHECK_THROWS_AS(nsd_generated({1.0, 1.0, 1.0}, 0.0, 0.9), DomainError);
}

TEST_CASE("noise slope fit") {
  std::vector<std::pair<double, double>> pts;
  for (double p = 0.0; p <= 80.0; p += 5.0) pts.emplace_back(p, 1480.0 * p);
  const auto line = fit_noise_slope(pts);
  CHECK(line.slope == Approx(1480.0).epsilon(1e-9));
  CHECK(std::abs(line.intercept) < 1e-6);
  CHECK(1.48 * 74.5 == Approx(110.26).epsilon(1e-12));

  const std::vector<std::pair<double, double>> two{{0, 0}, {1, 1}};
  const auto unit = fit_noise_slope(two);
  CHECK(unit.slope == Approx(1.0));
  CHECK(unit.intercept == Approx(0.0));

  const std::vector<std::pair<double, double>> flat{{1, 3}, {2, 3}, {5, 3}};
  CHECK(fit_noise_slope(flat).slope == Approx(0.0));
  CHECK(fit_noise_slope(flat).intercept == Approx(3.0));

  const std::vector<std::pair<double, double>> same{{2, 1}, {2, 3}};
  CHECK_THROWS_AS(fit_noise_slope(same), DomainError);
}

TEST_CASE("converter noise composition") {
  const auto b = budget(0.0);
  CHECK(converter_noise_rate(45e3, b) == Approx(101.25).epsilon(1e-12));
  CHECK(converter_noise_rate(5 * 45e3, b) == Approx(506.25).epsilon(1e-12));
  CHECK(converter_noise_rate(0.0, b) == 0.0);
  CHECK_THROWS_AS(converter_noise_rate(-1.0, b), DomainError);
}

TEST_CASE("snr examples") {
  CHECK(snr_at_distance(budget(0.0), 0.0) == Approx(3600.0).epsilon(1e-14));
  CHECK(snr_at_distance(budget(101.0), 0.0) == Approx(3600.0 / 102.0).epsilon(1e-14));
  CHECK(snr_at_distance(budget(101.0), 5000.0) < 1e-80);
  CHECK(fiber_transmittance(10.0, 0.17) ==
        Approx(std::pow(10.0, -0.17)).epsilon(1e-14));
  CHECK_THROWS_AS(snr_at_distance(budget(0.0), -1.0), DomainError);

  auto dead = budget(0.0);
  dead.dark_rate = 0.0;
  CHECK_THROWS_AS(snr_at_distance(dead, 0.0), DomainError);
}

TEST_CASE("snr monotonicity regimes") {
  Eigen::ArrayXd x = Eigen::ArrayXd::LinSpaced(301, 0.0, 300.0);
  for (double nc : {0.0, 101.25, 506.25}) {
    const Eigen::ArrayXd s = snr_at_distance(budget(nc), x);
    for (Eigen::Index i = 1; i < x.size(); ++i) {
      CHECK(s(i) < s(i - 1));
      CHECK(s(i) == Approx(snr_at_distance(budget(nc), x(i))).epsilon(1e-13));
    }
  }
  auto no_dark = budget(101.25);
  no_dark.dark_rate = 0.0;
  const Eigen::ArrayXd flat = snr_at_distance(no_dark, x);
  CHECK((flat - flat(0)).abs().maxCoeff() < 1e-9 * flat(0));

  // The noiseless budget dominates any noisy one.
  const Eigen::ArrayXd clean = snr_at_distance(budget(0.0), x);
  const Eigen::ArrayXd noisy = snr_at_distance(budget(1e-3), x);
  CHECK((clean >= noisy).all());
  CHECK((clean / noisy - 1.0).abs().maxCoeff() < 1e-3);
}

TEST_CASE("distance for snr") {
  CHECK(distance_for_snr(budget(0.0), 1.0) == Approx(209.1943).epsilon(1e-6));
  CHECK(distance_for_snr(budget(101.25), 1.0) == Approx(208.4655).epsilon(1e-6));
  CHECK(distance_for_snr(budget(101.0), 1.0) == Approx(208.4673).epsilon(1e-6));
  CHECK(distance_for_snr_closed_form(budget(101.0), 1.0) ==
        Approx(208.4673).epsilon(1e-6));
  CHECK(distance_for_snr(budget(101.0), 3600.0 / 102.0) == Approx(0.0));
  CHECK_THROWS_AS(distance_for_snr(budget(101.0), 40.0), DomainError);
  CHECK_THROWS_AS(distance_for_snr(budget(101.0), 0.0), DomainError);
}

TEST_CASE("distance and snr round-trip over random budgets") {
  std::mt19937_64 gen(31);
  std::uniform_real_distribution<double> eta(0.01, 1.0), rate(1e3, 1e6),
      nc(0.0, 500.0), nd(0.1, 100.0), att(0.1, 0.4), frac(0.01, 0.99);
  for (int i = 0; i < 200; ++i) {
    LinkBudget b = budget(0.0);
    b.eta_ext = eta(gen);
    b.source_rate = rate(gen);
    b.converter_noise = nc(gen);
    b.dark_rate = nd(gen);
    b.attenuation_db_per_km = att(gen);
    const double s0 = snr_at_distance(b, 0.0);
    const double threshold = s0 * frac(gen);
    const double x = distance_for_snr(b, threshold);
    CHECK(snr_at_distance(b, x) == Approx(threshold).epsilon(1e-6));
    CHECK(x == Approx(distance_for_snr_closed_form(b, threshold)).epsilon(1e-8));
  }
}

TEST_CASE("comparison sweep") {
  const std::vector<LinkBudget> budgets{budget(0.0), budget(101.25), budget(506.25)};
  std::vector<double> grid;
  for (int x = 0; x <= 400; x += 10) grid.push_back(x);
  const auto table = snr_comparison_sweep(budgets, grid);
  REQUIRE(table.snr.rows() == static_cast<Eigen::Index>(grid.size()));
  REQUIRE(table.snr.cols() == 3);
  CHECK(table.snr(0, 0) == Approx(3600.0));
  CHECK(table.snr(0, 1) / table.snr(0, 2) == Approx(4.96088).epsilon(1e-5));
  for (Eigen::Index i = 0; i < table.snr.rows(); ++i)
    if (table.distance_km(i) >= 250.0)
      CHECK(table.snr(i, 0) / table.snr(i, 1) < 1.05);
  // ppKTP / ppLN ratio decays toward 1.
  const double last = table.snr(table.snr.rows() - 1, 1) /
                      table.snr(table.snr.rows() - 1, 2);
  CHECK(last == Approx(1.0).epsilon(1e-3));

  const std::vector<LinkBudget> one{budget(101.25)};
  const std::vector<double> zero{0.0};
  CHECK(snr_comparison_sweep(one, zero).snr(0, 0) ==
        snr_at_distance(budget(101.25), 0.0));

  const std::vector<LinkBudget> noiseless{budget(0.0), budget(0.0)};
  const auto flat = snr_comparison_sweep(noiseless, grid);
  CHECK((flat.snr.col(0).array() == flat.snr.col(1).array()).all());

  CHECK_THROWS_AS(snr_comparison_sweep(one, std::vector<double>{}), DomainError);
}
