#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "qfc/conversion.hpp"
#include "qfc/errors.hpp"

using namespace qfc;
using namespace qfc::conversion;
using doctest::Approx;

namespace {

ConversionProcess nominal_process() {
  ConversionProcess p;
  p.lambda_red = 637e-9;
  p.lambda_pump = 1064e-9;
  p.lambda_target =
      complete_wavelength_triple(637e-9, 1064e-9, KnownPair::RedPump);
  p.n_red = p.n_pump = p.n_target = 1.8;
  p.d_eff = 10.8e-12;
  p.crystal_length = 20e-3;
  p.domain_length = 3.0e-6;
  return p;
}

}  // namespace

TEST_CASE("wavelength triple completion") {
  const double target =
      complete_wavelength_triple(637e-9, 1064e-9, KnownPair::RedPump);
  CHECK(target * 1e9 == Approx(1587.2787).epsilon(1e-6));

  const double red =
      complete_wavelength_triple(1064e-9, 1587e-9, KnownPair::PumpTarget);
  CHECK(red * 1e9 == Approx(636.95).epsilon(1e-4));

  const double pump =
      complete_wavelength_triple(637e-9, 1587.2787e-9, KnownPair::RedTarget);
  CHECK(pump * 1e9 == Approx(1064.0).epsilon(1e-6));

  // Red must be the shortest wavelength.
  CHECK_THROWS_AS(complete_wavelength_triple(1064e-9, 637e-9, KnownPair::RedPump),
                  DomainError);
  CHECK_THROWS_AS(complete_wavelength_triple(-1.0, 1e-6, KnownPair::PumpTarget),
                  DomainError);
}

TEST_CASE("energy conservation holds to rounding for random triples") {
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> red(400e-9, 900e-9), ratio(1.05, 4.0);
  for (int i = 0; i < 500; ++i) {
    const double lr = red(gen);
    const double lp = lr * ratio(gen);
    const double lt = complete_wavelength_triple(lr, lp, KnownPair::RedPump);
    const double residual = 1.0 / lr - 1.0 / lp - 1.0 / lt;
    CHECK(std::abs(residual) * lr < 1e-14);
  }
}

TEST_CASE("process validation") {
  auto p = nominal_process();
  CHECK_NOTHROW(p.validate());
  CHECK(p.poling_period() == Approx(6.0e-6));
  p.lambda_target = 1500e-9;
  CHECK_THROWS_AS(p.validate(), DomainError);
  p = nominal_process();
  p.d_eff = 0.0;
  CHECK_THROWS_AS(p.validate(), DomainError);
}

TEST_CASE("bk factor at sigma = 0 matches the arctan closed form") {
  for (double xi : {0.1, 0.5, 1.0, 1.55, 3.0, 10.0}) {
    const double closed = std::atan(xi) * std::atan(xi) / xi;
    CHECK(std::abs(bk_integrand_factor(0.0, xi) - closed) < 1e-8);
  }
}

TEST_CASE("bk factor agrees with an independent Simpson oracle") {
  for (double xi : {0.3, 1.55, 2.84, 7.0})
    for (double sigma : {-1.0, 0.0, 0.57, 1.2, 3.0}) {
      CAPTURE(xi);
      CAPTURE(sigma);
      CHECK(bk_integrand_factor(sigma, xi) ==
            Approx(oracle::bk_simpson(sigma, xi)).epsilon(1e-8));
    }
  CHECK_THROWS_AS(bk_integrand_factor(0.5, 0.0), DomainError);
}

TEST_CASE("h_m examples") {
  // Reference value from a dense grid scan; the spread between the library
  // and the scan is well inside the golden-section tolerance.
  const auto at_155 = optimize_focusing_offset(1.55);
  CHECK(at_155.h == Approx(0.958938).epsilon(1e-5));
  CHECK(at_155.h >= bk_integrand_factor(0.0, 1.55));

  CHECK(h_m(2.84) == Approx(1.0677).epsilon(1e-4));
  CHECK(h_m(1e-6) <= 2e-6);
  CHECK(h_m(1e-6) > 0.0);
  CHECK_THROWS_AS(h_m(-1.0), DomainError);
}

TEST_CASE("h_m never falls below the sigma = 0 value") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> logxi(std::log(0.05), std::log(20.0));
  for (int i = 0; i < 25; ++i) {
    const double xi = std::exp(logxi(gen));
    CAPTURE(xi);
    const double hm = h_m(xi);
    CHECK(hm >= bk_integrand_factor(0.0, xi) - 1e-12);
    CHECK(hm <= 1.07);
  }
}

TEST_CASE("global focusing optimum matches a dense grid scan") {
  const auto best = optimal_focusing();
  const auto grid = oracle::bk_grid_max(2.6, 3.1, 0.01, 0.4, 0.7, 0.005);
  CHECK(best.xi == Approx(2.8375).epsilon(1e-3));
  CHECK(best.xi == Approx(grid.xi).epsilon(0.01));
  CHECK(best.sigma == Approx(grid.sigma).epsilon(0.02));
  CHECK(best.h == Approx(grid.h).epsilon(1e-5));
  CHECK(best.h >= 1.06);
  CHECK(best.h <= 1.08);

  // Unique interior maximum: h_m rises to xi* and falls after it.
  double prev = 0.0;
  for (double xi = 0.1; xi < best.xi - 0.05; xi *= 1.3) {
    const double v = h_m(xi);
    CHECK(v > prev);
    prev = v;
  }
  prev = 2.0;
  for (double xi = best.xi + 0.1; xi <= 10.0; xi *= 1.3) {
    const double v = h_m(xi);
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("p_max formula and scaling") {
  auto p = nominal_process();
  const double base = p_max(p, 0.9);
  CHECK(base == Approx(34.4285).epsilon(1e-5));

  auto doubled = p;
  doubled.d_eff *= 2.0;
  CHECK(p_max(doubled, 0.9) == Approx(base / 4.0).epsilon(1e-14));
  doubled = p;
  doubled.crystal_length *= 2.0;
  CHECK(p_max(doubled, 0.9) == Approx(base / 2.0).epsilon(1e-14));

  CHECK_THROWS_AS(p_max(p, 0.0), DomainError);
}

TEST_CASE("conversion efficiency examples") {
  CHECK(conversion_efficiency(74.5, 177.0) == Approx(0.725274).epsilon(1e-5));
  CHECK(conversion_efficiency(177.0, 177.0) == Approx(1.0).epsilon(1e-15));
  CHECK(conversion_efficiency(0.0, 5.0) == 0.0);
  CHECK_THROWS_AS(conversion_efficiency(-1.0, 5.0), DomainError);
  CHECK_THROWS_AS(conversion_efficiency(1.0, 0.0), DomainError);
}

TEST_CASE("conversion efficiency is bounded and monotone on the first lobe") {
  Eigen::ArrayXd grid = Eigen::ArrayXd::LinSpaced(2001, 0.0, 4.0 * 177.0);
  const Eigen::ArrayXd eta = conversion_efficiency(grid, 177.0);
  CHECK(eta.minCoeff() >= 0.0);
  CHECK(eta.maxCoeff() <= 1.0);
  for (Eigen::Index i = 1; i < grid.size(); ++i) {
    CHECK(eta(i) == Approx(conversion_efficiency(grid(i), 177.0)).epsilon(1e-15));
    if (grid(i) <= 177.0) CHECK(eta(i) > eta(i - 1));
  }
}

TEST_CASE("pump for target efficiency") {
  CHECK(pump_for_target_efficiency(1.0, 177.0) == Approx(177.0).epsilon(1e-15));
  CHECK(pump_for_target_efficiency(0.5, 177.0) == Approx(44.25).epsilon(1e-14));
  CHECK(pump_for_target_efficiency(0.723, 177.0) == Approx(74.1286).epsilon(1e-5));
  CHECK(pump_for_target_efficiency(0.0, 177.0) == 0.0);
  CHECK_THROWS_AS(pump_for_target_efficiency(1.1, 177.0), DomainError);

  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> eta(0.0, 1.0), pm(1.0, 1000.0);
  for (int i = 0; i < 1000; ++i) {
    const double e = eta(gen), m = pm(gen);
    CHECK(conversion_efficiency(pump_for_target_efficiency(e, m), m) ==
          Approx(e).epsilon(1e-12));
  }
}

TEST_CASE("phase matching response") {
  CHECK(phase_matching_response(0.0, 0.02) == 1.0);
  const double L = 0.02;
  CHECK(phase_matching_response(2.0 * std::numbers::pi / L, L) < 1e-30);

  const double half = oracle::bisect(
      [](double x) { return std::pow(std::sin(x) / x, 2) - 0.5; }, 1.0, 2.0);
  CHECK(half == Approx(1.3915573782515).epsilon(1e-12));
  CHECK(phase_matching_response(2.0 * half / L, L) == Approx(0.5).epsilon(1e-12));

  Eigen::ArrayXd dk = Eigen::ArrayXd::LinSpaced(401, -2000.0, 2000.0);
  const Eigen::ArrayXd r = phase_matching_response(dk, L);
  CHECK(r.maxCoeff() <= 1.0);
  for (Eigen::Index i = 0; i < dk.size(); ++i)
    CHECK(r(i) == Approx(r(dk.size() - 1 - i)).epsilon(1e-14));
  CHECK_THROWS_AS(phase_matching_response(1.0, 0.0), DomainError);
}

TEST_CASE("frequency to wavelength bandwidth") {
  CHECK(bandwidth_wavelength_from_frequency(110e9, 1587e-9) * 1e9 ==
        Approx(0.924115).epsilon(1e-5));
  CHECK(bandwidth_wavelength_from_frequency(110e9, 637e-9) * 1e9 ==
        Approx(0.148885).epsilon(1e-5));
  CHECK(bandwidth_wavelength_from_frequency(0.0, 637e-9) == 0.0);
}

TEST_CASE("depletion sample ingestion") {
  std::vector<std::string> warnings;
  auto s = ingest_depletion_sample(50.0, 1.003, 0.004, &warnings);
  CHECK(s.measured_efficiency == 1.0);
  CHECK(warnings.size() == 1);
  s = ingest_depletion_sample(5.0, -0.002, 0.004, &warnings);
  CHECK(s.measured_efficiency == 0.0);
  CHECK(warnings.size() == 2);
  CHECK_THROWS_AS(ingest_depletion_sample(50.0, 1.01, 0.004, &warnings),
                  DomainError);
  CHECK_THROWS_AS(ingest_depletion_sample(50.0, 1.01, 0.0, nullptr), DomainError);
  s = ingest_depletion_sample(50.0, 0.5, 0.0, nullptr);
  CHECK(s.measured_efficiency == 0.5);
}

TEST_CASE("fit_pmax recovers noise-free data") {
  std::vector<double> powers;
  for (int p = 10; p <= 80; p += 10) powers.push_back(p);
  auto samples = simulate_depletion(177.0, powers, 0.0, 1);
  auto fit = fit_pmax(samples);
  CHECK(fit.p_max == Approx(177.0).epsilon(1e-6));
  CHECK(fit.residual_norm < 1e-8);

  // Scaling the powers scales P_max.
  for (auto& s : samples) s.circulating_power *= 2.0;
  CHECK(fit_pmax(samples).p_max == Approx(354.0).epsilon(1e-6));
}

TEST_CASE("fit_pmax recovers random generating values") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> pm(10.0, 1000.0), frac(0.05, 1.6);
  for (int trial = 0; trial < 100; ++trial) {
    const double truth = pm(gen);
    std::vector<double> powers;
    for (int i = 0; i < 6; ++i) powers.push_back(truth * frac(gen));
    const auto samples = simulate_depletion(truth, powers, 0.0, 0);
    CAPTURE(truth);
    CHECK(fit_pmax(samples).p_max == Approx(truth).epsilon(1e-6));
  }
}

TEST_CASE("fit_pmax with noise is unbiased to 2% on average") {
  std::vector<double> powers;
  for (int p = 10; p <= 80; p += 10) powers.push_back(p);
  double sum = 0.0;
  double sum_unc = 0.0;
  const int repeats = 20;
  for (int i = 0; i < repeats; ++i) {
    const auto samples = simulate_depletion(177.0, powers, 0.004, 100 + i);
    const auto fit = fit_pmax(samples);
    sum += fit.p_max;
    sum_unc += fit.uncertainty;
  }
  CHECK(std::abs(sum / repeats - 177.0) < 0.02 * 177.0);
  CHECK(sum_unc / repeats > 0.0);
}

TEST_CASE("fit_pmax error paths") {
  std::vector<DepletionSample> few{{10, 0.1, 0}, {20, 0.2, 0}};
  CHECK_THROWS_AS(fit_pmax(few), DomainError);
  std::vector<DepletionSample> same{{10, 0.1, 0}, {10, 0.2, 0}, {10, 0.15, 0}};
  CHECK_THROWS_AS(fit_pmax(same), DomainError);

  std::vector<double> powers{10, 20, 30, 40, 50};
  const auto samples = simulate_depletion(177.0, powers, 0.01, 5);
  try {
    fit_pmax(samples, 1);
    FAIL("expected FitError");
  } catch (const FitError& e) {
    CHECK(e.last_iterate() > 100.0);
    CHECK(std::string(e.what()).find("did not converge") != std::string::npos);
  }
  CHECK_NOTHROW(fit_pmax(samples));
}
