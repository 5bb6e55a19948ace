#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "qfc/cavity.hpp"
#include "qfc/errors.hpp"

using namespace qfc;
using namespace qfc::cavity;
using doctest::Approx;

namespace {

CavitySpec symmetric(double r, double loss) {
  CavitySpec s;
  s.reflectivity_in = r;
  s.reflectivity_out = r;
  s.round_trip_extra_loss = loss;
  s.geometric_length = 20e-3;
  s.facet_curvature_radius = 14e-3;
  s.index_at_pump = 1.83;
  return s;
}

double finesse_of(double rho) {
  return std::numbers::pi * std::sqrt(rho) / (1.0 - rho);
}

}  // namespace

TEST_CASE("finesse examples") {
  CHECK(finesse(symmetric(0.98, 0.0)) == Approx(155.5009).epsilon(1e-6));
  CHECK(finesse(symmetric(0.98, 0.0016)) == Approx(144.08).epsilon(1e-4));
}

TEST_CASE("finesse and enhancement increase with rho") {
  double prev_f = 0.0, prev_e = 0.0;
  for (double r = 0.5; r < 0.99995; r = 1.0 - (1.0 - r) * 0.7) {
    const auto s = symmetric(r, 0.0);
    CHECK(finesse(s) > prev_f);
    CHECK(enhancement(s) > prev_e);
    prev_f = finesse(s);
    prev_e = enhancement(s);
  }
  CHECK(prev_f > 1e4);
}

TEST_CASE("lossless symmetric enhancement is 1 / T") {
  CHECK(enhancement(symmetric(0.98, 0.0)) == Approx(50.0).epsilon(1e-12));
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> t(1e-4, 0.5);
  for (int i = 0; i < 200; ++i) {
    const double T = t(gen);
    CHECK(enhancement(symmetric(1.0 - T, 0.0)) == Approx(1.0 / T).epsilon(1e-9));
  }
}

TEST_CASE("enhancement with loss and single-sided cavity") {
  CHECK(enhancement(symmetric(0.98, 0.0016)) == Approx(42.994).epsilon(1e-4));
  auto s = symmetric(0.98, 0.0);
  s.reflectivity_out = 1.0;
  CHECK(enhancement(s) == Approx(197.995).epsilon(1e-5));
}

TEST_CASE("invalid specs are rejected") {
  auto s = symmetric(0.98, 0.0);
  s.reflectivity_in = 0.0;
  CHECK_THROWS_AS(finesse(s), DomainError);
  s = symmetric(0.98, 1.0);
  CHECK_THROWS_AS(enhancement(s), DomainError);
  s = symmetric(1.0, 0.0);  // rho = 1
  CHECK_THROWS_AS(finesse(s), DomainError);
  s = symmetric(0.98, 0.0);
  s.facet_curvature_radius = 9e-3;
  CHECK_THROWS_AS(finesse(s), DomainError);
}

TEST_CASE("loss inference") {
  // The exact inverse of F = pi sqrt(rho)/(1 - rho) at F = 146.
  const double loss = infer_round_trip_loss(146.0, 0.98, 0.98);
  CHECK(loss == Approx(0.0013138).epsilon(1e-4));
  CHECK(finesse(symmetric(0.98, loss)) == Approx(146.0).epsilon(1e-11));

  // Independent oracle: solve for rho directly, then convert to loss.
  const double rho = oracle::bisect(
      [](double r) { return finesse_of(r) - 146.0; }, 0.5, 0.999999);
  CHECK(loss == Approx(1.0 - rho / 0.98).epsilon(1e-8));

  const double lossless = finesse(symmetric(0.98, 0.0));
  CHECK(infer_round_trip_loss(lossless, 0.98, 0.98) == Approx(0.0).epsilon(1e-12));
  CHECK_THROWS_AS(infer_round_trip_loss(200.0, 0.98, 0.98), DomainError);
  CHECK_THROWS_AS(infer_round_trip_loss(-1.0, 0.98, 0.98), DomainError);
}

TEST_CASE("loss inference round-trips over random specs") {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> r(0.8, 0.999), loss(0.0, 0.05);
  for (int i = 0; i < 300; ++i) {
    const double rin = r(gen), rout = r(gen), l = loss(gen);
    auto s = symmetric(rin, l);
    s.reflectivity_out = rout;
    const double f = finesse(s);
    const double back = infer_round_trip_loss(f, rin, rout);
    CAPTURE(rin);
    CAPTURE(rout);
    CAPTURE(l);
    s.round_trip_extra_loss = back;
    CHECK(std::abs(finesse(s) - f) < 1e-9 * f);
  }
}

TEST_CASE("circulating power") {
  CHECK(circulating_power(3.0, 0.5, 50.0) == Approx(75.0).epsilon(1e-15));
  CHECK(circulating_power(0.0, 0.3, 50.0) == 0.0);
  CHECK(circulating_power(3.0, 1.0, 50.0) == Approx(150.0).epsilon(1e-15));
  // Bilinear in input power and coupling.
  CHECK(circulating_power(6.0, 0.5, 50.0) == Approx(2 * circulating_power(3.0, 0.5, 50.0)));
  CHECK(circulating_power(3.0, 0.25, 50.0) == Approx(0.5 * circulating_power(3.0, 0.5, 50.0)));
  CHECK_THROWS_AS(circulating_power(3.0, 1.2, 50.0), DomainError);
  CHECK_THROWS_AS(circulating_power(-1.0, 0.5, 50.0), DomainError);
}

TEST_CASE("resonator mode") {
  auto s = symmetric(0.98, 0.0);
  const auto m = resonator_mode(s, 1064e-9);
  CHECK(m.rayleigh_range == Approx(6.3246e-3).epsilon(1e-4));
  CHECK(m.focusing_parameter == Approx(1.5811).epsilon(1e-4));
  CHECK(m.focusing_parameter >= 1.5);
  CHECK(m.focusing_parameter <= 1.65);

  s.facet_curvature_radius = s.geometric_length;
  const auto conf = resonator_mode(s, 1064e-9);
  CHECK(conf.rayleigh_range == Approx(s.geometric_length / 2).epsilon(1e-14));
  CHECK(conf.focusing_parameter == Approx(1.0).epsilon(1e-14));

  s.facet_curvature_radius = s.geometric_length / 2;
  CHECK_THROWS_AS(resonator_mode(s, 1064e-9), DomainError);
}

TEST_CASE("resonator xi is invariant under joint scaling") {
  std::mt19937_64 gen(23);
  std::uniform_real_distribution<double> scale(0.01, 100.0), ratio(0.51, 5.0);
  for (int i = 0; i < 100; ++i) {
    auto s = symmetric(0.98, 0.0);
    s.facet_curvature_radius = s.geometric_length * ratio(gen);
    const double xi = resonator_mode(s, 1064e-9).focusing_parameter;
    const double k = scale(gen);
    s.geometric_length *= k;
    s.facet_curvature_radius *= k;
    CHECK(resonator_mode(s, 1064e-9).focusing_parameter == Approx(xi).epsilon(1e-12));
  }
}

TEST_CASE("cavity figures bundle") {
  const auto f = cavity_figures(symmetric(0.98, 0.0), 1064e-9, 3.0, 0.5);
  CHECK(f.finesse == Approx(155.5009).epsilon(1e-6));
  CHECK(f.enhancement == Approx(50.0));
  CHECK(f.circulating_power == Approx(75.0));
  CHECK(f.focusing_parameter == Approx(1.5811).epsilon(1e-4));
  CHECK(f.mode_rayleigh_range > 0.0);
}
