#include <doctest.h>

#include <cmath>

#include "rbci/analytic_risk.hpp"
#include "rbci/stats.hpp"

using namespace rbci;
using risk::GaussianRiskParams;

TEST_SUITE("analytic_risk") {

TEST_CASE("normal quantile accuracy") {
  CHECK(std::fabs(stats::normal_quantile(0.975) - 1.959963984540054) < 1e-12);
  CHECK(std::fabs(stats::normal_cdf(stats::normal_quantile(0.12345)) - 0.12345) < 1e-13);
  CHECK(std::fabs(stats::normal_upper_tail(stats::normal_quantile(0.975)) - 0.025) < 1e-14);
}

TEST_CASE("f_n value at omega=1 against the erfc route") {
  const GaussianRiskParams params{1, 1.0, 0.05};
  // Independent route: E[IS] = 2a + (2/alpha) * 2 * (phi(a) - a * PhiBar(a))
  // with a = z_{0.975}, evaluated directly from erfc here.
  const double z = 1.959963984540054;
  const double phi = std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
  const double tail = 0.5 * std::erfc(z / std::sqrt(2.0));
  const double oracle = 2.0 * z + (2.0 / 0.05) * 2.0 * (phi - z * tail);
  CHECK(risk::f_n(1.0, params) == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(risk::f_n(1.0, params) == doctest::Approx(4.67560558).epsilon(1e-3));
}

TEST_CASE("f_n scales as 1/sqrt(n) and stays positive") {
  const GaussianRiskParams n1{1, 1.0, 0.05};
  const GaussianRiskParams n4{4, 1.0, 0.05};
  for (double w : {0.2, 0.7, 1.0, 2.5}) {
    CHECK(risk::f_n(w, n4) == doctest::Approx(0.5 * risk::f_n(w, n1)).epsilon(1e-12));
    CHECK(risk::f_n(w, n1) > 0.0);
  }
  CHECK_THROWS(risk::f_n(0.0, n1));
  CHECK_THROWS(risk::f_n(-1.0, n1));
}

TEST_CASE("f_n_prime vanishes at omega=1 and matches finite differences") {
  const GaussianRiskParams params{1, 1.0, 0.05};
  CHECK(std::fabs(risk::f_n_prime(1.0, params)) < 1e-10);
  CHECK(risk::f_n_prime(0.25, params) < 0.0);

  const double h = 1e-5;
  const double fd = (risk::f_n(2.0 + h, params) - risk::f_n(2.0 - h, params)) / (2 * h);
  const double analytic = risk::f_n_prime(2.0, params);
  CHECK(std::fabs(fd - analytic) < 1e-6 * std::fabs(analytic));
}

TEST_CASE("risk is f_n plus the constant variance term, minimized at 1") {
  const GaussianRiskParams params{1, 1.0, 0.05};
  for (double w : {0.1, 0.5, 1.0, 2.0})
    CHECK(risk::risk(w, params) - risk::f_n(w, params) == doctest::Approx(1.0));
  CHECK(risk::risk(1.0, params) == doctest::Approx(5.67560558).epsilon(1e-3));

  for (int n : {1, 10, 100}) {
    const GaussianRiskParams pn{n, 1.0, 0.05};
    double best_w = 0.0, best = 1e300;
    for (int k = 1; k <= 30; ++k) {
      const double w = 0.1 * k;
      const double r = risk::risk(w, pn);
      if (r < best) {
        best = r;
        best_w = w;
      }
    }
    CHECK(best_w == doctest::Approx(1.0));
  }
}

TEST_CASE("f_n_prime has exactly one sign change on a log grid") {
  const GaussianRiskParams params{5, 2.0, 0.05};
  int changes = 0;
  double prev = risk::f_n_prime(std::exp(-4.0), params);
  for (int k = 1; k < 1000; ++k) {
    const double w = std::exp(-4.0 + 8.0 * k / 999.0);
    const double cur = risk::f_n_prime(w, params);
    if ((prev < 0) != (cur < 0)) ++changes;
    prev = cur;
  }
  CHECK(changes == 1);
  CHECK(risk::f_n_prime(0.5, params) < 0);
  CHECK(risk::f_n_prime(2.0, params) > 0);
}

}  // TEST_SUITE
