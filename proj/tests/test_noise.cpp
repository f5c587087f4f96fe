#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "gsanova/noise.hpp"
#include "oracles.hpp"

using namespace gsanova;
namespace oracle = gsanova::test_oracles;

TEST_SUITE("noise") {

TEST_CASE("gamma identities match the quadrature oracle") {
  for (double alpha : {2.0, 2.5, 3.0, 4.0, 6.0}) {
    CAPTURE(alpha);
    CHECK(noise::normalizing_constant(alpha) ==
          doctest::Approx(oracle::normalizing_constant(alpha)).epsilon(1e-10));
    CHECK(noise::variance(alpha) ==
          doctest::Approx(oracle::variance(alpha)).epsilon(1e-8));
    CHECK(noise::abs_first_moment(alpha) ==
          doctest::Approx(oracle::abs_first_moment(alpha)).epsilon(1e-8));
    CHECK(noise::fourth_moment(alpha) ==
          doctest::Approx(oracle::fourth_moment(alpha)).epsilon(1e-8));
  }
}

TEST_CASE("pinned constants") {
  // 1/sqrt(pi), and the alpha = 4 values from the quadrature oracle.
  CHECK(noise::normalizing_constant(2.0) == doctest::Approx(0.5641896).epsilon(1e-7));
  CHECK(noise::abs_first_moment(2.0) == doctest::Approx(0.5641896).epsilon(1e-7));
  CHECK(noise::variance(2.0) == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(noise::normalizing_constant(4.0) == doctest::Approx(0.5516).epsilon(2e-4));
  CHECK(noise::variance(4.0) == doctest::Approx(0.33799).epsilon(1e-4));
  CHECK(noise::abs_first_moment(4.0) == doctest::Approx(0.48887).epsilon(1e-4));
  CHECK(noise::eps_square_variance(3.0) == doctest::Approx(1.4184).epsilon(1e-4));
}

TEST_CASE("large alpha tends to the uniform limit") {
  CHECK(std::abs(noise::normalizing_constant(200.0) - 0.5) < 1e-2);
  CHECK(std::abs(noise::variance(200.0) - 1.0 / 3.0) < 1e-2);
}

TEST_CASE("density normalizes, is symmetric, and Jensen holds") {
  for (double alpha : {2.0, 2.5, 3.0, 4.0, 6.0}) {
    CAPTURE(alpha);
    const double upper = std::pow(16.0 * std::log(10.0), 1.0 / alpha) + 1.0;
    const double mass = oracle::simpson(
        [alpha](double x) { return noise::density(alpha, x); }, -upper, upper);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));
    for (double x : {0.1, 0.7, 1.9})
      CHECK(noise::density(alpha, x) == noise::density(alpha, -x));
    CHECK(noise::abs_first_moment(alpha) <= std::sqrt(noise::variance(alpha)));
  }
}

TEST_CASE("spec validation") {
  CHECK_THROWS_AS((void)noise::NoiseSpec::make(2.0), std::invalid_argument);
  CHECK_NOTHROW((void)noise::NoiseSpec::make(2.0, 1.0, true));
  CHECK_THROWS_AS((void)noise::NoiseSpec::make(1.5, 1.0, true), std::invalid_argument);
  CHECK_THROWS_AS((void)noise::NoiseSpec::make(3.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS((void)noise::NoiseSpec::make(3.0, -1.0), std::invalid_argument);
  CHECK_THROWS_AS((void)noise::normalizing_constant(1.5), std::invalid_argument);
}

TEST_CASE("sampler is deterministic and matches first two moments") {
  const auto spec = noise::NoiseSpec::make(3.0);
  const std::size_t n = 100000;
  const auto draws = noise::sample_errors(spec, n, 42);
  const auto again = noise::sample_errors(spec, n, 42);
  CHECK(draws == again);
  CHECK(noise::sample_errors(spec, n, 43) != draws);

  // sigma scales the draws without touching the underlying stream.
  const auto scaled =
      noise::sample_errors(noise::NoiseSpec::make(3.0, 2.0), n, 42);
  for (std::size_t i = 0; i < 100; ++i) {
    CHECK(scaled[i] == 2.0 * draws[i]);
  }

  double mean = 0.0;
  for (double x : draws) mean += x;
  mean /= static_cast<double>(n);
  CHECK(std::abs(mean) < 3.0 / std::sqrt(static_cast<double>(n)));

  double var = 0.0;
  for (double x : draws) var += (x - mean) * (x - mean);
  var /= static_cast<double>(n);
  // SE of the sample variance of eps comes from Var(eps^2), taken from the
  // independent quadrature oracle rather than the library.
  const double se = std::sqrt(oracle::eps_square_variance(3.0) /
                              static_cast<double>(n));
  CHECK(std::abs(var - 1.0) < 3.0 * se);
}

TEST_CASE("sampler distribution passes a KS check against the cdf") {
  const std::size_t n = 100000;
  for (double alpha : {2.5, 3.0, 4.0}) {
    CAPTURE(alpha);
    const auto spec = noise::NoiseSpec::make(alpha);
    auto draws = noise::sample_errors(spec, n, 7);
    std::sort(draws.begin(), draws.end());
    double ks = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double cdf = noise::cdf_standardized(alpha, draws[i]);
      const double lo = static_cast<double>(i) / n;
      const double hi = static_cast<double>(i + 1) / n;
      ks = std::max({ks, std::abs(cdf - lo), std::abs(cdf - hi)});
    }
    CHECK(ks < 0.01);
  }
}

TEST_CASE("tail log-derivative hand cases at alpha = 4") {
  // Threshold m(4, 1) = (1/4)^(1/2) = 0.5; analytic hazard -alpha t^(alpha-1).
  CHECK(noise::hazard_threshold(4.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(noise::tail_log_derivative(4.0, 0.5).analytic ==
        doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(noise::tail_log_derivative(4.0, 1.0).analytic ==
        doctest::Approx(-4.0).epsilon(1e-12));
  // Below the threshold the condition analytic <= -t fails: -0.108 > -0.3.
  CHECK(noise::tail_log_derivative(4.0, 0.3).analytic ==
        doctest::Approx(-0.108).epsilon(1e-12));
  CHECK(noise::tail_log_derivative(4.0, 0.3).analytic > -0.3);
  // At t = 0 the tail mass is 1/2, so the exact hazard is -2 a_alpha.
  CHECK(noise::tail_log_derivative(4.0, 0.0).exact ==
        doctest::Approx(-2.0 * noise::normalizing_constant(4.0)).epsilon(1e-8));
  CHECK_THROWS_AS((void)noise::tail_log_derivative(4.0, -0.1),
                  std::domain_error);
}

TEST_CASE("exact hazard satisfies the membership condition above threshold") {
  for (double alpha : {3.0, 4.0}) {
    CAPTURE(alpha);
    const double m = noise::hazard_threshold(alpha, 1.0);
    for (double t = m; t <= m + 2.0; t += 0.25) {
      const auto d = noise::tail_log_derivative(alpha, t);
      CHECK(d.exact <= -t + 1e-9);
    }
  }
}

}  // TEST_SUITE
