#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "minabs/rng.hpp"
#include "minabs/stat_kernel.hpp"

using namespace minabs;

TEST_CASE("erf_inverse inverts erf across the open interval") {
  for (double p = -0.999; p < 1.0; p += 0.0624) {
    const double x = erf_inverse(p);
    REQUIRE(std::erf(x) == Catch::Approx(p).margin(1e-12));
  }
  REQUIRE(erf_inverse(0.0) == 0.0);
  REQUIRE(erf_inverse(0.8) == Catch::Approx(0.9061938024368232).margin(1e-10));
  REQUIRE(erf_inverse(0.98) == Catch::Approx(1.6449763571331868).margin(1e-10));
  REQUIRE_THROWS_AS(erf_inverse(1.0), std::domain_error);
  REQUIRE_THROWS_AS(erf_inverse(-1.5), std::domain_error);
}

TEST_CASE("binomial distribution has exact moments") {
  for (auto [n, p] : {std::pair<std::int64_t, double>{10, 0.3},
                      {100, 0.59 * 0.59},
                      {7, 0.0},
                      {7, 1.0}}) {
    const DiscreteDistribution d = binomial(n, p);
    d.validate();
    REQUIRE(d.mean() == Catch::Approx(static_cast<double>(n) * p).margin(1e-9));
    REQUIRE(d.variance() ==
            Catch::Approx(static_cast<double>(n) * p * (1.0 - p)).margin(1e-9));
  }
  REQUIRE_THROWS_AS(binomial(-1, 0.5), std::domain_error);
  REQUIRE_THROWS_AS(binomial(10, 1.5), std::domain_error);
}

TEST_CASE("poisson distribution has matching mean and variance") {
  for (double mean : {0.5, 4.0, 120.0}) {
    const DiscreteDistribution d = poisson(mean);
    d.validate();
    REQUIRE(d.mean() == Catch::Approx(mean).margin(1e-6 * (1.0 + mean)));
    REQUIRE(d.variance() == Catch::Approx(mean).margin(1e-4 * (1.0 + mean)));
  }
  const DiscreteDistribution zero = poisson(0.0);
  REQUIRE(zero.support.size() == 1);
  REQUIRE(zero.probs[0] == 1.0);
}

TEST_CASE("optimal binary test reproduces the hand-enumerated example") {
  // binomial(2, 0.5) = {1/4, 1/2, 1/4} vs binomial(2, 0.9) = {.01, .18, .81}:
  // guess 1 on {0, 1}, guess 2 on {2}; error = (min sums)/2 = 0.22.
  const BayesTestResult test = optimal_binary_test(binomial(2, 0.5), binomial(2, 0.9));
  REQUIRE(test.error_prob == Catch::Approx(0.22).margin(1e-12));
  REQUIRE(test.decide(0) == 1);
  REQUIRE(test.decide(1) == 1);
  REQUIRE(test.decide(2) == 2);
  REQUIRE(test.threshold.has_value());
  // Extrapolation beyond the enumerated support follows the nearest edge.
  REQUIRE(test.decide(-5) == 1);
  REQUIRE(test.decide(50) == 2);
}

TEST_CASE("optimal binary test beats every threshold rule") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    Rng rng = Rng::derive(111, seed);
    const std::int64_t n = 5 + static_cast<std::int64_t>(rng.next_u64() % 40);
    const double p1 = 0.05 + 0.9 * rng.uniform();
    const double p2 = 0.05 + 0.9 * rng.uniform();
    const DiscreteDistribution d1 = binomial(n, p1);
    const DiscreteDistribution d2 = binomial(n, p2);
    const BayesTestResult test = optimal_binary_test(d1, d2);

    // Every cut "guess 1 iff count <= t" (and its mirror) is at least as bad.
    for (std::int64_t t = -1; t <= n; ++t) {
      double err_low = 0.0, err_high = 0.0;
      for (std::int64_t k = 0; k <= n; ++k) {
        const double q1 = d1.probs[static_cast<std::size_t>(k)];
        const double q2 = d2.probs[static_cast<std::size_t>(k)];
        err_low += 0.5 * (k <= t ? q2 : q1);
        err_high += 0.5 * (k <= t ? q1 : q2);
      }
      REQUIRE(test.error_prob <= std::min(err_low, err_high) + 1e-12);
    }
  }
}

TEST_CASE("gaussian trial count") {
  // Counting plan size for transmission probabilities 0.59^2 vs 0.61^2.
  const double gap = 0.61 * 0.61 - 0.59 * 0.59;
  const double sigma = std::sqrt(0.36 * 0.64);
  REQUIRE(gaussian_trial_count(gap, sigma, 0.1) == 2628);
  REQUIRE(gaussian_trial_count(gap, sigma, 0.5) == 0);
  REQUIRE_THROWS_AS(gaussian_trial_count(0.0, sigma, 0.1), std::domain_error);
  REQUIRE_THROWS_AS(gaussian_trial_count(gap, sigma, 0.7), std::domain_error);

  // Quadrupling the per-trial gap cuts the count 16x (up to ceil).
  const std::int64_t big = gaussian_trial_count(gap, sigma, 0.01);
  const std::int64_t small = gaussian_trial_count(4.0 * gap, sigma, 0.01);
  REQUIRE(std::abs(static_cast<double>(big) / static_cast<double>(small) - 16.0) < 0.1);
}

TEST_CASE("discrete sampling matches the distribution") {
  const DiscreteDistribution d = binomial(30, 0.37);
  const CdfSampler sampler(d);
  Rng rng = Rng::derive(2024, 5);
  const int trials = 200000;
  double sum = 0.0;
  for (int t = 0; t < trials; ++t) sum += static_cast<double>(sampler.sample(rng));
  const double se = std::sqrt(d.variance() / trials);
  REQUIRE(std::abs(sum / trials - d.mean()) < 4.0 * se);
}

TEST_CASE("derived rng streams are deterministic and index-separated") {
  Rng a = Rng::derive(42, 1, 2);
  Rng b = Rng::derive(42, 1, 2);
  Rng c = Rng::derive(42, 2, 1);
  bool same_ab = true, same_ac = true;
  for (int i = 0; i < 16; ++i) {
    const std::uint64_t x = a.next_u64();
    same_ab = same_ab && (x == b.next_u64());
    same_ac = same_ac && (x == c.next_u64());
  }
  REQUIRE(same_ab);
  REQUIRE_FALSE(same_ac);
}
