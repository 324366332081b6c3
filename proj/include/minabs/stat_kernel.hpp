#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "minabs/rng.hpp"

// Probability and hypothesis-testing primitives shared by the protocol
// simulators: discrete distributions with exact Bayes-optimal binary tests,
// the inverse error function, and Gaussian trial-count planning.

namespace minabs {

// Finite distribution over integer outcomes. Support is strictly increasing,
// probabilities are non-negative and sum to 1 (within 1e-12 at construction).
struct DiscreteDistribution {
  std::vector<std::int64_t> support;
  std::vector<double> probs;

  double mean() const {
    double m = 0.0;
    for (std::size_t i = 0; i < support.size(); ++i)
      m += static_cast<double>(support[i]) * probs[i];
    return m;
  }

  double variance() const {
    const double m = mean();
    double v = 0.0;
    for (std::size_t i = 0; i < support.size(); ++i) {
      const double d = static_cast<double>(support[i]) - m;
      v += d * d * probs[i];
    }
    return v;
  }

  void validate() const {
    double total = 0.0;
    for (std::size_t i = 0; i < support.size(); ++i) {
      if (probs[i] < 0.0) throw std::domain_error("negative probability");
      if (i > 0 && support[i] <= support[i - 1])
        throw std::domain_error("support not strictly increasing");
      total += probs[i];
    }
    if (std::abs(total - 1.0) > 1e-12)
      throw std::domain_error("probabilities do not sum to 1");
  }

  // Inverse-CDF sample; ties resolved toward the lower outcome.
  std::int64_t sample(Rng& rng) const {
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < support.size(); ++i) {
      acc += probs[i];
      if (u < acc) return support[i];
    }
    return support.back();
  }
};

// Precomputed-CDF sampler for repeated draws from one distribution.
class CdfSampler {
 public:
  explicit CdfSampler(const DiscreteDistribution& d)
      : support_(d.support), cdf_(d.probs) {
    for (std::size_t i = 1; i < cdf_.size(); ++i) cdf_[i] += cdf_[i - 1];
  }

  std::int64_t sample(Rng& rng) const {
    const double u = rng.uniform();
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    const std::size_t idx =
        std::min(static_cast<std::size_t>(it - cdf_.begin()), support_.size() - 1);
    return support_[idx];
  }

 private:
  std::vector<std::int64_t> support_;
  std::vector<double> cdf_;
};

// Equal-prior Bayes test between two hypotheses. decision_rule maps each
// outcome to the guessed hypothesis (1 or 2). threshold is present iff the
// rule is monotone in the outcome: constant up to threshold, constant above.
struct BayesTestResult {
  std::map<std::int64_t, int> decision_rule;
  double error_prob = 0.5;
  std::optional<std::int64_t> threshold;

  int decide(std::int64_t outcome) const {
    auto it = decision_rule.find(outcome);
    if (it != decision_rule.end()) return it->second;
    // Outcome outside the tabulated support: extrapolate monotonically.
    if (decision_rule.empty()) return 1;
    if (outcome < decision_rule.begin()->first) return decision_rule.begin()->second;
    return decision_rule.rbegin()->second;
  }
};

// erf^-1(p) by Newton iteration on std::erf, rational initial guess.
inline double erf_inverse(double p) {
  if (!(std::abs(p) < 1.0)) throw std::domain_error("erf_inverse: |p| must be < 1");
  if (p == 0.0) return 0.0;

  // Initial guess: Giles' single-precision-quality rational approximation.
  double w = -std::log((1.0 - p) * (1.0 + p));
  double x;
  if (w < 5.0) {
    w -= 2.5;
    x = 2.81022636e-08;
    x = 3.43273939e-07 + x * w;
    x = -3.5233877e-06 + x * w;
    x = -4.39150654e-06 + x * w;
    x = 0.00021858087 + x * w;
    x = -0.00125372503 + x * w;
    x = -0.00417768164 + x * w;
    x = 0.246640727 + x * w;
    x = 1.50140941 + x * w;
    x *= p;
  } else {
    w = std::sqrt(w) - 3.0;
    x = -0.000200214257;
    x = 0.000100950558 + x * w;
    x = 0.00134934322 + x * w;
    x = -0.00367342844 + x * w;
    x = 0.00573950773 + x * w;
    x = -0.0076224613 + x * w;
    x = 0.00943887047 + x * w;
    x = 1.00167406 + x * w;
    x = 2.83297682 + x * w;
    x *= p;
  }

  constexpr double kTwoOverSqrtPi = 1.1283791670955125738961589031;
  for (int iter = 0; iter < 50; ++iter) {
    const double err = std::erf(x) - p;
    const double deriv = kTwoOverSqrtPi * std::exp(-x * x);
    const double dx = err / deriv;
    x -= dx;
    if (std::abs(dx) <= 1e-12 * std::max(1.0, std::abs(x))) break;
  }
  return x;
}

inline DiscreteDistribution binomial(std::int64_t n, double p) {
  if (n < 0) throw std::domain_error("binomial: n must be >= 0");
  if (p < 0.0 || p > 1.0) throw std::domain_error("binomial: p must be in [0,1]");
  DiscreteDistribution d;
  d.support.resize(static_cast<std::size_t>(n) + 1);
  d.probs.resize(static_cast<std::size_t>(n) + 1);
  // Log-space evaluation keeps large n stable; exact cases handled directly.
  for (std::int64_t k = 0; k <= n; ++k) {
    d.support[static_cast<std::size_t>(k)] = k;
    double prob;
    if (p == 0.0)
      prob = (k == 0) ? 1.0 : 0.0;
    else if (p == 1.0)
      prob = (k == n) ? 1.0 : 0.0;
    else {
      const double logc = std::lgamma(static_cast<double>(n) + 1.0) -
                          std::lgamma(static_cast<double>(k) + 1.0) -
                          std::lgamma(static_cast<double>(n - k) + 1.0);
      prob = std::exp(logc + static_cast<double>(k) * std::log(p) +
                      static_cast<double>(n - k) * std::log1p(-p));
    }
    d.probs[static_cast<std::size_t>(k)] = prob;
  }
  // Renormalize the rounding dust so validate() holds at any n.
  double total = 0.0;
  for (double q : d.probs) total += q;
  for (double& q : d.probs) q /= total;
  return d;
}

// Poisson truncated at mean + 12*sqrt(mean); tail mass folded into the last
// bin so the support stays finite and optimal_binary_test stays exact.
inline DiscreteDistribution poisson(double mean) {
  if (mean < 0.0) throw std::domain_error("poisson: mean must be >= 0");
  if (mean == 0.0) return DiscreteDistribution{{0}, {1.0}};
  const auto cutoff =
      static_cast<std::int64_t>(std::ceil(mean + 12.0 * std::sqrt(mean)));
  DiscreteDistribution d;
  d.support.resize(static_cast<std::size_t>(cutoff) + 1);
  d.probs.resize(static_cast<std::size_t>(cutoff) + 1);
  double cumulative = 0.0;
  for (std::int64_t k = 0; k <= cutoff; ++k) {
    d.support[static_cast<std::size_t>(k)] = k;
    const double logp = static_cast<double>(k) * std::log(mean) - mean -
                        std::lgamma(static_cast<double>(k) + 1.0);
    d.probs[static_cast<std::size_t>(k)] = std::exp(logp);
    cumulative += d.probs[static_cast<std::size_t>(k)];
  }
  d.probs.back() += std::max(0.0, 1.0 - cumulative);  // fold the tail
  double total = 0.0;
  for (double q : d.probs) total += q;
  for (double& q : d.probs) q /= total;
  return d;
}

// Likelihood-ratio test with equal priors on the union support. Ties decided
// toward hypothesis 1, which keeps the rule deterministic.
inline BayesTestResult optimal_binary_test(const DiscreteDistribution& d1,
                                           const DiscreteDistribution& d2) {
  if (d1.support.empty() || d2.support.empty())
    throw std::domain_error("optimal_binary_test: empty support");

  std::map<std::int64_t, std::pair<double, double>> padded;
  for (std::size_t i = 0; i < d1.support.size(); ++i)
    padded[d1.support[i]].first = d1.probs[i];
  for (std::size_t i = 0; i < d2.support.size(); ++i)
    padded[d2.support[i]].second = d2.probs[i];

  BayesTestResult result;
  double error = 0.0;
  for (const auto& [outcome, pq] : padded) {
    // Outcomes with zero probability under both hypotheses never occur and
    // would otherwise break the threshold scan in the underflowed tails.
    if (pq.first == 0.0 && pq.second == 0.0) continue;
    const int guess = (pq.first >= pq.second) ? 1 : 2;
    result.decision_rule[outcome] = guess;
    error += 0.5 * std::min(pq.first, pq.second);
  }
  if (result.decision_rule.empty())
    throw std::domain_error("optimal_binary_test: all-zero distributions");
  result.error_prob = error;

  // Threshold exists iff the guess sequence changes at most once.
  int changes = 0;
  std::int64_t boundary = result.decision_rule.begin()->first;
  int prev = result.decision_rule.begin()->second;
  for (const auto& [outcome, guess] : result.decision_rule) {
    if (guess != prev) {
      ++changes;
      prev = guess;
    } else if (changes == 0) {
      boundary = outcome;
    }
  }
  if (changes <= 1) result.threshold = boundary;
  return result;
}

// Smallest integer N with N*gap / (2*sigma*sqrt(N)) >= sqrt(2)*gamma(pe),
// i.e. N >= 8 sigma^2 gamma^2 / gap^2. pe in (0, 1/2]; at pe = 1/2 no trials
// are needed.
inline std::int64_t gaussian_trial_count(double mu_gap_per_trial,
                                         double sigma_per_trial,
                                         double target_pe) {
  if (mu_gap_per_trial <= 0.0)
    throw std::domain_error("gaussian_trial_count: gap must be > 0");
  if (sigma_per_trial <= 0.0)
    throw std::domain_error("gaussian_trial_count: sigma must be > 0");
  if (!(target_pe > 0.0 && target_pe <= 0.5))
    throw std::domain_error("gaussian_trial_count: target_pe must be in (0, 1/2]");
  const double gamma = erf_inverse(1.0 - 2.0 * target_pe);
  if (gamma == 0.0) return 0;
  const double ratio = 2.0 * std::sqrt(2.0) * sigma_per_trial * gamma / mu_gap_per_trial;
  double n = std::ceil(ratio * ratio);
  // Guard against ceil landing one short through rounding.
  while (std::sqrt(n) * mu_gap_per_trial <
         2.0 * std::sqrt(2.0) * sigma_per_trial * gamma * (1.0 - 1e-15))
    n += 1.0;
  return static_cast<std::int64_t>(n);
}

}  // namespace minabs
