#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>

#include "minabs/domain.hpp"
#include "minabs/rng.hpp"
#include "minabs/stat_kernel.hpp"

// The concrete single-pixel protocols: transmission counting (Fock or Poisson
// source) and the k-pass Mach-Zehnder interferometer, each with analytic
// planning plus seeded Monte Carlo execution.

namespace minabs {

enum class SourceKind { fock, poisson };

struct CountingPlan {
  std::int64_t photons = 0;          // N
  BayesTestResult test;              // exact rule on transmitted counts
  double predicted_pe = 0.5;
  double predicted_nabs = 0.0;       // beta^2 N
  SourceKind source = SourceKind::fock;
};

struct TrialOutcome {
  int true_object = 1;
  int guessed = 1;
  std::int64_t absorbed = 0;
  std::int64_t detected = 0;  // transmitted (counting) or arm-0 counts (interferometer)
};

// Thrown when |alpha_1| = |alpha_2|: the transmitted-photon count carries no
// information and counting fails.
struct CountingFailsError : std::runtime_error {
  CountingFailsError() : std::runtime_error("counting fails: |alpha1| = |alpha2|") {}
};

inline CountingPlan plan_counting(const TwoObjectTask& task, double target_pe,
                                  SourceKind source = SourceKind::fock) {
  if (!(target_pe > 0.0 && target_pe <= 0.5))
    throw std::domain_error("plan_counting: target_pe must be in (0, 1/2]");
  const double p1 = std::norm(task.alpha1);
  const double p2 = std::norm(task.alpha2);
  const double gap = std::abs(p2 - p1);
  if (gap <= 1e-12) throw CountingFailsError();
  const double pbar = std::norm(task.alpha_mean);
  const double sigma = (source == SourceKind::fock)
                           ? std::sqrt(pbar * (1.0 - pbar))
                           : std::sqrt(pbar);
  CountingPlan plan;
  plan.source = source;
  plan.photons = gaussian_trial_count(gap, sigma, target_pe);
  plan.predicted_nabs =
      task.beta_mean * task.beta_mean * static_cast<double>(plan.photons);
  if (plan.photons == 0) {
    plan.predicted_pe = 0.5;
    return plan;
  }
  const DiscreteDistribution d1 = (source == SourceKind::fock)
                                      ? binomial(plan.photons, p1)
                                      : poisson(p1 * static_cast<double>(plan.photons));
  const DiscreteDistribution d2 = (source == SourceKind::fock)
                                      ? binomial(plan.photons, p2)
                                      : poisson(p2 * static_cast<double>(plan.photons));
  plan.test = optimal_binary_test(d1, d2);
  plan.predicted_pe = plan.test.error_prob;
  return plan;
}

inline TrialOutcome run_counting(const CountingPlan& plan, const TwoObjectTask& task,
                                 int true_object, Rng& rng) {
  const double p = std::norm(true_object == 1 ? task.alpha1 : task.alpha2);
  std::int64_t transmitted = 0;
  std::int64_t absorbed = 0;
  if (plan.source == SourceKind::fock) {
    for (std::int64_t i = 0; i < plan.photons; ++i)
      if (rng.bernoulli(p)) ++transmitted;
    absorbed = plan.photons - transmitted;
  } else {
    // Coherent source: detector and absorption counts are independent
    // Poisson variables with means p N and (1-p) N.
    transmitted = CdfSampler(poisson(p * static_cast<double>(plan.photons))).sample(rng);
    absorbed =
        CdfSampler(poisson((1.0 - p) * static_cast<double>(plan.photons))).sample(rng);
  }
  TrialOutcome outcome;
  outcome.true_object = true_object;
  outcome.detected = transmitted;
  outcome.absorbed = absorbed;
  outcome.guessed = plan.test.decide(transmitted);
  return outcome;
}

struct InterferometerPlan {
  std::uint32_t passes = 1;          // k
  std::int64_t photons = 0;          // N launched
  double chi1 = 0.5;                 // arm-0 probability conditional on survival
  double chi2 = 0.5;
  double absorb_prob = 0.0;          // per launched photon, (1 - alpha^{2k}) / 2
  double predicted_nabs = 0.0;
  double predicted_pe = 0.5;
  BayesTestResult test;              // rule on arm-0 counts out of N launched
  double alpha = 0.0;                // task after global-phase removal
  double eta = 0.0;                  // alpha_{1,2} = alpha e^{-+ i eta}
};

inline double interferometer_chi(Complex alpha_k) {
  const Complex numerator = 1.0 + Complex(0.0, 1.0) * alpha_k;
  return std::norm(numerator) / (2.0 * (1.0 + std::norm(alpha_k)));
}

// Phase-only regime: |alpha1| = |alpha2|. Tasks are normalized so the mean
// transparency is real positive; the photon traverses the object k times in
// the object arm. passes = 0 requests the near-transparent auto choice
// k = round(1/delta) with alpha = 1 - delta. Planning counts surviving
// photons as the informative trials (absorption is hypothesis-independent
// here) and scales back up by the survival probability.
inline InterferometerPlan plan_interferometer(const TwoObjectTask& task,
                                              std::uint32_t passes,
                                              double target_pe) {
  if (!(target_pe > 0.0 && target_pe <= 0.5))
    throw std::domain_error("plan_interferometer: target_pe must be in (0, 1/2]");
  const double a1 = std::abs(task.alpha1);
  const double a2 = std::abs(task.alpha2);
  if (std::abs(a1 - a2) > 1e-12 * std::max(1.0, a1))
    throw std::invalid_argument(
        "plan_interferometer: |alpha1| != |alpha2| (use counting instead)");

  InterferometerPlan plan;
  plan.alpha = a1;
  // Global phase removal: alpha_{1,2} = alpha e^{-+ i eta}.
  plan.eta = std::arg(task.alpha2 / task.alpha1) / 2.0;
  if (plan.eta == 0.0)
    throw std::invalid_argument("plan_interferometer: identical objects");

  if (passes == 0) {
    const double delta = 1.0 - plan.alpha;
    if (delta <= 0.0)
      throw std::domain_error("plan_interferometer: auto-k needs alpha < 1");
    passes = static_cast<std::uint32_t>(
        std::max(1.0, std::llround(1.0 / delta) * 1.0));
  }
  plan.passes = passes;

  const Complex ak1 = std::polar(std::pow(plan.alpha, static_cast<double>(passes)),
                                 -plan.eta * static_cast<double>(passes));
  const Complex ak2 = std::polar(std::pow(plan.alpha, static_cast<double>(passes)),
                                 plan.eta * static_cast<double>(passes));
  plan.chi1 = interferometer_chi(ak1);
  plan.chi2 = interferometer_chi(ak2);
  const double a2k = std::pow(plan.alpha, 2.0 * static_cast<double>(passes));
  plan.absorb_prob = (1.0 - a2k) / 2.0;
  const double survival = (1.0 + a2k) / 2.0;

  const double gap = std::abs(plan.chi2 - plan.chi1);
  if (gap == 0.0)
    throw std::invalid_argument("plan_interferometer: k eta kills the signal");
  // chi at the mean transparency is exactly 1/2 for a real alpha.
  const std::int64_t survivors = gaussian_trial_count(gap, 0.5, target_pe);
  plan.photons = static_cast<std::int64_t>(
      std::ceil(static_cast<double>(survivors) / survival));
  plan.predicted_nabs = static_cast<double>(plan.photons) * plan.absorb_prob;

  if (plan.photons == 0) {
    plan.predicted_pe = 0.5;
    return plan;
  }
  // Exact test on the collapsed statistic: arm-0 detections out of N launched
  // (an absorbed photon counts as a non-detection).
  const double q1 = survival * plan.chi1;
  const double q2 = survival * plan.chi2;
  plan.test = optimal_binary_test(binomial(plan.photons, q1),
                                  binomial(plan.photons, q2));
  plan.predicted_pe = plan.test.error_prob;
  return plan;
}

inline TrialOutcome run_interferometer(const InterferometerPlan& plan,
                                       const TwoObjectTask& task, int true_object,
                                       Rng& rng) {
  (void)task;
  const double chi = (true_object == 1) ? plan.chi1 : plan.chi2;
  std::int64_t absorbed = 0;
  std::int64_t arm0 = 0;
  for (std::int64_t i = 0; i < plan.photons; ++i) {
    if (rng.bernoulli(plan.absorb_prob))
      ++absorbed;
    else if (rng.bernoulli(chi))
      ++arm0;
  }
  TrialOutcome outcome;
  outcome.true_object = true_object;
  outcome.absorbed = absorbed;
  outcome.detected = arm0;
  outcome.guessed = plan.test.decide(arm0);
  return outcome;
}

}  // namespace minabs
