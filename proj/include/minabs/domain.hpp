#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <vector>

// Task definitions and the closed-form absorption bounds, as pure evaluators.

namespace minabs {

using Complex = std::complex<double>;

// One pixel's complex non-absorption amplitude and derived absorption
// magnitude, |alpha|^2 + beta_mag^2 = 1.
struct Transparency {
  Complex alpha;
  double beta_mag;

  explicit Transparency(Complex a) : alpha(a) {
    if (std::abs(a) > 1.0 + 1e-12)
      throw std::domain_error("Transparency: |alpha| must be <= 1");
    beta_mag = std::sqrt(std::max(0.0, 1.0 - std::norm(a)));
  }
};

// The two-hypothesis discrimination task: alpha_{1,2} = alpha_mean -+ epsilon.
// closeness_ok is the |epsilon| < beta^2 / (2|alpha|) condition under which
// the phase-aligned overlap expansion (and hence the bound) is valid.
struct TwoObjectTask {
  Complex alpha1;
  Complex alpha2;
  Complex alpha_mean;
  Complex epsilon;
  double beta_mean;
  bool closeness_ok;
};

inline TwoObjectTask make_task(Complex alpha1, Complex alpha2) {
  if (std::abs(alpha1) > 1.0 + 1e-12 || std::abs(alpha2) > 1.0 + 1e-12)
    throw std::domain_error("make_task: amplitude magnitude must be <= 1");
  TwoObjectTask task;
  task.alpha1 = alpha1;
  task.alpha2 = alpha2;
  task.alpha_mean = (alpha1 + alpha2) / 2.0;
  task.epsilon = (alpha2 - alpha1) / 2.0;
  task.beta_mean = std::sqrt(std::max(0.0, 1.0 - std::norm(task.alpha_mean)));
  const double amag = std::abs(task.alpha_mean);
  task.closeness_ok =
      amag == 0.0 ||
      std::abs(task.epsilon) < task.beta_mean * task.beta_mean / (2.0 * amag);
  return task;
}

// A set of candidate pixel images over M pixels.
struct ImageSet {
  std::size_t num_pixels = 0;
  std::vector<std::vector<Complex>> images;  // images[p][i] = alpha_i^p

  // Arithmetic mean of all |beta_i^p|.
  double beta_average() const {
    double total = 0.0;
    std::size_t count = 0;
    for (const auto& image : images)
      for (Complex a : image) {
        total += std::sqrt(std::max(0.0, 1.0 - std::norm(a)));
        ++count;
      }
    return count ? total / static_cast<double>(count) : 0.0;
  }

  Complex pixel_epsilon(std::size_t p, std::size_t q, std::size_t i) const {
    return (images[p][i] - images[q][i]) / 2.0;
  }

  // epsilon^{p,q} = max_i |epsilon_i^{p,q}|.
  double pair_epsilon(std::size_t p, std::size_t q) const {
    double best = 0.0;
    for (std::size_t i = 0; i < num_pixels; ++i)
      best = std::max(best, std::abs(pixel_epsilon(p, q, i)));
    return best;
  }
};

struct AlignedOverlap {
  double phi;
  double factor;
};

// Phase alignment of the per-photon overlap: chooses the free beta phase phi
// so that conj(alpha1)*alpha2 + e^{i phi} |beta1||beta2| is real, picking the
// solution with cos(phi) >= 0 (the larger factor). Under the closeness
// condition, factor = 1 - 2|eps|^2/beta^2 + O(eps^4).
inline AlignedOverlap aligned_overlap_factor(const TwoObjectTask& task) {
  if (!task.closeness_ok)
    throw std::invalid_argument("aligned_overlap_factor: closeness condition not met");
  const Complex core = std::conj(task.alpha1) * task.alpha2;
  const double b1 = std::sqrt(std::max(0.0, 1.0 - std::norm(task.alpha1)));
  const double b2 = std::sqrt(std::max(0.0, 1.0 - std::norm(task.alpha2)));
  const double bb = b1 * b2;
  if (bb == 0.0) {
    if (std::abs(core.imag()) > 1e-12)
      throw std::invalid_argument("aligned_overlap_factor: phase cannot be cancelled");
    return {0.0, core.real()};
  }
  const double sin_phi = -core.imag() / bb;
  if (std::abs(sin_phi) > 1.0 + 1e-12)
    throw std::invalid_argument("aligned_overlap_factor: sine equation unsolvable");
  const double cos_phi = std::sqrt(std::max(0.0, 1.0 - sin_phi * sin_phi));
  return {std::asin(std::clamp(sin_phi, -1.0, 1.0)), core.real() + cos_phi * bb};
}

// Helstrom error for two pure states with overlap f: (1 - sqrt(1 - f^2)) / 2.
inline double helstrom_error(double f) {
  if (f < 0.0 || f > 1.0)
    throw std::domain_error("helstrom_error: overlap must lie in [0,1]");
  return 0.5 * (1.0 - std::sqrt(std::max(0.0, (1.0 - f) * (1.0 + f))));
}

// Inverse relation: the overlap giving Helstrom error pe.
inline double helstrom_overlap(double pe) {
  if (pe < 0.0 || pe > 0.5)
    throw std::domain_error("helstrom_overlap: pe must lie in [0, 1/2]");
  return 2.0 * std::sqrt(pe * (1.0 - pe));
}

// Leading term of the main single-pixel lower bound on the mean number of
// absorbed photons: beta^4 (1 - 2 sqrt(pe(1-pe))) / (2 |eps|^2). The additive
// O(1) term is unspecified and reported as zero. Returns +inf when eps = 0.
inline double single_pixel_bound(const TwoObjectTask& task, double pe) {
  if (!task.closeness_ok)
    throw std::invalid_argument("single_pixel_bound: closeness condition not met");
  if (!(pe > 0.0 && pe < 0.5))
    throw std::domain_error("single_pixel_bound: pe must lie in (0, 1/2)");
  const double eps2 = std::norm(task.epsilon);
  if (eps2 == 0.0) return std::numeric_limits<double>::infinity();
  const double b2 = task.beta_mean * task.beta_mean;
  return b2 * b2 * (1.0 - 2.0 * std::sqrt(pe * (1.0 - pe))) / (2.0 * eps2);
}

// Same bound evaluated from an overlap f_K instead of an error target.
inline double single_pixel_bound_from_overlap(const TwoObjectTask& task, double f) {
  const double eps2 = std::norm(task.epsilon);
  if (eps2 == 0.0) return std::numeric_limits<double>::infinity();
  const double b2 = task.beta_mean * task.beta_mean;
  return b2 * b2 * (1.0 - f) / (2.0 * eps2);
}

// Multi-pixel analogue: beta is the average of all |beta_i^p| and epsilon the
// largest per-pixel difference between the two images.
inline double multi_pixel_bound(const ImageSet& images, std::size_t p, std::size_t q,
                                double pe) {
  if (!(pe > 0.0 && pe < 0.5))
    throw std::domain_error("multi_pixel_bound: pe must lie in (0, 1/2)");
  const double eps = images.pair_epsilon(p, q);
  if (eps == 0.0) return std::numeric_limits<double>::infinity();
  const double b = images.beta_average();
  const double b2 = b * b;
  return b2 * b2 * (1.0 - 2.0 * std::sqrt(pe * (1.0 - pe))) / (2.0 * eps * eps);
}

// All-pairs variant: epsilon = max over image pairs, pe the worst-pair error.
inline double multi_pixel_bound_all_pairs(const ImageSet& images, double pe) {
  if (!(pe > 0.0 && pe < 0.5))
    throw std::domain_error("multi_pixel_bound_all_pairs: pe must lie in (0, 1/2)");
  double eps = 0.0;
  for (std::size_t p = 0; p < images.images.size(); ++p)
    for (std::size_t q = p + 1; q < images.images.size(); ++q)
      eps = std::max(eps, images.pair_epsilon(p, q));
  if (eps == 0.0) return std::numeric_limits<double>::infinity();
  const double b = images.beta_average();
  const double b2 = b * b;
  return b2 * b2 * (1.0 - 2.0 * std::sqrt(pe * (1.0 - pe))) / (2.0 * eps * eps);
}

struct AfmRepeatBound {
  double eta;
  double nbar_lower;
};

// Repeated absorption-free measurement bound: eta = |beta1 beta2| /
// |1 - conj(alpha1) alpha2| and nbar_lower = eta / (1 - eta). Under the
// closeness condition nbar_lower ~ beta^4 / (2 |eps|^2). eta >= 1 signals a
// degenerate (infinite-cost) task.
inline AfmRepeatBound afm_repeat_bound(const TwoObjectTask& task) {
  if (task.alpha1 == task.alpha2)
    throw std::invalid_argument("afm_repeat_bound: objects must differ");
  const Complex denom = 1.0 - std::conj(task.alpha1) * task.alpha2;
  if (std::abs(denom) == 0.0)
    throw std::invalid_argument("afm_repeat_bound: degenerate denominator");
  const double b1 = std::sqrt(std::max(0.0, 1.0 - std::norm(task.alpha1)));
  const double b2 = std::sqrt(std::max(0.0, 1.0 - std::norm(task.alpha2)));
  const double eta = b1 * b2 / std::abs(denom);
  if (eta >= 1.0) return {eta, std::numeric_limits<double>::infinity()};
  return {eta, eta / (1.0 - eta)};
}

}  // namespace minabs
