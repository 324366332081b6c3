#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "minabs/domain.hpp"
#include "minabs/rng.hpp"
#include "minabs/stat_kernel.hpp"

// Multi-pixel algorithms: collective Hadamard-row identification, the
// individual-pixel S_q classifier, per-pixel mutual-information accounting,
// and amplitude-damped Grover search.

namespace minabs {

// Sylvester Hadamard matrix of order 2^m, entries +-1, all-plus top row.
inline std::vector<std::vector<int>> sylvester_hadamard(std::uint32_t exponent) {
  if (exponent > 14) throw std::length_error("sylvester_hadamard: order too large");
  std::size_t size = std::size_t{1} << exponent;
  std::vector<std::vector<int>> h(size, std::vector<int>(size, 1));
  for (std::size_t block = 1; block < size; block <<= 1)
    for (std::size_t row = 0; row < block; ++row)
      for (std::size_t col = 0; col < block; ++col) {
        h[row + block][col] = h[row][col];
        h[row][col + block] = h[row][col];
        h[row + block][col + block] = -h[row][col];
      }
  return h;
}

// Hidden-Hadamard-row instance: alpha_i^p = alpha + eps * H[p][i]. Rows and
// pixels are 1-based to match the all-plus "top row" convention.
struct HadamardInstance {
  std::size_t num_pixels;                // M, power of 2
  std::vector<std::vector<int>> h;       // Sylvester matrix
  std::size_t hidden_row;                // p, 1-based, != 1
  double alpha;
  double eps;

  HadamardInstance(std::uint32_t exponent, std::size_t p, double a, double e)
      : num_pixels(std::size_t{1} << exponent),
        h(sylvester_hadamard(exponent)),
        hidden_row(p),
        alpha(a),
        eps(e) {
    if (p < 1 || p > num_pixels)
      throw std::domain_error("HadamardInstance: row out of range");
    if (a - e < 0.0 || a + e > 1.0)
      throw std::domain_error("HadamardInstance: amplitudes must stay in [0,1]");
  }

  double pixel_alpha(std::size_t row, std::size_t i) const {
    return alpha + eps * h[row - 1][i - 1];
  }

  double survival_prob() const { return alpha * alpha + eps * eps; }

  // The equivalent two-or-more-image set (all rows as candidate images),
  // used to evaluate the multi-pixel bound.
  ImageSet image_set() const {
    ImageSet set;
    set.num_pixels = num_pixels;
    set.images.resize(num_pixels);
    for (std::size_t p = 1; p <= num_pixels; ++p) {
      set.images[p - 1].resize(num_pixels);
      for (std::size_t i = 1; i <= num_pixels; ++i)
        set.images[p - 1][i - 1] = pixel_alpha(p, i);
    }
    return set;
  }
};

struct CollectiveRunResult {
  bool survived = false;
  std::optional<std::size_t> measured_mode;  // 1-based, set iff survived
  std::int64_t absorbed = 0;
};

// One pass of the collective protocol: uniform single-photon state through
// all pixels, then the H/sqrt(M) unitary, then mode measurement. Conditional
// on survival the state is exactly (alpha|1> + eps|p>) / sqrt(alpha^2+eps^2),
// so any surviving non-1 detection identifies p with certainty.
inline CollectiveRunResult collective_run(const HadamardInstance& inst, Rng& rng) {
  if (inst.hidden_row == 1)
    throw std::invalid_argument("collective_run: hidden row must not be the top row");
  CollectiveRunResult result;
  const double survival = inst.survival_prob();
  if (!rng.bernoulli(survival)) {
    result.absorbed = 1;
    return result;
  }
  result.survived = true;
  const double p_background = inst.alpha * inst.alpha / survival;
  result.measured_mode = rng.bernoulli(p_background) ? 1 : inst.hidden_row;
  return result;
}

// Post-H conditional amplitudes over modes, computed from the explicit state
// vector (independent of the shortcut inside collective_run).
inline std::vector<double> collective_post_h_amplitudes(const HadamardInstance& inst) {
  const std::size_t m = inst.num_pixels;
  const double norm =
      std::sqrt(static_cast<double>(m) * inst.survival_prob());
  std::vector<double> out(m, 0.0);
  for (std::size_t mode = 1; mode <= m; ++mode) {
    double amp = 0.0;
    for (std::size_t i = 1; i <= m; ++i)
      amp += inst.h[mode - 1][i - 1] * inst.pixel_alpha(inst.hidden_row, i) /
             std::sqrt(static_cast<double>(m));
    out[mode - 1] = amp / norm;
  }
  return out;
}

struct CollectiveIdentifyResult {
  std::size_t guess = 0;        // 0 = never detected a non-1 mode
  std::int64_t runs_used = 0;   // surviving measurements consumed
  std::int64_t launches = 0;    // photons prepared (includes absorbed ones)
  std::int64_t absorbed = 0;
};

// Number of surviving measurements so the miss probability
// (1 - eps^2/(alpha^2+eps^2))^runs drops to target_pe.
inline std::int64_t collective_run_budget(const HadamardInstance& inst,
                                          double target_pe) {
  const double hit = inst.eps * inst.eps / inst.survival_prob();
  return static_cast<std::int64_t>(
      std::ceil(std::log(target_pe) / std::log1p(-hit)));
}

// Repeats the process until a non-1 mode is seen or the run budget is spent.
// Each "run" is one surviving measurement; absorbed photons are retried and
// accounted.
inline CollectiveIdentifyResult collective_identify(const HadamardInstance& inst,
                                                    double target_pe, Rng& rng) {
  if (!(target_pe > 0.0 && target_pe < 1.0))
    throw std::domain_error("collective_identify: target_pe must be in (0,1)");
  const std::int64_t budget = collective_run_budget(inst, target_pe);
  CollectiveIdentifyResult result;
  while (result.runs_used < budget) {
    const CollectiveRunResult run = collective_run(inst, rng);
    ++result.launches;
    result.absorbed += run.absorbed;
    if (!run.survived) continue;
    ++result.runs_used;
    if (*run.measured_mode != 1) {
      result.guess = *run.measured_mode;
      break;
    }
  }
  return result;
}

struct IndividualIdentifyResult {
  std::size_t guess = 0;
  std::int64_t absorbed = 0;
};

// Reusable sampling tables for the individual-pixel protocol at a fixed
// photon budget: each pixel's transmission count is binomial with success
// probability (alpha +- eps)^2.
class IndividualPlan {
 public:
  IndividualPlan(const HadamardInstance& inst, std::int64_t total_photons)
      : total_photons_(total_photons),
        per_pixel_(total_photons / static_cast<std::int64_t>(inst.num_pixels)),
        bright_{binomial(per_pixel_, std::pow(inst.alpha + inst.eps, 2.0))},
        dim_{binomial(per_pixel_, std::pow(inst.alpha - inst.eps, 2.0))} {
    if (total_photons % static_cast<std::int64_t>(inst.num_pixels) != 0)
      throw std::invalid_argument("IndividualPlan: M must divide N");
  }

  std::int64_t total_photons() const { return total_photons_; }
  std::int64_t per_pixel() const { return per_pixel_; }
  std::int64_t sample(bool bright, Rng& rng) const {
    return (bright ? bright_ : dim_).sample(rng);
  }

 private:
  std::int64_t total_photons_;
  std::int64_t per_pixel_;
  CdfSampler bright_;
  CdfSampler dim_;
};

// Sends N/M photons through each pixel and picks the row maximizing
// S_q = sum_i H_qi n_i (with the N alpha^2 correction on the top row).
// Ties go to the lowest row index.
inline IndividualIdentifyResult individual_identify(const HadamardInstance& inst,
                                                    const IndividualPlan& plan,
                                                    Rng& rng) {
  std::vector<std::int64_t> transmitted(inst.num_pixels);
  std::int64_t total_transmitted = 0;
  for (std::size_t i = 1; i <= inst.num_pixels; ++i) {
    const bool bright = inst.h[inst.hidden_row - 1][i - 1] > 0;
    transmitted[i - 1] = plan.sample(bright, rng);
    total_transmitted += transmitted[i - 1];
  }

  double best = -std::numeric_limits<double>::infinity();
  std::size_t best_row = 1;
  for (std::size_t q = 1; q <= inst.num_pixels; ++q) {
    double s = 0.0;
    for (std::size_t i = 1; i <= inst.num_pixels; ++i)
      s += inst.h[q - 1][i - 1] * static_cast<double>(transmitted[i - 1]);
    if (q == 1)
      s -= static_cast<double>(plan.total_photons()) * inst.alpha * inst.alpha;
    if (s > best) {
      best = s;
      best_row = q;
    }
  }
  return {best_row, plan.total_photons() - total_transmitted};
}

inline IndividualIdentifyResult individual_identify(const HadamardInstance& inst,
                                                    std::int64_t total_photons,
                                                    Rng& rng) {
  return individual_identify(inst, IndividualPlan(inst, total_photons), rng);
}

struct MutualInformation {
  double exact_bits;
  double approx_bits;  // second-order formula 2 eps^2 / (beta^2 ln 2) * variance term
};

namespace detail {
inline double entropy_term(double p) { return p > 0.0 ? -p * std::log2(p) : 0.0; }
}

// I(A:R) for the absorb/transmit outcome at one pixel against the row prior.
inline MutualInformation pixel_mutual_information(const HadamardInstance& inst,
                                                  std::size_t pixel,
                                                  const std::vector<double>& priors) {
  if (pixel < 1 || pixel > inst.num_pixels)
    throw std::domain_error("pixel_mutual_information: pixel out of range");
  if (priors.size() != inst.num_pixels)
    throw std::domain_error("pixel_mutual_information: prior size mismatch");
  double prior_sum = 0.0;
  for (double pi : priors) {
    if (pi < 0.0) throw std::domain_error("pixel_mutual_information: negative prior");
    prior_sum += pi;
  }
  if (std::abs(prior_sum - 1.0) > 1e-9)
    throw std::domain_error("pixel_mutual_information: priors must sum to 1");

  double p_absorb = 0.0;
  double conditional = 0.0;  // sum_p pi_p H(A|p)
  double h_mean = 0.0, h_sq_mean = 0.0;
  for (std::size_t p = 1; p <= inst.num_pixels; ++p) {
    const double a = inst.pixel_alpha(p, pixel);
    const double pa = 1.0 - a * a;  // absorption probability given row p
    p_absorb += priors[p - 1] * pa;
    conditional +=
        priors[p - 1] * (detail::entropy_term(pa) + detail::entropy_term(1.0 - pa));
    const double hpi = inst.h[p - 1][pixel - 1];
    h_mean += priors[p - 1] * hpi;
    h_sq_mean += priors[p - 1] * hpi * hpi;
  }
  const double marginal =
      detail::entropy_term(p_absorb) + detail::entropy_term(1.0 - p_absorb);

  const double beta2 = 1.0 - inst.alpha * inst.alpha;
  MutualInformation mi;
  mi.exact_bits = std::max(0.0, marginal - conditional);
  mi.approx_bits = 2.0 * inst.eps * inst.eps / (beta2 * std::log(2.0)) *
                   (h_sq_mean - h_mean * h_mean);
  return mi;
}

// The displayed per-photon information cap, 2 eps^2 / (beta^2 ln 2) bits.
inline double mutual_information_cap(const HadamardInstance& inst) {
  const double beta2 = 1.0 - inst.alpha * inst.alpha;
  return 2.0 * inst.eps * inst.eps / (beta2 * std::log(2.0));
}

// ---------------------------------------------------------------------------
// Amplitude-damped Grover search.
// ---------------------------------------------------------------------------

struct GroverInstance {
  std::size_t num_modes;     // M, power of 2
  std::size_t marked;        // x0, 1-based
  double beta2;              // per-passage absorption probability
  double phase;              // pi for exact marking; small eps for faint marking

  GroverInstance(std::size_t m, std::size_t x0, double b2, double ph)
      : num_modes(m), marked(x0), beta2(b2), phase(ph) {
    if (m == 0 || (m & (m - 1)) != 0)
      throw std::domain_error("GroverInstance: M must be a power of 2");
    if (x0 < 1 || x0 > m) throw std::domain_error("GroverInstance: x0 out of range");
    if (b2 < 0.0 || b2 >= 1.0) throw std::domain_error("GroverInstance: beta2 in [0,1)");
    if (!(ph > 0.0)) throw std::domain_error("GroverInstance: phase must be > 0");
  }

  bool faint() const { return phase < 3.14159; }
  // Object passages per oracle call: 1 for exact marking, round(pi/phase)
  // consecutive passages when the marking phase is faint.
  std::int64_t passages_per_call() const {
    return faint() ? std::llround(3.14159265358979323846 / phase) : 1;
  }
};

struct GroverResult {
  std::int64_t iterations = 0;
  std::int64_t passages = 0;
  double ideal_success = 0.0;    // undamped Grover success probability
  double survival_prob = 0.0;    // (1 - beta2)^passages
  double success_prob = 0.0;     // survival * ideal, exact for scalar damping
  double survival_exp_approx = 0.0;  // exp(-beta2 * passages)
};

// Exact state-vector run of Grover with uniform per-passage damping. Damping
// is proportional to the identity on the surviving subspace, so success
// factorizes as survival x ideal. iterations = 0 requests the standard
// round(pi/4 sqrt(M)) count.
inline GroverResult grover_damped(const GroverInstance& inst, std::int64_t iterations) {
  const auto m = static_cast<double>(inst.num_modes);
  if (iterations <= 0) iterations = std::llround(0.25 * 3.14159265358979323846 * std::sqrt(m));
  if (iterations < 1) iterations = 1;
  const std::int64_t passages = iterations * inst.passages_per_call();
  if (passages > 10'000'000)
    throw std::length_error("grover_damped: passage budget exceeded");

  // Accumulated oracle phase per call: e^{i n phase} (exactly -1 when phase = pi).
  const double call_phase =
      inst.faint() ? static_cast<double>(inst.passages_per_call()) * inst.phase
                   : 3.14159265358979323846;
  const Complex mark = std::polar(1.0, call_phase);

  std::vector<Complex> state(inst.num_modes, Complex(1.0 / std::sqrt(m), 0.0));
  for (std::int64_t t = 0; t < iterations; ++t) {
    state[inst.marked - 1] *= mark;
    Complex mean{};
    for (Complex amp : state) mean += amp;
    mean /= m;
    for (Complex& amp : state) amp = 2.0 * mean - amp;
  }

  GroverResult result;
  result.iterations = iterations;
  result.passages = passages;
  result.ideal_success = std::norm(state[inst.marked - 1]);
  result.survival_prob = std::pow(1.0 - inst.beta2, static_cast<double>(passages));
  result.success_prob = result.survival_prob * result.ideal_success;
  result.survival_exp_approx = std::exp(-inst.beta2 * static_cast<double>(passages));
  return result;
}

// Independent oracle: evolves the full density matrix with the per-passage
// amplitude-damping channel rho -> (1-beta2) U rho U^dag + beta2 |sink><sink|
// made explicit on an enlarged mode set. Used to verify the factorization.
inline double grover_density_oracle(const GroverInstance& inst, std::int64_t iterations) {
  const std::size_t dim = inst.num_modes + 1;  // last index = absorbed sink
  const auto m = static_cast<double>(inst.num_modes);
  if (iterations <= 0) iterations = std::llround(0.25 * 3.14159265358979323846 * std::sqrt(m));
  if (iterations < 1) iterations = 1;
  const double keep = 1.0 - inst.beta2;

  std::vector<Complex> rho(dim * dim, Complex{});
  for (std::size_t i = 0; i < inst.num_modes; ++i)
    for (std::size_t j = 0; j < inst.num_modes; ++j) rho[i * dim + j] = 1.0 / m;

  const Complex mark = std::polar(1.0, inst.faint()
                                           ? inst.phase
                                           : 3.14159265358979323846);
  std::vector<Complex> work(dim * dim);
  auto damp = [&]() {
    double leaked = 0.0;
    for (std::size_t i = 0; i < inst.num_modes; ++i) {
      leaked += inst.beta2 * rho[i * dim + i].real();
      for (std::size_t j = 0; j < inst.num_modes; ++j) rho[i * dim + j] *= keep;
    }
    rho[inst.num_modes * dim + inst.num_modes] += leaked;
  };
  auto oracle_phase = [&]() {
    const std::size_t x = inst.marked - 1;
    for (std::size_t j = 0; j < dim; ++j) rho[x * dim + j] *= mark;
    for (std::size_t i = 0; i < dim; ++i) rho[i * dim + x] *= std::conj(mark);
  };
  auto diffusion = [&]() {
    // D = 2|s><s| - I on the live modes, identity on the sink.
    std::fill(work.begin(), work.end(), Complex{});
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = 0; j < dim; ++j) {
        Complex acc{};
        if (i < inst.num_modes) {
          Complex col_mean{};
          for (std::size_t k = 0; k < inst.num_modes; ++k) col_mean += rho[k * dim + j];
          acc = 2.0 * col_mean / m - rho[i * dim + j];
        } else {
          acc = rho[i * dim + j];
        }
        work[i * dim + j] = acc;
      }
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = 0; j < dim; ++j) {
        Complex acc{};
        if (j < inst.num_modes) {
          Complex row_mean{};
          for (std::size_t k = 0; k < inst.num_modes; ++k) row_mean += work[i * dim + k];
          acc = 2.0 * row_mean / m - work[i * dim + j];
        } else {
          acc = work[i * dim + j];
        }
        rho[i * dim + j] = acc;
      }
  };

  const std::int64_t per_call = inst.passages_per_call();
  for (std::int64_t t = 0; t < iterations; ++t) {
    for (std::int64_t pass = 0; pass < per_call; ++pass) {
      oracle_phase();
      damp();
    }
    diffusion();
  }
  return rho[(inst.marked - 1) * dim + (inst.marked - 1)].real();
}

}  // namespace minabs
