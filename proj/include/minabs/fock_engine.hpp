#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <compare>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "minabs/domain.hpp"
#include "minabs/rng.hpp"

// Exact simulation of arbitrary ancilla+photon protocols against a
// semi-transparent object, in the basis |k>_A |l>_P |n_1,...,n_j>_O. Each
// protocol is a sequence of interaction steps (photons pass the object)
// alternating with arbitrary unitaries on the ancilla-photon space. The
// engine tracks both hypothesis branches in lockstep and audits the overlap
// inequality chain that yields the absorption lower bound.

namespace minabs {

struct BasisLabel {
  std::uint32_t ancilla = 0;
  std::uint32_t photons = 0;
  std::vector<std::uint8_t> record;  // per-stage absorbed counts

  auto operator<=>(const BasisLabel&) const = default;
};

struct JointState {
  std::map<BasisLabel, Complex> amplitudes;
  std::uint32_t stage = 0;  // number of completed interaction steps
  std::uint32_t ancilla_levels = 1;
  std::uint32_t photon_cutoff = 0;

  std::uint32_t block_dim() const { return ancilla_levels * (photon_cutoff + 1); }

  double norm_sq() const {
    double total = 0.0;
    for (const auto& [label, amp] : amplitudes) total += std::norm(amp);
    return total;
  }

  // Expected total number of photons deposited in the object record.
  double mean_absorbed() const {
    double total = 0.0;
    for (const auto& [label, amp] : amplitudes) {
      double deposited = 0.0;
      for (std::uint8_t n : label.record) deposited += n;
      total += std::norm(amp) * deposited;
    }
    return total;
  }

  // Expected photon number in the P register (photons about to hit the object).
  double mean_photons() const {
    double total = 0.0;
    for (const auto& [label, amp] : amplitudes)
      total += std::norm(amp) * label.photons;
    return total;
  }
};

inline JointState make_initial_state(std::uint32_t ancilla_levels,
                                     std::uint32_t photon_cutoff,
                                     const std::vector<Complex>& amplitudes) {
  JointState state;
  state.ancilla_levels = ancilla_levels;
  state.photon_cutoff = photon_cutoff;
  const std::uint32_t dim = state.block_dim();
  if (amplitudes.size() != dim)
    throw std::invalid_argument("make_initial_state: dimension mismatch");
  for (std::uint32_t k = 0; k < ancilla_levels; ++k)
    for (std::uint32_t l = 0; l <= photon_cutoff; ++l) {
      const Complex amp = amplitudes[k * (photon_cutoff + 1) + l];
      if (amp != Complex{}) state.amplitudes[{k, l, {}}] = amp;
    }
  return state;
}

namespace detail {
inline double sqrt_binom(std::uint32_t l, std::uint32_t m) {
  return std::exp(0.5 * (std::lgamma(l + 1.0) - std::lgamma(m + 1.0) -
                         std::lgamma(l - m + 1.0)));
}
}  // namespace detail

// One passage of the P register through the object: every l-photon component
// splits into (m transmitted, l-m absorbed) with amplitude
// sqrt(C(l,m)) alpha^m beta^{l-m}; the record gains one entry. beta may carry
// a phase (used for the audit's phase alignment); the evolution is unitary
// for any |alpha|^2 + |beta|^2 = 1.
inline JointState interaction_step(const JointState& state, Complex alpha,
                                   Complex beta) {
  JointState next;
  next.stage = state.stage + 1;
  next.ancilla_levels = state.ancilla_levels;
  next.photon_cutoff = state.photon_cutoff;
  for (const auto& [label, amp] : state.amplitudes) {
    const std::uint32_t l = label.photons;
    for (std::uint32_t m = 0; m <= l; ++m) {
      Complex coeff = detail::sqrt_binom(l, m);
      for (std::uint32_t t = 0; t < m; ++t) coeff *= alpha;
      for (std::uint32_t t = 0; t < l - m; ++t) coeff *= beta;
      BasisLabel out = label;
      out.photons = m;
      out.record.push_back(static_cast<std::uint8_t>(l - m));
      next.amplitudes[out] += amp * coeff;
    }
  }
  return next;
}

inline bool is_unitary(const std::vector<Complex>& u, std::uint32_t dim,
                       double tol = 1e-10) {
  if (u.size() != static_cast<std::size_t>(dim) * dim) return false;
  for (std::uint32_t i = 0; i < dim; ++i)
    for (std::uint32_t j = 0; j < dim; ++j) {
      Complex dot{};
      for (std::uint32_t k = 0; k < dim; ++k)
        dot += std::conj(u[k * dim + i]) * u[k * dim + j];
      if (std::abs(dot - (i == j ? 1.0 : 0.0)) > tol) return false;
    }
  return true;
}

// Applies U on the ancilla-photon factor, blockwise per absorption record.
inline JointState unitary_step(const JointState& state,
                               const std::vector<Complex>& u) {
  const std::uint32_t dim = state.block_dim();
  if (!is_unitary(u, dim))
    throw std::invalid_argument("unitary_step: matrix is not unitary");
  const std::uint32_t width = state.photon_cutoff + 1;

  std::map<std::vector<std::uint8_t>, std::vector<Complex>> blocks;
  for (const auto& [label, amp] : state.amplitudes) {
    auto& block = blocks[label.record];
    if (block.empty()) block.assign(dim, Complex{});
    block[label.ancilla * width + label.photons] = amp;
  }

  JointState next;
  next.stage = state.stage;
  next.ancilla_levels = state.ancilla_levels;
  next.photon_cutoff = state.photon_cutoff;
  for (auto& [record, block] : blocks) {
    std::vector<Complex> out(dim, Complex{});
    for (std::uint32_t row = 0; row < dim; ++row) {
      Complex acc{};
      for (std::uint32_t col = 0; col < dim; ++col)
        acc += u[row * dim + col] * block[col];
      out[row] = acc;
    }
    for (std::uint32_t idx = 0; idx < dim; ++idx) {
      if (out[idx] == Complex{}) continue;
      BasisLabel label;
      label.ancilla = idx / width;
      label.photons = idx % width;
      label.record = record;
      next.amplitudes[label] = out[idx];
    }
  }
  return next;
}

// |<s1|s2>| by explicit summation over shared basis labels.
inline double branch_overlap(const JointState& s1, const JointState& s2) {
  if (s1.stage != s2.stage)
    throw std::invalid_argument("branch_overlap: stage mismatch");
  Complex dot{};
  auto it1 = s1.amplitudes.begin();
  auto it2 = s2.amplitudes.begin();
  while (it1 != s1.amplitudes.end() && it2 != s2.amplitudes.end()) {
    if (it1->first < it2->first)
      ++it1;
    else if (it2->first < it1->first)
      ++it2;
    else {
      dot += std::conj(it1->second) * it2->second;
      ++it1;
      ++it2;
    }
  }
  return std::abs(dot);
}

// Closed-form per-photon overlap factor (conj(a1) a2 + conj(b1) b2)^l.
inline Complex closed_form_overlap(Complex alpha1, Complex beta1, Complex alpha2,
                                   Complex beta2, std::uint32_t l) {
  const Complex base = std::conj(alpha1) * alpha2 + std::conj(beta1) * beta2;
  Complex result = 1.0;
  for (std::uint32_t t = 0; t < l; ++t) result *= base;
  return result;
}

struct ProtocolRound {
  std::vector<Complex> unitary;           // row-major, block_dim x block_dim
  std::uint64_t random_seed = 0;          // set when the unitary was sampled
  bool from_seed = false;
};

struct ProtocolScript {
  std::uint32_t ancilla_levels = 1;       // S + 1
  std::uint32_t photon_cutoff = 0;        // N_max
  std::uint64_t seed = 0;                 // seeds the initial state
  std::vector<Complex> initial;           // ancilla-photon amplitudes
  std::vector<ProtocolRound> rounds;      // K - 1 rounds

  std::uint32_t block_dim() const { return ancilla_levels * (photon_cutoff + 1); }
  std::uint32_t stages() const { return static_cast<std::uint32_t>(rounds.size()) + 1; }
};

inline std::vector<Complex> random_unitary(std::uint32_t dim, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Complex> m(static_cast<std::size_t>(dim) * dim);
  for (auto& entry : m) entry = Complex(rng.normal(), rng.normal());
  // Gram-Schmidt over columns gives a Haar-like unitary.
  for (std::uint32_t col = 0; col < dim; ++col) {
    for (std::uint32_t prev = 0; prev < col; ++prev) {
      Complex dot{};
      for (std::uint32_t row = 0; row < dim; ++row)
        dot += std::conj(m[row * dim + prev]) * m[row * dim + col];
      for (std::uint32_t row = 0; row < dim; ++row)
        m[row * dim + col] -= dot * m[row * dim + prev];
    }
    double nrm = 0.0;
    for (std::uint32_t row = 0; row < dim; ++row) nrm += std::norm(m[row * dim + col]);
    nrm = std::sqrt(nrm);
    for (std::uint32_t row = 0; row < dim; ++row) m[row * dim + col] /= nrm;
  }
  return m;
}

inline std::vector<Complex> random_state(std::uint32_t dim, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Complex> v(dim);
  double nrm = 0.0;
  for (auto& entry : v) {
    entry = Complex(rng.normal(), rng.normal());
    nrm += std::norm(entry);
  }
  nrm = std::sqrt(nrm);
  for (auto& entry : v) entry /= nrm;
  return v;
}

// Random protocol: Haar-like unitaries, random initial ancilla-photon state.
inline ProtocolScript random_script(std::uint32_t ancilla_levels,
                                    std::uint32_t photon_cutoff,
                                    std::uint32_t stages, std::uint64_t seed) {
  if (stages < 1) throw std::invalid_argument("random_script: stages must be >= 1");
  ProtocolScript script;
  script.ancilla_levels = ancilla_levels;
  script.photon_cutoff = photon_cutoff;
  script.seed = seed;
  script.initial = random_state(script.block_dim(), hash_combine(seed, 0));
  for (std::uint32_t j = 0; j + 1 < stages; ++j) {
    ProtocolRound round;
    round.random_seed = hash_combine(seed, j + 1);
    round.from_seed = true;
    round.unitary = random_unitary(script.block_dim(), round.random_seed);
    script.rounds.push_back(std::move(round));
  }
  return script;
}

// Per-branch, per-step photon accounting plus the overlap sequence f_1..f_K.
struct OverlapTrace {
  std::vector<double> f;                          // f[j] before interaction j+1; f.back() = f_K
  std::vector<std::array<double, 2>> step_photons;  // n_j^i per interaction step
  std::array<double, 2> total_photons{};          // N^i
  std::array<double, 2> mean_absorbed{};          // Nbar_i^abs
  std::array<double, 2> final_norm_sq{};
};

// Evolves both hypothesis branches through the script. Branch betas are taken
// real non-negative, except that branch 2 carries the aligned phase e^{i phi}
// when the task allows it, so that the audited per-photon factor matches
// aligned_overlap_factor.
inline OverlapTrace run_scripted_protocol(const ProtocolScript& script,
                                          const TwoObjectTask& task) {
  const double b1 = std::sqrt(std::max(0.0, 1.0 - std::norm(task.alpha1)));
  const double b2 = std::sqrt(std::max(0.0, 1.0 - std::norm(task.alpha2)));
  Complex beta1 = b1;
  Complex beta2 = b2;
  if (task.closeness_ok)
    beta2 *= std::exp(Complex(0.0, aligned_overlap_factor(task).phi));

  std::array<JointState, 2> branch = {
      make_initial_state(script.ancilla_levels, script.photon_cutoff, script.initial),
      make_initial_state(script.ancilla_levels, script.photon_cutoff, script.initial)};
  const std::array<Complex, 2> alphas = {task.alpha1, task.alpha2};
  const std::array<Complex, 2> betas = {beta1, beta2};

  OverlapTrace trace;
  trace.f.push_back(branch_overlap(branch[0], branch[1]));
  for (const auto& round : script.rounds) {
    trace.step_photons.push_back({branch[0].mean_photons(), branch[1].mean_photons()});
    for (int i = 0; i < 2; ++i) {
      branch[i] = interaction_step(branch[i], alphas[i], betas[i]);
      branch[i] = unitary_step(branch[i], round.unitary);
    }
    trace.f.push_back(branch_overlap(branch[0], branch[1]));
  }
  for (int i = 0; i < 2; ++i) {
    for (const auto& step : trace.step_photons) trace.total_photons[i] += step[i];
    trace.mean_absorbed[i] = branch[i].mean_absorbed();
    trace.final_norm_sq[i] = branch[i].norm_sq();
  }
  return trace;
}

struct AuditCheck {
  bool pass = true;
  double margin = 0.0;  // amount by which the inequality held (negative = fail)
};

struct AuditReport {
  AuditCheck stepwise;    // f_{j+1} >= f_j - (1-factor)(n_j^1+n_j^2)/2, worst step
  AuditCheck cumulative;  // f_K >= 1 - (1-factor)(N^1+N^2)/2
  AuditCheck bound;       // mean absorption respects the main bound at Helstrom error
  double factor = 1.0;
  double f_final = 1.0;
  double bound_value = 0.0;
  double mean_absorbed = 0.0;

  bool all_pass() const { return stepwise.pass && cumulative.pass && bound.pass; }
};

// Machine-checks the inequality chain on an exactly simulated trace.
// Numerical tolerance 1e-9 on the overlap inequalities; the final bound check
// allows the documented slack of 1 photon plus 1 percent.
inline AuditReport audit_trace(const OverlapTrace& trace, const TwoObjectTask& task) {
  AuditReport report;
  const double factor = aligned_overlap_factor(task).factor;
  report.factor = factor;
  report.f_final = trace.f.back();
  constexpr double kTol = 1e-9;

  report.stepwise.margin = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < trace.step_photons.size(); ++j) {
    const double allowed_drop =
        (1.0 - factor) * (trace.step_photons[j][0] + trace.step_photons[j][1]) / 2.0;
    const double margin = trace.f[j + 1] - (trace.f[j] - allowed_drop);
    if (margin < report.stepwise.margin) report.stepwise.margin = margin;
  }
  if (trace.step_photons.empty()) report.stepwise.margin = 0.0;
  report.stepwise.pass = report.stepwise.margin >= -kTol;

  const double total = (trace.total_photons[0] + trace.total_photons[1]) / 2.0;
  report.cumulative.margin = trace.f.back() - (1.0 - (1.0 - factor) * total);
  report.cumulative.pass = report.cumulative.margin >= -kTol;

  report.mean_absorbed = (trace.mean_absorbed[0] + trace.mean_absorbed[1]) / 2.0;
  report.bound_value = single_pixel_bound_from_overlap(task, trace.f.back());
  const double slack = 1.0 + 0.01 * report.bound_value;
  report.bound.margin = report.mean_absorbed + slack - report.bound_value;
  report.bound.pass = report.bound.margin >= 0.0;
  return report;
}

// ---------------------------------------------------------------------------
// Line-oriented script files.
//
//   header:  S N_max K seed
//   then optionally "init" followed by 2*D reals (re im per amplitude);
//   then per round either "U random <seed>" or "U explicit" followed by
//   D rows of 2*D reals (row-major). D = (S+1)(N_max+1). Without an "init"
//   line the initial state is drawn from the header seed.
// ---------------------------------------------------------------------------

inline ProtocolScript parse_script(std::istream& in) {
  ProtocolScript script;
  std::uint32_t s = 0, n_max = 0, stages = 0;
  if (!(in >> s >> n_max >> stages >> script.seed))
    throw std::invalid_argument("parse_script: bad header");
  if (stages < 1) throw std::invalid_argument("parse_script: K must be >= 1");
  script.ancilla_levels = s + 1;
  script.photon_cutoff = n_max;
  const std::uint32_t dim = script.block_dim();

  std::string token;
  if (!(in >> token)) token = "";
  if (token == "init") {
    script.initial.resize(dim);
    for (auto& amp : script.initial) {
      double re = 0.0, im = 0.0;
      if (!(in >> re >> im)) throw std::invalid_argument("parse_script: bad init");
      amp = Complex(re, im);
    }
    if (!(in >> token)) token = "";
  } else {
    script.initial = random_state(dim, hash_combine(script.seed, 0));
  }

  for (std::uint32_t j = 0; j + 1 < stages; ++j) {
    if (token != "U") throw std::invalid_argument("parse_script: expected round");
    std::string kind;
    if (!(in >> kind)) throw std::invalid_argument("parse_script: bad round");
    ProtocolRound round;
    if (kind == "random") {
      if (!(in >> round.random_seed))
        throw std::invalid_argument("parse_script: bad round seed");
      round.from_seed = true;
      round.unitary = random_unitary(dim, round.random_seed);
    } else if (kind == "explicit") {
      round.unitary.resize(static_cast<std::size_t>(dim) * dim);
      for (auto& entry : round.unitary) {
        double re = 0.0, im = 0.0;
        if (!(in >> re >> im)) throw std::invalid_argument("parse_script: bad matrix");
        entry = Complex(re, im);
      }
      if (!is_unitary(round.unitary, dim))
        throw std::invalid_argument("parse_script: matrix is not unitary");
    } else {
      throw std::invalid_argument("parse_script: unknown round kind " + kind);
    }
    script.rounds.push_back(std::move(round));
    if (j + 2 < stages && !(in >> token)) token = "";
  }
  return script;
}

inline void write_script(std::ostream& out, const ProtocolScript& script) {
  out << (script.ancilla_levels - 1) << ' ' << script.photon_cutoff << ' '
      << script.stages() << ' ' << script.seed << '\n';
  out << "init";
  out.precision(17);
  for (Complex amp : script.initial) out << ' ' << amp.real() << ' ' << amp.imag();
  out << '\n';
  for (const auto& round : script.rounds) {
    if (round.from_seed) {
      out << "U random " << round.random_seed << '\n';
    } else {
      out << "U explicit\n";
      const std::uint32_t dim = script.block_dim();
      for (std::uint32_t row = 0; row < dim; ++row) {
        for (std::uint32_t col = 0; col < dim; ++col) {
          const Complex entry = round.unitary[row * dim + col];
          out << (col ? " " : "") << entry.real() << ' ' << entry.imag();
        }
        out << '\n';
      }
    }
  }
}

}  // namespace minabs
