#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "minabs/fock_engine.hpp"

using namespace minabs;

namespace {

TwoObjectTask random_close_task(Rng& rng, double scale = 0.4) {
  const double amag = 0.2 + 0.7 * rng.uniform();
  const Complex mean = std::polar(amag, 2.0 * 3.14159265358979323846 * rng.uniform());
  const double beta2 = 1.0 - amag * amag;
  const double emag = scale * std::min(beta2 / (2.0 * amag), 1.0 - amag);
  const Complex eps = std::polar(emag, 2.0 * 3.14159265358979323846 * rng.uniform());
  return make_task(mean - eps, mean + eps);
}

}  // namespace

TEST_CASE("interaction step splits an l-photon component binomially") {
  // |0>_A |2>_P through transparency alpha: amplitudes
  // sqrt(C(2,m)) alpha^m beta^{2-m} on (m transmitted, 2-m absorbed).
  const Complex alpha(0.6, 0.0);
  const Complex beta(0.8, 0.0);
  JointState state = make_initial_state(1, 2, {{0.0, 0.0}, {0.0, 0.0}, {1.0, 0.0}});
  state = interaction_step(state, alpha, beta);

  REQUIRE(state.amplitudes.size() == 3);
  REQUIRE(state.amplitudes.at({0, 2, {0}}).real() == Catch::Approx(0.36).margin(1e-15));
  const Complex cross = state.amplitudes.at({0, 1, {1}});
  REQUIRE(cross.real() == Catch::Approx(std::sqrt(2.0) * 0.6 * 0.8).margin(1e-14));
  REQUIRE(state.amplitudes.at({0, 0, {2}}).real() == Catch::Approx(0.64).margin(1e-15));
  REQUIRE(state.norm_sq() == Catch::Approx(1.0).margin(1e-14));
  REQUIRE(state.mean_absorbed() ==
          Catch::Approx(2.0 * 0.64).margin(1e-12));  // 2 photons x beta^2
}

TEST_CASE("vacuum is untouched by the interaction") {
  JointState state = make_initial_state(2, 1, {{1.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}});
  state = interaction_step(state, {0.3, 0.1}, {0.0, 0.0});
  REQUIRE(state.amplitudes.size() == 1);
  REQUIRE(state.amplitudes.at({0, 0, {0}}) == Complex(1.0, 0.0));
}

TEST_CASE("unitary step preserves norm and rejects non-unitaries") {
  Rng rng(99);
  const std::uint32_t dim = 6;  // 2 ancilla levels x 3 photon slots
  JointState state = make_initial_state(2, 2, random_state(dim, 17));
  state = interaction_step(state, {0.7, 0.1}, std::sqrt(1.0 - std::norm(Complex(0.7, 0.1))));
  const double before = state.norm_sq();
  state = unitary_step(state, random_unitary(dim, 31));
  REQUIRE(state.norm_sq() == Catch::Approx(before).margin(1e-12));

  std::vector<Complex> bad(dim * dim, Complex(0.5, 0.0));
  REQUIRE_THROWS_AS(unitary_step(state, bad), std::invalid_argument);
}

TEST_CASE("closed form per-photon overlap matches explicit summation") {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Rng rng = Rng::derive(8101, seed);
    const TwoObjectTask task = random_close_task(rng);
    const double b1 = std::sqrt(1.0 - std::norm(task.alpha1));
    const double b2 = std::sqrt(1.0 - std::norm(task.alpha2));
    const Complex beta2_aligned =
        std::polar(b2, aligned_overlap_factor(task).phi);

    const std::uint32_t l = 1 + static_cast<std::uint32_t>(rng.next_u64() % 4);
    std::vector<Complex> init(l + 1, Complex{});
    init[l] = 1.0;
    JointState s1 = interaction_step(make_initial_state(1, l, init), task.alpha1, b1);
    JointState s2 =
        interaction_step(make_initial_state(1, l, init), task.alpha2, beta2_aligned);

    const Complex expected =
        closed_form_overlap(task.alpha1, b1, task.alpha2, beta2_aligned, l);
    REQUIRE(branch_overlap(s1, s2) == Catch::Approx(std::abs(expected)).margin(1e-12));
  }
}

TEST_CASE("scripted protocols preserve norm and pass the audit") {
  const TwoObjectTask task = make_task({0.6, 0.0}, {0.62, 0.0});
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng pick = Rng::derive(8202, seed);
    const std::uint32_t ancillas = 1 + static_cast<std::uint32_t>(pick.next_u64() % 4);
    const std::uint32_t photons = 1 + static_cast<std::uint32_t>(pick.next_u64() % 3);
    const std::uint32_t stages = 2 + static_cast<std::uint32_t>(pick.next_u64() % 4);
    const ProtocolScript script = random_script(ancillas, photons, stages, seed);
    const OverlapTrace trace = run_scripted_protocol(script, task);

    REQUIRE(std::abs(trace.final_norm_sq[0] - 1.0) < 1e-9);
    REQUIRE(std::abs(trace.final_norm_sq[1] - 1.0) < 1e-9);
    REQUIRE(trace.f.front() == Catch::Approx(1.0).margin(1e-12));

    const AuditReport audit = audit_trace(trace, task);
    INFO("seed " << seed << " stepwise margin " << audit.stepwise.margin
                 << " cumulative " << audit.cumulative.margin << " bound "
                 << audit.bound.margin);
    REQUIRE(audit.all_pass());
  }
}

TEST_CASE("single-photon single-step protocol saturates the overlap drop") {
  // One photon, one interaction: f_K equals the aligned factor exactly and
  // the stepwise inequality holds with only the quartic remainder to spare.
  const TwoObjectTask task = make_task({0.6, 0.0}, {0.62, 0.0});
  ProtocolScript script;
  script.ancilla_levels = 1;
  script.photon_cutoff = 1;
  script.initial = {{0.0, 0.0}, {1.0, 0.0}};
  ProtocolRound round;
  round.unitary = {{1.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}, {1.0, 0.0}};
  script.rounds.push_back(round);

  const OverlapTrace trace = run_scripted_protocol(script, task);
  const double factor = aligned_overlap_factor(task).factor;
  REQUIRE(trace.f.back() == Catch::Approx(factor).margin(1e-12));
  const AuditReport audit = audit_trace(trace, task);
  REQUIRE(audit.all_pass());
  REQUIRE(audit.stepwise.margin >= 0.0);
  REQUIRE(audit.stepwise.margin < 1e-6);
}

TEST_CASE("script files round-trip through write and parse") {
  const TwoObjectTask task = make_task({0.55, 0.1}, {0.57, 0.12});
  const ProtocolScript script = random_script(2, 2, 4, 4242);

  std::stringstream buffer;
  write_script(buffer, script);
  const ProtocolScript parsed = parse_script(buffer);

  REQUIRE(parsed.ancilla_levels == script.ancilla_levels);
  REQUIRE(parsed.photon_cutoff == script.photon_cutoff);
  REQUIRE(parsed.stages() == script.stages());

  const OverlapTrace a = run_scripted_protocol(script, task);
  const OverlapTrace b = run_scripted_protocol(parsed, task);
  REQUIRE(a.f == b.f);
  REQUIRE(a.mean_absorbed == b.mean_absorbed);
}

TEST_CASE("explicit-matrix scripts parse and validate") {
  // 1 ancilla level, 1 photon slot: block dimension 2; swap is unitary.
  std::stringstream in(
      "0 1 2 9\n"
      "init 0 0 1 0\n"
      "U explicit\n"
      "0 0 1 0\n"
      "1 0 0 0\n");
  const ProtocolScript script = parse_script(in);
  REQUIRE(script.block_dim() == 2);
  REQUIRE(script.rounds.size() == 1);
  REQUIRE_FALSE(script.rounds[0].from_seed);

  std::stringstream bad(
      "0 1 2 9\n"
      "init 0 0 1 0\n"
      "U explicit\n"
      "1 0 1 0\n"
      "1 0 0 0\n");
  REQUIRE_THROWS_AS(parse_script(bad), std::invalid_argument);
}
