#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "minabs/domain.hpp"
#include "minabs/rng.hpp"

using namespace minabs;

namespace {

// Random task with the closeness condition satisfied by construction:
// |eps| = scale * beta^2 / (2|alpha|) with scale < 1.
TwoObjectTask random_close_task(Rng& rng, double scale = 0.4) {
  const double amag = 0.2 + 0.7 * rng.uniform();
  const Complex mean = std::polar(amag, 2.0 * 3.14159265358979323846 * rng.uniform());
  const double beta2 = 1.0 - amag * amag;
  const double emag = scale * std::min(beta2 / (2.0 * amag), 1.0 - amag);
  const Complex eps = std::polar(emag, 2.0 * 3.14159265358979323846 * rng.uniform());
  return make_task(mean - eps, mean + eps);
}

}  // namespace

TEST_CASE("task construction and the closeness condition") {
  const TwoObjectTask task = make_task({0.59, 0.0}, {0.61, 0.0});
  REQUIRE(task.alpha_mean.real() == Catch::Approx(0.6).margin(1e-15));
  REQUIRE(task.epsilon.real() == Catch::Approx(0.01).margin(1e-15));
  REQUIRE(task.beta_mean == Catch::Approx(0.8).margin(1e-15));
  REQUIRE(task.closeness_ok);

  // |eps| above beta^2/(2|alpha|) breaks it.
  const TwoObjectTask wide = make_task({0.9, 0.0}, {0.0, 0.9});
  REQUIRE_FALSE(wide.closeness_ok);
  REQUIRE_THROWS_AS(make_task({1.2, 0.0}, {0.5, 0.0}), std::domain_error);
}

TEST_CASE("aligned overlap factor on the real reference task") {
  const AlignedOverlap ov = aligned_overlap_factor(make_task({0.6, 0.0}, {0.62, 0.0}));
  REQUIRE(ov.phi == Catch::Approx(0.0).margin(1e-15));
  REQUIRE(ov.factor == Catch::Approx(0.999681447869857).margin(1e-12));
}

TEST_CASE("phase alignment makes the per-photon overlap real") {
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    Rng rng = Rng::derive(7001, seed);
    const TwoObjectTask task = random_close_task(rng);
    const AlignedOverlap ov = aligned_overlap_factor(task);
    const double b1 = std::sqrt(1.0 - std::norm(task.alpha1));
    const double b2 = std::sqrt(1.0 - std::norm(task.alpha2));
    const Complex aligned = std::conj(task.alpha1) * task.alpha2 +
                            std::polar(b1 * b2, ov.phi);
    REQUIRE(std::abs(aligned.imag()) < 1e-12);
    REQUIRE(aligned.real() == Catch::Approx(ov.factor).margin(1e-12));
    REQUIRE(ov.factor <= 1.0 + 1e-12);
  }
}

TEST_CASE("aligned factor second-order expansion") {
  // The remainder against 1 - 2|eps|^2/beta^2 is quartic in eps: halving eps
  // shrinks it by at least 8x whenever it is numerically resolvable.
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 400; ++seed) {
    Rng rng = Rng::derive(7002, seed);
    const TwoObjectTask task = random_close_task(rng, 0.5);
    const double beta2 = task.beta_mean * task.beta_mean;
    auto remainder = [&](Complex eps) {
      const TwoObjectTask t = make_task(task.alpha_mean - eps, task.alpha_mean + eps);
      return std::abs(aligned_overlap_factor(t).factor -
                      (1.0 - 2.0 * std::norm(eps) / beta2));
    };
    const double r1 = remainder(task.epsilon);
    const double r2 = remainder(task.epsilon / 2.0);
    if (r2 < 1e-10) continue;
    REQUIRE(r1 / r2 >= 8.0);
    ++checked;
  }
  REQUIRE(checked > 100);
}

TEST_CASE("helstrom error and overlap are inverse") {
  REQUIRE(helstrom_error(0.0) == Catch::Approx(0.0).margin(1e-15));
  REQUIRE(helstrom_error(1.0) == Catch::Approx(0.5).margin(1e-15));
  for (double pe = 0.01; pe < 0.5; pe += 0.03) {
    REQUIRE(helstrom_error(helstrom_overlap(pe)) == Catch::Approx(pe).margin(1e-12));
  }
  REQUIRE_THROWS_AS(helstrom_error(1.5), std::domain_error);
  REQUIRE_THROWS_AS(helstrom_overlap(0.7), std::domain_error);
}

TEST_CASE("single pixel bound reference values") {
  const TwoObjectTask task = make_task({0.59, 0.0}, {0.61, 0.0});
  REQUIRE(single_pixel_bound(task, 0.1) == Catch::Approx(819.2).margin(1e-9));
  // From an overlap instead of an error target: f at the Helstrom error.
  REQUIRE(single_pixel_bound_from_overlap(task, helstrom_overlap(0.1)) ==
          Catch::Approx(819.2).margin(1e-9));
  REQUIRE(std::isinf(single_pixel_bound(make_task({0.6, 0.0}, {0.6, 0.0}), 0.1)));
  REQUIRE_THROWS_AS(single_pixel_bound(task, 0.0), std::domain_error);
  REQUIRE_THROWS_AS(single_pixel_bound(task, 0.5), std::domain_error);
}

TEST_CASE("bound decreases as the allowed error grows") {
  const TwoObjectTask task = make_task({0.59, 0.0}, {0.61, 0.0});
  double prev = std::numeric_limits<double>::infinity();
  for (double pe = 0.01; pe < 0.5; pe += 0.02) {
    const double b = single_pixel_bound(task, pe);
    REQUIRE(b < prev);
    prev = b;
  }
}

TEST_CASE("multi pixel bound on a two-image set") {
  ImageSet set;
  set.num_pixels = 2;
  set.images = {{{0.59, 0.0}, {0.61, 0.0}}, {{0.61, 0.0}, {0.59, 0.0}}};
  REQUIRE(set.pair_epsilon(0, 1) == Catch::Approx(0.01).margin(1e-15));
  const double b = multi_pixel_bound(set, 0, 1, 0.1);
  // beta averaged over the pixels (same pixel values in both images here).
  const double bavg = 0.5 * (std::sqrt(1.0 - 0.59 * 0.59) + std::sqrt(1.0 - 0.61 * 0.61));
  REQUIRE(b == Catch::Approx(std::pow(bavg, 4.0) * 0.4 / 2e-4).margin(1e-9));
  REQUIRE(multi_pixel_bound_all_pairs(set, 0.1) == Catch::Approx(b).margin(1e-12));
}

TEST_CASE("repeat bound for absorption-free discrimination") {
  const AfmRepeatBound b = afm_repeat_bound(make_task({0.6, 0.0}, {0.62, 0.0}));
  REQUIRE(b.eta == Catch::Approx(0.9994927513851226).margin(1e-12));
  REQUIRE(b.nbar_lower == Catch::Approx(1970.4198731557342).margin(1e-6));
  // Close-task approximation beta^4 / (2 eps^2).
  const double beta2 = 1.0 - 0.61 * 0.61;
  REQUIRE(std::abs(b.nbar_lower - beta2 * beta2 / 2e-4) / (beta2 * beta2 / 2e-4) < 0.005);

  // One object fully transparent: discrimination costs no absorbed photons.
  const AfmRepeatBound free_case = afm_repeat_bound(make_task({1.0, 0.0}, {0.0, 0.0}));
  REQUIRE(free_case.eta == Catch::Approx(0.0).margin(1e-15));
  REQUIRE(free_case.nbar_lower == Catch::Approx(0.0).margin(1e-15));
  REQUIRE_THROWS_AS(afm_repeat_bound(make_task({0.5, 0.0}, {0.5, 0.0})),
                    std::invalid_argument);
}
