#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "srqfi/loss_bound.hpp"
#include "test_support.hpp"

using namespace srqfi;
using srqfi::testing::rel_err;

namespace {
const QuadratureSpec kPsfSpec = QuadratureSpec::for_scale(2.0);
}

TEST_CASE("single mode: bound is exactly 1") {
  const GramBound gb =
      gram_bound(normalized_gaussian_psf(1.0), 1, 0.5, kPsfSpec);
  CHECK(gb.bound == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(gb.gram.rows() == 1);
}

TEST_CASE("two distant modes: bound = 1/(1 + e^{-12.5})") {
  const GramBound gb =
      gram_bound(normalized_gaussian_psf(1.0), 2, 10.0, kPsfSpec);
  CHECK(gb.bound == doctest::Approx(0.9999962733607158).epsilon(1e-10));
  CHECK(gb.gram(0, 0).real() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(gb.gram(0, 1).real() ==
        doctest::Approx(std::exp(-12.5)).epsilon(1e-8));
}

TEST_CASE("gaussian closed-form overlaps match quadrature on random pairs") {
  std::mt19937_64 rng(99);
  const double sigma = 0.8, spacing = 0.07;
  const int m = 64;
  const GramBound exact =
      gram_bound_gaussian(sigma, m, spacing);
  const GramBound quad =
      gram_bound(normalized_gaussian_psf(sigma), m, spacing,
                 QuadratureSpec::for_scale(2.0 * sigma));
  for (int trial = 0; trial < 100; ++trial) {
    const int i = static_cast<int>(rng() % m);
    const int j = static_cast<int>(rng() % m);
    CHECK(std::abs(exact.gram(i, j) - quad.gram(i, j)) < 1e-9);
  }
  CHECK(rel_err(exact.bound, quad.bound) < 1e-9);
}

TEST_CASE("bound is monotone nonincreasing in the mode count") {
  double prev = 1.0 + 1e-15;
  for (int m : {1, 2, 4, 16, 64, 256, 1024}) {
    const GramBound gb = gram_bound_gaussian(1.0, m, 0.05);
    CHECK(gb.bound <= prev * (1.0 + 1e-14));
    prev = gb.bound;
  }
}

TEST_CASE("bound scales linearly in the spacing, asymptotic regime") {
  // needs delta << sigma << M delta; at M = 1000 the finite-M edge effects
  // push the fitted exponent down to ~0.79, so the scaling test runs deep
  // in the asymptotic regime
  std::vector<double> deltas = {0.005, 0.0075, 0.01, 0.015, 0.02}, bounds;
  const int m = 100000;
  for (double d : deltas)
    bounds.push_back(gram_bound_gaussian(1.0, m, d).bound);
  const double slope = srqfi::testing::loglog_slope(deltas, bounds);
  CHECK(slope == doctest::Approx(1.0).epsilon(0.002));

  // the measured constant: bound ~ c * delta / sigma with c = 1/sqrt(8 pi),
  // not the paper's sqrt(8 pi) (recorded, not reconciled)
  const double c = gram_bound_gaussian(1.0, 2000000, 0.001).bound / 0.001;
  CHECK(c == doctest::Approx(0.19947114020071635).epsilon(2e-3));

  // at M = 1000 the same fit sits far from 1 (documents the finite-M effect)
  std::vector<double> small_m;
  for (double d : deltas)
    small_m.push_back(gram_bound_gaussian(1.0, 1000, d).bound);
  const double slope_small = srqfi::testing::loglog_slope(deltas, small_m);
  CHECK(slope_small < 0.85);
  CHECK(slope_small > 0.7);
}

TEST_CASE("bound dominates the 4f single-mode transmission") {
  const Aperture ap = Aperture::gaussian(1.0);
  const QuadratureSpec spec = QuadratureSpec::for_scale(
      ap.profile.decay_scale);
  for (double d : {1e-3, 1e-2, 0.1}) {
    const double p = single_mode_transmission(ap, d, spec);
    for (int m : {2, 64, 2000}) {
      const GramBound gb = gram_bound_gaussian(1.0, m, d);
      CHECK(p <= gb.bound * (1.0 + 1e-6));
    }
  }
}

TEST_CASE("unnormalized PSF is rejected") {
  ComplexProfile u = normalized_gaussian_psf(1.0);
  u.eval = [inner = u.eval](double x) { return 1.1 * inner(x); };
  CHECK_THROWS_AS(gram_bound(u, 4, 0.5, kPsfSpec), UnnormalizedPSF);
}

TEST_CASE("detection probability: spatial and frequency routes") {
  SUBCASE("narrow PSF approaches the identity") {
    // u normalized in L2; scale = 1/(int u)^2 makes P -> int |E|^2
    const double w = 0.02;
    const ComplexProfile u = normalized_gaussian_psf(w);
    const double int_u = std::pow(2.0 * kPi * w * w, -0.25) *
                         (2.0 * w * std::sqrt(kPi));
    ComplexProfile field = gaussian_profile(2.0);
    const double p = detection_probability_frequency(
        field, u, 1.0 / (int_u * int_u), QuadratureSpec::for_scale(1.0));
    // int |E|^2 = sqrt(pi/4)
    const double want = std::sqrt(kPi / 4.0);
    CHECK(p == doctest::Approx(want).epsilon(1e-3));
  }
  SUBCASE("rect pair through gaussian cPSF equals the 4f numerator") {
    const double s = 1.0, delta = 0.05, phase = 0.0, sigma = 1.0;
    const Aperture ap = Aperture::gaussian(sigma);
    const SourcePair src(s, delta, Complex{1.0, 0.0}, 0.01);
    const QuadratureSpec spec = QuadratureSpec::for_scale(
        ap.profile.decay_scale).with_tolerance(1e-12);
    const PlaneFields pf = propagate_4f(src, phase, ap, spec);
    ComplexProfile post2;
    post2.decay_scale = pf.post_aperture.decay_scale;
    post2.eval = [pe = pf.post_aperture.eval](double x) {
      return Complex{std::norm(pe(x)), 0.0};
    };
    const double numerator = integrate(post2, spec).real();

    // same losses through the convolution route, up to the PSF normalization
    const ComplexProfile u = normalized_gaussian_psf(sigma);
    const double unorm2 = 1.0 / (std::sqrt(8.0 * kPi) * sigma);  // ||cpsf||^2
    ComplexProfile field;
    field.decay_scale = s / 2.0 + delta;
    field.eval = [oe = pf.object.eval](double x) { return oe(x); };
    const double p = detection_probability_frequency(
        field, u, unorm2, QuadratureSpec::for_scale(1.0));
    CHECK(rel_err(p, numerator) < 1e-8);
  }
  SUBCASE("field filtered outside the PSF band is blocked") {
    const ComplexProfile u = normalized_gaussian_psf(1.0);
    // E oscillating at spatial frequency k0 = 3 >> PSF cutoff ~ 1/(2 pi)
    ComplexProfile field;
    field.decay_scale = 1.0;
    field.eval = [](double x) {
      return std::polar(std::exp(-x * x), 2.0 * kPi * 3.0 * x);
    };
    const double p = detection_probability_frequency(
        field, u, 1.0, QuadratureSpec::for_scale(1.0));
    ComplexProfile e2;
    e2.decay_scale = 1.0;
    e2.eval = [fe = field.eval](double x) {
      return Complex{std::norm(fe(x)), 0.0};
    };
    const double power = integrate(e2, QuadratureSpec::for_scale(1.0)).real();
    CHECK(p < 1e-6 * power);
  }
}
