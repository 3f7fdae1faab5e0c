#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "srqfi/optics.hpp"
#include "srqfi/quadrature.hpp"

namespace srqfi {

// Structural loss results: the Gram-matrix ceiling on per-mode transmission
// implied by orthogonality of the blurred output modes, and the
// frequency-domain detection probability.

/// Mode-overlap Gram matrix for M rect modes spaced by `spacing` imaged with
/// cPSF u, and the resulting transmission ceiling p <= M / sum |<phi_i1|phi_j1>|.
struct GramBound {
  int mode_count = 0;
  double spacing = 0.0;
  Eigen::VectorXcd overlaps;  // first row: <phi_11|phi_(1+k)1>, k = 0..M-1
  Eigen::MatrixXcd gram;      // dense M x M; left empty above the size cap
  double abs_sum = 0.0;
  double bound = 0.0;
};

namespace detail {

inline GramBound gram_bound_from_overlaps(Eigen::VectorXcd overlaps,
                                          double spacing, int dense_cap) {
  const int m = static_cast<int>(overlaps.size());
  GramBound gb;
  gb.mode_count = m;
  gb.spacing = spacing;
  gb.overlaps = std::move(overlaps);
  // Toeplitz structure: sum_ij |g_ij| = sum_k (M - |k|) |overlap_k|, k over
  // both signs
  double s = static_cast<double>(m) * std::abs(gb.overlaps[0]);
  for (int k = 1; k < m; ++k)
    s += 2.0 * (m - k) * std::abs(gb.overlaps[k]);
  gb.abs_sum = s;
  gb.bound = m / s;
  if (m <= dense_cap) {
    gb.gram.resize(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        gb.gram(i, j) = j >= i ? gb.overlaps[j - i]
                               : std::conj(gb.overlaps[i - j]);
  }
  return gb;
}

}  // namespace detail

/// Gram bound by quadrature of the overlap integrals
/// <phi_i1|phi_j1> = int u*(x - x_i) u(x - x_j) dx (translation invariant,
/// so only M distinct values are integrated). u must be L2-normalized.
inline GramBound gram_bound(const ComplexProfile& u, int mode_count,
                            double spacing, const QuadratureSpec& spec,
                            int dense_cap = 2048) {
  if (mode_count < 1)
    throw std::invalid_argument("gram_bound: mode_count must be >= 1");
  if (!(spacing > 0.0))
    throw std::invalid_argument("gram_bound: spacing must be > 0");

  ComplexProfile u2;
  u2.decay_scale = u.decay_scale;
  u2.eval = [ue = u.eval](double x) { return Complex{std::norm(ue(x)), 0.0}; };
  const double norm = integrate(u2, spec).real();
  if (std::abs(norm - 1.0) > 1e-10)
    throw UnnormalizedPSF("gram_bound: int |u|^2 = " + std::to_string(norm) +
                          ", expected 1 to 1e-10");

  Eigen::VectorXcd overlaps(mode_count);
  overlaps[0] = Complex{1.0, 0.0};
  for (int k = 1; k < mode_count; ++k) {
    const double shift = k * spacing;
    ComplexProfile prod;
    prod.decay_scale = u.decay_scale + shift;
    prod.eval = [ue = u.eval, shift](double x) {
      return std::conj(ue(x)) * ue(x + shift);
    };
    const QuadratureSpec shifted(spec.half_width + shift, spec.node_budget,
                                 spec.rel_tolerance);
    overlaps[k] = integrate(prod, shifted);
  }
  return detail::gram_bound_from_overlaps(std::move(overlaps), spacing,
                                          dense_cap);
}

/// Gram bound with the closed-form Gaussian overlaps
/// e^{-(i-j)^2 spacing^2 / (8 sigma^2)} (|u|^2 of standard deviation sigma).
/// O(M); used for large mode counts where an O(M^2) dense matrix or O(M)
/// quadratures are wasteful.
inline GramBound gram_bound_gaussian(double sigma_psf, int mode_count,
                                     double spacing, int dense_cap = 2048) {
  if (mode_count < 1)
    throw std::invalid_argument("gram_bound_gaussian: mode_count must be >= 1");
  if (!(sigma_psf > 0.0) || !(spacing > 0.0))
    throw std::invalid_argument("gram_bound_gaussian: bad sigma or spacing");
  Eigen::VectorXcd overlaps(mode_count);
  const double c = spacing * spacing / (8.0 * sigma_psf * sigma_psf);
  for (int k = 0; k < mode_count; ++k)
    overlaps[k] = Complex{std::exp(-c * k * k), 0.0};
  return detail::gram_bound_from_overlaps(std::move(overlaps), spacing,
                                          dense_cap);
}

/// L2-normalized Gaussian cPSF of intensity width sigma (the gram_bound
/// input for gaussian apertures).
inline ComplexProfile normalized_gaussian_psf(double sigma) {
  ComplexProfile u;
  u.decay_scale = 2.0 * sigma;
  const double amp = std::pow(2.0 * kPi * sigma * sigma, -0.25);
  u.eval = [sigma, amp](double x) {
    return Complex{amp * std::exp(-x * x / (4.0 * sigma * sigma)), 0.0};
  };
  return u;
}

/// Transmission probability of a single rect mode of width delta through the
/// 4f system: delta * int sinc_n^2(k delta) A^2(k) dk (Eq. (4) with one
/// source; the quantity the Gram bound must dominate).
inline double single_mode_transmission(const Aperture& ap, double delta,
                                       const QuadratureSpec& spec) {
  if (!(delta > 0.0))
    throw std::invalid_argument("single_mode_transmission: delta must be > 0");
  ComplexProfile f;
  f.decay_scale = ap.profile.decay_scale;
  f.eval = [ae = ap.profile.eval, delta](double k) {
    const double sc = sinc_n(k * delta);
    return Complex{std::norm(ae(k)) * sc * sc, 0.0};
  };
  return delta * integrate(f, spec).real();
}

/// Detection probability of Eqs. (25)/(26), computed along both routes:
/// scale * int |(E * u)(x)|^2 dx and scale * int |Ehat(k) uhat(k)|^2 dk.
/// The two must agree to 1e-10 relative; their mean is returned.
inline double detection_probability_frequency(const ComplexProfile& field,
                                              const ComplexProfile& u,
                                              double scale,
                                              const QuadratureSpec& spec) {
  if (!(scale > 0.0))
    throw std::invalid_argument(
        "detection_probability_frequency: scale must be > 0");

  ComplexProfile u2;
  u2.decay_scale = u.decay_scale;
  u2.eval = [ue = u.eval](double x) { return Complex{std::norm(ue(x)), 0.0}; };
  const double norm =
      integrate(u2, QuadratureSpec::for_scale(u.decay_scale)).real();
  if (std::abs(norm - 1.0) > 1e-10)
    throw UnnormalizedPSF("detection_probability_frequency: int |u|^2 = " +
                          std::to_string(norm));

  const QuadratureSpec inner(field.decay_scale * 12.0 + u.decay_scale,
                             spec.node_budget, 1e-12);

  // spatial route
  ComplexProfile conv_sq;
  conv_sq.decay_scale = field.decay_scale + u.decay_scale;
  conv_sq.eval = [fe = field, ue = u.eval, inner](double x) {
    ComplexProfile prod;
    prod.decay_scale = fe.decay_scale;
    prod.eval = [fe = fe.eval, ue, x](double y) { return fe(y) * ue(x - y); };
    const Complex c = integrate_unchecked(prod, inner);
    return Complex{std::norm(c), 0.0};
  };
  const QuadratureSpec outer_x(12.0 * conv_sq.decay_scale, spec.node_budget,
                               1e-11);
  const double spatial = scale * integrate(conv_sq, outer_x).real();

  // frequency route: find where the product Ehat * uhat has decayed (either
  // factor may set the support; an oscillatory Ehat has spurious zeros, so
  // require several consecutive probes under threshold), then integrate
  const QuadratureSpec u_spec = QuadratureSpec::for_scale(u.decay_scale)
                                    .with_tolerance(1e-12);
  auto uhat = [ue = u, u_spec](double k) {
    return fourier_transform(ue, k, u_spec);
  };
  auto product_mag = [&](double k) {
    return std::abs(fourier_transform(field, k, inner) * uhat(k));
  };
  double k_edge = 0.1 / std::max(field.decay_scale, u.decay_scale);
  double peak = product_mag(0.0);
  int below = 0;
  for (int step = 0; step < 200 && below < 3; ++step) {
    const double mag = product_mag(k_edge);
    peak = std::max(peak, mag);
    below = mag < 1e-14 * peak ? below + 1 : 0;
    if (below < 3) k_edge *= 1.4;
  }

  ComplexProfile freq_sq;
  freq_sq.decay_scale = k_edge / 12.0;
  freq_sq.eval = [fe = field, uhat, inner](double k) {
    const Complex eh = fourier_transform(fe, k, inner);
    return Complex{std::norm(eh * uhat(k)), 0.0};
  };
  const QuadratureSpec outer_k(k_edge, spec.node_budget, 1e-11);
  const double frequency = scale * integrate(freq_sq, outer_k).real();

  // agreement floor: both routes at the noise floor of the lossless power
  // ceiling scale*int|E|^2 count as agreeing (a fully filtered field gives
  // two zeros that differ only in roundoff)
  ComplexProfile field_sq;
  field_sq.decay_scale = field.decay_scale;
  field_sq.eval = [fe = field.eval](double x) {
    return Complex{std::norm(fe(x)), 0.0};
  };
  const double power_ceiling =
      scale *
      integrate(field_sq, QuadratureSpec::for_scale(field.decay_scale)).real();

  const double ref = std::max(std::abs(spatial), std::abs(frequency));
  const double mismatch = std::abs(spatial - frequency);
  if (mismatch > 1e-8 * std::max(ref, 1e-300) &&
      mismatch > 1e-12 * power_ceiling)
    throw ParsevalMismatch(
        "detection_probability_frequency: spatial route " +
        std::to_string(spatial) + " vs frequency route " +
        std::to_string(frequency) + " disagree beyond 1e-8");
  return 0.5 * (spatial + frequency);
}

}  // namespace srqfi
