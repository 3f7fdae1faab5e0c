#pragma once

#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "srqfi/state.hpp"

namespace srqfi {

enum class Convention { paper, physical };

inline const char* to_string(Convention c) {
  return c == Convention::paper ? "paper" : "physical";
}

/// The four QFI variants at one parameter point. Per-emitted values and the
/// transmission are reported per unit delta (the point-source limit makes
/// the raw quantities vanish linearly in delta); per-detected values are
/// absolute and convention-free.
struct QfiReport {
  double f_em_full = 0.0;     // F_em[rho_p]/delta
  double f_det_full = 0.0;    // F_det[rho_p]
  double f_em_single = 0.0;   // F_em[rho_p^(1)]/delta
  double f_det_single = 0.0;  // F_det[rho_p^(1)]
  double transmission = 0.0;  // p(chi,s)/delta
  double sigma = 0.0;         // 0 when the aperture is not gaussian
  double separation = 0.0;
  Complex gamma{0.0, 0.0};
  Convention convention = Convention::paper;
  std::string aperture_id;
  bool divergent_per_detected = false;
  std::string note;
};

/// Inner products among {psi0, psi_pi, d_s psi0, d_s psi_pi} at one
/// parameter point; the cross entries vanish by parity for even apertures
/// and are kept for assumption checks.
struct InnerProductTable {
  double n0 = 0.0, npi = 0.0;   // <psi_i|psi_i>
  double d0 = 0.0, dpi = 0.0;   // <dpsi_i|dpsi_i>
  double c0 = 0.0, cpi = 0.0;   // <psi_i|dpsi_i>
  double x_pp = 0.0, x_dp = 0.0, x_pd = 0.0, x_dd = 0.0;  // 0-pi cross terms
  UnnormalizedState psi0, psi_pi;
};

namespace detail {

inline double real_ip(const ComplexProfile& a, const ComplexProfile& b,
                      const QuadratureSpec& spec) {
  return inner_product(a, b, spec).real();
}

}  // namespace detail

inline InnerProductTable inner_products(const Aperture& ap, double s,
                                        double delta, bool point_mode,
                                        const QuadratureSpec& spec) {
  InnerProductTable t;
  t.psi0 = build_unnormalized_state(ap, s, 0.0, delta, point_mode);
  t.psi_pi = build_unnormalized_state(ap, s, kPi, delta, point_mode);
  if (s == 0.0) {
    // explicit limits: psi_pi and d_s psi0 vanish identically at s = 0
    t.n0 = norm_squared(t.psi0, spec);
    t.dpi = detail::real_ip(t.psi_pi.derivative, t.psi_pi.derivative, spec);
    return t;
  }
  t.n0 = norm_squared(t.psi0, spec);
  t.npi = norm_squared(t.psi_pi, spec);
  t.d0 = detail::real_ip(t.psi0.derivative, t.psi0.derivative, spec);
  t.dpi = detail::real_ip(t.psi_pi.derivative, t.psi_pi.derivative, spec);
  t.c0 = detail::real_ip(t.psi0.amplitude, t.psi0.derivative, spec);
  t.cpi = detail::real_ip(t.psi_pi.amplitude, t.psi_pi.derivative, spec);
  t.x_pp = detail::real_ip(t.psi0.amplitude, t.psi_pi.amplitude, spec);
  t.x_dp = detail::real_ip(t.psi0.derivative, t.psi_pi.amplitude, spec);
  t.x_pd = detail::real_ip(t.psi0.amplitude, t.psi_pi.derivative, spec);
  t.x_dd = detail::real_ip(t.psi0.derivative, t.psi_pi.derivative, spec);
  return t;
}

// ---- generic lemma -------------------------------------------------------

/// A state-family vector for the QFI lemma: a coordinate profile plus an
/// optional extra orthogonal axis (used for the scaled vacuum component
/// sqrt(p3)|0>), each with its analytic s-derivative.
struct LemmaVector {
  ComplexProfile value;
  ComplexProfile derivative;
  Complex aux{0.0, 0.0};
  Complex aux_derivative{0.0, 0.0};
};

inline ComplexProfile zero_profile(double decay_scale = 1.0) {
  ComplexProfile p;
  p.decay_scale = decay_scale;
  p.eval = [](double) { return Complex{0.0, 0.0}; };
  return p;
}

/// QFI of rho(s) = sum_ij B_ij |phi_i><phi_j| with s-independent B, via the
/// lemma F = 4 sum_i B_ii <dphi_i|dphi_i>. The orthogonality assumptions
/// <phi_i|phi_j> = <dphi_i|phi_j> = <dphi_i|dphi_j> = 0 (i != j) and
/// Im<dphi_i|phi_i> = 0 are verified and reported on failure.
inline double qfi_lemma_general(const std::vector<LemmaVector>& vectors,
                                const Eigen::VectorXd& coeffs,
                                const QuadratureSpec& spec,
                                double check_tol = 1e-8) {
  const int n = static_cast<int>(vectors.size());
  if (coeffs.size() != n)
    throw std::invalid_argument("qfi_lemma_general: coeffs size mismatch");
  for (int i = 0; i < n; ++i)
    if (coeffs[i] < 0.0)
      throw std::invalid_argument("qfi_lemma_general: coeffs must be >= 0");

  auto ip = [&](const ComplexProfile& a, Complex aux_a,
                const ComplexProfile& b, Complex aux_b) {
    return inner_product(a, b, spec) + std::conj(aux_a) * aux_b;
  };

  std::vector<double> norm2(n), dnorm2(n);
  for (int i = 0; i < n; ++i) {
    norm2[i] = ip(vectors[i].value, vectors[i].aux, vectors[i].value,
                  vectors[i].aux).real();
    dnorm2[i] = ip(vectors[i].derivative, vectors[i].aux_derivative,
                   vectors[i].derivative, vectors[i].aux_derivative).real();
  }

  std::ostringstream violations;
  const double floor = 1e-30;
  auto check = [&](const char* label, int i, int j, Complex val, double scale) {
    if (std::abs(val) > check_tol * std::max(scale, floor)) {
      violations << label << "(" << i << "," << j << ") = " << std::abs(val)
                 << " exceeds " << check_tol << "*" << scale << "; ";
    }
  };
  for (int i = 0; i < n; ++i) {
    const Complex cd = ip(vectors[i].derivative, vectors[i].aux_derivative,
                          vectors[i].value, vectors[i].aux);
    check("Im<dphi|phi>", i, i, Complex{0.0, cd.imag()},
          std::sqrt(dnorm2[i] * norm2[i]));
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      check("<phi|phi>", i, j,
            ip(vectors[i].value, vectors[i].aux, vectors[j].value,
               vectors[j].aux),
            std::sqrt(norm2[i] * norm2[j]));
      check("<dphi|phi>", i, j,
            ip(vectors[i].derivative, vectors[i].aux_derivative,
               vectors[j].value, vectors[j].aux),
            std::sqrt(dnorm2[i] * norm2[j]));
      check("<dphi|dphi>", i, j,
            ip(vectors[i].derivative, vectors[i].aux_derivative,
               vectors[j].derivative, vectors[j].aux_derivative),
            std::sqrt(dnorm2[i] * dnorm2[j]));
    }
  }
  const std::string bad = violations.str();
  if (!bad.empty())
    throw AssumptionViolation("qfi_lemma_general: lemma assumptions failed: " +
                              bad);

  double f = 0.0;
  for (int i = 0; i < n; ++i) f += coeffs[i] * dnorm2[i];
  return 4.0 * f;
}

// ---- stable scalar kernels for the Gaussian closed forms ------------------

namespace detail {

/// E(a) = (1 - e^{-a})/a, E(0) = 1.
inline double em1_ratio(double a) {
  if (a == 0.0) return 1.0;
  return -std::expm1(-a) / a;
}

/// Q(a) = (e^{-a} - 1 + a)/a^2 = 1/2 - a/6 + ...
inline double q_kernel(double a) {
  if (a < 1e-2) {
    return 0.5 +
           a * (-1.0 / 6.0 +
                a * (1.0 / 24.0 + a * (-1.0 / 120.0 + a * (1.0 / 720.0))));
  }
  return (std::expm1(-a) + a) / (a * a);
}

/// S(a) = 2R - E^2 with R = (1-(1+a)e^{-a})/a^2; S = a/3 - a^2/3 + ...
inline double s_kernel(double a) {
  if (a < 2e-2) {
    return a * (1.0 / 3.0 +
                a * (-1.0 / 3.0 +
                     a * (11.0 / 60.0 +
                          a * (-13.0 / 180.0 +
                               a * (19.0 / 840.0 + a * (-1.0 / 168.0))))));
  }
  const double g = std::exp(-a);
  const double e = em1_ratio(a);
  const double r = (1.0 - (1.0 + a) * g) / (a * a);
  return 2.0 * r - e * e;
}

/// 1 + r*g without cancellation near r = -1, s = 0 (g = e^{-a}).
inline double one_plus_rg(double r, double g, double a) {
  if (r >= 0.0) return 1.0 + r * g;
  return a * em1_ratio(a) + g * (1.0 + r);
}

/// 1 - r*g without cancellation near r = +1, s = 0.
inline double one_minus_rg(double r, double g, double a) {
  if (r <= 0.0) return 1.0 - r * g;
  return a * em1_ratio(a) + g * (1.0 - r);
}

/// N2 = 1 - r g (1 - s^2/(4 sigma^2)) = (1 - r g) + 2 a r g, the shared
/// numerator of F_em[rho_p] and F_det[rho_p].
inline double full_numerator(double r, double g, double a) {
  return one_minus_rg(r, g, a) + 2.0 * a * r * g;
}

/// N1 = 1 - r^2 g^2 + 2 a r g, the shared numerator of the single-photon
/// quantities. Regrouped into non-negative terms for r < 0 where the naive
/// form cancels to ~a^3/3 (all significant digits lost for s ~ 0.01 sigma).
inline double single_numerator(double r, double g, double a) {
  if (r >= 0.0) return one_minus_rg(r, g, a) * (1.0 + r * g) + 2.0 * a * r * g;
  const double u = -r;
  const double gu = g * (1.0 - u);
  return a * a * s_kernel(a) + 2.0 * a * a * g * q_kernel(a) * (1.0 - u) +
         gu * (2.0 - gu);
}

}  // namespace detail

// ---- reports ---------------------------------------------------------------

/// Point-source QFI via the lemma path: single quadrature pass for the
/// inner-product table, plus one centered-derivative quadrature for the
/// single-photon variance (the 4x4-table expression d/n - (c/n)^2 cancels
/// catastrophically near Re gamma = -1, s -> 0).
inline QfiReport qfi_point_sources(const Aperture& ap, double s, Complex gamma,
                                   const QuadratureSpec& spec,
                                   Convention convention = Convention::paper) {
  if (std::abs(gamma) > 1.0 + 1e-12)
    throw InvalidCoherence("qfi_point_sources: |gamma| > 1");
  if (s < 0.0)
    throw std::invalid_argument("qfi_point_sources: s must be >= 0");

  const InnerProductTable t = inner_products(ap, s, 0.0, true, spec);
  const double rt = std::clamp(gamma.real(), -1.0, 1.0);
  const double w0 = (1.0 + rt) / 2.0;
  const double wp = (1.0 - rt) / 2.0;
  const double nchi = w0 * t.n0 + wp * t.npi;
  const double dchi = w0 * t.d0 + wp * t.dpi;
  const double cchi = w0 * t.c0 + wp * t.cpi;

  const double conv = convention == Convention::paper ? 1.0 / kPi : 1.0;

  QfiReport rep;
  rep.sigma = ap.kind == ApertureKind::gaussian ? ap.sigma : 0.0;
  rep.separation = s;
  rep.gamma = gamma;
  rep.convention = convention;
  rep.aperture_id = ap.id;
  rep.f_em_full = 8.0 * conv * dchi;
  rep.transmission = 2.0 * conv * nchi;

  if (nchi <= 0.0) {
    // gamma = -1, s = 0: the chi = pi branch is empty, no photon is ever
    // detected; per-detected QFI diverges. f_em_full above is the s->0 limit.
    rep.divergent_per_detected = true;
    rep.f_det_full = std::numeric_limits<double>::infinity();
    rep.f_det_single = std::numeric_limits<double>::infinity();
    rep.f_em_single = 0.0;
    rep.note = "no photons transmitted at gamma=-1, s=0";
    return rep;
  }

  rep.f_det_full = 4.0 * dchi / nchi;

  const double k = cchi / nchi;
  const double a0 = std::sqrt(w0), api = std::sqrt(wp);
  ComplexProfile h;
  h.decay_scale = t.psi0.amplitude.decay_scale;
  h.eval = [p0 = t.psi0.amplitude.eval, dp0 = t.psi0.derivative.eval,
            pp = t.psi_pi.amplitude.eval, dpp = t.psi_pi.derivative.eval, a0,
            api, k](double x) {
    const Complex hv = a0 * (dp0(x) - k * p0(x)) + api * (dpp(x) - k * pp(x));
    return Complex{std::norm(hv), 0.0};
  };
  const double variance = integrate(h, spec).real();
  rep.f_det_single = 4.0 * variance / nchi;
  rep.f_em_single = rep.transmission * rep.f_det_single;
  return rep;
}

/// The four Appendix-B closed forms for the Gaussian aperture, evaluated
/// through cancellation-free kernels so that the s -> 0, Re gamma -> +/-1
/// corners keep full relative precision.
inline QfiReport gaussian_closed_forms(double sigma, double s, double re_gamma,
                                       Convention convention = Convention::paper) {
  if (!(sigma > 0.0))
    throw std::invalid_argument("gaussian_closed_forms: sigma must be > 0");
  if (s < 0.0)
    throw std::invalid_argument("gaussian_closed_forms: s must be >= 0");
  if (std::abs(re_gamma) > 1.0 + 1e-12)
    throw InvalidCoherence("gaussian_closed_forms: |Re gamma| > 1");
  const double r = std::clamp(re_gamma, -1.0, 1.0);

  const double a = s * s / (8.0 * sigma * sigma);
  const double g = std::exp(-a);
  const double pref =
      1.0 / (8.0 * std::sqrt(2.0) * std::pow(kPi, 1.5) * sigma * sigma * sigma);
  const double big_g = 1.0 / (std::sqrt(8.0 * kPi) * sigma);  // int A^2
  const double conv = convention == Convention::paper ? 1.0 : kPi;

  const double opr = detail::one_plus_rg(r, g, a);
  const double n2 = detail::full_numerator(r, g, a);
  const double n1 = detail::single_numerator(r, g, a);

  QfiReport rep;
  rep.sigma = sigma;
  rep.separation = s;
  rep.gamma = Complex{r, 0.0};
  rep.convention = convention;
  rep.aperture_id = "gaussian(sigma=" + std::to_string(sigma) + ")";
  rep.f_em_full = conv * pref * n2;
  rep.transmission = conv * big_g * opr / kPi;

  if (opr <= 0.0) {
    rep.divergent_per_detected = true;
    rep.f_det_full = std::numeric_limits<double>::infinity();
    rep.f_det_single = std::numeric_limits<double>::infinity();
    rep.f_em_single = 0.0;
    rep.note = "no photons transmitted at gamma=-1, s=0";
    return rep;
  }

  rep.f_det_full = n2 / (4.0 * sigma * sigma * opr);
  rep.f_det_single = n1 / (4.0 * sigma * sigma * opr * opr);
  rep.f_em_single = conv * pref * n1 / opr;
  return rep;
}

/// The dropped vacuum term (1/p3)(dp3/ds)^2 per emitted photon at finite
/// delta; O(delta^2), used for the scaling checks and the spectral-oracle
/// comparison.
inline double vacuum_term_per_emitted(const Aperture& ap, double s,
                                      Complex gamma, double delta, double p_em,
                                      const QuadratureSpec& spec) {
  const InnerProductTable t = inner_products(ap, s, delta, false, spec);
  const double rt = std::clamp(gamma.real(), -1.0, 1.0);
  const double w0 = (1.0 + rt) / 2.0;
  const double wp = (1.0 - rt) / 2.0;
  const double nchi = w0 * t.n0 + wp * t.npi;
  const double cchi = w0 * t.c0 + wp * t.cpi;
  const double p = 2.0 * delta / kPi * nchi;   // p(chi, s), paper units
  const double dp = 2.0 * delta / kPi * 2.0 * cchi;
  const double p3 = 1.0 - p_em * p;
  return p_em * dp * dp / p3;
}

}  // namespace srqfi
