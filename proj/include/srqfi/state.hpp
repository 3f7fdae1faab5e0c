#pragma once

#include <cmath>
#include <complex>

#include <Eigen/Core>

#include "srqfi/optics.hpp"
#include "srqfi/quadrature.hpp"

namespace srqfi {

/// chi = arccos(Re gamma), chi in [0, pi]. The state psi_chi carries all the
/// separation information of the partially coherent pair.
inline double coherence_angle(Complex gamma) {
  if (std::abs(gamma) > 1.0 + 1e-12)
    throw InvalidCoherence("coherence_angle: |gamma| = " +
                           std::to_string(std::abs(gamma)) + " > 1");
  const double re = std::clamp(gamma.real(), -1.0, 1.0);
  return std::acos(re);
}

/// psi-tilde_phi, the one-photon branch vector without its normalization
/// factor: A(x) sinc_n(x delta) cos(pi x s + phi/2), with the sinc factor
/// dropped in point-source mode. Carries the analytic s-derivative.
struct UnnormalizedState {
  ComplexProfile amplitude;
  ComplexProfile derivative;  // d/ds of amplitude, analytic
  double phase = 0.0;
  double separation = 0.0;
  double width = 0.0;
  bool point_source = false;
};

inline UnnormalizedState build_unnormalized_state(const Aperture& ap, double s,
                                                  double phase, double delta,
                                                  bool point_source_mode) {
  if (s < 0.0)
    throw std::invalid_argument("build_unnormalized_state: s must be >= 0");
  if (delta < 0.0 || (delta == 0.0 && !point_source_mode))
    throw std::invalid_argument(
        "build_unnormalized_state: width 0 requires point-source mode");
  UnnormalizedState st;
  st.phase = phase;
  st.separation = s;
  st.width = delta;
  st.point_source = point_source_mode;

  const auto ampl = ap.profile.eval;
  const double half_phase = phase / 2.0;
  st.amplitude.decay_scale = ap.profile.decay_scale;
  st.derivative.decay_scale = ap.profile.decay_scale;
  if (point_source_mode) {
    st.amplitude.eval = [ampl, s, half_phase](double x) {
      return ampl(x) * std::cos(kPi * x * s + half_phase);
    };
    st.derivative.eval = [ampl, s, half_phase](double x) {
      return ampl(x) * (-kPi * x * std::sin(kPi * x * s + half_phase));
    };
  } else {
    st.amplitude.eval = [ampl, s, half_phase, delta](double x) {
      return ampl(x) * sinc_n(x * delta) * std::cos(kPi * x * s + half_phase);
    };
    st.derivative.eval = [ampl, s, half_phase, delta](double x) {
      return ampl(x) * sinc_n(x * delta) *
             (-kPi * x * std::sin(kPi * x * s + half_phase));
    };
  }
  return st;
}

/// n(phi, s) = <psi-tilde_phi|psi-tilde_phi> = |N(phi,s)|^{-2}.
inline double norm_squared(const UnnormalizedState& st,
                           const QuadratureSpec& spec) {
  ComplexProfile f;
  f.decay_scale = st.amplitude.decay_scale;
  f.eval = [ae = st.amplitude.eval](double x) {
    return Complex{std::norm(ae(x)), 0.0};
  };
  return integrate(f, spec).real();
}

/// B coefficients of rho_p in the {psi-tilde_0, psi-tilde_pi} dyad basis:
/// (delta p_em / pi) [[1+Re g, Im g], [Im g, 1-Re g]]. Symmetric, PSD for
/// |gamma| <= 1, s-independent.
struct CoefficientMatrix {
  Eigen::Matrix2d entries;
  double scale;  // delta * p_em / pi

  static CoefficientMatrix from(Complex gamma, double delta, double p_em) {
    CoefficientMatrix b;
    b.scale = delta * p_em / kPi;
    b.entries << b.scale * (1.0 + gamma.real()), b.scale * gamma.imag(),
        b.scale * gamma.imag(), b.scale * (1.0 - gamma.real());
    return b;
  }
};

/// rho_p carried as (psi-tilde_0, psi-tilde_pi, B, p3); the density matrix is
/// never materialized here, every downstream formula needs only inner
/// products among the branch vectors and their derivatives.
struct TwoSourceState {
  UnnormalizedState psi0;
  UnnormalizedState psi_pi;
  CoefficientMatrix coeffs;
  double p1 = 0.0, p2 = 0.0, p3 = 1.0;
  double chi = 0.0;
  Complex gamma{0.0, 0.0};
  double width = 0.0;
  double emission_prob = 0.0;
  double n0 = 0.0, npi = 0.0;  // branch norms, cached from assembly
  Aperture aperture;
};

/// Assemble the three-component state of Eqs. (10)-(11) in the paper-units
/// transmission convention p = (2 delta / pi) n(phi, s).
inline TwoSourceState assemble_state(const Aperture& ap, const SourcePair& src,
                                     const QuadratureSpec& spec) {
  if (std::abs(src.coherence) > 1.0 + 1e-12)
    throw InvalidCoherence("assemble_state: |gamma| > 1");
  TwoSourceState st;
  st.gamma = src.coherence;
  st.width = src.width;
  st.emission_prob = src.emission_prob;
  st.aperture = ap;
  st.chi = coherence_angle(src.coherence);
  st.psi0 = build_unnormalized_state(ap, src.separation, 0.0, src.width, false);
  st.psi_pi = build_unnormalized_state(ap, src.separation, kPi, src.width, false);
  st.coeffs = CoefficientMatrix::from(src.coherence, src.width, src.emission_prob);

  st.n0 = norm_squared(st.psi0, spec);
  st.npi = norm_squared(st.psi_pi, spec);

  const double r = std::abs(src.coherence);
  // at r = 0 the branch split of Eq. (11) is an arbitrary unraveling of the
  // same mixed state; phi = chi = pi/2 keeps p1 = p2
  const double phi = r == 0.0 ? kPi / 2.0 : std::arg(src.coherence);
  const double c2 = std::cos(phi / 2.0) * std::cos(phi / 2.0);
  const double n_phi = c2 * st.n0 + (1.0 - c2) * st.npi;        // Eq. (A11)
  const double n_phi_pi = (1.0 - c2) * st.n0 + c2 * st.npi;
  const double two_delta_over_pi = 2.0 * src.width / kPi;
  st.p1 = src.emission_prob * two_delta_over_pi * n_phi * (1.0 + r) / 2.0;
  st.p2 = src.emission_prob * two_delta_over_pi * n_phi_pi * (1.0 - r) / 2.0;
  st.p3 = 1.0 - st.p1 - st.p2;
  return st;
}

/// Weights of the normalized one-photon part rho_p^(1) = rho_photon/(p1+p2).
inline std::pair<double, double> single_photon_weights(const TwoSourceState& st) {
  const double tot = st.p1 + st.p2;
  return {st.p1 / tot, st.p2 / tot};
}

}  // namespace srqfi
