#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Core>

#include "srqfi/optics.hpp"
#include "srqfi/state.hpp"

namespace srqfi {

// Classical Fisher information for concrete measurements on the image-plane
// state: Hermite-Gaussian mode sorting (SPADE) matched to the PSF width, and
// direct intensity imaging.

/// Per-emitted-photon outcome probabilities of the mode-sorting measurement:
/// P_q for q = 0..q_max plus the no-photon remainder, with analytic
/// s-derivatives.
struct OutcomeDistribution {
  Eigen::VectorXd probs;    // P_q per emitted photon
  Eigen::VectorXd dprobs;   // dP_q/ds
  int q_max = 0;
  double tail_mass = 0.0;   // truncated probability, conditional on detection
  double p_remainder = 0.0; // 1 - sum probs (no photon detected)
  double dp_remainder = 0.0;
};

/// HG-mode photon counting on the image plane, modes matched to the PSF
/// width sigma. The image-plane branches are the displaced cPSF copies
/// u(x -/+ s/2) e^{-/+ i phi/2}; within a branch the two displaced amplitudes
/// interfere, which kills odd (even) modes for the symmetric (antisymmetric)
/// branch. Displaced-Gaussian/HG overlaps are the coherent-state amplitudes
/// e^{-b^2/2} b^q / sqrt(q!) with b = s/(4 sigma).
inline OutcomeDistribution spade_distribution(const Aperture& ap,
                                              const SourcePair& src, int q_max,
                                              const QuadratureSpec& spec) {
  if (ap.kind != ApertureKind::gaussian)
    throw ApertureNotGaussian(
        "spade_distribution: exact HG-mode matching requires the gaussian "
        "aperture kind, got " + ap.id);
  if (q_max < 10)
    throw std::invalid_argument("spade_distribution: q_max must be >= 10");
  (void)spec;  // overlaps are closed-form for the gaussian kind

  const double sigma = ap.sigma;
  const double s = src.separation;
  const double delta = src.width;
  const double rt = src.coherence.real();  // only Re gamma survives the branch mix
  const double big_g = 1.0 / (std::sqrt(8.0 * kPi) * sigma);
  const double beta = s / (4.0 * sigma);
  const double mean = beta * beta;

  // grow q_max until the Poisson tail (conditional on detection) is < 1e-12
  int qm = q_max;
  const int q_cap = 512;
  auto log_tail = [&](int q) {
    // crude Stirling bound on sum_{k>q} mean^k/k! * e^{-mean}
    double lt = -mean + (q + 1) * std::log(std::max(mean, 1e-300)) -
                std::lgamma(q + 2.0);
    return lt + std::log(2.0);
  };
  while (qm < q_cap && log_tail(qm) > std::log(1e-12)) ++qm;

  OutcomeDistribution dist;
  dist.q_max = qm;
  dist.probs.resize(qm + 1);
  dist.dprobs.resize(qm + 1);

  const double scale = 2.0 * delta / kPi;
  double wsum = 0.0;
  double w = big_g * std::exp(-mean);  // w_q = G e^{-b^2} b^{2q}/q!
  for (int q = 0; q <= qm; ++q) {
    const double parity = (q % 2 == 0) ? 1.0 : -1.0;
    const double branch = 1.0 + parity * rt;
    dist.probs[q] = scale * 0.5 * w * branch;
    // dw_q/ds = w_q (q - b^2)/(2 b sigma); exact -w b/(2 sigma) at q = 0
    const double dw = w * ((q - mean) / beta) / (2.0 * sigma);
    dist.dprobs[q] = scale * 0.5 * dw * branch;
    wsum += w;
    w *= mean / (q + 1);
  }
  dist.tail_mass = std::max(0.0, 1.0 - wsum / big_g);
  if (dist.tail_mass >= 1e-10)
    throw TailTooHeavy("spade_distribution: truncated tail mass " +
                       std::to_string(dist.tail_mass) +
                       " at q_max = " + std::to_string(qm));
  dist.p_remainder = 1.0 - dist.probs.sum();
  dist.dp_remainder = -dist.dprobs.sum();
  return dist;
}

/// FI = sum_q (dP_q/ds)^2 / P_q over outcomes with P_q > 1e-300, including
/// the no-photon outcome. Per emitted photon (same normalization as the
/// distribution).
inline double classical_fi(const OutcomeDistribution& dist) {
  double fi = 0.0;
  for (int q = 0; q < dist.probs.size(); ++q) {
    if (dist.probs[q] > 1e-300)
      fi += dist.dprobs[q] * dist.dprobs[q] / dist.probs[q];
  }
  if (dist.p_remainder > 1e-300)
    fi += dist.dp_remainder * dist.dp_remainder / dist.p_remainder;
  return fi;
}

/// FI per emitted photon of the continuous intensity record in the image
/// plane: int (d_s I)^2 / I dx with I the per-emitted intensity density of
/// the photon part of rho_p.
inline double direct_imaging_fi(const Aperture& ap, const SourcePair& src,
                                const QuadratureSpec& spec) {
  const ComplexProfile u = cpsf(ap);
  const ComplexProfile du = cpsf_derivative(ap);
  const double s = src.separation;
  const double rt = src.coherence.real();
  const double delta = src.width;

  ComplexProfile integrand;
  integrand.decay_scale = u.decay_scale + s / 2.0;
  integrand.eval = [ue = u.eval, de = du.eval, s, rt](double x) -> Complex {
    const double um = ue(x - s / 2.0).real();
    const double up = ue(x + s / 2.0).real();
    const double dum = de(x - s / 2.0).real();
    const double dup = de(x + s / 2.0).real();
    const double intensity = (um * um + up * up + 2.0 * rt * um * up) /
                             (2.0 * kPi);
    if (intensity <= 1e-300) return {0.0, 0.0};
    const double dintensity =
        (-um * dum + up * dup + rt * (um * dup - dum * up)) / (2.0 * kPi);
    return {dintensity * dintensity / intensity, 0.0};
  };
  const QuadratureSpec wide(12.0 * integrand.decay_scale, spec.node_budget,
                            spec.rel_tolerance);
  return delta * integrate(integrand, wide).real();
}

}  // namespace srqfi
