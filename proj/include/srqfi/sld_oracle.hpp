#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "srqfi/qfi.hpp"
#include "srqfi/state.hpp"

namespace srqfi {

// Brute-force QFI oracle: a finite faithful representation of rho_p on the
// span of {psi0, psi_pi, d_s psi0, d_s psi_pi} plus the vacuum axis, followed
// by the spectral sum of the defining SLD equation. Validates every analytic
// path; shares nothing with the lemma formulas except the quadrature engine.

struct ReduceOptions {
  std::vector<int> ordering;    // Gram-Schmidt processing order of the 4 raw vectors
  bool include_vacuum = true;
  double fd_step = 0.0;         // > 0 runs the finite-difference drho cross-check
};

struct ReducedRepresentation {
  Eigen::MatrixXcd photon_rho;   // in the orthonormal photon basis
  Eigen::MatrixXcd photon_drho;
  double vacuum_pop = 0.0;       // p3
  double vacuum_dpop = 0.0;      // dp3/ds
  bool has_vacuum = false;
  Eigen::MatrixXcd coords_psi;   // photon_dim x 2, coordinates of psi0, psi_pi
  Eigen::MatrixXcd coords_dpsi;  // photon_dim x 2
  double gram_residual = 0.0;
  int photon_dim = 0;
  bool rank_collapsed = false;   // raw span rank < 4 (e.g. gamma=-1, s=0 corner)
  double fd_residual = 0.0;      // relative, when the fd check ran

  /// Dense rho including the vacuum axis (last row/column when present).
  Eigen::MatrixXcd rho() const {
    const int n = photon_dim + (has_vacuum ? 1 : 0);
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(n, n);
    m.topLeftCorner(photon_dim, photon_dim) = photon_rho;
    if (has_vacuum) m(photon_dim, photon_dim) = vacuum_pop;
    return m;
  }
  Eigen::MatrixXcd drho() const {
    const int n = photon_dim + (has_vacuum ? 1 : 0);
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(n, n);
    m.topLeftCorner(photon_dim, photon_dim) = photon_drho;
    if (has_vacuum) m(photon_dim, photon_dim) = vacuum_dpop;
    return m;
  }
};

namespace detail {

/// Gram-Schmidt over the raw-vector Gram matrix: returns T with rows holding
/// the basis coefficients over the raw vectors, rank tolerance 1e-12.
inline Eigen::MatrixXcd gram_schmidt_coeffs(const Eigen::MatrixXcd& gram,
                                            const std::vector<int>& order,
                                            double rank_tol = 1e-12) {
  const int n = static_cast<int>(gram.rows());
  const double max_diag = gram.diagonal().real().maxCoeff();
  Eigen::MatrixXcd t = Eigen::MatrixXcd::Zero(n, n);
  int rank = 0;
  for (int p : order) {
    Eigen::VectorXcd coeff = Eigen::VectorXcd::Zero(n);
    coeff(p) = 1.0;
    // subtract projections onto the accepted basis
    for (int m = 0; m < rank; ++m) {
      const Complex c = (t.row(m).conjugate() * gram.col(p))(0);
      coeff -= c * t.row(m).transpose();
    }
    const Complex norm2c = (coeff.adjoint() * gram * coeff)(0);
    const double norm2 = std::max(norm2c.real(), 0.0);
    if (norm2 <= rank_tol * max_diag) continue;
    t.row(rank) = coeff.transpose() / std::sqrt(norm2);
    ++rank;
  }
  return t.topRows(rank);
}

}  // namespace detail

inline ReducedRepresentation reduce(const TwoSourceState& state,
                                    const QuadratureSpec& spec,
                                    const ReduceOptions& opts = {}) {
  const ComplexProfile raw[4] = {state.psi0.amplitude, state.psi_pi.amplitude,
                                 state.psi0.derivative,
                                 state.psi_pi.derivative};
  Eigen::MatrixXcd gram(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = i; j < 4; ++j) {
      gram(i, j) = inner_product(raw[i], raw[j], spec);
      gram(j, i) = std::conj(gram(i, j));
    }

  std::vector<int> order = opts.ordering.empty() ? std::vector<int>{0, 1, 2, 3}
                                                 : opts.ordering;
  const Eigen::MatrixXcd t = detail::gram_schmidt_coeffs(gram, order);
  const int k = static_cast<int>(t.rows());

  ReducedRepresentation rep;
  rep.photon_dim = k;
  rep.rank_collapsed = k < 4;
  rep.gram_residual =
      (t.conjugate() * gram * t.transpose() - Eigen::MatrixXcd::Identity(k, k))
          .cwiseAbs()
          .maxCoeff();

  // coordinates: <e_m|v_j> = sum_l conj(T(m,l)) gram(l, j)
  const Eigen::MatrixXcd coords = t.conjugate() * gram;  // k x 4
  rep.coords_psi = coords.leftCols(2);
  rep.coords_dpsi = coords.rightCols(2);

  const Eigen::Matrix2cd b = state.coeffs.entries.cast<Complex>();
  rep.photon_rho = rep.coords_psi * b * rep.coords_psi.adjoint();
  rep.photon_drho = rep.coords_dpsi * b * rep.coords_psi.adjoint() +
                    rep.coords_psi * b * rep.coords_dpsi.adjoint();
  rep.has_vacuum = opts.include_vacuum;
  rep.vacuum_pop = state.p3;
  rep.vacuum_dpop = -rep.photon_drho.trace().real();

  if (opts.fd_step > 0.0) {
    const double s = state.psi0.separation;
    const double h = opts.fd_step;
    if (s + h == s)
      throw StepUnderflow("reduce: fd_step below coordinate precision");
    auto rho_at = [&](double s_shift) {
      const UnnormalizedState q0 = build_unnormalized_state(
          state.aperture, s_shift, 0.0, state.width, state.psi0.point_source);
      const UnnormalizedState qpi = build_unnormalized_state(
          state.aperture, s_shift, kPi, state.width, state.psi0.point_source);
      Eigen::MatrixXcd cross(4, 2);
      for (int i = 0; i < 4; ++i) {
        cross(i, 0) = inner_product(raw[i], q0.amplitude, spec);
        cross(i, 1) = inner_product(raw[i], qpi.amplitude, spec);
      }
      const Eigen::MatrixXcd c = t.conjugate() * cross;  // k x 2
      return Eigen::MatrixXcd(c * b * c.adjoint());
    };
    const Eigen::MatrixXcd fd =
        (8.0 * (rho_at(s + h) - rho_at(s - h)) -
         (rho_at(s + 2.0 * h) - rho_at(s - 2.0 * h))) /
        (12.0 * h);
    const double scale =
        std::max(rep.photon_drho.cwiseAbs().maxCoeff(), 1e-300);
    rep.fd_residual = (fd - rep.photon_drho).cwiseAbs().maxCoeff() / scale;
  }
  return rep;
}

/// Reduced representation of the normalized one-photon part rho_p^(1):
/// photon block renormalized by p1+p2, derivative including the
/// normalization term, no vacuum axis.
inline ReducedRepresentation reduce_single_photon(const TwoSourceState& state,
                                                  const QuadratureSpec& spec,
                                                  const ReduceOptions& opts = {}) {
  ReduceOptions o = opts;
  o.include_vacuum = false;
  ReducedRepresentation rep = reduce(state, spec, o);
  const double tot = rep.photon_rho.trace().real();  // p1 + p2 (per trace-1 units)
  const double dtot = rep.photon_drho.trace().real();
  rep.photon_drho =
      rep.photon_drho / tot - rep.photon_rho * (dtot / (tot * tot));
  rep.photon_rho /= tot;
  rep.vacuum_pop = 0.0;
  rep.vacuum_dpop = 0.0;
  return rep;
}

struct SpectralResult {
  double fisher = 0.0;
  Eigen::MatrixXcd sld;
  double residual = 0.0;  // max drho weight on cutoff-excluded pairs
};

/// Spectral evaluation of F = Tr(rho Lambda^2) with Lambda from
/// drho = (Lambda rho + rho Lambda)/2: eigendecompose rho, then
/// F = sum 2|<i|drho|j>|^2/(li+lj) over pairs with li+lj above the support
/// cutoff.
inline SpectralResult qfi_spectral(const Eigen::MatrixXcd& rho,
                                   const Eigen::MatrixXcd& drho,
                                   double eig_cutoff = 1e-14) {
  const int n = static_cast<int>(rho.rows());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(rho);
  const Eigen::VectorXd lam = eig.eigenvalues();
  const Eigen::MatrixXcd v = eig.eigenvectors();
  const Eigen::MatrixXcd m = v.adjoint() * drho * v;

  const double dscale = std::max(drho.cwiseAbs().maxCoeff(), 1e-300);
  SpectralResult res;
  Eigen::MatrixXcd l = Eigen::MatrixXcd::Zero(n, n);
  double excluded = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double denom = lam(i) + lam(j);
      if (denom > eig_cutoff) {
        res.fisher += 2.0 * std::norm(m(i, j)) / denom;
        l(i, j) = 2.0 * m(i, j) / denom;
      } else {
        excluded = std::max(excluded, std::abs(m(i, j)));
      }
    }
  }
  res.residual = excluded;
  if (excluded > 1e-9 * dscale)
    throw UnsupportedDerivative(
        "qfi_spectral: drho carries weight " + std::to_string(excluded) +
        " outside the support-compatible subspace (basis truncation failure)");
  res.sld = v * l * v.adjoint();
  return res;
}

struct OracleResult {
  double fisher_total = 0.0;   // F[rho_p], vacuum included when present
  double fisher_photon = 0.0;
  double vacuum_term = 0.0;    // (1/p3)(dp3/ds)^2
  SpectralResult spectral;
};

/// Full-state QFI: spectral sum on the photon block (at its own scale; the
/// vacuum axis is an exact eigenvector and is handled analytically, so the
/// ~1e-12 photon eigenvalues are not drowned by the unit-scale vacuum).
inline OracleResult oracle_qfi(const ReducedRepresentation& rep,
                               double eig_cutoff = 1e-14) {
  OracleResult out;
  out.spectral = qfi_spectral(rep.photon_rho, rep.photon_drho, eig_cutoff);
  out.fisher_photon = out.spectral.fisher;
  if (rep.has_vacuum && rep.vacuum_pop > 0.0)
    out.vacuum_term = rep.vacuum_dpop * rep.vacuum_dpop / rep.vacuum_pop;
  out.fisher_total = out.fisher_photon + out.vacuum_term;
  return out;
}

}  // namespace srqfi
