#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "srqfi/sld_oracle.hpp"
#include "test_support.hpp"

using namespace srqfi;
using srqfi::testing::rel_err;

namespace {
const Aperture kGauss1 = Aperture::gaussian(1.0);
QuadratureSpec ap_spec(const Aperture& ap, double tol = 1e-11) {
  return QuadratureSpec::for_scale(ap.profile.decay_scale).with_tolerance(tol);
}
TwoSourceState make_state(const Aperture& ap, double s, Complex gamma,
                          double delta = 1e-4, double p_em = 0.01) {
  return assemble_state(ap, SourcePair(s, delta, gamma, p_em), ap_spec(ap));
}
}  // namespace

TEST_CASE("spectral formula on synthetic inputs") {
  SUBCASE("classical Bernoulli fisher information") {
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(2, 2);
    rho(0, 0) = 0.25;
    rho(1, 1) = 0.75;
    Eigen::MatrixXcd drho = Eigen::MatrixXcd::Zero(2, 2);
    drho(0, 0) = 1.0;
    drho(1, 1) = -1.0;
    const SpectralResult res = qfi_spectral(rho, drho);
    CHECK(res.fisher == doctest::Approx(5.333333333333333).epsilon(1e-12));
  }
  SUBCASE("pure rotating family has QFI 4") {
    const double s = 0.7;
    Eigen::Vector2cd psi, dpsi;
    psi << std::cos(s), std::sin(s);
    dpsi << -std::sin(s), std::cos(s);
    const Eigen::MatrixXcd rho = psi * psi.adjoint();
    const Eigen::MatrixXcd drho = dpsi * psi.adjoint() + psi * dpsi.adjoint();
    const SpectralResult res = qfi_spectral(rho, drho);
    CHECK(res.fisher == doctest::Approx(4.0).epsilon(1e-12));
  }
  SUBCASE("SLD equation residual vanishes on the support") {
    Eigen::MatrixXcd rho(2, 2), drho(2, 2);
    rho << 0.6, Complex{0.1, 0.05}, Complex{0.1, -0.05}, 0.4;
    drho << 0.3, Complex{-0.2, 0.1}, Complex{-0.2, -0.1}, -0.3;
    const SpectralResult res = qfi_spectral(rho, drho);
    const Eigen::MatrixXcd sym =
        0.5 * (res.sld * rho + rho * res.sld);
    CHECK((drho - sym).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("derivative weight outside the support is rejected") {
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(2, 2);
    rho(0, 0) = 1.0;
    Eigen::MatrixXcd drho = Eigen::MatrixXcd::Zero(2, 2);
    drho(1, 1) = 1.0;  // moves weight strictly inside the kernel
    CHECK_THROWS_AS(qfi_spectral(rho, drho), UnsupportedDerivative);
  }
}

TEST_CASE("reduced representation") {
  SUBCASE("gram residual and trace bookkeeping") {
    const TwoSourceState st = make_state(kGauss1, 1.0, Complex{-0.5, 0.0});
    const ReducedRepresentation rep = reduce(st, ap_spec(kGauss1));
    CHECK(rep.gram_residual < 1e-10);
    CHECK(rep.photon_dim == 4);
    CHECK(!rep.rank_collapsed);
    CHECK(rep.photon_rho.trace().real() ==
          doctest::Approx(st.p1 + st.p2).epsilon(1e-10));
    CHECK((rep.photon_rho - rep.photon_rho.adjoint()).cwiseAbs().maxCoeff() <
          1e-18);
    const double p_total = rep.photon_rho.trace().real() + rep.vacuum_pop;
    CHECK(p_total == doctest::Approx(1.0).epsilon(1e-10));
  }
  SUBCASE("fully coherent input: photon block has rank 1") {
    const TwoSourceState st = make_state(kGauss1, 1.0, Complex{1.0, 0.0});
    const ReducedRepresentation rep = reduce(st, ap_spec(kGauss1));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(rep.photon_rho);
    int rank = 0;
    const double top = eig.eigenvalues().maxCoeff();
    for (int i = 0; i < eig.eigenvalues().size(); ++i)
      if (eig.eigenvalues()[i] > 1e-10 * top) ++rank;
    CHECK(rank == 1);
  }
  SUBCASE("incoherent input: photon block has rank 2") {
    const TwoSourceState st = make_state(kGauss1, 1.0, Complex{0.0, 0.0});
    const ReducedRepresentation rep = reduce(st, ap_spec(kGauss1));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(rep.photon_rho);
    int rank = 0;
    const double top = eig.eigenvalues().maxCoeff();
    for (int i = 0; i < eig.eigenvalues().size(); ++i)
      if (eig.eigenvalues()[i] > 1e-10 * top) ++rank;
    CHECK(rank == 2);
  }
  SUBCASE("rank collapse is reported at the gamma = -1, s = 0 corner") {
    TwoSourceState st;
    st.aperture = kGauss1;
    st.gamma = Complex{-1.0, 0.0};
    st.width = 1e-4;
    st.emission_prob = 0.01;
    st.chi = kPi;
    st.psi0 = build_unnormalized_state(kGauss1, 0.0, 0.0, 1e-4, false);
    st.psi_pi = build_unnormalized_state(kGauss1, 0.0, kPi, 1e-4, false);
    st.coeffs = CoefficientMatrix::from(st.gamma, st.width, st.emission_prob);
    st.p1 = 0.0;
    st.p2 = 0.0;
    st.p3 = 1.0;
    const ReducedRepresentation rep = reduce(st, ap_spec(kGauss1));
    CHECK(rep.rank_collapsed);
    CHECK(rep.photon_dim == 2);  // psi_pi and d_s psi0 vanish identically
  }
  SUBCASE("finite-difference cross-check of drho") {
    ReduceOptions opts;
    opts.fd_step = 1e-3;
    const TwoSourceState st = make_state(kGauss1, 0.9, Complex{0.3, 0.4});
    const ReducedRepresentation rep = reduce(st, ap_spec(kGauss1), opts);
    CHECK(rep.fd_residual < 1e-6);
  }
}

TEST_CASE("oracle matches the lemma path (this agreement IS the assertion)") {
  const double delta = 1e-4, p_em = 0.01;
  for (auto [s, re] : std::vector<std::pair<double, double>>{
           {1.0, -0.5}, {0.3, 0.7}, {2.0, -1.0}}) {
    const Complex gamma{re, 0.0};
    const TwoSourceState st = make_state(kGauss1, s, gamma, delta, p_em);
    const OracleResult oracle = oracle_qfi(reduce(st, ap_spec(kGauss1)));
    const QfiReport lemma =
        qfi_point_sources(kGauss1, s, gamma, ap_spec(kGauss1));
    const double vac =
        vacuum_term_per_emitted(kGauss1, s, gamma, delta, p_em,
                                ap_spec(kGauss1));
    CHECK(rel_err(oracle.fisher_total / p_em, lemma.f_em_full * delta + vac) <
          1e-7);
  }
}

TEST_CASE("single-photon oracle matches Eq. (17)") {
  for (auto [s, re] : std::vector<std::pair<double, double>>{
           {1.0, -0.5}, {0.6, 0.9}, {2.5, 0.0}}) {
    const Complex gamma{re, 0.0};
    const TwoSourceState st = make_state(kGauss1, s, gamma);
    const ReducedRepresentation rep =
        reduce_single_photon(st, ap_spec(kGauss1));
    CHECK(rep.photon_rho.trace().real() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(rep.photon_drho.trace().real()) < 1e-12);
    const SpectralResult res = qfi_spectral(rep.photon_rho, rep.photon_drho);
    const QfiReport lemma =
        qfi_point_sources(kGauss1, s, gamma, ap_spec(kGauss1));
    CHECK(rel_err(res.fisher, lemma.f_det_single) < 1e-6);
  }
}

TEST_CASE("appendix-A SLD ansatz satisfies the defining equation") {
  const double s = 1.0, delta = 1e-3, p_em = 0.05;
  const Complex gamma{-0.5, 0.2};
  const TwoSourceState st = make_state(kGauss1, s, gamma, delta, p_em);
  const ReducedRepresentation rep = reduce(st, ap_spec(kGauss1));
  const int k = rep.photon_dim;

  // Lambda = 2 sum_i |dphi_i><dphi_i| / <phi_i|dphi_i> over
  // {psi0, psi_pi, sqrt(p3)|0>} in the reduced basis
  Eigen::MatrixXcd lambda = Eigen::MatrixXcd::Zero(k + 1, k + 1);
  for (int i = 0; i < 2; ++i) {
    Eigen::VectorXcd dphi = Eigen::VectorXcd::Zero(k + 1);
    dphi.head(k) = rep.coords_dpsi.col(i);
    const Complex overlap =
        (rep.coords_psi.col(i).adjoint() * rep.coords_dpsi.col(i))(0);
    lambda += 2.0 * (dphi * dphi.adjoint()) / overlap;
  }
  {
    // vacuum vector sqrt(p3)|0>, derivative p3'/(2 sqrt(p3))
    Eigen::VectorXcd dphi = Eigen::VectorXcd::Zero(k + 1);
    dphi(k) = rep.vacuum_dpop / (2.0 * std::sqrt(rep.vacuum_pop));
    const Complex overlap = std::sqrt(rep.vacuum_pop) * dphi(k);
    lambda += 2.0 * (dphi * dphi.adjoint()) / overlap;
  }

  const Eigen::MatrixXcd rho = rep.rho();
  const Eigen::MatrixXcd drho = rep.drho();
  const Eigen::MatrixXcd sym = 0.5 * (lambda * rho + rho * lambda);
  CHECK((drho - sym).cwiseAbs().maxCoeff() < 1e-9);

  const double f_ansatz = (rho * lambda * lambda).trace().real();
  const OracleResult oracle = oracle_qfi(rep);
  CHECK(rel_err(f_ansatz, oracle.fisher_total) < 1e-9);
}

TEST_CASE("basis independence and vacuum bookkeeping") {
  const TwoSourceState st =
      make_state(kGauss1, 0.8, Complex{0.4, -0.3}, 1e-2, 0.1);
  SUBCASE("two gram-schmidt orderings agree to 1e-10") {
    ReduceOptions a, b;
    a.ordering = {0, 1, 2, 3};
    b.ordering = {3, 1, 2, 0};
    const double fa = oracle_qfi(reduce(st, ap_spec(kGauss1), a)).fisher_total;
    const double fb = oracle_qfi(reduce(st, ap_spec(kGauss1), b)).fisher_total;
    CHECK(rel_err(fa, fb) < 1e-10);
  }
  SUBCASE("including vs excluding the vacuum axis shifts F by the vacuum term") {
    // generic dense path at moderate scales, no block shortcut
    ReduceOptions with, without;
    without.include_vacuum = false;
    const ReducedRepresentation r1 = reduce(st, ap_spec(kGauss1), with);
    const ReducedRepresentation r0 = reduce(st, ap_spec(kGauss1), without);
    const double f1 = qfi_spectral(r1.rho(), r1.drho()).fisher;
    const double f0 = qfi_spectral(r0.rho(), r0.drho()).fisher;
    const double vac_term =
        r1.vacuum_dpop * r1.vacuum_dpop / r1.vacuum_pop;
    CHECK(f1 - f0 == doctest::Approx(vac_term).epsilon(1e-9));
  }
}

TEST_CASE("oracle confirms Im-gamma invariance with off-diagonal B") {
  const TwoSourceState flat = make_state(kGauss1, 1.2, Complex{0.5, 0.0});
  const TwoSourceState tilt = make_state(kGauss1, 1.2, Complex{0.5, 0.6});
  const double f_flat = oracle_qfi(reduce(flat, ap_spec(kGauss1))).fisher_total;
  const double f_tilt = oracle_qfi(reduce(tilt, ap_spec(kGauss1))).fisher_total;
  CHECK(rel_err(f_flat, f_tilt) < 1e-9);

  const double d_flat =
      qfi_spectral(reduce_single_photon(flat, ap_spec(kGauss1)).photon_rho,
                   reduce_single_photon(flat, ap_spec(kGauss1)).photon_drho)
          .fisher;
  const double d_tilt =
      qfi_spectral(reduce_single_photon(tilt, ap_spec(kGauss1)).photon_rho,
                   reduce_single_photon(tilt, ap_spec(kGauss1)).photon_drho)
          .fisher;
  CHECK(rel_err(d_flat, d_tilt) < 1e-9);
}

TEST_CASE("oracle equivalence on random even apertures") {
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    const Aperture ap = srqfi::testing::random_even_aperture(seed);
    const QuadratureSpec spec = ap_spec(ap);
    const double s = 0.7;
    const Complex gamma{-0.4, 0.0};
    const TwoSourceState st =
        assemble_state(ap, SourcePair(s, 1e-4, gamma, 0.01), spec);
    const OracleResult oracle = oracle_qfi(reduce(st, spec));
    const QfiReport lemma = qfi_point_sources(ap, s, gamma, spec);
    const double vac =
        vacuum_term_per_emitted(ap, s, gamma, 1e-4, 0.01, spec);
    CHECK(rel_err(oracle.fisher_total / 0.01, lemma.f_em_full * 1e-4 + vac) <
          1e-7);
  }
}
