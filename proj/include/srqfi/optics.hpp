#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "srqfi/quadrature.hpp"

namespace srqfi {

// 4f imaging model, f*lambda = 1; coordinates are dimensionless and the
// magnification is 1.

enum class ApertureKind { gaussian, hard_edge, custom };

/// Pupil transmission profile A(x). Even, passive (|A| <= 1). The gaussian
/// kind is A(x) = exp(-4 pi^2 sigma^2 x^2), which makes the PSF |u|^2 a
/// Gaussian of standard deviation sigma.
struct Aperture {
  ApertureKind kind = ApertureKind::gaussian;
  double sigma = 0.0;       // gaussian kind
  double edge = 0.0;        // hard_edge kind: A = 1 on [-edge, edge]
  ComplexProfile profile;
  std::string id;

  double amplitude(double x) const { return profile.eval(x).real(); }

  static Aperture gaussian(double sigma) {
    if (!(sigma > 0.0))
      throw std::invalid_argument("Aperture::gaussian: sigma must be > 0");
    Aperture ap;
    ap.kind = ApertureKind::gaussian;
    ap.sigma = sigma;
    ap.profile.decay_scale = 1.0 / (2.0 * std::sqrt(2.0) * kPi * sigma);
    const double c = 4.0 * kPi * kPi * sigma * sigma;
    ap.profile.eval = [c](double x) {
      return Complex{std::exp(-c * x * x), 0.0};
    };
    ap.id = "gaussian(sigma=" + std::to_string(sigma) + ")";
    return ap;
  }

  static Aperture hard_edge(double half_width) {
    if (!(half_width > 0.0))
      throw std::invalid_argument("Aperture::hard_edge: half_width must be > 0");
    Aperture ap;
    ap.kind = ApertureKind::hard_edge;
    ap.edge = half_width;
    ap.profile.decay_scale = half_width;
    ap.profile.eval = [half_width](double x) {
      return std::abs(x) <= half_width ? Complex{1.0, 0.0} : Complex{0.0, 0.0};
    };
    ap.id = "hard_edge(" + std::to_string(half_width) + ")";
    return ap;
  }

  /// Custom aperture from (coordinate, transmission) samples; linear
  /// interpolation inside the sampled range, zero outside.
  static Aperture custom(std::vector<std::pair<double, double>> samples,
                         std::string id = "custom") {
    if (samples.size() < 2)
      throw std::invalid_argument("Aperture::custom: need at least 2 samples");
    std::sort(samples.begin(), samples.end());
    double max_x = 0.0;
    for (const auto& [x, a] : samples) {
      if (std::abs(a) > 1.0 + 1e-12)
        throw std::invalid_argument(
            "Aperture::custom: |A| > 1 violates passivity at x = " +
            std::to_string(x));
      max_x = std::max(max_x, std::abs(x));
    }
    Aperture ap;
    ap.kind = ApertureKind::custom;
    ap.profile.decay_scale = max_x;
    auto xs = std::make_shared<std::vector<std::pair<double, double>>>(
        std::move(samples));
    ap.profile.eval = [xs](double x) -> Complex {
      const auto& v = *xs;
      if (x < v.front().first || x > v.back().first) return {0.0, 0.0};
      auto it = std::lower_bound(
          v.begin(), v.end(), x,
          [](const std::pair<double, double>& p, double t) { return p.first < t; });
      if (it == v.begin()) return {it->second, 0.0};
      const auto [x1, a1] = *(it - 1);
      const auto [x2, a2] = *it;
      if (x2 == x1) return {a2, 0.0};
      const double t = (x - x1) / (x2 - x1);
      return {a1 + t * (a2 - a1), 0.0};
    };
    ap.id = std::move(id);
    // parity check at the sampled points
    for (const auto& [x, a] : *xs) {
      const double mirrored = ap.profile.eval(-x).real();
      if (std::abs(mirrored - a) > 1e-12)
        throw std::invalid_argument(
            "Aperture::custom: A(x) != A(-x) at x = " + std::to_string(x));
    }
    return ap;
  }

  static Aperture from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("Aperture::from_file: cannot open " + path);
    std::vector<std::pair<double, double>> samples;
    std::string line;
    while (std::getline(in, line)) {
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      std::istringstream ls(line);
      double x, a;
      if (ls >> x >> a) samples.emplace_back(x, a);
    }
    if (samples.size() < 2)
      throw IoError("Aperture::from_file: fewer than 2 samples in " + path);
    return custom(std::move(samples), "custom(" + path + ")");
  }
};

/// Two small rectangular sources of width delta at +/- s/2 with degree of
/// coherence gamma = r e^{i phi} and emission probability p_em << 1.
struct SourcePair {
  double separation;   // s
  double width;        // delta
  Complex coherence;   // gamma
  double emission_prob;

  SourcePair(double s, double delta, Complex gamma, double p_em)
      : separation(s), width(delta), coherence(gamma), emission_prob(p_em) {
    if (!(s > 0.0)) throw std::invalid_argument("SourcePair: s must be > 0");
    if (!(delta > 0.0))
      throw std::invalid_argument("SourcePair: width must be > 0");
    if (!(s >= 10.0 * delta))
      throw std::invalid_argument("SourcePair: requires s >= 10*width");
    if (std::abs(gamma) > 1.0 + 1e-12)
      throw InvalidCoherence("SourcePair: |gamma| = " +
                             std::to_string(std::abs(gamma)) + " > 1");
    if (!(p_em > 0.0 && p_em <= 0.1))
      throw std::invalid_argument("SourcePair: emission_prob must be in (0, 0.1]");
  }
};

struct PlaneFields {
  ComplexProfile object;         // E_I
  ComplexProfile pupil;          // E_II
  ComplexProfile post_aperture;  // E_III
  ComplexProfile image;          // E_IV
};

/// Fields along the 4f chain for the coherent branch with relative phase
/// `phase`. The pupil field is the closed-form transform of the rect pair,
/// 2 delta sinc_n(x delta) cos(pi x s + phase/2); the image plane is the
/// quadrature Fourier transform of the clipped pupil field.
inline PlaneFields propagate_4f(const SourcePair& src, double phase,
                                const Aperture& ap, const QuadratureSpec& spec) {
  PlaneFields pf;
  const double s = src.separation;
  const double delta = src.width;

  ComplexProfile obj = rect_profile(delta, s / 2.0);
  obj = sum_profile(scaled_profile(obj, std::polar(1.0, -phase / 2.0)),
                    scaled_profile(rect_profile(delta, -s / 2.0),
                                   std::polar(1.0, phase / 2.0)));
  obj.decay_scale = s / 2.0 + delta;
  pf.object = obj;

  ComplexProfile pupil;
  pupil.decay_scale = ap.profile.decay_scale;  // relevant window set by A
  pupil.eval = [delta, s, phase](double x) {
    return Complex{2.0 * delta * sinc_n(x * delta) *
                       std::cos(kPi * x * s + phase / 2.0),
                   0.0};
  };
  pf.pupil = pupil;

  ComplexProfile post;
  post.decay_scale = ap.profile.decay_scale;
  post.eval = [pe = pupil.eval, ae = ap.profile.eval](double x) {
    return pe(x) * ae(x);
  };
  pf.post_aperture = post;

  ComplexProfile image;
  image.decay_scale = 2.0 * (ap.kind == ApertureKind::gaussian
                                 ? 2.0 * ap.sigma
                                 : 1.0 / ap.profile.decay_scale) +
                      s / 2.0;
  image.eval = [post, spec](double x) {
    return fourier_transform(post, x, spec);
  };
  pf.image = image;
  return pf;
}

/// System cPSF u = Ahat (f lambda = 1). Closed form for the gaussian and
/// hard-edge kinds, quadrature transform otherwise.
inline ComplexProfile cpsf(const Aperture& ap) {
  ComplexProfile u;
  switch (ap.kind) {
    case ApertureKind::gaussian: {
      const double sig = ap.sigma;
      u.decay_scale = 2.0 * sig;  // u = (1/(2 sqrt(pi) sigma)) e^{-x^2/(4 sigma^2)}
      u.eval = [sig](double x) {
        return Complex{std::exp(-x * x / (4.0 * sig * sig)) /
                           (2.0 * std::sqrt(kPi) * sig),
                       0.0};
      };
      break;
    }
    case ApertureKind::hard_edge: {
      const double a = ap.edge;
      u.decay_scale = 4.0 / a;  // sinc-shaped, slowly decaying
      u.eval = [a](double x) { return Complex{2.0 * a * sinc_n(2.0 * a * x), 0.0}; };
      break;
    }
    case ApertureKind::custom: {
      const QuadratureSpec inner = QuadratureSpec::for_scale(
          ap.profile.decay_scale).with_tolerance(1e-12);
      u.decay_scale = 2.0 / std::max(ap.profile.decay_scale, 1e-12);
      u.eval = [prof = ap.profile, inner](double x) {
        return fourier_transform(prof, x, inner);
      };
      break;
    }
  }
  return u;
}

/// du/dx of the cPSF (used by direct-imaging Fisher information).
inline ComplexProfile cpsf_derivative(const Aperture& ap) {
  ComplexProfile du;
  switch (ap.kind) {
    case ApertureKind::gaussian: {
      const double sig = ap.sigma;
      du.decay_scale = 2.0 * sig;
      du.eval = [sig](double x) {
        const double u = std::exp(-x * x / (4.0 * sig * sig)) /
                         (2.0 * std::sqrt(kPi) * sig);
        return Complex{-x / (2.0 * sig * sig) * u, 0.0};
      };
      break;
    }
    default: {
      // d/dx FT[A](x) = FT[-i 2 pi k A(k)](x)
      const QuadratureSpec inner = QuadratureSpec::for_scale(
          ap.profile.decay_scale).with_tolerance(1e-12);
      du.decay_scale = 2.0 / std::max(ap.profile.decay_scale, 1e-12);
      du.eval = [prof = ap.profile, inner](double x) {
        ComplexProfile kA;
        kA.decay_scale = prof.decay_scale;
        kA.eval = [pe = prof.eval](double k) {
          return Complex{0.0, -2.0 * kPi * k} * pe(k);
        };
        return fourier_transform(kA, x, inner);
      };
      break;
    }
  }
  return du;
}

/// int A(x)^2 dx (the point-source transmission scale, 1/(sqrt(8 pi) sigma)
/// for the gaussian kind).
inline double aperture_power(const Aperture& ap, const QuadratureSpec& spec) {
  ComplexProfile a2;
  a2.decay_scale = ap.profile.decay_scale;
  a2.eval = [ae = ap.profile.eval](double x) {
    const Complex a = ae(x);
    return Complex{std::norm(a), 0.0};
  };
  return integrate(a2, spec).real();
}

/// int |E_I|^2 over the two source supports (= 2 delta up to quadrature;
/// the Parseval anchor for the Eq.-(4) denominator).
inline double object_power(const SourcePair& src, double phase,
                           const Aperture& ap, const QuadratureSpec& spec) {
  PlaneFields pf = propagate_4f(src, phase, ap, spec);
  const double s = src.separation, d = src.width;
  auto f = [oe = pf.object.eval](double x) {
    return Complex{std::norm(oe(x)), 0.0};
  };
  return integrate_segments(f,
                            {{-s / 2.0 - d, -s / 2.0 + d},
                             {s / 2.0 - d, s / 2.0 + d}},
                            spec)
      .real();
}

/// Physical transmission probability p_phys(phase, s): the power ratio of
/// Eq.-(4) form, numerator by quadrature of |E_II A|^2, denominator via
/// the object field over the source supports (= 2 delta exactly).
inline double transmission_probability(const SourcePair& src, double phase,
                                       const Aperture& ap,
                                       const QuadratureSpec& spec) {
  PlaneFields pf = propagate_4f(src, phase, ap, spec);
  ComplexProfile num;
  num.decay_scale = ap.profile.decay_scale;
  num.eval = [pe = pf.post_aperture.eval](double x) {
    return Complex{std::norm(pe(x)), 0.0};
  };
  const double numerator = integrate(num, spec).real();
  const double denominator = object_power(src, phase, ap, spec);
  if (denominator < 1e-300)
    throw DegenerateSource("transmission_probability: object power " +
                           std::to_string(denominator) + " is degenerate");
  return numerator / denominator;
}

}  // namespace srqfi
