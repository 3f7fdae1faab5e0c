#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <queue>
#include <vector>

#include <Eigen/Core>

#include "srqfi/errors.hpp"

namespace srqfi {

using Complex = std::complex<double>;

constexpr double kPi = 3.14159265358979323846;

/// Normalized sinc, sinc_n(u) = sin(pi u)/(pi u). This is the convention
/// forced by the e^{-i 2 pi k x} Fourier transform applied to rect.
inline double sinc_n(double u) {
  const double z = kPi * u;
  if (std::abs(z) < 1e-4) {
    const double z2 = z * z;
    return 1.0 - z2 / 6.0 * (1.0 - z2 / 20.0);
  }
  return std::sin(z) / z;
}

/// A function of one real coordinate with complex values, together with the
/// coordinate scale beyond which it is negligible (drives integration
/// domains: the default domain is [-12, 12] decay scales).
struct ComplexProfile {
  std::function<Complex(double)> eval;
  double decay_scale = 1.0;

  Complex operator()(double x) const { return eval(x); }
};

struct QuadratureSpec {
  double half_width;          // integration domain [-X, X]
  int node_budget = 400000;   // max integrand evaluations
  double rel_tolerance = 1e-10;

  QuadratureSpec(double half_width_, int node_budget_ = 400000,
                 double rel_tolerance_ = 1e-10)
      : half_width(half_width_),
        node_budget(node_budget_),
        rel_tolerance(rel_tolerance_) {
    if (!(half_width > 0.0))
      throw std::invalid_argument("QuadratureSpec: half_width must be > 0");
    if (!(rel_tolerance > 0.0 && rel_tolerance <= 1e-3))
      throw std::invalid_argument(
          "QuadratureSpec: rel_tolerance must lie in (0, 1e-3]");
    if (node_budget < 16)
      throw std::invalid_argument("QuadratureSpec: node_budget must be >= 16");
  }

  /// Domain covering 12 decay scales of the integrand (Gaussian tails
  /// below 1e-31, negligible against the 1e-10 default tolerance).
  static QuadratureSpec for_scale(double decay_scale) {
    return QuadratureSpec(12.0 * decay_scale);
  }

  QuadratureSpec with_tolerance(double tol) const {
    return QuadratureSpec(half_width, node_budget, tol);
  }
  QuadratureSpec with_budget(int budget) const {
    return QuadratureSpec(half_width, budget, rel_tolerance);
  }
};

namespace detail {

inline int gauss_order() { return 16; }

/// Gauss-Legendre nodes/weights on [-1, 1], Newton iteration on the
/// three-term recurrence.
inline void gauss_legendre(int n, Eigen::VectorXd& x, Eigen::VectorXd& w) {
  x.resize(n);
  w.resize(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1);
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) < 1e-15) break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    w[n - 1 - i] = w[i];
  }
}

struct GlRule {
  Eigen::VectorXd x, w;
  GlRule() { gauss_legendre(gauss_order(), x, w); }
};

inline const GlRule& gl_rule() {
  static const GlRule rule;
  return rule;
}

struct GlSample {
  Complex value{0.0, 0.0};
  double abs_value = 0.0;
};

template <class F>
GlSample gl_eval(const F& f, double a, double b, long& evals) {
  const GlRule& r = gl_rule();
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  GlSample s;
  for (int i = 0; i < r.x.size(); ++i) {
    const Complex v = f(mid + half * r.x[i]);
    s.value += r.w[i] * v;
    s.abs_value += r.w[i] * std::abs(v);
  }
  s.value *= half;
  s.abs_value *= half;
  evals += r.x.size();
  return s;
}

struct Panel {
  double a, b;
  GlSample left, right;  // GL over the two halves
  double est;            // |GL(a,b) - (left+right)|

  Complex value() const { return left.value + right.value; }
  double abs_value() const { return left.abs_value + right.abs_value; }
};

struct PanelWorse {
  bool operator()(const Panel& p, const Panel& q) const {
    return p.est < q.est;
  }
};

template <class F>
Panel make_panel(const F& f, double a, double b, const GlSample& coarse,
                 long& evals) {
  Panel p;
  p.a = a;
  p.b = b;
  const double m = 0.5 * (a + b);
  p.left = gl_eval(f, a, m, evals);
  p.right = gl_eval(f, m, b, evals);
  p.est = std::abs(coarse.value - p.value());
  return p;
}

struct IntegralResult {
  Complex value{0.0, 0.0};
  double abs_integral = 0.0;
  double error_estimate = 0.0;
};

/// Globally adaptive Gauss-Legendre: keep a worst-first heap of panels and
/// bisect the largest error contributor until the summed estimate meets the
/// relative tolerance (measured against the integral of |f|, so that odd
/// integrands integrating to zero still terminate).
template <class F>
IntegralResult integrate_adaptive(const F& f, double lo, double hi,
                                  const QuadratureSpec& spec) {
  long evals = 0;
  const int seed_panels = 8;
  std::priority_queue<Panel, std::vector<Panel>, PanelWorse> heap;
  Complex total{0.0, 0.0};
  double total_abs = 0.0;
  double total_est = 0.0;
  Complex frozen{0.0, 0.0};
  double frozen_abs = 0.0, frozen_est = 0.0;

  const double width = hi - lo;
  for (int i = 0; i < seed_panels; ++i) {
    const double a = lo + width * i / seed_panels;
    const double b = lo + width * (i + 1) / seed_panels;
    const GlSample coarse = gl_eval(f, a, b, evals);
    Panel p = make_panel(f, a, b, coarse, evals);
    total += p.value();
    total_abs += p.abs_value();
    total_est += p.est;
    heap.push(p);
  }

  const double min_width =
      64.0 * std::numeric_limits<double>::epsilon() *
      std::max({std::abs(lo), std::abs(hi), 1.0});

  // roundoff-floor detection: when the summed estimate is already tiny
  // against the integral of |f| but stops improving under refinement, the
  // integrand is evaluated at its double-precision noise floor and further
  // bisection cannot help
  double best_est = std::numeric_limits<double>::infinity();
  int stalled = 0;

  while (true) {
    const double scale = std::max(total_abs + frozen_abs,
                                  std::numeric_limits<double>::min());
    if (total_est <= spec.rel_tolerance * scale) break;
    if (stalled >= 64 && total_est <= 1e-6 * scale) break;
    // a long stall with no improvement at all means the estimate is pure
    // roundoff (e.g. an integrand that is zero up to noise); accept it
    if (stalled >= 256) break;
    if (heap.empty()) break;
    Panel worst = heap.top();
    heap.pop();
    total -= worst.value();
    total_abs -= worst.abs_value();
    total_est -= worst.est;
    if (worst.b - worst.a <= min_width) {
      // cannot refine further in double precision; keep its value aside
      frozen += worst.value();
      frozen_abs += worst.abs_value();
      frozen_est += worst.est;
      continue;
    }
    if (evals + 4 * gauss_order() > spec.node_budget) {
      throw NonConvergence(
          "integrate: error estimate " + std::to_string(total_est + worst.est) +
          " above tolerance with node budget " +
          std::to_string(spec.node_budget) + " exhausted");
    }
    const double m = 0.5 * (worst.a + worst.b);
    Panel lp = make_panel(f, worst.a, m, worst.left, evals);
    Panel rp = make_panel(f, m, worst.b, worst.right, evals);
    total += lp.value() + rp.value();
    total_abs += lp.abs_value() + rp.abs_value();
    total_est += lp.est + rp.est;
    heap.push(lp);
    heap.push(rp);
    if (total_est <= 0.98 * best_est) {
      best_est = total_est;
      stalled = 0;
    } else {
      ++stalled;
    }
  }

  IntegralResult res;
  res.value = total + frozen;
  res.abs_integral = total_abs + frozen_abs;
  res.error_estimate = total_est + frozen_est;
  return res;
}

}  // namespace detail

/// Full-detail integral of f over [-X, X] per spec.
inline detail::IntegralResult integrate_full(const ComplexProfile& f,
                                             const QuadratureSpec& spec) {
  const double X = spec.half_width;
  detail::IntegralResult res =
      detail::integrate_adaptive(f.eval, -X, X, spec);
  // truncation safety: the value at the domain edge must be negligible
  const double edge = std::max(std::abs(f.eval(X)), std::abs(f.eval(-X)));
  const double scale = std::max(std::abs(res.value), res.abs_integral);
  if (edge * X > spec.rel_tolerance * scale &&
      edge * X > 1e-300) {
    throw DomainTooSmall(
        "integrate: |f(+/-X)|*X = " + std::to_string(edge * X) +
        " exceeds rel_tolerance*|result|; domain half_width " +
        std::to_string(X) + " truncates the integrand");
  }
  return res;
}

/// integral of f over [-half_width, half_width].
inline Complex integrate(const ComplexProfile& f, const QuadratureSpec& spec) {
  return integrate_full(f, spec).value;
}

/// As integrate, without the domain-truncation guard. For inner kernels of
/// nested quadratures whose domain is fixed by construction: the guard
/// compares the edge value against the local (possibly vanishing) result and
/// would reject evaluation points where the outer integrand is negligible.
inline Complex integrate_unchecked(const ComplexProfile& f,
                                   const QuadratureSpec& spec) {
  const double X = spec.half_width;
  return detail::integrate_adaptive(f.eval, -X, X, spec).value;
}

/// integral over an explicit union of intervals; each interval is seeded
/// separately, so compactly supported spikes (e.g. narrow rect sources) are
/// never missed by the panel seeding.
inline Complex integrate_segments(
    const std::function<Complex(double)>& f,
    const std::vector<std::pair<double, double>>& segments,
    const QuadratureSpec& spec) {
  Complex total{0.0, 0.0};
  for (const auto& [a, b] : segments) {
    if (!(b > a)) continue;
    total += detail::integrate_adaptive(f, a, b, spec).value;
  }
  return total;
}

/// Fourier transform under the convention Fhat(k) = int f(x) e^{-i 2 pi k x} dx.
inline Complex fourier_transform(const ComplexProfile& f, double k,
                                 const QuadratureSpec& spec) {
  ComplexProfile g;
  g.decay_scale = f.decay_scale;
  g.eval = [fe = f.eval, k](double x) {
    return fe(x) * std::polar(1.0, -2.0 * kPi * k * x);
  };
  return integrate(g, spec);
}

/// inner product <a|b> = int conj(a(x)) b(x) dx.
inline Complex inner_product(const ComplexProfile& a, const ComplexProfile& b,
                             const QuadratureSpec& spec) {
  ComplexProfile g;
  g.decay_scale = std::min(a.decay_scale, b.decay_scale);
  g.eval = [ae = a.eval, be = b.eval](double x) {
    return std::conj(ae(x)) * be(x);
  };
  return integrate(g, spec);
}

using ProfileFamily = std::function<ComplexProfile(double)>;

/// Richardson-extrapolated central difference in the family parameter,
/// error O(step^4).
inline ComplexProfile central_difference(const ProfileFamily& family, double s,
                                         double step) {
  if (!(step > 0.0) || s + step == s || s + 2.0 * step == s + step) {
    throw StepUnderflow("central_difference: step " + std::to_string(step) +
                        " below coordinate precision at s = " +
                        std::to_string(s));
  }
  const ComplexProfile fp1 = family(s + step);
  const ComplexProfile fm1 = family(s - step);
  const ComplexProfile fp2 = family(s + 2.0 * step);
  const ComplexProfile fm2 = family(s - 2.0 * step);
  ComplexProfile out;
  out.decay_scale = fp1.decay_scale;
  out.eval = [fp1 = fp1.eval, fm1 = fm1.eval, fp2 = fp2.eval, fm2 = fm2.eval,
              step](double x) {
    return (8.0 * (fp1(x) - fm1(x)) - (fp2(x) - fm2(x))) / (12.0 * step);
  };
  return out;
}

// ---- stock profiles ------------------------------------------------------

inline ComplexProfile rect_profile(double width, double center = 0.0) {
  ComplexProfile p;
  p.decay_scale = std::abs(center) + width;
  p.eval = [width, center](double x) {
    return std::abs(x - center) <= 0.5 * width ? Complex{1.0, 0.0}
                                               : Complex{0.0, 0.0};
  };
  return p;
}

inline ComplexProfile gaussian_profile(double inv_two_var, double amp = 1.0) {
  // amp * exp(-inv_two_var * x^2)
  ComplexProfile p;
  p.decay_scale = 1.0 / std::sqrt(2.0 * inv_two_var);
  p.eval = [inv_two_var, amp](double x) {
    return Complex{amp * std::exp(-inv_two_var * x * x), 0.0};
  };
  return p;
}

inline ComplexProfile scaled_profile(const ComplexProfile& f, Complex c) {
  ComplexProfile p;
  p.decay_scale = f.decay_scale;
  p.eval = [fe = f.eval, c](double x) { return c * fe(x); };
  return p;
}

inline ComplexProfile sum_profile(const ComplexProfile& a,
                                  const ComplexProfile& b) {
  ComplexProfile p;
  p.decay_scale = std::max(a.decay_scale, b.decay_scale);
  p.eval = [ae = a.eval, be = b.eval](double x) { return ae(x) + be(x); };
  return p;
}

}  // namespace srqfi
