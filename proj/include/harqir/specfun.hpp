#ifndef HARQIR_SPECFUN_HPP
#define HARQIR_SPECFUN_HPP

// Gamma-family and confluent hypergeometric kernels used by the
// Mellin-Barnes machinery.  Conventions:
//   pochhammer(a,n) = a(a+1)...(a+n-1)
//   hyp_0f1(b;z)    = sum z^n / ((b)_n n!)
//   hyp_1f1(a;b;z)  = sum (a)_n z^n / ((b)_n n!)           (Kummer M)
//   hyp_2f1(a,b;c;z)= sum (a)_n (b)_n z^n / ((c)_n n!)     (Gauss series)
//   tricomi_psi(a,g;z) = (1/Gamma(a)) Int_0^inf e^{-zt} t^{a-1} (1+t)^{g-a-1} dt
// i.e. Tricomi's Psi (= U of DLMF 13.2), here with a > 0, z > 0 and a
// possibly complex second parameter g.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include "harqir/common.hpp"
#include "harqir/quadrature.hpp"

namespace harqir {

inline bool near_nonpositive_integer(double x, double tol = 1e-12) {
  return x <= 0.5 && std::abs(x - std::round(x)) < tol;
}

// ---------------------------------------------------------------------------
// log Gamma
// ---------------------------------------------------------------------------

inline double log_gamma(double x) {
  if (x <= 0.0) throw std::domain_error("log_gamma: requires x > 0 on the real line");
  return std::lgamma(x);
}

namespace detail {

// Lanczos g = 7, n = 9 coefficient set.
inline constexpr double kLanczos[9] = {
    0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
    771.32342877765313,      -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7,
};

inline cdouble log_gamma_lanczos(cdouble z) {
  const cdouble w = z - 1.0;
  cdouble x = kLanczos[0];
  for (int i = 1; i < 9; ++i) x += kLanczos[i] / (w + double(i));
  const cdouble t = w + 7.5;
  return 0.91893853320467274178 + (w + 0.5) * std::log(t) - t + std::log(x);
}

// log(sin(pi z)) with a large-|Im| form that avoids overflow of sin itself.
inline cdouble log_sin_pi(cdouble z) {
  const double y = z.imag();
  if (std::abs(y) > 20.0) {
    const cdouble i(0.0, 1.0);
    if (y > 0) return -i * M_PI * z + i * (M_PI / 2) - std::log(2.0);
    return i * M_PI * z - i * (M_PI / 2) - std::log(2.0);
  }
  return std::log(std::sin(M_PI * z));
}

}  // namespace detail

// Principal-branch log Gamma on Re z >= 1/2; continued by reflection below
// (there the branch follows the principal logs of the reflection factors).
inline cdouble log_gamma(cdouble z) {
  if (std::abs(z.imag()) < 1e-14 && near_nonpositive_integer(z.real(), 1e-13))
    throw std::domain_error("log_gamma: pole at a non-positive integer");
  if (z.real() >= 0.5) return detail::log_gamma_lanczos(z);
  // Gamma(z) Gamma(1-z) = pi / sin(pi z)
  return std::log(M_PI) - detail::log_sin_pi(z) - detail::log_gamma_lanczos(1.0 - z);
}

// 1/Gamma(z); exactly 0 at the poles.
inline cdouble reciprocal_gamma(cdouble z) {
  if (std::abs(z.imag()) < 1e-14 && near_nonpositive_integer(z.real(), 1e-13))
    return 0.0;
  return std::exp(-log_gamma(z));
}

// ---------------------------------------------------------------------------
// Regularized incomplete gamma
// ---------------------------------------------------------------------------

namespace detail {

inline double lower_gamma_series(double a, double x) {
  double ap = a, del = 1.0 / a, sum = del;
  for (int n = 0; n < 2000; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * 1e-16)
      return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  throw convergence_error("regularized_lower_gamma: series failed to converge");
}

inline double upper_gamma_cf(double a, double x) {
  constexpr double kTiny = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / kTiny, d = 1.0 / b, h = d;
  for (int i = 1; i <= 2000; ++i) {
    const double an = -double(i) * (double(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16)
      return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  throw convergence_error("regularized_upper_gamma: continued fraction stalled");
}

}  // namespace detail

inline double regularized_lower_gamma(double a, double x) {
  require(a > 0.0, "regularized_lower_gamma: a must be positive");
  require(x >= 0.0, "regularized_lower_gamma: x must be non-negative");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return detail::lower_gamma_series(a, x);
  return 1.0 - detail::upper_gamma_cf(a, x);
}

inline double regularized_upper_gamma(double a, double x) {
  require(a > 0.0, "regularized_upper_gamma: a must be positive");
  require(x >= 0.0, "regularized_upper_gamma: x must be non-negative");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - detail::lower_gamma_series(a, x);
  return detail::upper_gamma_cf(a, x);
}

inline double pochhammer(double a, int n) {
  require(n >= 0, "pochhammer: order must be non-negative");
  double p = 1.0;
  for (int j = 0; j < n; ++j) p *= a + j;
  return p;
}

// ---------------------------------------------------------------------------
// Hypergeometric series
// ---------------------------------------------------------------------------

namespace detail {

// Common series driver: term_{n+1} = term_n * ratio(n).  Stops after two
// consecutive terms below eps * |sum|.
template <class Ratio>
auto hyp_series(Ratio&& ratio, int cap, const char* who, double* max_term = nullptr) {
  using R = decltype(ratio(0));
  R term = R(1.0), sum = R(1.0);
  double peak = 1.0;
  int quiet = 0;
  for (int n = 0; n < cap; ++n) {
    term *= ratio(n);
    sum += term;
    peak = std::max(peak, std::abs(term));
    if (std::abs(term) > 1e290) throw convergence_error(std::string(who) + ": series overflow");
    if (std::abs(term) <= 1e-16 * std::abs(sum)) {
      if (++quiet >= 2) {
        if (max_term) *max_term = peak;
        return sum;
      }
    } else {
      quiet = 0;
    }
  }
  throw convergence_error(std::string(who) + ": term cap exceeded without convergence");
}

}  // namespace detail

inline double hyp_0f1(double b, double z) {
  if (near_nonpositive_integer(b)) throw std::domain_error("hyp_0f1: pole in lower parameter");
  return detail::hyp_series([=](int n) { return z / ((b + n) * (n + 1.0)); }, 10000,
                            "hyp_0f1");
}

inline cdouble hyp_1f1(cdouble a, cdouble b, double z, double* max_term = nullptr) {
  if (std::abs(b.imag()) < 1e-14 && near_nonpositive_integer(b.real()))
    throw std::domain_error("hyp_1f1: pole in lower parameter");
  return detail::hyp_series([=](int n) { return (a + double(n)) * z / ((b + double(n)) * (n + 1.0)); },
                            10000, "hyp_1f1", max_term);
}

inline double hyp_1f1(double a, double b, double z) {
  return hyp_1f1(cdouble(a), cdouble(b), z).real();
}

inline double hyp_2f1(double a, double b, double c, double z) {
  if (std::abs(z) >= 1.0) throw std::domain_error("hyp_2f1: series requires |z| < 1");
  if (near_nonpositive_integer(c)) throw std::domain_error("hyp_2f1: pole in lower parameter");
  return detail::hyp_series(
      [=](int n) { return (a + n) * (b + n) * z / ((c + n) * (n + 1.0)); }, 10000,
      "hyp_2f1");
}

// ---------------------------------------------------------------------------
// Tricomi Psi
// ---------------------------------------------------------------------------

namespace detail {

// Kummer decomposition (DLMF 13.2.42):
//   Psi(a,g;z) = Gamma(1-g)/Gamma(a-g+1) M(a,g;z)
//              + Gamma(g-1)/Gamma(a) z^{1-g} M(a-g+1,2-g;z).
// The two branches cancel when the M series grow large, so callers get the
// achieved cancellation scale and fall back to the integral if it is poor.
inline cdouble psi_kummer(double alpha, cdouble g, double z, double& cancellation) {
  double peak1 = 1.0, peak2 = 1.0;
  const cdouble c1 = std::exp(log_gamma(1.0 - g) - log_gamma(alpha - g + 1.0));
  const cdouble c2 =
      std::exp(log_gamma(g - 1.0) - std::lgamma(alpha) + (1.0 - g) * std::log(z));
  const cdouble t1 = c1 * hyp_1f1(cdouble(alpha), g, z, &peak1);
  const cdouble t2 = c2 * hyp_1f1(alpha - g + 1.0, 2.0 - g, z, &peak2);
  const cdouble u = t1 + t2;
  cancellation = (std::abs(c1) * peak1 + std::abs(c2) * peak2) /
                 std::max(std::abs(u), std::numeric_limits<double>::min());
  return u;
}

// Laplace-type integral on w = log(1+t), peak-normalized so large parameters
// cannot overflow.  The only oscillation is exp(i Im(g) w), linear in w, so
// splitting in half-periods keeps every panel easy.
inline cdouble psi_integral(double alpha, cdouble g, double z) {
  const double re_pow = g.real() - alpha - 1.0;  // exponent of (1+t)
  auto log_env = [&](double w) {
    const double t = std::expm1(w);
    if (t <= 0.0) return -std::numeric_limits<double>::infinity();
    return -z * t + (alpha - 1.0) * std::log(t) + re_pow * std::log1p(t);
  };
  // Locate the envelope peak and the point where it has fallen ~1e-20 below.
  double w_peak = 1e-8, l_peak = log_env(1e-8);
  for (double w = 1e-8; w < 60.0; w *= 1.25) {
    const double l = log_env(w);
    if (l > l_peak) {
      l_peak = l;
      w_peak = w;
    }
  }
  double w_end = w_peak;
  while (log_env(w_end) > l_peak - 46.0 && w_end < 700.0) w_end *= 1.3;
  w_end = std::min(w_end, 700.0);

  const double freq = std::abs(g.imag());
  const long half_cycles = std::lround(std::ceil(freq * w_end / M_PI));
  const long nseg = std::clamp(half_cycles, 6L, 6000L);

  auto f = [&](double w) -> cdouble {
    const double t = std::expm1(w);
    if (t <= 0.0) return 0.0;
    const double le = log_env(w) - l_peak;
    if (le < -50.0) return 0.0;
    // dt = (1+t) dw
    return std::exp(cdouble(le, g.imag() * w)) * (1.0 + t);
  };
  cdouble total = 0.0;
  double lo = 0.0;
  for (long i = 1; i <= nseg; ++i) {
    const double hi = w_end * double(i) / double(nseg);
    total += integrate_adaptive(f, lo, hi, 1e-15, 1e-11, 4000);
    lo = hi;
  }
  return total * std::exp(cdouble(l_peak, 0.0) - cdouble(std::lgamma(alpha), 0.0));
}

inline cdouble psi_dispatch(double alpha, cdouble g, double z) {
  double cancellation = std::numeric_limits<double>::infinity();
  // Predicted-safe region: short series growth.  Otherwise measure.
  cdouble u{};
  bool ok = false;
  try {
    u = psi_kummer(alpha, g, z, cancellation);
    ok = std::isfinite(u.real()) && std::isfinite(u.imag()) &&
         cancellation * 2.3e-16 < 5e-11;
  } catch (const convergence_error&) {
    ok = false;
  } catch (const std::domain_error&) {
    ok = false;
  }
  if (ok) return u;
  return psi_integral(alpha, g, z);
}

}  // namespace detail

inline cdouble tricomi_psi(double alpha, cdouble g, double z) {
  require(alpha > 0.0, "tricomi_psi: first parameter must be positive");
  require(z > 0.0, "tricomi_psi: argument must be positive");
  return detail::psi_dispatch(alpha, g, z);
}

// Real second parameter.  Integer g sits on poles of the decomposition's
// gamma factors; such points are evaluated at g +- 1e-6 and averaged, which
// cancels the simple-pole parts of the two offsets.
inline double tricomi_psi(double alpha, double g, double z) {
  require(alpha > 0.0, "tricomi_psi: first parameter must be positive");
  require(z > 0.0, "tricomi_psi: argument must be positive");
  if (std::abs(g - std::round(g)) < 1e-9) {
    const double d = 1e-6;
    const cdouble lo = detail::psi_dispatch(alpha, cdouble(g - d), z);
    const cdouble hi = detail::psi_dispatch(alpha, cdouble(g + d), z);
    return 0.5 * (lo.real() + hi.real());
  }
  return detail::psi_dispatch(alpha, cdouble(g), z).real();
}

}  // namespace harqir

#endif
