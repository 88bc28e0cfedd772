#ifndef HARQIR_FOXH_HPP
#define HARQIR_FOXH_HPP

// Generalized Fox-H machinery over incomplete-gamma-type kernel factors
//
//   Xi(a, alpha, A, phi; s) = A^{phi+a+alpha s-1} Psi(phi, phi+a+alpha s; A)
//
// which degenerate to gamma-function factors as A -> 0:
//
//   Xi -> Gamma(phi + a + alpha s - 1) / Gamma(phi).
//
// A function spec carries an upper and a lower parameter list split by the
// usual (m, n) orientation counts, and
//
//   H(x) = (1/(2 pi i)) Int_{c} M(s) x^{-s} ds,
//   M(s) = prod_{j<=m} Xi_dir(lower_j; s) prod_{i<=n} Xi_ref(upper_i; s)
//        / [ prod_{i>n} Xi_dir(upper_i; s) prod_{j>m} Xi_ref(lower_j; s) ].
//
// Xi_ref(a, alpha, A, phi; s) = Xi_dir(1-a, -alpha, A, phi; s).
//
// Meijer-G functions are the all-degenerate case (A = 0, phi = 1, alpha = 1).

#include <cmath>
#include <complex>
#include <vector>

#include "harqir/common.hpp"
#include "harqir/contour.hpp"
#include "harqir/specfun.hpp"

namespace harqir {

struct FoxHQuad {
  double a = 0.0;
  double alpha = 1.0;
  double A = 0.0;
  double phi = 1.0;
};

struct FoxHSpec {
  std::vector<FoxHQuad> upper, lower;
  int m = 0;  // leading lower-list factors taken in direct orientation
  int n = 0;  // leading upper-list factors taken in reflected orientation
};

// log of Xi; factors combine in log space so that the individually
// underflowing gamma magnitudes at large |Im s| cancel in ratios
inline cdouble xi_direct_log(const FoxHQuad& q, cdouble s) {
  require(q.phi > 0.0, "xi_direct: phi must be positive");
  require(q.A >= 0.0, "xi_direct: A must be non-negative");
  const cdouble g = q.phi + q.a + q.alpha * s;
  if (q.A == 0.0) return log_gamma(g - 1.0) - std::lgamma(q.phi);
  return (g - 1.0) * std::log(q.A) + std::log(tricomi_psi(q.phi, g, q.A));
}

inline cdouble xi_reflected_log(const FoxHQuad& q, cdouble s) {
  return xi_direct_log({1.0 - q.a, -q.alpha, q.A, q.phi}, s);
}

inline cdouble xi_direct(const FoxHQuad& q, cdouble s) {
  return std::exp(xi_direct_log(q, s));
}

inline cdouble xi_reflected(const FoxHQuad& q, cdouble s) {
  return std::exp(xi_reflected_log(q, s));
}

namespace detail {

inline void validate(const FoxHSpec& spec) {
  require(spec.m >= 0 && spec.m <= int(spec.lower.size()),
          "fox_h: m must index into the lower list");
  require(spec.n >= 0 && spec.n <= int(spec.upper.size()),
          "fox_h: n must index into the upper list");
  for (const auto& q : spec.lower) require(q.phi > 0.0 && q.A >= 0.0, "fox_h: bad quad");
  for (const auto& q : spec.upper) require(q.phi > 0.0 && q.A >= 0.0, "fox_h: bad quad");
}

}  // namespace detail

template <class Spec>
cdouble fox_h_kernel(const Spec& spec, cdouble s) {
  cdouble lg = 0.0;
  for (int j = 0; j < int(spec.lower.size()); ++j)
    if (j < spec.m)
      lg += xi_direct_log(spec.lower[j], s);
    else
      lg -= xi_reflected_log(spec.lower[j], s);
  for (int i = 0; i < int(spec.upper.size()); ++i)
    if (i < spec.n)
      lg += xi_reflected_log(spec.upper[i], s);
    else
      lg -= xi_direct_log(spec.upper[i], s);
  return std::exp(lg);
}

inline MellinResult fox_h(const FoxHSpec& spec, double x, const ContourSpec& contour) {
  detail::validate(spec);
  require(x > 0.0, "fox_h: argument must be positive");
  return mellin_inverse([&](cdouble s) { return fox_h_kernel(spec, s); }, x, contour);
}

// Argument-power identity:  x^rho H[spec](x) = H[shifted(spec, rho)](x) when the
// contour abscissa moves from c to c - rho.
inline FoxHSpec property_shift(FoxHSpec spec, double rho) {
  for (auto& q : spec.upper) q.a += q.alpha * rho;
  for (auto& q : spec.lower) q.a += q.alpha * rho;
  return spec;
}

// Inversion identity:  H[spec](1/x) = H[property_invert(spec)](x) when the
// contour abscissa moves from c to -c.
inline FoxHSpec property_invert(FoxHSpec spec) {
  for (auto& q : spec.upper) q.alpha = -q.alpha;
  for (auto& q : spec.lower) q.alpha = -q.alpha;
  return spec;
}

// Meijer-G via the degenerate quads; parameter lists follow the convention
//   M(s) = prod_{j<=m} Gamma(b_j+s) prod_{i<=n} Gamma(1-a_i-s)
//        / [ prod_{i>n} Gamma(a_i+s) prod_{j>m} Gamma(1-b_j-s) ],
//   G(x) = (1/(2 pi i)) Int M(s) x^{-s} ds.
inline MellinResult meijer_g(const std::vector<double>& a, const std::vector<double>& b,
                             int m, int n, double x, const ContourSpec& contour) {
  FoxHSpec spec;
  for (double ai : a) spec.upper.push_back({ai, 1.0, 0.0, 1.0});
  for (double bj : b) spec.lower.push_back({bj, 1.0, 0.0, 1.0});
  spec.m = m;
  spec.n = n;
  return fox_h(spec, x, contour);
}

}  // namespace harqir

#endif
