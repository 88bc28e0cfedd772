#pragma once

// High-SNR behavior of the outage series.  The leading term factorizes as
//
//   p_out  ~  zeta(theta) * varrho(lambda) * (C(R) * snr)^{-mK}
//
// with a power-allocation factor zeta, a correlation penalty varrho >= 1,
// and a coding/modulation gain C(R) built from the moment integral
//
//   g(phi; x) = integral of prod_k t_k^{phi_k - 1} over the region
//               prod_k (1 + t_k) <= x,
//
// which also drives the structural monotonicity and convexity checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "harqir/channel.hpp"
#include "harqir/common.hpp"
#include "harqir/contour.hpp"
#include "harqir/foxh.hpp"
#include "harqir/multiindex.hpp"
#include "harqir/outage.hpp"
#include "harqir/quadrature.hpp"
#include "harqir/specfun.hpp"

namespace harqir {

namespace detail {

inline void validate_region_phi(std::span<const int> phi) {
  require(!phi.empty(), "phi must be non-empty");
  for (int p : phi) require(p >= 1, "phi entries must be positive integers");
}

// Meijer-G route: the Mellin transform of the region indicator turns the
// moment integral into a G^{0,K+1}_{K+1,K+1} evaluation left of all poles.
inline double region_moment_meijer(std::span<const int> phi, double x,
                                   ContourSpec contour) {
  const int k = static_cast<int>(phi.size());
  std::vector<double> a(static_cast<std::size_t>(k) + 1);
  std::vector<double> b(static_cast<std::size_t>(k) + 1, 1.0);
  a[0] = 1.0;
  int max_phi = 0;
  double log_prefactor = 0.0;
  for (int j = 0; j < k; ++j) {
    a[static_cast<std::size_t>(j) + 1] = 1.0 + phi[static_cast<std::size_t>(j)];
    max_phi = std::max(max_phi, phi[static_cast<std::size_t>(j)]);
    log_prefactor += log_gamma(double(phi[static_cast<std::size_t>(j)]));
  }
  b.back() = 0.0;
  if (!std::isfinite(contour.abscissa)) contour.abscissa = -(max_phi + 0.5);
  return std::exp(log_prefactor) * meijer_g(a, b, 0, k + 1, x, contour).value;
}

}  // namespace detail

// Moment of the decoding-failure region; zero for x <= 1, increasing in x.
// One-factor and double-exponential cases use their closed forms, the rest
// goes through the Meijer-G contour.
inline double region_moment(std::span<const int> phi, double x,
                            ContourSpec contour = {}) {
  detail::validate_region_phi(phi);
  require(std::isfinite(x), "x must be finite");
  if (x <= 1.0) return 0.0;
  if (phi.size() == 1)
    return std::pow(x - 1.0, phi[0]) / phi[0];
  if (phi.size() == 2 && phi[0] == 1 && phi[1] == 1)
    return x * std::log(x) - x + 1.0;
  return std::max(0.0, detail::region_moment_meijer(phi, x, contour));
}

// Direct nested-quadrature evaluation of the same region integral,
// integrating out one variable per recursion level.  Reference only.
inline double region_moment_oracle(std::span<const int> phi, double x) {
  detail::validate_region_phi(phi);
  require(phi.size() <= 4, "oracle is limited to four factors");
  if (x <= 1.0) return 0.0;
  if (phi.size() == 1) return std::pow(x - 1.0, phi[0]) / phi[0];
  const auto head = phi.subspan(0, phi.size() - 1);
  const int last = phi.back();
  return integrate_adaptive(
      [&](double t) {
        return std::pow(t, last - 1) * region_moment_oracle(head, x / (1.0 + t));
      },
      0.0, x - 1.0, 1e-14, 1e-10);
}

// d/dR of region_moment(phi, 2^R): contour form with kernel
// prod_k Gamma(s - phi_k) / Gamma(s), scaled by ln 2 * prod Gamma(phi_k).
inline double region_moment_rate_derivative(std::span<const int> phi,
                                            double rate,
                                            ContourSpec contour = {}) {
  detail::validate_region_phi(phi);
  require(rate > 0.0, "rate must be positive");
  const double x = std::exp2(rate);
  if (phi.size() == 1)
    return std::log(2.0) * x * std::pow(x - 1.0, phi[0] - 1);
  if (phi.size() == 2 && phi[0] == 1 && phi[1] == 1)
    return std::log(2.0) * x * std::log(x);
  int max_phi = 0;
  double log_prefactor = 0.0;
  for (int p : phi) {
    max_phi = std::max(max_phi, p);
    log_prefactor += log_gamma(double(p));
  }
  if (!std::isfinite(contour.abscissa)) contour.abscissa = max_phi + 0.5;
  const auto kernel = [&](cdouble s) {
    cdouble log_k = 0.0;
    for (int p : phi) log_k += log_gamma(s - double(p)) - log_gamma(s);
    return std::exp(log_k);
  };
  const auto r = mellin_inverse(kernel, 1.0 / x, contour);
  return std::log(2.0) * std::exp(log_prefactor) * r.value;
}

// ---------------------------------------------------------------------------
// Factorized asymptote
// ---------------------------------------------------------------------------

struct CorrelationFactor {
  double ell = 1.0;     // (1+S) prod (1-lambda^2), in (0, 1]
  double varrho = 1.0;  // ell^{-m}, >= 1
};

inline CorrelationFactor correlation_factor(std::span<const double> lambda,
                                            int shape) {
  require(!lambda.empty(), "lambda must be non-empty");
  require(shape >= 1, "shape must be a positive integer");
  double s = 0.0, log_prod = 0.0;
  for (double l : lambda) {
    require(l >= 0.0 && l < 1.0, "lambda must lie in [0, 1)");
    s += l * l / (1.0 - l * l);
    log_prod += std::log1p(-l * l);
  }
  CorrelationFactor f;
  f.ell = std::exp(std::log1p(s) + log_prod);
  f.varrho = std::exp(-shape * (std::log1p(s) + log_prod));
  return f;
}

inline double coding_modulation_gain(double rate, int shape, int rounds,
                                     ContourSpec contour = {}) {
  require(rate > 0.0, "rate must be positive");
  require(shape >= 1 && rounds >= 1, "shape and rounds must be positive");
  const std::vector<int> phi(static_cast<std::size_t>(rounds), shape);
  const double g0 = region_moment(phi, std::exp2(rate), contour);
  return std::pow(g0, -1.0 / (double(shape) * rounds));
}

struct AsymptoticBreakdown {
  double zeta = 0.0;         // power-allocation impact factor
  double varrho = 1.0;       // time-correlation impact factor
  double coding_gain = 0.0;  // C(R)
  double diversity = 0.0;    // m K
  double value = 0.0;        // zeta * varrho * (C snr)^{-mK}
  bool regime_warning = false;  // asymptote above 0.1, outside its regime
};

// Leading-order outage as the snr grows, assembled from the factorization.
inline AsymptoticBreakdown asymptotic_outage(const HarqConfig& cfg,
                                             ContourSpec contour = {}) {
  cfg.validate();
  require(cfg.rate > 0.0, "rate must be positive");
  const double m = cfg.shape;
  AsymptoticBreakdown out;
  double log_zeta = 0.0;
  for (int k = 0; k < cfg.rounds; ++k)
    log_zeta += m * std::log(m / (cfg.theta[static_cast<std::size_t>(k)] *
                                  cfg.sigma2[static_cast<std::size_t>(k)])) -
                log_gamma(m);
  out.zeta = std::exp(log_zeta);
  out.varrho = correlation_factor(cfg.lambda, cfg.shape).varrho;
  out.coding_gain = coding_modulation_gain(cfg.rate, cfg.shape, cfg.rounds, contour);
  out.diversity = m * cfg.rounds;
  out.value = out.zeta * out.varrho *
              std::exp(-out.diversity * std::log(out.coding_gain * cfg.snr));
  out.regime_warning = out.value > 0.1;
  return out;
}

// Same quantity assembled without the factorization: the order-zero series
// weight times the moment integral and the per-round scale constants.
inline double asymptotic_outage_direct(const HarqConfig& cfg,
                                       ContourSpec contour = {}) {
  cfg.validate();
  require(cfg.rate > 0.0, "rate must be positive");
  const double m = cfg.shape;
  double s = 0.0;
  for (double l : cfg.lambda) s += l * l / (1.0 - l * l);
  double log_value = -m * std::log1p(s) - m * cfg.rounds * std::log(cfg.snr);
  for (int k = 0; k < cfg.rounds; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    const double l = cfg.lambda[ks];
    log_value +=
        m * std::log(m / (cfg.theta[ks] * cfg.sigma2[ks] * (1.0 - l * l))) -
        log_gamma(m);
  }
  const std::vector<int> phi(static_cast<std::size_t>(cfg.rounds), cfg.shape);
  return std::exp(log_value) *
         region_moment(phi, std::exp2(cfg.rate), contour);
}

struct QuasiStaticAsymptotic {
  double zeta = 0.0;
  double coding_gain = 0.0;
  double diversity = 0.0;  // equals the shape; no time diversity remains
};

inline QuasiStaticAsymptotic quasi_static_asymptotic(int shape, int rounds,
                                                     double theta,
                                                     double sigma2,
                                                     double rate) {
  require(shape >= 1 && rounds >= 1, "shape and rounds must be positive");
  require(theta > 0.0 && sigma2 > 0.0, "theta and sigma2 must be positive");
  require(rate > 0.0, "rate must be positive");
  const double m = shape;
  QuasiStaticAsymptotic out;
  out.zeta = std::pow(m / (theta * sigma2), m);
  out.coding_gain = std::exp(log_gamma(m + 1.0) / m) /
                    (std::exp2(rate / rounds) - 1.0);
  out.diversity = m;
  return out;
}

inline double quasi_static_asymptotic_value(const QuasiStaticAsymptotic& a,
                                            double snr) {
  require(snr > 0.0, "snr must be positive");
  return a.zeta * std::exp(-a.diversity * std::log(a.coding_gain * snr));
}

// Finite-difference log-log slope of an outage evaluator between two SNRs.
template <class Evaluator>
double diversity_order_estimate(Evaluator&& outage_of_snr, double snr_low,
                                double snr_high) {
  require(snr_low > 0.0 && snr_high > snr_low,
          "need 0 < snr_low < snr_high");
  const double p_low = outage_of_snr(snr_low);
  const double p_high = outage_of_snr(snr_high);
  require(p_low > 0.0 && p_high > 0.0,
          "outage must stay positive across the window");
  return -(std::log(p_high) - std::log(p_low)) /
         (std::log(snr_high) - std::log(snr_low));
}

// ---------------------------------------------------------------------------
// Structural checks
// ---------------------------------------------------------------------------

// Componentwise-larger correlation can only shrink ell and grow varrho.
struct CorrelationOrderWitness {
  bool comparable = false;  // lambda1 <= lambda2 componentwise
  bool pass = false;
  double ell1 = 0.0, ell2 = 0.0;
  double varrho1 = 0.0, varrho2 = 0.0;
};

inline CorrelationOrderWitness correlation_order_check(
    std::span<const double> lambda1, std::span<const double> lambda2,
    int shape) {
  require(lambda1.size() == lambda2.size() && !lambda1.empty(),
          "correlation vectors must be non-empty and equally sized");
  CorrelationOrderWitness w;
  w.comparable = true;
  for (std::size_t k = 0; k < lambda1.size(); ++k)
    if (lambda1[k] > lambda2[k]) w.comparable = false;
  const auto f1 = correlation_factor(lambda1, shape);
  const auto f2 = correlation_factor(lambda2, shape);
  w.ell1 = f1.ell;
  w.ell2 = f2.ell;
  w.varrho1 = f1.varrho;
  w.varrho2 = f2.varrho;
  w.pass = w.comparable && w.ell1 >= w.ell2 - 1e-14 &&
           w.varrho1 <= w.varrho2 + 1e-14 * w.varrho2;
  return w;
}

// Monotonicity and discrete convexity of R -> g(phi; 2^R) on a grid, plus
// the derivative recurrence
//
//   g''_phi = ln2 (phi_1 - 1) g'_{phi - e_1} + ln2 phi_1 g'_phi
//
// verified at interior points against a central difference of g'.
struct RateConvexityReport {
  std::vector<double> rates;
  std::vector<double> values;  // g(phi; 2^R)
  bool monotone = false;
  bool convex = false;
  std::vector<double> recurrence_residuals;
  double max_residual = 0.0;
  double tolerance = 1e-4;
  bool pass = false;
};

inline RateConvexityReport rate_convexity_check(int shape, int rounds,
                                                std::span<const double> rates,
                                                ContourSpec contour = {},
                                                int recurrence_points = 10,
                                                double tolerance = 1e-4) {
  require(shape >= 1 && rounds >= 1, "shape and rounds must be positive");
  require(rates.size() >= 3, "need at least three grid points");
  RateConvexityReport rep;
  rep.tolerance = tolerance;
  rep.rates.assign(rates.begin(), rates.end());
  std::vector<int> phi(static_cast<std::size_t>(rounds), shape);
  for (std::size_t i = 0; i < rates.size(); ++i) {
    require(rates[i] > 0.0, "rates must be positive");
    if (i > 0) require(rates[i] > rates[i - 1], "rates must be increasing");
    rep.values.push_back(region_moment(phi, std::exp2(rates[i]), contour));
  }
  rep.monotone = true;
  for (std::size_t i = 1; i < rep.values.size(); ++i)
    if (rep.values[i] < rep.values[i - 1] - 1e-12 * rep.values[i])
      rep.monotone = false;
  rep.convex = true;
  for (std::size_t i = 1; i + 1 < rep.values.size(); ++i) {
    const double left = (rep.values[i] - rep.values[i - 1]) /
                        (rep.rates[i] - rep.rates[i - 1]);
    const double right = (rep.values[i + 1] - rep.values[i]) /
                         (rep.rates[i + 1] - rep.rates[i]);
    if (right < left - 1e-9 * std::abs(right)) rep.convex = false;
  }

  // Recurrence check: needs phi_1 >= 2, so bump the first entry for
  // shape-1 configurations.
  std::vector<int> phi_hi = phi;
  if (phi_hi[0] < 2) phi_hi[0] = 2;
  std::vector<int> phi_lo = phi_hi;
  phi_lo[0] -= 1;
  const double theta = std::log(2.0);
  const int inner = static_cast<int>(rates.size()) - 2;
  const int checks = std::min(recurrence_points, inner);
  for (int j = 0; j < checks; ++j) {
    const std::size_t i =
        1 + static_cast<std::size_t>((inner - 1) * double(j) /
                                     std::max(1, checks - 1));
    const double r = rep.rates[i];
    const double h = 1e-3;
    const double d_plus = region_moment_rate_derivative(phi_hi, r + h, contour);
    const double d_minus = region_moment_rate_derivative(phi_hi, r - h, contour);
    const double second = (d_plus - d_minus) / (2.0 * h);
    const double rhs =
        theta * (phi_hi[0] - 1) * region_moment_rate_derivative(phi_lo, r, contour) +
        theta * phi_hi[0] * region_moment_rate_derivative(phi_hi, r, contour);
    const double resid = std::abs(second - rhs) / std::max(1e-300, std::abs(rhs));
    rep.recurrence_residuals.push_back(resid);
    rep.max_residual = std::max(rep.max_residual, resid);
  }
  rep.pass = rep.monotone && rep.convex && rep.max_residual <= tolerance;
  return rep;
}

}  // namespace harqir
