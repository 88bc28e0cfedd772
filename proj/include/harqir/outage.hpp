#pragma once

// Exact outage probability of HARQ-IR over the correlated channel of
// channel.hpp.  Conditioning on the shared anchor makes the per-round SNRs
// independent, which turns the outage probability into a series
//
//   p_out = sum over multi-indices ell of  W_ell * F_{A(ell)}(2^R)
//
// where W_ell are negative-multinomial weights built from the correlation
// coefficients and F_{A(ell)} is the CDF of a product of shifted Gamma
// variables, evaluated as a Mellin-Barnes integral with Tricomi-Psi
// factors.  The series is truncated at a total order N with a computable
// tail bound, which also drives minimal-order selection.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <utility>
#include <vector>

#include "harqir/channel.hpp"
#include "harqir/common.hpp"
#include "harqir/contour.hpp"
#include "harqir/foxh.hpp"
#include "harqir/multiindex.hpp"
#include "harqir/rng.hpp"
#include "harqir/specfun.hpp"

namespace harqir {

enum class OutageMethod { truncated_series, asymptotic, quasi_static, monte_carlo };

struct OutageResult {
  double value = 0.0;
  OutageMethod method = OutageMethod::truncated_series;
  std::optional<int> truncation_order;
  std::optional<double> error_bound;
  std::uint64_t terms_evaluated = 0;
};

struct TruncationBound {
  double value = 0.0;     // the tail bound itself
  double tail_mass = 0.0; // weight of all multi-indices beyond order N
  double cdf_max = 1.0;   // largest CDF term on the (N+1)-shell
  bool cdf_max_capped = false;  // true when the shell was too large to scan
                                // and cdf_max fell back to 1
};

// ---------------------------------------------------------------------------
// CDF of a product of shifted Gamma variables
// ---------------------------------------------------------------------------

// Mellin-Barnes spec for the CDF at x of prod_k (1 + R_k) with independent
// R_k ~ Gamma(phi_k, omega_k).  The kernel of the resulting H-function is
//
//   (1/s) * prod_k omega_k^{-phi_k} Psi(phi_k, phi_k + 1 - s; 1/omega_k)
//
// against x^{+s}, which the x^{-s} engine sees as argument prod(omega)/x.
inline FoxHSpec shifted_gamma_product_cdf_spec(std::span<const double> omega,
                                               std::span<const int> phi) {
  FoxHSpec spec;
  for (std::size_t k = 0; k < omega.size(); ++k)
    spec.lower.push_back({1.0, -1.0, 1.0 / omega[k], double(phi[k])});
  spec.lower.push_back({0.0, 1.0, 0.0, 1.0});
  spec.upper.push_back({1.0, 1.0, 0.0, 1.0});
  spec.m = static_cast<int>(spec.lower.size());
  spec.n = 0;
  return spec;
}

inline double shifted_gamma_product_cdf(std::span<const double> omega,
                                        std::span<const int> phi, double x,
                                        ContourSpec contour = {}) {
  require(!omega.empty() && omega.size() == phi.size(),
          "omega and phi must be non-empty and equally sized");
  int max_phi = 0;
  for (std::size_t k = 0; k < omega.size(); ++k) {
    require(omega[k] > 0.0 && std::isfinite(omega[k]), "omega must be positive");
    require(phi[k] >= 1, "phi must be a positive integer");
    max_phi = std::max(max_phi, phi[k]);
  }
  require(std::isfinite(x), "x must be finite");
  if (x <= 1.0) return 0.0;
  if (omega.size() == 1)
    return regularized_lower_gamma(double(phi[0]), (x - 1.0) / omega[0]);

  double log_scale = 0.0;
  for (double o : omega) log_scale += std::log(o);
  const auto spec = shifted_gamma_product_cdf_spec(omega, phi);
  const double log_x = std::log(x);

  const auto evaluate = [&](double abscissa, double shift) {
    ContourSpec cs = contour;
    cs.abscissa = abscissa;
    const double v = shift + fox_h(spec, std::exp(log_scale - log_x), cs).value;
    return std::clamp(v, 0.0, 1.0);
  };
  if (std::isfinite(contour.abscissa))
    return evaluate(contour.abscissa, contour.abscissa < 0.0 ? 1.0 : 0.0);

  // Two analytic bounds settle the far tails before any contour runs.
  //
  // Upper tail: the product exceeds x only if some factor exceeds x^{1/K},
  // and since log(1+t) <= t the log-sum constraint also forces
  // sum_k gamma_k > log x, which Gamma tails with every scale raised to the
  // largest one dominate.  Either way 1 - F(x) is below a computable bound.
  const double per_factor = std::expm1(log_x / double(omega.size()));
  double omega_max = 0.0;
  double phi_total = 0.0;
  double upper_union = 0.0;
  for (std::size_t k = 0; k < omega.size(); ++k) {
    omega_max = std::max(omega_max, omega[k]);
    phi_total += double(phi[k]);
    upper_union += regularized_upper_gamma(double(phi[k]), per_factor / omega[k]);
  }
  const double upper_sum = regularized_upper_gamma(phi_total, log_x / omega_max);
  if (std::min(upper_union, upper_sum) <= 1e-12) return 1.0;

  // Lower tail: the product stays below x only if every factor does, and
  // stays below x whenever every factor stays below x^{1/K}, so
  //
  //   prod_k P(phi_k, (x^{1/K} - 1) / omega_k)
  //     <= F(x) <= prod_k P(phi_k, (x - 1) / omega_k).
  double log_f_upper = 0.0;
  double log_f_lower = 0.0;
  for (std::size_t k = 0; k < omega.size(); ++k) {
    log_f_upper += std::log(
        regularized_lower_gamma(double(phi[k]), (x - 1.0) / omega[k]));
    log_f_lower += std::log(
        regularized_lower_gamma(double(phi[k]), per_factor / omega[k]));
  }
  if (log_f_upper <= -691.0) return 0.0;  // below 1e-300

  // When F is small the contour right of all kernel poles tracks the value
  // scale and converges fast.  When F is provably not small, crossing the
  // s = 0 pole (residue 1, since Psi(phi, phi+1; z) = z^{-phi}) and
  // evaluating the O(1) complement is better conditioned: the convergence
  // target turns absolute, which kernels of small total shape can still
  // meet near the scale boundary where little oscillation assists them.
  // Should the preferred side run out of nodes, the other is the retry.
  const bool complement_first = log_f_lower >= std::log(1e-4);
  const double direct_abscissa = max_phi + 0.5;
  try {
    return complement_first ? evaluate(-0.5, 1.0)
                            : evaluate(direct_abscissa, 0.0);
  } catch (const convergence_error&) {
    return complement_first ? evaluate(direct_abscissa, 0.0)
                            : evaluate(-0.5, 1.0);
  }
}

// Plain Monte-Carlo estimate of the same CDF, used as an oracle.
inline McEstimate shifted_gamma_product_cdf_mc(std::span<const double> omega,
                                               std::span<const int> phi,
                                               double x, std::int64_t samples,
                                               std::uint64_t seed,
                                               int threads = 1) {
  require(!omega.empty() && omega.size() == phi.size(),
          "omega and phi must be non-empty and equally sized");
  require(samples > 0, "samples must be positive");
  const counter_rng rng(seed);
  const double log_x = std::log(x);
  std::vector<std::int64_t> hits(256, 0);
  detail::run_partitioned(
      samples, threads,
      [&](std::int64_t first, std::int64_t last, int worker) {
        std::int64_t local = 0;
        for (std::int64_t i = first; i < last; ++i) {
          double log_prod = 0.0;
          for (std::size_t k = 0; k < omega.size(); ++k) {
            const double r = rng.gamma_integer(
                phi[k], omega[k], static_cast<std::uint64_t>(i),
                static_cast<std::uint32_t>(k) * 256u);
            log_prod += std::log1p(r);
          }
          if (log_prod <= log_x) ++local;
        }
        hits[static_cast<std::size_t>(worker)] = local;
      });
  std::int64_t total = 0;
  for (std::int64_t h : hits) total += h;
  return detail::binomial_estimate(total, samples);
}

// ---------------------------------------------------------------------------
// Negative-multinomial weights
// ---------------------------------------------------------------------------

// Per-round success parameters w_k = (lambda_k^2/(1-lambda_k^2)) / (1+S)
// with S = sum lambda^2/(1-lambda^2).
inline std::vector<double> anchor_weights(const HarqConfig& cfg) {
  cfg.validate();
  double s = 0.0;
  for (double l : cfg.lambda) s += l * l / (1.0 - l * l);
  std::vector<double> w(cfg.lambda.size());
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double l = cfg.lambda[k];
    w[k] = (l * l / (1.0 - l * l)) / (1.0 + s);
  }
  return w;
}

struct WeightTable {
  std::vector<double> w;
  double w_sum = 0.0;
  int shape = 1;
  int max_order = -1;
  std::map<std::vector<int>, double> weights;
};

// W_ell of the NM(m, w) law; computed in log space.
inline double multi_index_weight(const HarqConfig& cfg,
                                 const MultiIndex& index) {
  cfg.validate();
  require(index.entries.size() == static_cast<std::size_t>(cfg.rounds),
          "multi-index size must match the number of rounds");
  const auto w = anchor_weights(cfg);
  double s = 0.0;
  for (double l : cfg.lambda) s += l * l / (1.0 - l * l);
  const int n = index.order();
  double logw = log_gamma(double(cfg.shape + n)) -
                log_gamma(double(cfg.shape)) - cfg.shape * std::log1p(s);
  for (std::size_t k = 0; k < w.size(); ++k) {
    const int e = index.entries[k];
    require(e >= 0, "multi-index entries must be non-negative");
    if (e == 0) continue;
    if (w[k] == 0.0) return 0.0;
    logw += e * std::log(w[k]) - log_gamma(double(e + 1));
  }
  return std::exp(logw);
}

inline WeightTable build_weight_table(const HarqConfig& cfg, int max_order) {
  require(max_order >= 0, "max_order must be non-negative");
  WeightTable table;
  table.w = anchor_weights(cfg);
  for (double wk : table.w) table.w_sum += wk;
  table.shape = cfg.shape;
  table.max_order = max_order;
  for (int n = 0; n <= max_order; ++n)
    for_each_shell(cfg.rounds, n, [&](const std::vector<int>& ell) {
      table.weights.emplace(ell, multi_index_weight(cfg, MultiIndex{ell}));
    });
  return table;
}

// ---------------------------------------------------------------------------
// Truncated series evaluator
// ---------------------------------------------------------------------------

class OutageEvaluator {
 public:
  explicit OutageEvaluator(HarqConfig cfg, ContourSpec contour = {},
                           std::uint64_t term_cap = 1000000)
      : cfg_(std::move(cfg)), contour_(contour), term_cap_(term_cap) {
    cfg_.validate();
    threshold_ = std::exp2(cfg_.rate);
    omega_.resize(static_cast<std::size_t>(cfg_.rounds));
    for (int k = 0; k < cfg_.rounds; ++k)
      omega_[static_cast<std::size_t>(k)] = cfg_.residual_scale(k);
    w_ = anchor_weights(cfg_);
    for (std::size_t k = 0; k < w_.size(); ++k) {
      s_ += cfg_.lambda[k] * cfg_.lambda[k] / (1.0 - cfg_.lambda[k] * cfg_.lambda[k]);
      w_sum_ += w_[k];
    }
    log_gamma_shape_ = log_gamma(double(cfg_.shape));
  }

  const HarqConfig& config() const { return cfg_; }
  double threshold() const { return threshold_; }
  const std::vector<double>& anchor_weight() const { return w_; }
  double anchor_weight_sum() const { return w_sum_; }

  double weight(const std::vector<int>& ell) const {
    int n = 0;
    for (int e : ell) n += e;
    double logw = log_gamma(double(cfg_.shape + n)) - log_gamma_shape_ -
                  cfg_.shape * std::log1p(s_);
    for (std::size_t k = 0; k < ell.size(); ++k) {
      if (ell[k] == 0) continue;
      if (w_[k] == 0.0) return 0.0;
      logw += ell[k] * std::log(w_[k]) - log_gamma(double(ell[k] + 1));
    }
    return std::exp(logw);
  }

  // Total weight of the order-n shell, from the negative-binomial marginal.
  double shell_weight_mass(int n) const {
    if (n == 0) return std::exp(-cfg_.shape * std::log1p(s_));
    if (w_sum_ == 0.0) return 0.0;
    return std::exp(log_gamma(double(cfg_.shape + n)) - log_gamma_shape_ -
                    log_gamma(double(n + 1)) + n * std::log(w_sum_) -
                    cfg_.shape * std::log1p(s_));
  }

  // Total weight beyond order N.  Using the Euler transform of the tail's
  // Gauss series keeps the 2F1 a terminating polynomial (first argument
  // 1 - m), valid arbitrarily close to w_sum = 1; the (1+S)^{-m} factor
  // of W_0 cancels against (1 - w_sum)^{-m} exactly.
  double weight_tail(int order) const {
    if (w_sum_ == 0.0) return 0.0;
    const int n1 = order + 1;
    const double head =
        std::exp(log_gamma(double(cfg_.shape + n1)) - log_gamma_shape_ -
                 log_gamma(double(n1 + 1)) + n1 * std::log(w_sum_));
    return head * hyp_2f1(1.0 - cfg_.shape, double(n1), double(n1 + 1), w_sum_);
  }

  // F_{A(ell)}(2^R), memoized across calls.  The CDF is symmetric under
  // permutations of the (omega_k, phi_k) pairs, so the cache key is the
  // sorted pair multiset; equicorrelated configurations collapse whole
  // shells onto a handful of distinct evaluations.
  double cdf_term(const std::vector<int>& ell) {
    std::vector<std::pair<double, int>> key(ell.size());
    for (std::size_t k = 0; k < ell.size(); ++k)
      key[k] = {omega_[k], cfg_.shape + ell[k]};
    std::sort(key.begin(), key.end());
    const auto it = cdf_memo_.find(key);
    if (it != cdf_memo_.end()) return it->second;
    std::vector<double> omega(key.size());
    std::vector<int> phi(key.size());
    for (std::size_t k = 0; k < key.size(); ++k) {
      omega[k] = key[k].first;
      phi[k] = key[k].second;
    }
    const double v = shifted_gamma_product_cdf(omega, phi, threshold_, contour_);
    cdf_memo_.emplace(std::move(key), v);
    return v;
  }

  std::size_t distinct_cdf_evaluations() const { return cdf_memo_.size(); }

  // Largest CDF term on the order-n shell.
  double cdf_max_on_shell(int n) {
    double best = 0.0;
    for_each_shell(cfg_.rounds, n, [&](const std::vector<int>& ell) {
      best = std::max(best, cdf_term(ell));
    });
    return best;
  }

  TruncationBound bound(int order) {
    require(order >= 0, "truncation order must be non-negative");
    TruncationBound b;
    b.tail_mass = weight_tail(order);
    if (b.tail_mass == 0.0) return b;
    b.cdf_max_capped = frontier_size(cfg_.rounds, order) > kShellScanCap;
    if (!b.cdf_max_capped) b.cdf_max = cdf_max_on_shell(order + 1);
    b.value = b.tail_mass * b.cdf_max;
    return b;
  }

  OutageResult truncated(int order) {
    require(order >= 0, "truncation order must be non-negative");
    if (frontier_size(cfg_.rounds, order) > term_cap_)
      throw truncation_cap_error("truncated series would evaluate " +
                                 std::to_string(frontier_size(cfg_.rounds, order)) +
                                 " terms, above the cap of " +
                                 std::to_string(term_cap_));
    compensated_sum acc;
    std::uint64_t terms = 0;
    for (int n = 0; n <= order; ++n)
      for_each_shell(cfg_.rounds, n, [&](const std::vector<int>& ell) {
        ++terms;
        const double wl = weight(ell);
        if (wl > 0.0) acc.add(wl * cdf_term(ell));
      });
    OutageResult r;
    r.value = std::clamp(acc.value(), 0.0, 1.0);
    r.method = OutageMethod::truncated_series;
    r.truncation_order = order;
    r.error_bound = bound(order).value;
    r.terms_evaluated = terms;
    return r;
  }

  // Smallest N with bound(N) <= epsilon; scans upward so the previous
  // order is known to violate the target.
  int min_order(double epsilon, int cap = 64) {
    require(epsilon > 0.0, "epsilon must be positive");
    require(cap >= 0, "cap must be non-negative");
    double last = 1.0;
    for (int n = 0; n <= cap; ++n) {
      if (weight_tail(n) <= epsilon) return n;  // bound is at most the tail mass
      last = bound(n).value;
      if (last <= epsilon) return n;
    }
    throw truncation_cap_error(
        "minimal truncation order exceeds the cap of " + std::to_string(cap) +
        " (bound there is " + std::to_string(last) + ")");
  }

  // Default policy: aim for a 1e-8 tail, but never spend more than order 12
  // unless asked explicitly; the reported error bound stays honest.
  OutageResult evaluate(double epsilon = 1e-8, int cap = 12) {
    int order = cap;
    try {
      order = min_order(epsilon, cap);
    } catch (const truncation_cap_error&) {
      order = cap;
    }
    return truncated(order);
  }

  // Per-term dump: multi-index, weight, CDF factor, product.
  void write_term_diagnostics(std::ostream& os, int order) {
    os << "# entries are \"l1 l2 ... lK\",weight,cdf,term\n";
    char buf[64];
    for (int n = 0; n <= order; ++n)
      for_each_shell(cfg_.rounds, n, [&](const std::vector<int>& ell) {
        os << '"';
        for (std::size_t k = 0; k < ell.size(); ++k) {
          if (k) os << ' ';
          os << ell[k];
        }
        os << '"';
        const double wl = weight(ell);
        const double f = cdf_term(ell);
        std::snprintf(buf, sizeof buf, ",%.12g", wl);
        os << buf;
        std::snprintf(buf, sizeof buf, ",%.12g", f);
        os << buf;
        std::snprintf(buf, sizeof buf, ",%.12g\n", wl * f);
        os << buf;
      });
  }

  static constexpr std::uint64_t kShellScanCap = 100000;

 private:
  HarqConfig cfg_;
  ContourSpec contour_;
  std::uint64_t term_cap_;
  double threshold_ = 1.0;
  std::vector<double> omega_;
  std::vector<double> w_;
  double s_ = 0.0;
  double w_sum_ = 0.0;
  double log_gamma_shape_ = 0.0;
  std::map<std::vector<std::pair<double, int>>, double> cdf_memo_;
};

// ---------------------------------------------------------------------------
// Free-function entry points
// ---------------------------------------------------------------------------

inline OutageResult outage_truncated(const HarqConfig& cfg, int order,
                                     const ContourSpec& contour = {}) {
  OutageEvaluator eval(cfg, contour);
  return eval.truncated(order);
}

inline double truncation_bound(const HarqConfig& cfg, int order,
                               const ContourSpec& contour = {}) {
  OutageEvaluator eval(cfg, contour);
  return eval.bound(order).value;
}

inline int min_truncation_order(const HarqConfig& cfg, double epsilon,
                                const ContourSpec& contour = {}, int cap = 64) {
  OutageEvaluator eval(cfg, contour);
  return eval.min_order(epsilon, cap);
}

inline OutageResult outage(const HarqConfig& cfg,
                           const ContourSpec& contour = {},
                           double epsilon = 1e-8, int cap = 12) {
  OutageEvaluator eval(cfg, contour);
  return eval.evaluate(epsilon, cap);
}

// Closed form for the channel that keeps one realization for all rounds
// with a common power weight:  p = P(m, m (2^{R/K} - 1) / (snr theta sigma2)).
inline OutageResult outage_quasi_static(const HarqConfig& cfg) {
  cfg.validate();
  for (double t : cfg.theta)
    require(t == cfg.theta[0],
            "quasi-static closed form requires equal power weights");
  for (double s : cfg.sigma2)
    require(s == cfg.sigma2[0],
            "quasi-static closed form requires equal sigma2 across rounds");
  const double m = cfg.shape;
  const double arg = m * (std::exp2(cfg.rate / cfg.rounds) - 1.0) /
                     (cfg.snr * cfg.theta[0] * cfg.sigma2[0]);
  OutageResult r;
  r.value = arg == 0.0 ? 0.0 : regularized_lower_gamma(m, arg);
  r.method = OutageMethod::quasi_static;
  r.terms_evaluated = 1;
  return r;
}

// Config restricted to the first `rounds` transmissions.
inline HarqConfig prefix_config(const HarqConfig& cfg, int rounds) {
  require(rounds >= 1 && rounds <= cfg.rounds, "prefix length out of range");
  HarqConfig p = cfg;
  p.rounds = rounds;
  const auto n = static_cast<std::size_t>(rounds);
  p.lambda.assign(cfg.lambda.begin(), cfg.lambda.begin() + n);
  p.sigma2.assign(cfg.sigma2.begin(), cfg.sigma2.begin() + n);
  p.theta.assign(cfg.theta.begin(), cfg.theta.begin() + n);
  return p;
}

// Outage probabilities after 0, 1, ..., K rounds (entry 0 is 1).
inline std::vector<double> outage_prefix_sequence(const HarqConfig& cfg,
                                                  const ContourSpec& contour = {},
                                                  double epsilon = 1e-8,
                                                  int cap = 12) {
  cfg.validate();
  std::vector<double> p(static_cast<std::size_t>(cfg.rounds) + 1, 1.0);
  for (int k = 1; k <= cfg.rounds; ++k) {
    OutageEvaluator eval(prefix_config(cfg, k), contour);
    p[static_cast<std::size_t>(k)] = eval.evaluate(epsilon, cap).value;
  }
  return p;
}

}  // namespace harqir
