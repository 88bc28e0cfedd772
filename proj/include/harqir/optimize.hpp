#pragma once

// Energy-constrained power allocation and constrained rate selection.
//
// Power: minimize the final outage subject to the average-energy budget
// sum_k P_k p_out,k-1 <= P_given with p_out,0 = 1 (later rounds only spend
// energy when the earlier ones failed).  The inner problem with frozen
// prefix outages has the closed solution P_k = P_given / (K q_{k-1}); the
// outer loop re-evaluates the prefix outages and repeats.
//
// Rate: maximize the long-term average throughput
// T = R (1 - p_out,K) / sum_{k<K} p_out,k subject to p_out,K <= epsilon,
// via Dinkelbach iterations on the fractional objective.
//
// Both optimizers carry a grid-search certificate: the relative amount by
// which an exhaustive grid over the same feasible parameterization improves
// on the returned point (negative when the optimizer wins).

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "harqir/asymptotic.hpp"
#include "harqir/channel.hpp"
#include "harqir/common.hpp"
#include "harqir/contour.hpp"
#include "harqir/outage.hpp"

namespace harqir {

enum class OutageBackend { truncated, asymptotic };

struct OptimResult {
  std::vector<double> argopt;   // allocation, or a single rate entry
  double objective = 0.0;       // outage or throughput at the optimum
  int iterations = 0;
  bool converged = false;
  std::optional<double> certificate_gap;
  double feasibility_slack = 0.0;  // constraint margin, >= -1e-9 required
};

struct PowerProblem {
  HarqConfig model;  // theta entries are replaced by candidate allocations
  double p_given = 1.0;
  OutageBackend evaluator = OutageBackend::truncated;
  ContourSpec contour = {};

  void validate() const {
    model.validate();
    require(p_given > 0.0 && std::isfinite(p_given),
            "p_given must be positive");
    require(model.rate > 0.0, "rate must be positive");
  }
};

struct RateProblem {
  HarqConfig model;  // rate entry is replaced by candidate rates
  double epsilon = 0.1;
  OutageBackend evaluator = OutageBackend::truncated;
  ContourSpec contour = {};

  void validate() const {
    model.validate();
    require(epsilon > 0.0 && epsilon <= 1.0, "epsilon must lie in (0, 1]");
  }
};

// Long-term average throughput from an outage sequence p_out,0..K.
inline double ltat(double rate, std::span<const double> outage_sequence) {
  require(rate >= 0.0 && std::isfinite(rate), "rate must be non-negative");
  require(outage_sequence.size() >= 2, "need p_out,0..K with K >= 1");
  require(outage_sequence.front() == 1.0, "sequence must start at 1");
  double denom = 0.0;
  for (std::size_t k = 0; k + 1 < outage_sequence.size(); ++k) {
    const double p = outage_sequence[k];
    require(p >= 0.0 && p <= 1.0, "outage entries must lie in [0, 1]");
    if (k > 0)
      require(p <= outage_sequence[k - 1] + 1e-12,
              "sequence must be nonincreasing");
    denom += p;
  }
  const double last = outage_sequence.back();
  require(last >= 0.0 && last <= 1.0, "outage entries must lie in [0, 1]");
  require(last <= outage_sequence[outage_sequence.size() - 2] + 1e-12,
          "sequence must be nonincreasing");
  return rate * (1.0 - last) / denom;
}

namespace detail {

struct ScalarMax {
  double x = 0.0;
  double value = -std::numeric_limits<double>::infinity();
};

// Coarse scan to localize the bracket, then golden-section refinement.
template <class F>
ScalarMax maximize_scalar(F&& f, double lo, double hi, int scan_points,
                          double x_tol) {
  ScalarMax best;
  const int n = std::max(4, scan_points);
  int best_i = 0;
  for (int i = 0; i < n; ++i) {
    const double x = lo + (hi - lo) * i / (n - 1);
    const double v = f(x);
    if (v > best.value) {
      best = {x, v};
      best_i = i;
    }
  }
  double a = lo + (hi - lo) * std::max(0, best_i - 1) / (n - 1);
  double b = lo + (hi - lo) * std::min(n - 1, best_i + 1) / (n - 1);
  const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - ratio * (b - a);
  double x2 = a + ratio * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  for (int it = 0; it < 200 && (b - a) > x_tol; ++it) {
    if (f1 >= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - ratio * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + ratio * (b - a);
      f2 = f(x2);
    }
    if (f1 > best.value) best = {x1, f1};
    if (f2 > best.value) best = {x2, f2};
  }
  return best;
}

// Truncated-series outage refined until the tail bound is small relative
// to the value itself.  A coarse pass locates the scale, the refined pass
// reuses the evaluator so already computed series entries are kept.  The
// first
// transmission needs no series at all.
inline double truncated_outage_relative(const HarqConfig& cfg,
                                        const ContourSpec& contour) {
  if (cfg.rounds == 1)
    return std::clamp(marginal_snr_cdf(cfg, 0, std::exp2(cfg.rate) - 1.0),
                      0.0, 1.0);
  OutageEvaluator eval(cfg, contour);
  const auto order_for = [&](double eps, int cap) {
    try {
      return eval.min_order(eps, cap);
    } catch (const truncation_cap_error&) {
      return cap;
    }
  };
  auto r = eval.truncated(order_for(1e-4, 12));
  const double eps = std::max(1e-15, 1e-4 * r.value);
  if (r.error_bound && *r.error_bound > eps)
    r = eval.truncated(order_for(eps, 64));
  return std::clamp(r.value, 0.0, 1.0);
}

// Shared evaluation context for the power optimizers.  For the asymptotic
// backend the allocation dependence factors out as prod theta^{-m}, so the
// per-prefix constants are computed once at unit weights.
struct PowerEvaluation {
  HarqConfig base;
  OutageBackend backend;
  ContourSpec contour;
  std::vector<double> prefix_constants;  // asymptotic backend only

  PowerEvaluation(const PowerProblem& prob)
      : base(prob.model), backend(prob.evaluator), contour(prob.contour) {
    if (backend == OutageBackend::asymptotic) {
      HarqConfig unit = base;
      unit.theta.assign(static_cast<std::size_t>(unit.rounds), 1.0);
      for (int k = 1; k <= unit.rounds; ++k)
        prefix_constants.push_back(
            asymptotic_outage(prefix_config(unit, k), contour).value);
    }
  }

  // p_out,k for the first k rounds under the given allocation.
  double prefix(std::span<const double> alloc, int k) const {
    if (k == 0) return 1.0;
    if (backend == OutageBackend::asymptotic) {
      double log_p = std::log(prefix_constants[static_cast<std::size_t>(k) - 1]);
      for (int j = 0; j < k; ++j)
        log_p -= base.shape * std::log(alloc[static_cast<std::size_t>(j)]);
      return std::min(1.0, std::exp(log_p));
    }
    HarqConfig cfg = prefix_config(base, k);
    for (int j = 0; j < k; ++j)
      cfg.theta[static_cast<std::size_t>(j)] = alloc[static_cast<std::size_t>(j)];
    return truncated_outage_relative(cfg, contour);
  }

  double final_outage(std::span<const double> alloc) const {
    return prefix(alloc, base.rounds);
  }

  // Spend the budget in effective shares s_k: P_k = s_k P_given / q_{k-1}
  // with the prefix outages evaluated on the already-built prefix, so the
  // energy constraint holds with equality by construction.
  std::vector<double> allocation_from_shares(std::span<const double> shares,
                                             double p_given) const {
    const auto k = static_cast<std::size_t>(base.rounds);
    std::vector<double> alloc(k);
    double q = 1.0;
    for (std::size_t j = 0; j < k; ++j) {
      alloc[j] = shares[j] * p_given / q;
      if (j + 1 < k)
        q = std::max(prefix(alloc, static_cast<int>(j) + 1), 1e-280);
    }
    return alloc;
  }

  double budget_spent(std::span<const double> alloc) const {
    double total = 0.0;
    for (int j = 0; j < base.rounds; ++j)
      total += alloc[static_cast<std::size_t>(j)] * prefix(alloc, j);
    return total;
  }
};

}  // namespace detail

// Fixed-point power allocation, then a share-space refinement for K <= 3
// so the result is directly comparable with the grid certificate.
// certificate_step > 0 turns on the grid search (share-space step, K <= 3).
inline OptimResult optimize_power(const PowerProblem& prob,
                                  double certificate_step = 1e-3,
                                  bool polish = true) {
  prob.validate();
  const detail::PowerEvaluation eval(prob);
  const auto k = static_cast<std::size_t>(prob.model.rounds);
  OptimResult result;

  std::vector<double> alloc(k, prob.p_given / double(k));
  result.converged = false;
  const int cap = 100;
  for (int it = 0; it < cap; ++it) {
    std::vector<double> next(k);
    double delta = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double q =
          std::max(eval.prefix(alloc, static_cast<int>(j)), 1e-280);
      next[j] = prob.p_given / (double(k) * q);
      delta = std::max(delta, std::abs(next[j] - alloc[j]) / next[j]);
    }
    alloc = std::move(next);
    result.iterations = it + 1;
    if (delta < 1e-12) {
      result.converged = true;
      break;
    }
  }

  // Rebuild sequentially so the budget holds with equality.
  std::vector<double> shares(k, 1.0 / double(k));
  alloc = eval.allocation_from_shares(shares, prob.p_given);

  if (polish && prob.model.rounds >= 2 && prob.model.rounds <= 3) {
    const auto objective_of = [&](const std::vector<double>& s) {
      return eval.final_outage(eval.allocation_from_shares(s, prob.p_given));
    };
    // Starving any round of power is never optimal (it forfeits that
    // round's diversity), so the search stays on interior shares; this
    // also keeps the evaluator away from near-degenerate scale mixes
    // whose contour integrals converge slowly.
    const int sweeps = prob.model.rounds == 2 ? 1 : 4;
    for (int sweep = 0; sweep < sweeps; ++sweep) {
      for (std::size_t coord = 0; coord + 1 < k; ++coord) {
        double others = 0.0;
        for (std::size_t j = 0; j + 1 < k; ++j)
          if (j != coord) others += shares[j];
        const double hi = 1.0 - others - 1e-3;
        if (hi <= 1e-3) continue;
        auto trial = shares;
        const auto best = detail::maximize_scalar(
            [&](double s) {
              trial[coord] = s;
              trial[k - 1] = 1.0 - others - s;
              return -objective_of(trial);
            },
            1e-3, hi, 9, 1e-3);
        shares[coord] = best.x;
        shares[k - 1] = 1.0 - others - best.x;
      }
    }
    alloc = eval.allocation_from_shares(shares, prob.p_given);
  }

  result.argopt = alloc;
  {
    HarqConfig cfg = prob.model;
    cfg.theta = alloc;
    result.objective = detail::truncated_outage_relative(cfg, prob.contour);
  }
  result.feasibility_slack =
      (prob.p_given - eval.budget_spent(alloc)) / prob.p_given;

  if (certificate_step > 0.0 && prob.model.rounds <= 3) {
    const double opt = eval.final_outage(alloc);
    double grid_best = std::numeric_limits<double>::infinity();
    if (prob.model.rounds == 1) {
      grid_best = opt;
    } else if (prob.model.rounds == 2) {
      std::vector<double> s(2);
      for (double s1 = certificate_step; s1 < 1.0; s1 += certificate_step) {
        s[0] = s1;
        s[1] = 1.0 - s1;
        grid_best = std::min(
            grid_best,
            eval.final_outage(eval.allocation_from_shares(s, prob.p_given)));
      }
    } else {
      std::vector<double> s(3);
      for (double s1 = certificate_step; s1 < 1.0 - certificate_step;
           s1 += certificate_step) {
        for (double s2 = certificate_step; s1 + s2 < 1.0;
             s2 += certificate_step) {
          s[0] = s1;
          s[1] = s2;
          s[2] = 1.0 - s1 - s2;
          grid_best = std::min(
              grid_best,
              eval.final_outage(eval.allocation_from_shares(s, prob.p_given)));
        }
      }
    }
    result.certificate_gap = (opt - grid_best) / grid_best;
  }
  return result;
}

// Equal-power baseline: the largest uniform allocation meeting the budget.
inline OptimResult optimize_equal_power(const PowerProblem& prob,
                                        double certificate_step = 1e-3) {
  prob.validate();
  const detail::PowerEvaluation eval(prob);
  const auto k = static_cast<std::size_t>(prob.model.rounds);

  const auto spent_at = [&](double p) {
    const std::vector<double> alloc(k, p);
    return eval.budget_spent(alloc);
  };
  double lo = 0.0, hi = prob.p_given;
  OptimResult result;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (spent_at(mid) <= prob.p_given ? lo : hi) = mid;
    result.iterations = it + 1;
  }
  result.converged = true;
  const std::vector<double> alloc(k, lo);
  result.argopt = alloc;
  {
    HarqConfig cfg = prob.model;
    cfg.theta = alloc;
    result.objective = detail::truncated_outage_relative(cfg, prob.contour);
  }
  result.feasibility_slack =
      (prob.p_given - eval.budget_spent(alloc)) / prob.p_given;

  if (certificate_step > 0.0) {
    const double opt = eval.final_outage(alloc);
    double grid_best = std::numeric_limits<double>::infinity();
    for (double f = certificate_step; f <= 1.0; f += certificate_step) {
      const double p = f * prob.p_given;
      if (spent_at(p) > prob.p_given) break;
      const std::vector<double> cand(k, p);
      grid_best = std::min(grid_best, eval.final_outage(cand));
    }
    if (std::isfinite(grid_best))
      result.certificate_gap = (opt - grid_best) / grid_best;
  }
  return result;
}

namespace detail {

// Outage sequence p_out,0..K at a candidate rate, clamped and monotone.
inline std::vector<double> rate_outage_sequence(const HarqConfig& base,
                                                double rate,
                                                OutageBackend backend,
                                                const ContourSpec& contour) {
  HarqConfig cfg = base;
  cfg.rate = rate;
  std::vector<double> seq{1.0};
  for (int k = 1; k <= cfg.rounds; ++k) {
    const auto sub = prefix_config(cfg, k);
    double p = backend == OutageBackend::asymptotic
                   ? std::min(1.0, asymptotic_outage(sub, contour).value)
                   : truncated_outage_relative(sub, contour);
    p = std::min(p, seq.back());
    seq.push_back(std::max(0.0, p));
  }
  return seq;
}

}  // namespace detail

// Dinkelbach rate selection under the outage constraint p_out,K <= epsilon.
// certificate_step > 0 adds a grid search over the feasible rate interval.
inline OptimResult optimize_rate(const RateProblem& prob,
                                 double certificate_step = 0.0,
                                 double rate_cap = 32.0) {
  prob.validate();
  require(rate_cap > 1.0, "rate_cap must exceed 1");
  const double r_lo = 1e-4;

  std::map<double, std::vector<double>> cache;
  const auto seq_at = [&](double r) -> const std::vector<double>& {
    auto it = cache.find(r);
    if (it == cache.end())
      it = cache
               .emplace(r, detail::rate_outage_sequence(
                               prob.model, r, prob.evaluator, prob.contour))
               .first;
    return it->second;
  };
  const auto final_outage_at = [&](double r) { return seq_at(r).back(); };

  if (final_outage_at(r_lo) > prob.epsilon)
    throw feasibility_error(
        "rate selection is infeasible: the outage constraint is violated "
        "even at rate 1e-4");

  double r_ub = rate_cap;
  if (final_outage_at(rate_cap) > prob.epsilon) {
    double lo = r_lo, hi = rate_cap;
    for (int it = 0; it < 48; ++it) {
      const double mid = 0.5 * (lo + hi);
      (final_outage_at(mid) <= prob.epsilon ? lo : hi) = mid;
    }
    r_ub = lo;
  }

  OptimResult result;
  double mu = 0.0;
  double r_best = r_lo;
  result.converged = false;
  for (int it = 0; it < 60; ++it) {
    const auto dinkelbach = [&](double r) {
      const auto& seq = seq_at(r);
      double denom = 0.0;
      for (std::size_t j = 0; j + 1 < seq.size(); ++j) denom += seq[j];
      return r * (1.0 - seq.back()) - mu * denom;
    };
    const auto sub = detail::maximize_scalar(dinkelbach, r_lo, r_ub, 24,
                                             1e-8 * std::max(1.0, r_ub));
    r_best = sub.x;
    result.iterations = it + 1;
    mu = ltat(r_best, seq_at(r_best));
    if (std::abs(sub.value) < 1e-8) {
      result.converged = true;
      break;
    }
  }

  result.argopt = {r_best};
  {
    HarqConfig cfg = prob.model;
    cfg.rate = r_best;
    const auto seq = prob.evaluator == OutageBackend::truncated
                         ? seq_at(r_best)
                         : detail::rate_outage_sequence(
                               prob.model, r_best, OutageBackend::truncated,
                               prob.contour);
    result.objective = ltat(r_best, seq);
  }
  result.feasibility_slack = prob.epsilon - final_outage_at(r_best);

  if (certificate_step > 0.0) {
    const double opt = ltat(r_best, seq_at(r_best));
    double grid_best = 0.0;
    for (double r = r_lo; r <= r_ub; r += certificate_step)
      grid_best = std::max(grid_best, ltat(r, seq_at(r)));
    result.certificate_gap = (grid_best - opt) / std::max(grid_best, 1e-300);
  }
  return result;
}

}  // namespace harqir
