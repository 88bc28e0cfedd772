// Release gate: nine numbered criteria, one PASS/FAIL line each.
// Exit status is the number of failed criteria.  Optional arguments select
// criteria by number, e.g. "harqir_acceptance 1 6".

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "harqir/asymptotic.hpp"
#include "harqir/channel.hpp"
#include "harqir/optimize.hpp"
#include "harqir/outage.hpp"
#include "harqir/rng.hpp"
#include "harqir/scenario.hpp"
#include "harqir/specfun.hpp"

#include "../oracle.hpp"

namespace {

using namespace harqir;

// Every tolerance asserted below, in one place.
namespace tol {
constexpr double mc_sigma = 3.0;          // Monte-Carlo agreement, in stderrs
constexpr double mc_floor = 2e-3;         // absolute floor on MC agreement
constexpr double asy_ratio_lo = 0.9;      // asymptote/series at 45 dB
constexpr double asy_ratio_hi = 1.1;
constexpr double slope_rel = 0.05;        // diversity slope, relative
constexpr double qs_closed_form = 1e-12;  // quasi-static vs closed form
constexpr double qs_asy_ratio = 0.05;     // quasi-static asymptote at 50 dB
constexpr double recurrence = 1e-4;       // rate-grid recurrence residual
constexpr double kernel_identity = 1e-7;  // randomized shift/inversion
constexpr double mellin_pair = 1e-8;      // step and polynomial pairs
constexpr double gell_oracle = 1e-6;      // region moments vs quadrature
constexpr double certificate = 1e-3;      // optimizer vs grid, relative
constexpr double ltat_slack = 1e-6;       // relative wiggle on LTAT ordering
}  // namespace tol

constexpr std::uint64_t kMcSeed = 20260818;

struct Check {
  std::vector<std::string> violations;
  std::string summary;

  void expect(bool ok, const std::string& what) {
    if (!ok) violations.push_back(what);
  }
  void expect_close(double got, double want, double tolerance,
                    const std::string& what) {
    const double scale = std::max(1.0, std::abs(want));
    if (!(std::abs(got - want) <= tolerance * scale))
      violations.push_back(what + ": got " + std::to_string(got) + ", want " +
                           std::to_string(want));
  }
};

HarqConfig eq_config(int k, int m, double rho, double snr_db, double rate) {
  HarqConfig cfg;
  cfg.rounds = k;
  cfg.shape = m;
  cfg.lambda.assign(static_cast<std::size_t>(k), rho);
  cfg.sigma2.assign(static_cast<std::size_t>(k), 1.0);
  cfg.theta.assign(static_cast<std::size_t>(k), 1.0);
  cfg.snr = std::pow(10.0, snr_db / 10.0);
  cfg.rate = rate;
  return cfg;
}

int order_for(OutageEvaluator& eval, double eps, int cap) {
  try {
    return eval.min_order(eps, cap);
  } catch (const truncation_cap_error&) {
    return cap;
  }
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// --------------------------------------------------------------------------
// 1. Truncated series vs Monte Carlo across the parameter grid.
// --------------------------------------------------------------------------

void criterion_oracle_agreement(Check& c) {
  int asserted = 0, below = 0;
  double worst = 0.0;
  for (int k : {2, 3})
    for (int m : {1, 2})
      for (double rho : {0.0, 0.5, 0.8})
        for (double rate : {1.0, 2.0, 4.0})
          for (double snr_db : {10.0, 20.0}) {
            const HarqConfig cfg = eq_config(k, m, rho, snr_db, rate);
            OutageEvaluator eval(cfg);
            const int order = order_for(eval, 1e-8, 128);
            const double p = eval.truncated(order).value;
            if (p < 1e-3) {
              ++below;
              continue;
            }
            const McEstimate mc = mc_outage(cfg, 1000000, kMcSeed, 1);
            const double allowed =
                std::max(tol::mc_sigma * mc.std_error, tol::mc_floor);
            const double diff = std::abs(p - mc.value);
            worst = std::max(worst, diff / allowed);
            c.expect(diff <= allowed,
                     "cell K=" + std::to_string(k) + " m=" + std::to_string(m) +
                         " rho=" + fmt(rho) + " R=" + fmt(rate) + " snr_db=" +
                         fmt(snr_db) + ": series " + fmt(p) + " vs mc " +
                         fmt(mc.value) + " +- " + fmt(mc.std_error));
            ++asserted;
          }
  c.summary = std::to_string(asserted) + " cells asserted, " +
              std::to_string(below) + " below 1e-3, worst |diff|/tol " +
              fmt(worst);
}

// --------------------------------------------------------------------------
// 2. Tail bound covers the observed truncation drift and shrinks with order.
// --------------------------------------------------------------------------

void criterion_truncation_bound(Check& c) {
  double worst_ratio = 0.0;
  for (int m : {1, 2})
    for (double snr_db : {10.0, 20.0, 30.0}) {
      const HarqConfig cfg = eq_config(4, m, 0.8, snr_db, 1.0);
      OutageEvaluator eval(cfg);
      const double p3 = eval.truncated(3).value;
      const double p9 = eval.truncated(9).value;
      const double b3 = eval.bound(3).value;
      worst_ratio = std::max(worst_ratio, std::abs(p9 - p3) / b3);
      c.expect(std::abs(p9 - p3) <= b3 * (1.0 + 1e-12),
               "drift above bound at m=" + std::to_string(m) + " snr_db=" +
                   fmt(snr_db) + ": |p9-p3|=" + fmt(std::abs(p9 - p3)) +
                   " vs B=" + fmt(b3));
      double prev = std::numeric_limits<double>::infinity();
      for (int n = 0; n <= 6; ++n) {
        const double b = eval.bound(n).value;
        c.expect(b < prev, "bound not strictly decreasing at N=" +
                               std::to_string(n) + ", m=" + std::to_string(m) +
                               ", snr_db=" + fmt(snr_db));
        prev = b;
      }
    }
  c.summary = "6 configs, worst drift/bound " + fmt(worst_ratio);
}

// --------------------------------------------------------------------------
// 3. Rayleigh tail decays at least geometrically in the truncation order.
// --------------------------------------------------------------------------

void criterion_exponential_decay(Check& c) {
  struct Setup {
    int k;
    double rho, snr_db, rate;
  };
  double worst = 0.0;
  for (const Setup s : {Setup{4, 0.8, 10.0, 1.0}, Setup{4, 0.8, 20.0, 1.0},
                        Setup{2, 0.5, 10.0, 2.0}}) {
    const HarqConfig cfg = eq_config(s.k, 1, s.rho, s.snr_db, s.rate);
    OutageEvaluator eval(cfg);
    double ssum = 0.0;
    for (double l : cfg.lambda) ssum += l * l / (1.0 - l * l);
    const double w_sum = ssum / (1.0 + ssum);
    for (int n = 0; n <= 6; ++n) {
      const double drift =
          std::abs(eval.truncated(n + 10).value - eval.truncated(n).value);
      const double cap = std::pow(w_sum, n + 1);
      worst = std::max(worst, drift / cap);
      c.expect(drift <= cap, "drift " + fmt(drift) + " above w^" +
                                 std::to_string(n + 1) + "=" + fmt(cap) +
                                 " for K=" + std::to_string(s.k) + " rho=" +
                                 fmt(s.rho) + " snr_db=" + fmt(s.snr_db));
    }
  }
  c.summary = "3 configs, N=0..6, worst drift/(sum w)^(N+1) " + fmt(worst);
}

// --------------------------------------------------------------------------
// 4. High-SNR factorization: level at 45 dB and log-log slope = mK.
// --------------------------------------------------------------------------

void criterion_asymptotic(Check& c) {
  const auto exact_at = [](HarqConfig cfg, double snr) {
    cfg.snr = snr;
    const double scale = asymptotic_outage(cfg).value;
    const double eps = std::max(1e-280, 1e-3 * scale);
    OutageEvaluator eval(cfg);
    return eval.truncated(order_for(eval, eps, 64)).value;
  };

  const HarqConfig m1 = eq_config(2, 1, 0.5, 45.0, 2.0);
  const double ratio = asymptotic_outage(m1).value / exact_at(m1, m1.snr);
  c.expect(ratio >= tol::asy_ratio_lo && ratio <= tol::asy_ratio_hi,
           "asymptote/series at 45 dB = " + fmt(ratio));

  const double slope1 = diversity_order_estimate(
      [&](double snr) { return exact_at(m1, snr); }, 1e4, 1e5);
  c.expect(std::abs(slope1 - 2.0) <= tol::slope_rel * 2.0,
           "slope " + fmt(slope1) + " outside 2 +- 5% over 40..50 dB");

  const HarqConfig m2 = eq_config(2, 2, 0.5, 50.0, 2.0);
  const double slope2 = diversity_order_estimate(
      [&](double snr) { return exact_at(m2, snr); }, std::pow(10.0, 4.5),
      std::pow(10.0, 5.5));
  c.expect(std::abs(slope2 - 4.0) <= tol::slope_rel * 4.0,
           "slope " + fmt(slope2) + " outside 4 +- 5% over 45..55 dB");

  c.summary = "ratio " + fmt(ratio) + ", slopes " + fmt(slope1) + " / " +
              fmt(slope2);
}

// --------------------------------------------------------------------------
// 5. Quasi-static model: closed form, shared-realization MC, asymptote.
// --------------------------------------------------------------------------

void criterion_quasi_static(Check& c) {
  HarqConfig cfg = eq_config(3, 1, 0.0, 7.0, 1.5);
  const double x = (std::exp2(cfg.rate / cfg.rounds) - 1.0) / cfg.snr;
  const double closed = -std::expm1(-x);
  c.expect_close(outage_quasi_static(cfg).value, closed, tol::qs_closed_form,
                 "Rayleigh closed form");

  const McEstimate mc1 = mc_outage_quasi_static(cfg, 1000000, kMcSeed);
  c.expect(std::abs(outage_quasi_static(cfg).value - mc1.value) <=
               tol::mc_sigma * mc1.std_error,
           "shared-realization MC off by " +
               fmt(std::abs(outage_quasi_static(cfg).value - mc1.value)) +
               " vs 3*stderr " + fmt(tol::mc_sigma * mc1.std_error));

  HarqConfig m2 = eq_config(2, 2, 0.0, 12.0, 2.0);
  const McEstimate mc2 = mc_outage_quasi_static(m2, 1000000, kMcSeed + 1);
  c.expect(std::abs(outage_quasi_static(m2).value - mc2.value) <=
               tol::mc_sigma * mc2.std_error,
           "shape-2 shared-realization MC disagrees");

  double worst = 0.0;
  for (int m : {1, 2}) {
    HarqConfig high = eq_config(2, m, 0.0, 50.0, 2.0);
    const auto a =
        quasi_static_asymptotic(high.shape, high.rounds, 1.0, 1.0, high.rate);
    const double r = quasi_static_asymptotic_value(a, high.snr) /
                     outage_quasi_static(high).value;
    worst = std::max(worst, std::abs(r - 1.0));
    c.expect(std::abs(r - 1.0) <= tol::qs_asy_ratio,
             "quasi-static asymptote ratio at 50 dB = " + fmt(r) + " for m=" +
                 std::to_string(m));
  }
  c.summary = "closed form, two MC runs, asymptote ratio within " + fmt(worst);
}

// --------------------------------------------------------------------------
// 6. Structural results: correlation monotonicity and the rate grid.
// --------------------------------------------------------------------------

void criterion_structural(Check& c) {
  // Entrywise-dominated correlation pairs must order the outage, up to the
  // certified truncation slack on both sides.
  const counter_rng rng(kMcSeed, 31u);
  int tested = 0, informative = 0;
  for (int k : {2, 3, 4, 5}) {
    const double cap = k == 2 ? 0.8 : k == 3 ? 0.5 : k == 4 ? 0.4 : 0.35;
    for (int pair = 0; pair < 50; ++pair) {
      const std::uint64_t draw = static_cast<std::uint64_t>(k) * 1000 + pair;
      std::vector<double> lo(static_cast<std::size_t>(k));
      std::vector<double> hi(static_cast<std::size_t>(k));
      for (int i = 0; i < k; ++i) {
        const auto u = rng.uniform_pair(draw, static_cast<std::uint32_t>(i));
        hi[static_cast<std::size_t>(i)] = cap * (0.4 + 0.6 * u[0]);
        lo[static_cast<std::size_t>(i)] =
            hi[static_cast<std::size_t>(i)] * (0.2 + 0.6 * u[1]);
      }
      HarqConfig cfg = eq_config(k, 1 + pair % 2, 0.0, 15.0, 1.0);
      cfg.lambda = lo;
      OutageEvaluator elo(cfg);
      cfg.lambda = hi;
      OutageEvaluator ehi(cfg);

      // set the scale cheaply, then resolve both sides to ~0.2% of it
      const double plo0 = elo.truncated(order_for(elo, 1e-3, 64)).value;
      const double target = std::max(2e-3 * plo0, 1e-280);
      const auto rlo = elo.truncated(order_for(elo, target, 64));
      const auto rhi = ehi.truncated(order_for(ehi, target, 64));
      const double slack =
          rlo.error_bound.value_or(0.0) + rhi.error_bound.value_or(0.0);
      c.expect(rlo.value <= rhi.value + slack,
               "outage not monotone in correlation: K=" + std::to_string(k) +
                   " pair " + std::to_string(pair) + ": " + fmt(rlo.value) +
                   " > " + fmt(rhi.value) + " + " + fmt(slack));
      ++tested;
      if (rhi.value - rlo.value > slack) ++informative;
    }
  }

  // Coding-gain rate grid: decreasing transformed, monotone and convex in
  // 2^R, with the interior derivative recurrence satisfied.
  std::vector<double> grid;
  for (int i = 0; i <= 32; ++i) grid.push_back(0.25 + (8.0 - 0.25) * i / 32.0);
  double worst_res = 0.0;
  for (int m : {1, 2, 3}) {
    const auto rep = rate_convexity_check(m, 2, grid, {}, 10, tol::recurrence);
    worst_res = std::max(worst_res, rep.max_residual);
    c.expect(rep.monotone, "rate grid not monotone for m=" +
                               std::to_string(m));
    c.expect(rep.convex, "rate grid not convex for m=" + std::to_string(m));
    c.expect(rep.max_residual <= tol::recurrence,
             "recurrence residual " + fmt(rep.max_residual) + " above 1e-4" +
                 " for m=" + std::to_string(m));
    c.expect(rep.pass, "rate grid report did not pass for m=" +
                           std::to_string(m));
  }
  c.summary = std::to_string(tested) + " correlation pairs (" +
              std::to_string(informative) +
              " with gap beyond slack), rate-grid residual " + fmt(worst_res);
}

// --------------------------------------------------------------------------
// 7. Kernel identities, Mellin pairs, and region moments.
// --------------------------------------------------------------------------

ContourSpec at_abscissa(double cval) {
  ContourSpec spec;
  spec.abscissa = cval;
  return spec;
}

FoxHSpec random_kernel_spec(const counter_rng& rng, std::uint64_t draw) {
  const auto u1 = rng.uniform_pair(draw, 0);
  const auto u2 = rng.uniform_pair(draw, 1);
  const auto u3 = rng.uniform_pair(draw, 2);
  FoxHSpec spec;
  spec.upper = {{0.2 + 0.6 * u1[0], 1.0, 0.3 + 1.2 * u1[1], 1.2 + 1.3 * u2[0]}};
  spec.lower = {{0.2 + 0.6 * u2[1], 1.0, 0.3 + 1.2 * u3[0], 1.2 + 1.3 * u3[1]}};
  spec.m = 1;
  spec.n = 1;
  return spec;
}

void criterion_kernel_identities(Check& c) {
  const counter_rng rng(kMcSeed, 7u);
  double worst_id = 0.0;
  for (int i = 0; i < 20; ++i) {
    const FoxHSpec spec = random_kernel_spec(rng, static_cast<std::uint64_t>(i));
    const auto ux = rng.uniform_pair(static_cast<std::uint64_t>(i), 3);
    const double x = 1.2 + 1.8 * ux[0];
    const double cline = 0.4;
    const double rho = 0.3 + 0.7 * ux[1];

    const double base = fox_h(spec, x, at_abscissa(cline)).value;
    const double moved =
        fox_h(property_shift(spec, rho), x, at_abscissa(cline - rho)).value;
    const double d1 = std::abs(moved - std::pow(x, rho) * base) /
                      std::max(1.0, std::abs(base));
    const double direct = fox_h(spec, 1.0 / x, at_abscissa(cline)).value;
    const double flipped =
        fox_h(property_invert(spec), x, at_abscissa(-cline)).value;
    const double d2 =
        std::abs(flipped - direct) / std::max(1.0, std::abs(direct));
    worst_id = std::max({worst_id, d1, d2});
    c.expect(d1 <= tol::kernel_identity,
             "argument-power identity off by " + fmt(d1) + " on spec " +
                 std::to_string(i));
    c.expect(d2 <= tol::kernel_identity,
             "inversion identity off by " + fmt(d2) + " on spec " +
                 std::to_string(i));
  }

  // Mellin pairs: unit step on both sides of the jump, then the
  // polynomial family (x-1)^p / p!.
  double worst_pair = 0.0;
  for (double x : {1.5, 2.0, 4.0}) {
    const double err =
        std::abs(meijer_g({1.0}, {0.0}, 0, 1, x, at_abscissa(-0.5)).value -
                 1.0);
    worst_pair = std::max(worst_pair, err);
    c.expect(err <= tol::mellin_pair,
             "step above the jump off by " + fmt(err) + " at x=" + fmt(x));
  }
  for (double x : {0.5, 0.6}) {
    const double err =
        std::abs(meijer_g({1.0}, {0.0}, 0, 1, x, at_abscissa(-0.5)).value);
    worst_pair = std::max(worst_pair, err);
    c.expect(err <= tol::mellin_pair,
             "step below the jump off by " + fmt(err) + " at x=" + fmt(x));
  }
  for (int p : {1, 2, 3}) {
    for (double x : {1.5, 4.0}) {
      const double want = std::pow(x - 1.0, p) / std::tgamma(p + 1.0);
      const double got = meijer_g({1.0, 1.0 + p}, {1.0, 0.0}, 0, 2, x,
                                  at_abscissa(-(p + 0.5)))
                             .value;
      const double err = std::abs(got - want) / want;
      worst_pair = std::max(worst_pair, err);
      c.expect(err <= tol::mellin_pair, "polynomial pair p=" +
                                            std::to_string(p) + " off by " +
                                            fmt(err) + " at x=" + fmt(x));
    }
    const double below = std::abs(meijer_g({1.0, 1.0 + p}, {1.0, 0.0}, 0, 2,
                                           0.5, at_abscissa(-(p + 0.5)))
                                      .value);
    worst_pair = std::max(worst_pair, below);
    c.expect(below <= tol::mellin_pair,
             "polynomial pair nonzero below support, p=" + std::to_string(p));
  }

  // Region moments against the frozen nested-quadrature references.
  double worst_gell = 0.0;
  int gell_checked = 0;
  for (const auto& gc : oracle::gell_cases()) {
    if (gc.ell.size() > 3) continue;
    std::vector<int> phi;
    for (int e : gc.ell) phi.push_back(gc.m + e);
    const double got = region_moment(phi, gc.x);
    const double err = std::abs(got - gc.value) / gc.value;
    worst_gell = std::max(worst_gell, err);
    c.expect(err <= tol::gell_oracle,
             "region moment off by " + fmt(err) + " on oracle case " +
                 std::to_string(gell_checked));
    ++gell_checked;
  }
  c.summary = "20 spec identities (worst " + fmt(worst_id) +
              "), Mellin pairs (worst " + fmt(worst_pair) + "), " +
              std::to_string(gell_checked) + " region moments (worst " +
              fmt(worst_gell) + ")";
}

// --------------------------------------------------------------------------
// 8. Optimizers: ordering, grid certificates, throughput monotonicity.
// --------------------------------------------------------------------------

void criterion_optimizers(Check& c) {
  struct Setup {
    int k, m;
    double rho, snr_db, rate, budget;
    OutageBackend backend;
  };
  const Setup setups[] = {
      {2, 1, 0.5, 10.0, 2.0, 2.0, OutageBackend::asymptotic},
      {2, 2, 0.3, 8.0, 1.5, 1.0, OutageBackend::asymptotic},
      {3, 1, 0.6, 12.0, 1.0, 1.5, OutageBackend::asymptotic},
      {3, 2, 0.2, 10.0, 2.0, 2.5, OutageBackend::asymptotic},
      {2, 1, 0.8, 15.0, 3.0, 3.0, OutageBackend::asymptotic},
      {4, 1, 0.4, 10.0, 1.5, 2.0, OutageBackend::asymptotic},
      {2, 3, 0.5, 12.0, 2.0, 1.0, OutageBackend::asymptotic},
      {3, 1, 0.0, 5.0, 1.0, 1.2, OutageBackend::asymptotic},
      {2, 1, 0.5, 10.0, 2.0, 2.0, OutageBackend::truncated},
      {2, 2, 0.4, 10.0, 1.5, 1.5, OutageBackend::truncated},
  };
  int idx = 0;
  for (const Setup& s : setups) {
    const PowerProblem prob{eq_config(s.k, s.m, s.rho, s.snr_db, s.rate),
                            s.budget, s.backend, {}};
    const OptimResult opa = optimize_power(prob, 0.0);
    const OptimResult oepa = optimize_equal_power(prob, 0.0);
    c.expect(opa.converged && oepa.converged,
             "optimizer did not converge on config " + std::to_string(idx));
    c.expect(opa.objective <= oepa.objective * (1.0 + 1e-9),
             "unequal allocation lost to equal on config " +
                 std::to_string(idx) + ": " + fmt(opa.objective) + " vs " +
                 fmt(oepa.objective));
    c.expect(opa.feasibility_slack >= -1e-9 && oepa.feasibility_slack >= -1e-9,
             "infeasible allocation on config " + std::to_string(idx));
    ++idx;
  }

  // Grid certificates, K <= 3.
  double worst_gap = -1e300;
  {
    const PowerProblem p2{eq_config(2, 1, 0.5, 10.0, 2.0), 2.0,
                          OutageBackend::asymptotic, {}};
    const OptimResult r2 = optimize_power(p2, tol::certificate);
    const OptimResult e2 = optimize_equal_power(p2, tol::certificate);
    const PowerProblem p3{eq_config(3, 1, 0.6, 12.0, 1.0), 1.5,
                          OutageBackend::asymptotic, {}};
    const OptimResult r3 = optimize_power(p3, tol::certificate);
    const RateProblem rp{eq_config(2, 1, 0.5, 10.0, 2.0), 0.1,
                         OutageBackend::asymptotic, {}};
    const OptimResult rr = optimize_rate(rp, tol::certificate);
    struct Named {
      const char* name;
      const OptimResult* r;
    };
    for (const Named n : {Named{"power K=2", &r2}, Named{"equal power", &e2},
                          Named{"power K=3", &r3}, Named{"rate K=2", &rr}}) {
      c.expect(n.r->certificate_gap.has_value(),
               std::string(n.name) + " produced no certificate");
      if (n.r->certificate_gap) {
        worst_gap = std::max(worst_gap, *n.r->certificate_gap);
        c.expect(*n.r->certificate_gap <= tol::certificate,
                 std::string(n.name) + " certificate gap " +
                     fmt(*n.r->certificate_gap) + " above 1e-3");
      }
    }
  }

  // LTAT maximum nondecreasing in the outage cap and in SNR.
  const HarqConfig base = eq_config(2, 1, 0.5, 10.0, 2.0);
  double prev = 0.0;
  for (double eps : {0.02, 0.05, 0.1, 0.2, 0.4, 0.8}) {
    const RateProblem rp{base, eps, OutageBackend::asymptotic, {}};
    const double t = optimize_rate(rp).objective;
    c.expect(t >= prev * (1.0 - tol::ltat_slack),
             "throughput decreased when the cap rose to " + fmt(eps));
    prev = t;
  }
  prev = 0.0;
  for (double snr_db : {5.0, 10.0, 15.0, 20.0}) {
    const RateProblem rp{eq_config(2, 1, 0.5, snr_db, 2.0), 0.1,
                         OutageBackend::asymptotic, {}};
    const double t = optimize_rate(rp).objective;
    c.expect(t >= prev * (1.0 - tol::ltat_slack),
             "throughput decreased when SNR rose to " + fmt(snr_db) + " dB");
    prev = t;
  }
  c.summary = "10 allocation configs, 4 certificates (worst gap " +
              fmt(worst_gap) + "), 10 throughput points";
}

// --------------------------------------------------------------------------
// 9. Sweep engine reproduces the qualitative figure relationships.
// --------------------------------------------------------------------------

ScenarioConfig sweep_base(int m) {
  ScenarioConfig sc;
  sc.rounds = 2;
  sc.shape = m;
  sc.correlation = CorrelationForm::equicorrelated;
  sc.rho = 0.5;
  sc.gamma = std::pow(10.0, 1.0);
  sc.rate = 2.0;
  sc.truncation_epsilon = 1e-8;
  sc.mc_samples = 20000;
  sc.mc_seed = kMcSeed;
  return sc;
}

void criterion_figures(Check& c) {
  // Outage vs SNR: monotone decreasing, slope steeper for larger shape,
  // MC cells blank once the analytic value drops below the sampling floor.
  std::vector<double> last_decade[3];
  for (int m : {1, 2}) {
    SweepRequest req;
    req.spec = {SweepVariable::gamma_db, 0.0, 50.0, 26, false};
    req.with_mc = (m == 1);
    const SweepTable t = compute_sweep(sweep_base(m), req);
    c.expect(t.rows.size() == 26, "expected 26 SNR rows");
    double prev = 2.0;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      const double p = *t.rows[i][1];
      c.expect(p < prev, "outage not strictly decreasing in SNR (m=" +
                             std::to_string(m) + ", row " + std::to_string(i) +
                             ")");
      prev = p;
      if (m == 1) {
        const bool blank = !t.rows[i][2].has_value();
        c.expect(blank == (p < kMcSweepFloor),
                 "MC cell suppression wrong at row " + std::to_string(i));
      }
    }
    const std::size_t rows = t.rows.size();
    last_decade[m] = {*t.rows[rows - 6][1], *t.rows[rows - 1][1]};
  }
  const auto slope = [](const std::vector<double>& v) {
    return (std::log10(v[0]) - std::log10(v[1]));  // per decade, 40..50 dB
  };
  const double s1 = slope(last_decade[1]);
  const double s2 = slope(last_decade[2]);
  c.expect(s2 > s1 + 1.0, "slope for shape 2 (" + fmt(s2) +
                              "/decade) not steeper than shape 1 (" + fmt(s1) +
                              "/decade)");

  // Correlation penalty vs rho: increasing, exponential profile below the
  // equicorrelated one.
  {
    SweepRequest req;
    req.spec = {SweepVariable::rho, 0.0, 0.95, 20, false};
    req.with_truncated = false;
    req.with_asymptotic = true;
    ScenarioConfig sc = sweep_base(1);
    sc.rounds = 3;
    sc.rate = 1.5;
    const SweepTable t = compute_sweep(sc, req);
    double prev = 0.0;
    for (const auto& row : t.rows) {
      const double eq = *row[2], ex = *row[3];
      c.expect(ex <= eq * (1.0 + 1e-12),
               "exponential-profile penalty above equicorrelated at rho=" +
                   fmt(*row[0]));
      c.expect(eq >= prev - 1e-12, "penalty not nondecreasing in rho");
      prev = eq;
    }
  }

  // Coding gain vs rate: decreasing, and the quasi-static gain dominates.
  {
    SweepRequest req;
    req.spec = {SweepVariable::rate, 0.5, 8.0, 16, false};
    req.with_truncated = false;
    req.with_asymptotic = true;
    const SweepTable t = compute_sweep(sweep_base(1), req);
    double prev = 1e300;
    for (const auto& row : t.rows) {
      const double corr = *row[2], qs = *row[3];
      c.expect(corr < prev, "coding gain not decreasing at rate " +
                                fmt(*row[0]));
      c.expect(qs >= corr,
               "quasi-static gain below the correlated one at rate " +
                   fmt(*row[0]));
      prev = corr;
    }
  }
  c.summary = "SNR slopes " + fmt(s1) + " / " + fmt(s2) +
              " per decade, 20 correlation rows, 16 rate rows";
}

// --------------------------------------------------------------------------

struct Criterion {
  int id;
  const char* label;
  void (*body)(Check&);
};

const Criterion kCriteria[] = {
    {1, "series vs Monte Carlo grid", criterion_oracle_agreement},
    {2, "truncation bound", criterion_truncation_bound},
    {3, "geometric tail decay", criterion_exponential_decay},
    {4, "high-SNR factorization", criterion_asymptotic},
    {5, "quasi-static model", criterion_quasi_static},
    {6, "structural orderings", criterion_structural},
    {7, "kernel and Mellin identities", criterion_kernel_identities},
    {8, "optimizers", criterion_optimizers},
    {9, "figure relationships", criterion_figures},
};

}  // namespace

int main(int argc, char** argv) {
  std::setvbuf(stdout, nullptr, _IONBF, 0);
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const Criterion& cr : kCriteria) {
    if (!wanted.empty() && !wanted.count(cr.id)) continue;
    Check check;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      cr.body(check);
    } catch (const std::exception& e) {
      check.violations.push_back(std::string("exception: ") + e.what());
    }
    const double dt =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    if (check.violations.empty()) {
      std::printf("criterion %d PASS (%6.1fs)  %-28s  %s\n", cr.id, dt,
                  cr.label, check.summary.c_str());
    } else {
      ++failed;
      std::printf("criterion %d FAIL (%6.1fs)  %-28s  %zu violation(s)\n",
                  cr.id, dt, cr.label, check.violations.size());
      for (std::size_t i = 0; i < check.violations.size() && i < 5; ++i)
        std::printf("    %s\n", check.violations[i].c_str());
      if (check.violations.size() > 5)
        std::printf("    ... and %zu more\n", check.violations.size() - 5);
    }
  }
  return failed;
}
