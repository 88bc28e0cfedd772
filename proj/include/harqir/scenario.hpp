#ifndef HARQIR_SCENARIO_HPP
#define HARQIR_SCENARIO_HPP

// Declarative scenario description used by the command-line driver: model,
// allocation, rate, truncation, and Monte-Carlo settings that expand into a
// HarqConfig, plus sweep and optimization requests over such scenarios.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "harqir/asymptotic.hpp"
#include "harqir/channel.hpp"
#include "harqir/common.hpp"
#include "harqir/contour.hpp"
#include "harqir/optimize.hpp"
#include "harqir/outage.hpp"

namespace harqir {

enum class CorrelationForm { vector_form, equicorrelated, exponential };

inline std::vector<double> equicorrelated_lambda(int rounds, double rho) {
  require(rounds >= 1, "rounds must be at least 1");
  return std::vector<double>(static_cast<std::size_t>(rounds), rho);
}

// lambda_k = rho^k for k = 1..K, so later rounds decouple progressively.
inline std::vector<double> exponential_lambda(int rounds, double rho) {
  require(rounds >= 1, "rounds must be at least 1");
  std::vector<double> l(static_cast<std::size_t>(rounds));
  double p = 1.0;
  for (auto& v : l) {
    p *= rho;
    v = p;
  }
  return l;
}

inline void require_correlated_entry(double l) {
  require(l >= 0.0, "correlation entries must be non-negative");
  if (l >= 1.0)
    throw std::invalid_argument(
        "correlation " + std::to_string(l) +
        " leaves no round-to-round variation; rerun with --quasi-static to "
        "use the single-realization model");
}

struct OptimizeSpec {
  std::optional<double> p_given;  // power budget for allocation problems
  std::optional<double> epsilon;  // outage cap for the rate problem
  OutageBackend backend = OutageBackend::truncated;
  double certificate_step = 0.0;  // 0 skips the grid certificate
};

struct ScenarioConfig {
  // model block
  int rounds = 1;
  int shape = 1;
  std::vector<double> sigma2 = {1.0};  // one entry broadcasts to every round
  CorrelationForm correlation = CorrelationForm::equicorrelated;
  double rho = 0.0;                  // scalar correlation forms
  std::vector<double> lambda_vector;  // explicit form

  // allocation block
  double gamma = 1.0;          // mean SNR, linear scale
  bool equal_power = true;     // theta = 1 for every round
  std::vector<double> theta;   // per-round weights when not equal

  double rate = 1.0;

  // truncation block: exactly one of the two is engaged
  std::optional<int> truncation_order;
  std::optional<double> truncation_epsilon = 1e-8;

  // monte carlo block
  std::int64_t mc_samples = 1000000;
  std::uint64_t mc_seed = 1;

  ContourSpec contour;
  OptimizeSpec optimize;

  void validate() const {
    require(rounds >= 1, "rounds must be at least 1");
    require(shape >= 1, "shape must be a positive integer");
    require(truncation_order.has_value() != truncation_epsilon.has_value(),
            "specify exactly one of truncation N and truncation epsilon");
    if (truncation_order) require(*truncation_order >= 0, "N must be >= 0");
    if (truncation_epsilon)
      require(*truncation_epsilon > 0.0, "epsilon must be positive");
    require(mc_samples > 0, "mc n must be positive");
  }

  std::vector<double> lambda() const {
    std::vector<double> l;
    switch (correlation) {
      case CorrelationForm::equicorrelated:
        l = equicorrelated_lambda(rounds, rho);
        break;
      case CorrelationForm::exponential:
        require_correlated_entry(rho);  // powers of an in-range rho stay in range
        l = exponential_lambda(rounds, rho);
        break;
      case CorrelationForm::vector_form:
        require(static_cast<int>(lambda_vector.size()) == rounds,
                "correlation vector must have one entry per round");
        l = lambda_vector;
        break;
    }
    for (double v : l) require_correlated_entry(v);
    return l;
  }

  std::vector<double> broadcast_sigma2() const {
    if (sigma2.size() == 1)
      return std::vector<double>(static_cast<std::size_t>(rounds), sigma2[0]);
    require(static_cast<int>(sigma2.size()) == rounds,
            "sigma2 must be a scalar or have one entry per round");
    return sigma2;
  }

  std::vector<double> allocation() const {
    if (equal_power)
      return std::vector<double>(static_cast<std::size_t>(rounds), 1.0);
    require(static_cast<int>(theta.size()) == rounds,
            "theta must be \"equal\" or have one entry per round");
    return theta;
  }

  HarqConfig config() const {
    validate();
    HarqConfig cfg;
    cfg.rounds = rounds;
    cfg.shape = shape;
    cfg.lambda = lambda();
    cfg.sigma2 = broadcast_sigma2();
    cfg.theta = allocation();
    cfg.snr = gamma;
    cfg.rate = rate;
    cfg.validate();
    return cfg;
  }

  // Frozen-channel variant: one realization serves every round, so the
  // correlation block is irrelevant and lambda is zeroed as a placeholder.
  HarqConfig config_quasi_static() const {
    validate();
    HarqConfig cfg;
    cfg.rounds = rounds;
    cfg.shape = shape;
    cfg.lambda.assign(static_cast<std::size_t>(rounds), 0.0);
    cfg.sigma2 = broadcast_sigma2();
    cfg.theta = allocation();
    cfg.snr = gamma;
    cfg.rate = rate;
    cfg.validate();
    return cfg;
  }
};

// Truncation order under the scenario's policy: an explicit N wins, an
// epsilon target is resolved by the tail bound, capped at a depth the term
// budget can absorb (the reported error bound stays honest either way).
inline int scenario_truncation_order(const ScenarioConfig& sc,
                                     OutageEvaluator& eval) {
  if (sc.truncation_order) return *sc.truncation_order;
  try {
    return eval.min_order(*sc.truncation_epsilon, 64);
  } catch (const truncation_cap_error&) {
    return 64;
  }
}

inline OutageResult scenario_outage(const ScenarioConfig& sc,
                                    const HarqConfig& cfg) {
  OutageEvaluator eval(cfg, sc.contour);
  return eval.truncated(scenario_truncation_order(sc, eval));
}

inline double scenario_quasi_static_asymptotic(const ScenarioConfig& sc) {
  const HarqConfig cfg = sc.config_quasi_static();
  for (double t : cfg.theta)
    require(t == cfg.theta[0],
            "quasi-static asymptote requires equal power weights");
  for (double s : cfg.sigma2)
    require(s == cfg.sigma2[0],
            "quasi-static asymptote requires equal sigma2 across rounds");
  const auto a = quasi_static_asymptotic(cfg.shape, cfg.rounds, cfg.theta[0],
                                         cfg.sigma2[0], cfg.rate);
  return quasi_static_asymptotic_value(a, cfg.snr);
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

enum class SweepVariable { gamma_db, rho, rate, budget, epsilon, rounds };

inline const char* sweep_variable_name(SweepVariable v) {
  switch (v) {
    case SweepVariable::gamma_db: return "gamma_db";
    case SweepVariable::rho: return "rho";
    case SweepVariable::rate: return "rate";
    case SweepVariable::budget: return "budget";
    case SweepVariable::epsilon: return "epsilon";
    case SweepVariable::rounds: return "rounds";
  }
  return "?";
}

inline SweepVariable parse_sweep_variable(const std::string& name) {
  for (SweepVariable v :
       {SweepVariable::gamma_db, SweepVariable::rho, SweepVariable::rate,
        SweepVariable::budget, SweepVariable::epsilon, SweepVariable::rounds})
    if (name == sweep_variable_name(v)) return v;
  throw std::invalid_argument(
      "unknown sweep variable \"" + name +
      "\" (expected gamma_db, rho, rate, budget, epsilon, or rounds)");
}

struct SweepSpec {
  SweepVariable variable = SweepVariable::gamma_db;
  double from = 0.0;
  double to = 0.0;
  int steps = 0;  // point count; 0 lets the rounds variable derive its own
  bool log_scale = false;
};

inline std::vector<double> sweep_points(const SweepSpec& s) {
  std::vector<double> pts;
  if (s.variable == SweepVariable::rounds) {
    require(!s.log_scale, "a rounds sweep is linear by nature");
    const int a = static_cast<int>(std::lround(s.from));
    const int b = static_cast<int>(std::lround(s.to));
    require(std::abs(s.from - a) < 1e-9 && std::abs(s.to - b) < 1e-9,
            "rounds sweep endpoints must be integers");
    require(a >= 1 && b >= a, "rounds sweep needs 1 <= from <= to");
    require(s.steps == 0 || s.steps == b - a + 1,
            "steps of a rounds sweep must match the integer range");
    for (int k = a; k <= b; ++k) pts.push_back(k);
    return pts;
  }
  require(s.steps >= 1, "steps must be positive");
  if (s.steps == 1) {
    pts.push_back(s.from);
    return pts;
  }
  if (s.log_scale) {
    require(s.from > 0.0 && s.to > 0.0,
            "log-scale sweeps need positive endpoints");
    const double r = std::log(s.to / s.from) / (s.steps - 1);
    for (int i = 0; i < s.steps; ++i)
      pts.push_back(s.from * std::exp(r * i));
  } else {
    const double d = (s.to - s.from) / (s.steps - 1);
    for (int i = 0; i < s.steps; ++i) pts.push_back(s.from + d * i);
  }
  pts.back() = s.to;  // pin the endpoint against accumulated rounding
  return pts;
}

// Copy of the scenario with the swept variable replaced by x.
inline ScenarioConfig scenario_at(const ScenarioConfig& base, SweepVariable v,
                                  double x) {
  ScenarioConfig sc = base;
  switch (v) {
    case SweepVariable::gamma_db:
      sc.gamma = std::pow(10.0, x / 10.0);
      break;
    case SweepVariable::rho:
      require(sc.correlation != CorrelationForm::vector_form,
              "a rho sweep needs a scalar correlation form");
      sc.rho = x;
      break;
    case SweepVariable::rate:
      sc.rate = x;
      break;
    case SweepVariable::budget:
      sc.optimize.p_given = x;
      break;
    case SweepVariable::epsilon:
      sc.optimize.epsilon = x;
      break;
    case SweepVariable::rounds: {
      sc.rounds = static_cast<int>(std::lround(x));
      break;
    }
  }
  return sc;
}

struct SweepTable {
  std::vector<std::string> columns;  // swept variable first
  std::vector<std::vector<std::optional<double>>> rows;
};

struct SweepRequest {
  SweepSpec spec;
  bool with_truncated = true;
  bool with_asymptotic = false;
  bool with_mc = false;
  bool quasi_static = false;
  int threads = 1;
};

namespace detail {

// Work-stealing index loop; sweep points have very uneven costs, so static
// block partitioning would serialize behind the deepest cell.
template <class Body>
void for_each_index(std::size_t n, int threads, Body&& body) {
  const int cap = static_cast<int>(std::min<std::size_t>(n, 64));
  threads = std::clamp(threads, 1, std::max(cap, 1));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mu;
  std::exception_ptr error;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          body(i);
        } catch (...) {
          const std::scoped_lock lock(error_mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace detail

// The mc column stays empty where the analytic value says the configured
// sample count could not resolve the probability anyway.
inline constexpr double kMcSweepFloor = 1e-5;

inline SweepTable compute_sweep(const ScenarioConfig& base,
                                const SweepRequest& req) {
  base.validate();
  const SweepVariable v = req.spec.variable;
  const bool optimizer_sweep =
      v == SweepVariable::budget || v == SweepVariable::epsilon;
  require(!(req.quasi_static && (optimizer_sweep || v == SweepVariable::rho)),
          "this sweep variable has no quasi-static form");

  const std::vector<double> pts = sweep_points(req.spec);
  SweepTable table;
  table.columns.push_back(sweep_variable_name(v));
  if (optimizer_sweep) {
    if (v == SweepVariable::budget) {
      table.columns.push_back("opa_outage");
      table.columns.push_back("oepa_outage");
      for (int k = 1; k <= base.rounds; ++k)
        table.columns.push_back("theta_" + std::to_string(k));
    } else {
      table.columns.push_back("rate");
      table.columns.push_back("ltat");
    }
  } else {
    if (req.with_truncated) table.columns.push_back("truncated");
    if (req.with_asymptotic) table.columns.push_back("asymptotic");
    if (req.with_mc) {
      table.columns.push_back("mc");
      table.columns.push_back("mc_stderr");
    }
    if (v == SweepVariable::rho) {
      table.columns.push_back("varrho_eq");
      table.columns.push_back("varrho_exp");
    }
    if (v == SweepVariable::rate) {
      if (!req.quasi_static) table.columns.push_back("coding_gain");
      table.columns.push_back("coding_gain_qs");
    }
    if (v == SweepVariable::rounds && !req.quasi_static)
      table.columns.push_back("varrho");
  }

  table.rows.assign(pts.size(), {});
  // nested MC threading would oversubscribe a multi-point sweep
  const int mc_threads = pts.size() == 1 ? req.threads : 1;

  detail::for_each_index(pts.size(), req.threads, [&](std::size_t i) {
    const double x = pts[i];
    const ScenarioConfig pt = scenario_at(base, v, x);
    auto& cells = table.rows[i];
    cells.emplace_back(x);

    if (optimizer_sweep) {
      if (v == SweepVariable::budget) {
        const PowerProblem prob{pt.config(), *pt.optimize.p_given,
                                pt.optimize.backend, pt.contour};
        const OptimResult opa =
            optimize_power(prob, pt.optimize.certificate_step);
        const OptimResult oepa = optimize_equal_power(prob, 0.0);
        cells.emplace_back(opa.objective);
        cells.emplace_back(oepa.objective);
        for (double t : opa.argopt) cells.emplace_back(t);
      } else {
        const RateProblem prob{pt.config(), *pt.optimize.epsilon,
                               pt.optimize.backend, pt.contour};
        const OptimResult r =
            optimize_rate(prob, pt.optimize.certificate_step);
        cells.emplace_back(r.argopt.at(0));
        cells.emplace_back(r.objective);
      }
      return;
    }

    std::optional<double> analytic;
    if (req.with_truncated) {
      const double p =
          req.quasi_static
              ? outage_quasi_static(pt.config_quasi_static()).value
              : scenario_outage(pt, pt.config()).value;
      cells.emplace_back(p);
      analytic = p;
    }
    if (req.with_asymptotic) {
      const double p = req.quasi_static
                           ? scenario_quasi_static_asymptotic(pt)
                           : asymptotic_outage(pt.config(), pt.contour).value;
      cells.emplace_back(p);
      if (!analytic) analytic = p;
    }
    if (req.with_mc) {
      if (!analytic)
        analytic = req.quasi_static
                       ? scenario_quasi_static_asymptotic(pt)
                       : asymptotic_outage(pt.config(), pt.contour).value;
      if (*analytic < kMcSweepFloor) {
        cells.emplace_back(std::nullopt);
        cells.emplace_back(std::nullopt);
      } else {
        const McEstimate e =
            req.quasi_static
                ? mc_outage_quasi_static(pt.config_quasi_static(),
                                         pt.mc_samples, pt.mc_seed, mc_threads)
                : mc_outage(pt.config(), pt.mc_samples, pt.mc_seed,
                            mc_threads);
        cells.emplace_back(e.value);
        cells.emplace_back(e.std_error);
      }
    }
    if (v == SweepVariable::rho) {
      cells.emplace_back(
          correlation_factor(equicorrelated_lambda(pt.rounds, x), pt.shape)
              .varrho);
      cells.emplace_back(
          correlation_factor(exponential_lambda(pt.rounds, x), pt.shape)
              .varrho);
    }
    if (v == SweepVariable::rate) {
      if (!req.quasi_static)
        cells.emplace_back(
            coding_modulation_gain(x, pt.shape, pt.rounds, pt.contour));
      const auto qs = quasi_static_asymptotic(
          pt.shape, pt.rounds, pt.allocation()[0], pt.broadcast_sigma2()[0], x);
      cells.emplace_back(qs.coding_gain);
    }
    if (v == SweepVariable::rounds && !req.quasi_static)
      cells.emplace_back(correlation_factor(pt.lambda(), pt.shape).varrho);
  });

  return table;
}

}  // namespace harqir

#endif  // HARQIR_SCENARIO_HPP
