// Command-line driver: scenario files in, rows or CSV out.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "harqir/asymptotic.hpp"
#include "harqir/channel.hpp"
#include "harqir/foxh.hpp"
#include "harqir/optimize.hpp"
#include "harqir/outage.hpp"
#include "harqir/rng.hpp"
#include "harqir/scenario.hpp"
#include "harqir/specfun.hpp"

namespace {

using nlohmann::json;
using namespace harqir;

// 12 significant digits: strtod of the printed form re-prints identically,
// which is what keeps --replot-from a bit-stable round trip.
std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string join(const std::vector<std::string>& parts, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::vector<std::string> split_list(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

// ---------------------------------------------------------------------------
// Scenario files
// ---------------------------------------------------------------------------

[[noreturn]] void config_error(const std::string& where,
                               const std::string& what) {
  throw std::invalid_argument("config " + where + ": " + what);
}

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) config_error(where, "must be an object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* a : allowed)
      if (item.key() == a) {
        known = true;
        break;
      }
    if (!known) config_error(where, "unknown key \"" + item.key() + "\"");
  }
}

void parse_model(const json& j, ScenarioConfig& sc) {
  check_keys(j, "model", {"rounds", "shape", "sigma2", "correlation"});
  if (!j.contains("rounds")) config_error("model", "rounds is required");
  sc.rounds = j.at("rounds").get<int>();
  sc.shape = j.value("shape", 1);
  if (j.contains("sigma2")) {
    const json& s = j.at("sigma2");
    if (s.is_array())
      sc.sigma2 = s.get<std::vector<double>>();
    else
      sc.sigma2 = {s.get<double>()};
  }
  if (!j.contains("correlation"))
    config_error("model", "correlation block is required");
  const json& c = j.at("correlation");
  check_keys(c, "model.correlation",
             {"vector", "equicorrelated", "exponential"});
  const int forms = int(c.contains("vector")) +
                    int(c.contains("equicorrelated")) +
                    int(c.contains("exponential"));
  if (forms != 1)
    config_error("model.correlation",
                 "specify exactly one of vector, equicorrelated, exponential");
  if (c.contains("vector")) {
    sc.correlation = CorrelationForm::vector_form;
    sc.lambda_vector = c.at("vector").get<std::vector<double>>();
  } else if (c.contains("equicorrelated")) {
    sc.correlation = CorrelationForm::equicorrelated;
    sc.rho = c.at("equicorrelated").get<double>();
  } else {
    sc.correlation = CorrelationForm::exponential;
    sc.rho = c.at("exponential").get<double>();
  }
}

void parse_allocation(const json& j, ScenarioConfig& sc) {
  check_keys(j, "allocation", {"gamma_db", "gamma", "theta"});
  const bool has_db = j.contains("gamma_db");
  const bool has_lin = j.contains("gamma");
  if (has_db == has_lin)
    config_error("allocation",
                 "specify the mean SNR exactly once (gamma_db or gamma)");
  sc.gamma = has_db ? std::pow(10.0, j.at("gamma_db").get<double>() / 10.0)
                    : j.at("gamma").get<double>();
  if (j.contains("theta")) {
    const json& t = j.at("theta");
    if (t.is_string()) {
      if (t.get<std::string>() != "equal")
        config_error("allocation.theta",
                     "must be \"equal\" or an array of weights");
      sc.equal_power = true;
    } else {
      sc.equal_power = false;
      sc.theta = t.get<std::vector<double>>();
    }
  }
}

void parse_truncation(const json& j, ScenarioConfig& sc) {
  check_keys(j, "truncation", {"N", "epsilon"});
  if (j.contains("N") == j.contains("epsilon"))
    config_error("truncation", "specify exactly one of N and epsilon");
  if (j.contains("N")) {
    sc.truncation_order = j.at("N").get<int>();
    sc.truncation_epsilon.reset();
  } else {
    sc.truncation_epsilon = j.at("epsilon").get<double>();
    sc.truncation_order.reset();
  }
}

void parse_mc(const json& j, ScenarioConfig& sc) {
  check_keys(j, "mc", {"n", "seed"});
  if (j.contains("n")) sc.mc_samples = j.at("n").get<std::int64_t>();
  if (j.contains("seed")) sc.mc_seed = j.at("seed").get<std::uint64_t>();
}

void parse_contour(const json& j, ScenarioConfig& sc) {
  check_keys(j, "contour",
             {"abscissa", "half_extent", "nodes", "refinement", "max_nodes"});
  if (j.contains("abscissa"))
    sc.contour.abscissa = j.at("abscissa").get<double>();
  if (j.contains("half_extent"))
    sc.contour.half_extent = j.at("half_extent").get<double>();
  if (j.contains("nodes")) sc.contour.nodes = j.at("nodes").get<int>();
  if (j.contains("refinement"))
    sc.contour.refinement = j.at("refinement").get<double>();
  if (j.contains("max_nodes"))
    sc.contour.max_nodes = j.at("max_nodes").get<long>();
}

OutageBackend parse_backend(const std::string& name) {
  if (name == "truncated") return OutageBackend::truncated;
  if (name == "asymptotic") return OutageBackend::asymptotic;
  throw std::invalid_argument("config optimize.backend: unknown backend \"" +
                              name + "\" (expected truncated or asymptotic)");
}

void parse_optimize(const json& j, ScenarioConfig& sc) {
  check_keys(j, "optimize",
             {"p_given", "epsilon", "backend", "certificate_step"});
  if (j.contains("p_given"))
    sc.optimize.p_given = j.at("p_given").get<double>();
  if (j.contains("epsilon"))
    sc.optimize.epsilon = j.at("epsilon").get<double>();
  if (j.contains("backend"))
    sc.optimize.backend = parse_backend(j.at("backend").get<std::string>());
  if (j.contains("certificate_step"))
    sc.optimize.certificate_step = j.at("certificate_step").get<double>();
}

struct SweepFileSpec {
  SweepSpec spec;
  std::vector<std::string> methods;  // empty: decided by the --method flag
};

SweepFileSpec parse_sweep_block(const json& j) {
  check_keys(j, "sweep",
             {"variable", "from", "to", "steps", "log_scale", "methods"});
  SweepFileSpec out;
  if (!j.contains("variable")) config_error("sweep", "variable is required");
  out.spec.variable = parse_sweep_variable(j.at("variable").get<std::string>());
  if (!j.contains("from") || !j.contains("to"))
    config_error("sweep", "from and to are required");
  out.spec.from = j.at("from").get<double>();
  out.spec.to = j.at("to").get<double>();
  out.spec.steps = j.value("steps", 0);
  out.spec.log_scale = j.value("log_scale", false);
  if (j.contains("methods"))
    out.methods = j.at("methods").get<std::vector<std::string>>();
  return out;
}

struct ScenarioFile {
  ScenarioConfig scenario;
  std::optional<SweepFileSpec> sweep;
};

ScenarioFile load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw std::invalid_argument("config " + path + ": " + e.what());
  }
  ScenarioFile out;
  try {
    check_keys(j, "(top level)",
               {"model", "allocation", "rate", "truncation", "mc", "contour",
                "sweep", "optimize"});
    if (!j.contains("model")) config_error("(top level)", "model is required");
    if (!j.contains("allocation"))
      config_error("(top level)", "allocation is required");
    if (!j.contains("rate")) config_error("(top level)", "rate is required");
    parse_model(j.at("model"), out.scenario);
    parse_allocation(j.at("allocation"), out.scenario);
    out.scenario.rate = j.at("rate").get<double>();
    if (j.contains("truncation"))
      parse_truncation(j.at("truncation"), out.scenario);
    if (j.contains("mc")) parse_mc(j.at("mc"), out.scenario);
    if (j.contains("contour")) parse_contour(j.at("contour"), out.scenario);
    if (j.contains("optimize")) parse_optimize(j.at("optimize"), out.scenario);
    if (j.contains("sweep")) out.sweep = parse_sweep_block(j.at("sweep"));
    out.scenario.validate();
  } catch (const json::exception& e) {
    throw std::invalid_argument("config " + path + ": " + e.what());
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV plumbing
// ---------------------------------------------------------------------------

void write_sweep_csv(std::ostream& os, const SweepTable& t) {
  os << "# harqir sweep: rows=" << t.rows.size() << "\n";
  os << "# columns: " << join(t.columns, ",") << "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) os << ',';
      if (row[i]) os << num(*row[i]);
    }
    os << "\n";
  }
}

// comma split that leaves quoted fields intact
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
      cur += c;
    } else if (c == ',' && !quoted) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string reformat_field(const std::string& f) {
  if (f.empty()) return f;
  const char* s = f.c_str();
  char* end = nullptr;
  const double v = std::strtod(s, &end);
  if (end == s + f.size()) return num(v);
  return f;
}

void replot_csv(const std::string& path, std::ostream& os) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open CSV file " + path);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') {
      os << line << "\n";
      continue;
    }
    const auto fields = split_csv_line(line);
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) os << ',';
      os << reformat_field(fields[i]);
    }
    os << "\n";
  }
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

struct GlobalArgs {
  std::string config_path;
  std::string output_path;
  int threads = 1;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> methods;  // empty: command default
  bool quasi_static = false;
};

ScenarioFile load_required(const GlobalArgs& g) {
  if (g.config_path.empty())
    throw std::invalid_argument("this command needs --config PATH");
  ScenarioFile f = load_scenario(g.config_path);
  if (g.seed) f.scenario.mc_seed = *g.seed;
  return f;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::invalid_argument("cannot open output file " + path);
  return os;
}

int run_outage(const GlobalArgs& g) {
  const ScenarioFile f = load_required(g);
  const ScenarioConfig& sc = f.scenario;
  if (g.quasi_static) {
    const OutageResult r = outage_quasi_static(sc.config_quasi_static());
    std::printf("p_out=%s method=quasi_static\n", num(r.value).c_str());
    return 0;
  }
  OutageEvaluator eval(sc.config(), sc.contour);
  const int order = scenario_truncation_order(sc, eval);
  const OutageResult r = eval.truncated(order);
  std::printf("p_out=%s N=%d bound=%s terms=%llu distinct_cdf=%zu\n",
              num(r.value).c_str(), order,
              num(r.error_bound.value_or(0.0)).c_str(),
              static_cast<unsigned long long>(r.terms_evaluated),
              eval.distinct_cdf_evaluations());
  if (!g.output_path.empty()) {
    auto os = open_output(g.output_path);
    eval.write_term_diagnostics(os, order);
  }
  return 0;
}

int run_asymptotic(const GlobalArgs& g) {
  const ScenarioFile f = load_required(g);
  const ScenarioConfig& sc = f.scenario;
  if (g.quasi_static) {
    const double p = scenario_quasi_static_asymptotic(sc);
    const HarqConfig cfg = sc.config_quasi_static();
    const auto a = quasi_static_asymptotic(cfg.shape, cfg.rounds, cfg.theta[0],
                                           cfg.sigma2[0], cfg.rate);
    std::printf(
        "zeta=%s coding_gain=%s diversity=%s p_asy=%s regime_warning=%d\n",
        num(a.zeta).c_str(), num(a.coding_gain).c_str(),
        num(a.diversity).c_str(), num(p).c_str(), int(p > 0.1));
    return 0;
  }
  const AsymptoticBreakdown b = asymptotic_outage(sc.config(), sc.contour);
  std::printf(
      "zeta=%s varrho=%s coding_gain=%s diversity=%s p_asy=%s "
      "regime_warning=%d\n",
      num(b.zeta).c_str(), num(b.varrho).c_str(), num(b.coding_gain).c_str(),
      num(b.diversity).c_str(), num(b.value).c_str(), int(b.regime_warning));
  return 0;
}

int run_mc(const GlobalArgs& g) {
  const ScenarioFile f = load_required(g);
  const ScenarioConfig& sc = f.scenario;
  const McEstimate e =
      g.quasi_static
          ? mc_outage_quasi_static(sc.config_quasi_static(), sc.mc_samples,
                                   sc.mc_seed, g.threads)
          : mc_outage(sc.config(), sc.mc_samples, sc.mc_seed, g.threads);
  std::printf("p=%s stderr=%s n=%lld\n", num(e.value).c_str(),
              num(e.std_error).c_str(), static_cast<long long>(e.samples));
  return 0;
}

void apply_methods(const std::vector<std::string>& names, SweepRequest& req) {
  req.with_truncated = false;
  req.with_asymptotic = false;
  req.with_mc = false;
  for (const std::string& n : names) {
    if (n == "truncated")
      req.with_truncated = true;
    else if (n == "asymptotic")
      req.with_asymptotic = true;
    else if (n == "mc")
      req.with_mc = true;
    else
      throw std::invalid_argument(
          "unknown method \"" + n +
          "\" (expected truncated, asymptotic, or mc)");
  }
  if (!req.with_truncated && !req.with_asymptotic && !req.with_mc)
    throw std::invalid_argument("the method list is empty");
}

int run_sweep(const GlobalArgs& g, const std::string& replot_from) {
  std::ofstream file;
  std::ostream* os = &std::cout;
  if (!g.output_path.empty()) {
    file = open_output(g.output_path);
    os = &file;
  }
  if (!replot_from.empty()) {
    replot_csv(replot_from, *os);
    return 0;
  }
  const ScenarioFile f = load_required(g);
  if (!f.sweep)
    throw std::invalid_argument("the scenario file has no sweep block");
  SweepRequest req;
  req.spec = f.sweep->spec;
  req.quasi_static = g.quasi_static;
  req.threads = g.threads;
  if (!g.methods.empty())
    apply_methods(g.methods, req);
  else if (!f.sweep->methods.empty())
    apply_methods(f.sweep->methods, req);
  const SweepTable table = compute_sweep(f.scenario, req);
  write_sweep_csv(*os, table);
  return 0;
}

std::string alloc_string(const std::vector<double>& theta) {
  std::vector<std::string> parts;
  parts.reserve(theta.size());
  for (double t : theta) parts.push_back(num(t));
  return join(parts, ",");
}

int run_optimize_power(const GlobalArgs& g) {
  const ScenarioFile f = load_required(g);
  const ScenarioConfig& sc = f.scenario;
  if (g.quasi_static)
    throw std::invalid_argument(
        "power optimization has no quasi-static form");
  if (!sc.optimize.p_given)
    throw std::invalid_argument(
        "optimize-power needs optimize.p_given in the scenario file");
  const PowerProblem prob{sc.config(), *sc.optimize.p_given,
                          sc.optimize.backend, sc.contour};
  const OptimResult opa = optimize_power(prob, sc.optimize.certificate_step);
  const OptimResult oepa =
      optimize_equal_power(prob, sc.optimize.certificate_step);
  const auto print_scheme = [](const char* name, const OptimResult& r) {
    std::printf("scheme=%s outage=%s theta=%s iterations=%d converged=%d "
                "slack=%s",
                name, num(r.objective).c_str(), alloc_string(r.argopt).c_str(),
                r.iterations, int(r.converged),
                num(r.feasibility_slack).c_str());
    if (r.certificate_gap)
      std::printf(" certificate_gap=%s", num(*r.certificate_gap).c_str());
    std::printf("\n");
  };
  print_scheme("opa", opa);
  print_scheme("oepa", oepa);
  return 0;
}

int run_optimize_rate(const GlobalArgs& g) {
  const ScenarioFile f = load_required(g);
  const ScenarioConfig& sc = f.scenario;
  if (g.quasi_static)
    throw std::invalid_argument("rate optimization has no quasi-static form");
  if (!sc.optimize.epsilon)
    throw std::invalid_argument(
        "optimize-rate needs optimize.epsilon in the scenario file");
  const RateProblem prob{sc.config(), *sc.optimize.epsilon,
                         sc.optimize.backend, sc.contour};
  const OptimResult r = optimize_rate(prob, sc.optimize.certificate_step);
  std::printf("rate=%s ltat=%s iterations=%d converged=%d slack=%s",
              num(r.argopt.at(0)).c_str(), num(r.objective).c_str(),
              r.iterations, int(r.converged),
              num(r.feasibility_slack).c_str());
  if (r.certificate_gap)
    std::printf(" certificate_gap=%s", num(*r.certificate_gap).c_str());
  std::printf("\n");
  return 0;
}

// ---------------------------------------------------------------------------
// Self tests
// ---------------------------------------------------------------------------

namespace selftest {

void check(bool cond, const std::string& what) {
  if (!cond) throw std::runtime_error(what);
}

void check_close(double got, double want, double tol, const char* what) {
  const double scale = std::max(1.0, std::abs(want));
  if (!(std::abs(got - want) <= tol * scale))
    throw std::runtime_error(std::string(what) + ": got " + num(got) +
                             ", want " + num(want));
}

struct Runner {
  int failed = 0;

  template <class F>
  void operator()(const char* name, F&& body) {
    const auto t0 = std::chrono::steady_clock::now();
    std::string what;
    try {
      body();
    } catch (const std::exception& e) {
      what = e.what();
      if (what.empty()) what = "check failed";
    }
    const double dt =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    if (what.empty()) {
      std::printf("ok   %-46s %6.2fs\n", name, dt);
    } else {
      ++failed;
      std::printf("FAIL %-46s %6.2fs\n     %s\n", name, dt, what.c_str());
    }
    std::fflush(stdout);
  }
};

HarqConfig eq_config(int k, int m, double rho, double snr_db, double rate) {
  HarqConfig cfg;
  cfg.rounds = k;
  cfg.shape = m;
  cfg.lambda = equicorrelated_lambda(k, rho);
  cfg.sigma2.assign(static_cast<std::size_t>(k), 1.0);
  cfg.theta.assign(static_cast<std::size_t>(k), 1.0);
  cfg.snr = std::pow(10.0, snr_db / 10.0);
  cfg.rate = rate;
  return cfg;
}

ContourSpec at(double c) {
  ContourSpec spec;
  spec.abscissa = c;
  return spec;
}

// Two-factor kernel spec with every factor strictly non-degenerate, so any
// abscissa gives a pole-free contour for the identity checks.  The last
// parameter stays above 1.2 on both factors to keep the integrand decay
// summable within the node budget.
FoxHSpec random_spec(const counter_rng& rng, std::uint64_t draw) {
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

void gamma_checks() {
  check_close(std::exp(log_gamma(0.5)), std::sqrt(M_PI), 1e-13, "Gamma(1/2)");
  check_close(std::exp(log_gamma(5.0)), 24.0, 1e-13, "Gamma(5)");
  // reflection at a complex point
  const cdouble z(0.3, 0.4);
  const cdouble lhs = std::exp(log_gamma(z) + log_gamma(1.0 - z));
  const cdouble rhs = M_PI / std::sin(M_PI * z);
  check(std::abs(lhs - rhs) <= 1e-12 * std::abs(rhs),
        "complex reflection formula");
  for (double x : {0.1, 1.0, 5.0})
    check_close(regularized_lower_gamma(1.0, x), -std::expm1(-x), 1e-13,
                "P(1,x)");
  check_close(regularized_lower_gamma(3.0, 2.0), 1.0 - 5.0 * std::exp(-2.0),
              1e-13, "P(3,2)");
  for (double a : {0.5, 1.5, 3.0, 7.0})
    for (double x : {0.5, 2.0, 10.0})
      check_close(
          regularized_lower_gamma(a, x) + regularized_upper_gamma(a, x), 1.0,
          1e-13, "P+Q=1");
}

void incomplete_gamma_recurrence() {
  // P(a+1,x) = P(a,x) - x^a e^{-x} / Gamma(a+1)  (DLMF 8.8.5)
  for (double a : {0.5, 1.5, 3.0})
    for (double x : {0.5, 2.0, 8.0}) {
      const double lhs = regularized_lower_gamma(a + 1.0, x);
      const double rhs = regularized_lower_gamma(a, x) -
                         std::exp(a * std::log(x) - x - log_gamma(a + 1.0));
      check_close(lhs, rhs, 1e-13, "incomplete gamma recurrence");
    }
  check_close(regularized_lower_gamma(1.0, 1.0), 1.0 - std::exp(-1.0), 1e-14,
              "P(1,1)");
}

void hypergeometric_checks() {
  check_close(pochhammer(3.5, 4), 3.5 * 4.5 * 5.5 * 6.5, 1e-13, "pochhammer");
  check_close(hyp_0f1(0.5, 1.3 * 1.3 / 4.0), std::cosh(1.3), 1e-12,
              "0F1 cosh relation");
  for (double z : {0.3, 2.5})
    check_close(hyp_1f1(1.0, 2.0, z), std::expm1(z) / z, 1e-12,
                "1F1(1;2;z)");
  {
    // Kummer transformation
    const double a = 0.7, b = 2.3, z = 1.4;
    check_close(hyp_1f1(a, b, z), std::exp(z) * hyp_1f1(b - a, b, -z), 1e-10,
                "Kummer transformation");
  }
  check_close(hyp_2f1(1.0, 1.0, 2.0, 0.4), -std::log(0.6) / 0.4, 1e-12,
              "2F1(1,1;2;z)");
  {
    // Euler transformation
    const double a = 0.5, b = 0.8, c = 2.2, z = 0.3;
    check_close(hyp_2f1(a, b, c, z),
                std::pow(1.0 - z, c - a - b) * hyp_2f1(c - a, c - b, c, z),
                1e-10, "Euler transformation");
  }
}

void tricomi_checks() {
  for (double a : {0.8, 1.6})
    for (double z : {0.7, 2.2})
      check_close(tricomi_psi(a, a + 1.0, z), std::pow(z, -a), 1e-10,
                  "Psi(a,a+1;z) = z^-a");
  // Psi(1, 1+s; z) against the upper incomplete gamma (DLMF 8.4 family)
  for (double s : {0.7, 1.6, 2.4}) {
    const double z = 1.9;
    const double want = std::exp(z) * std::pow(z, -s) *
                        regularized_upper_gamma(s, z) * std::tgamma(s);
    check_close(tricomi_psi(1.0, 1.0 + s, z), want, 1e-9, "Psi vs Gamma(s,z)");
  }
}

void mellin_step_checks() {
  const auto hi = meijer_g({1.0}, {0.0}, 0, 1, 2.0, at(-0.5));
  check(std::abs(hi.value - 1.0) <= 1e-7, "unit step above 1");
  const auto lo = meijer_g({1.0}, {0.0}, 0, 1, 0.5, at(-0.5));
  check(std::abs(lo.value) <= 1e-7, "unit step below 1");
  for (int p : {1, 2, 3}) {
    for (double x : {1.5, 4.0}) {
      const double want = std::pow(x - 1.0, p) / std::tgamma(p + 1.0);
      const auto got =
          meijer_g({1.0, 1.0 + p}, {1.0, 0.0}, 0, 2, x, at(-(p + 0.5)));
      check_close(got.value, want, 1e-8, "polynomial Mellin pair");
    }
    const auto zero =
        meijer_g({1.0, 1.0 + p}, {1.0, 0.0}, 0, 2, 0.5, at(-(p + 0.5)));
    check(std::abs(zero.value) <= 1e-8, "polynomial pair below support");
  }
}

void kernel_identity_checks(int specs) {
  const counter_rng rng(20260818u, 7u);
  for (int i = 0; i < specs; ++i) {
    const FoxHSpec spec = random_spec(rng, static_cast<std::uint64_t>(i));
    const auto ux = rng.uniform_pair(static_cast<std::uint64_t>(i), 3);
    const double x = 1.2 + 1.8 * ux[0];
    const double c = 0.4;
    const double rho = 0.3 + 0.7 * ux[1];
    const double base = fox_h(spec, x, at(c)).value;
    const double moved =
        fox_h(property_shift(spec, rho), x, at(c - rho)).value;
    check(std::abs(moved - std::pow(x, rho) * base) <=
              1e-7 * std::max(1.0, std::abs(base)),
          "argument-power identity, spec " + std::to_string(i));
    const double direct = fox_h(spec, 1.0 / x, at(c)).value;
    const double flipped = fox_h(property_invert(spec), x, at(-c)).value;
    check(std::abs(flipped - direct) <=
              1e-7 * std::max(1.0, std::abs(direct)),
          "inversion identity, spec " + std::to_string(i));
  }
}

void cdf_reference_checks() {
  // one factor: F(x) = P(phi, (x-1)/omega)
  const std::vector<double> om1{2.0};
  const std::vector<int> ph1{2};
  check_close(shifted_gamma_product_cdf(om1, ph1, 3.0),
              regularized_lower_gamma(2.0, 1.0), 1e-12, "single factor CDF");
  const std::vector<double> om2{1.8, 1.8};
  const std::vector<int> ph2{1, 1};
  check_close(shifted_gamma_product_cdf(om2, ph2, 4.0),
              0.35280769965145442, 5e-8, "two-factor reference");
  const std::vector<double> om3{0.9, 2.4};
  const std::vector<int> ph3{2, 3};
  check_close(shifted_gamma_product_cdf(om3, ph3, 5.5),
              0.035720988324498603, 5e-8, "mixed-shape reference");
  // monotone in x
  const std::vector<double> om4{1.0, 2.0};
  const std::vector<int> ph4{1, 2};
  double prev = 0.0;
  for (double x : {1.5, 2.0, 3.0, 5.0, 9.0}) {
    const double v = shifted_gamma_product_cdf(om4, ph4, x);
    check(v >= prev - 1e-12 && v <= 1.0, "CDF monotone in x");
    prev = v;
  }
}

void region_moment_checks() {
  const std::vector<int> one{1};
  check_close(region_moment(one, 4.0), 3.0, 1e-12, "one-round moment");
  const std::vector<int> pair{1, 1};
  check_close(region_moment(pair, 4.0), 4.0 * std::log(4.0) - 3.0, 1e-10,
              "two-round moment");
  const std::vector<int> mixed{2, 1};
  check_close(region_moment(mixed, 4.0),
              (16.0 - 1.0 - 2.0 * 4.0 * std::log(4.0)) / 2.0, 1e-10,
              "mixed-shape moment");
  const std::vector<int> triple{1, 1, 1};
  check_close(region_moment(triple, 2.0), 0.094158652798310806, 1e-6,
              "three-round moment");
  const std::vector<int> heavy{2, 3, 4};
  check_close(region_moment(heavy, 2.8284271247461903),
              3.6099856080022513e-4, 1e-6, "heavy-shape moment");
}

void series_bound_mc_check() {
  const HarqConfig cfg = eq_config(2, 1, 0.5, 10.0, 2.0);
  OutageEvaluator eval(cfg);
  const int n = eval.min_order(1e-6, 30);
  const double p = eval.truncated(n).value;
  const McEstimate mc = mc_outage(cfg, 200000, 20260818);
  check(std::abs(p - mc.value) <= 4.0 * mc.std_error + 1e-6,
        "series vs Monte Carlo: " + num(p) + " vs " + num(mc.value) +
            " +- " + num(mc.std_error));
  const double p3 = eval.truncated(3).value;
  const double p9 = eval.truncated(9).value;
  check(std::abs(p9 - p3) <= eval.bound(3).value * (1.0 + 1e-9),
        "observed truncation drift exceeds the bound");
  double prev = 2.0;
  for (int i = 0; i <= 5; ++i) {
    const double b = eval.bound(i).value;
    check(b < prev, "bound not strictly decreasing at N=" + std::to_string(i));
    prev = b;
  }
}

void quasi_static_check() {
  HarqConfig cfg = eq_config(3, 1, 0.0, 7.0, 1.5);
  const double x =
      (std::exp2(cfg.rate / cfg.rounds) - 1.0) / (cfg.snr);
  check_close(outage_quasi_static(cfg).value, -std::expm1(-x), 1e-12,
              "Rayleigh frozen-channel closed form");
  cfg.shape = 2;
  check_close(outage_quasi_static(cfg).value,
              regularized_lower_gamma(2.0, 2.0 * x), 1e-12,
              "shape-2 frozen-channel closed form");
  const McEstimate mc = mc_outage_quasi_static(cfg, 100000, 7);
  check(std::abs(outage_quasi_static(cfg).value - mc.value) <=
            4.0 * mc.std_error,
        "frozen-channel Monte Carlo disagrees");
}

void asymptote_check() {
  const HarqConfig cfg = eq_config(2, 1, 0.5, 45.0, 2.0);
  const double pa = asymptotic_outage(cfg).value;
  const double pt = OutageEvaluator(cfg).evaluate(1e-8, 12).value;
  const double ratio = pa / pt;
  check(ratio > 0.85 && ratio < 1.15,
        "asymptote ratio " + num(ratio) + " outside [0.85, 1.15]");
}

void optimizer_check() {
  const HarqConfig cfg = eq_config(2, 1, 0.5, 10.0, 2.0);
  const PowerProblem pp{cfg, 2.0, OutageBackend::asymptotic, {}};
  const OptimResult opa = optimize_power(pp, 0.0);
  const OptimResult oepa = optimize_equal_power(pp, 0.0);
  check(opa.objective <= oepa.objective * (1.0 + 1e-9),
        "unequal allocation lost to the equal one");
  const RateProblem rp{cfg, 0.1, OutageBackend::asymptotic, {}};
  const OptimResult r = optimize_rate(rp);
  check(r.converged && r.argopt.at(0) > 0.0 &&
            r.feasibility_slack >= -1e-9,
        "rate selection failed to converge feasibly");
}

// full-level additions

void grid_mc_check() {
  for (int k : {2, 3})
    for (int m : {1, 2})
      for (double rho : {0.0, 0.5})
        for (double rate : {1.0, 2.0})
          for (double snr_db : {10.0, 20.0}) {
            const HarqConfig cfg = eq_config(k, m, rho, snr_db, rate);
            OutageEvaluator eval(cfg);
            int order = 40;
            try {
              order = eval.min_order(1e-6, 40);
            } catch (const truncation_cap_error&) {
            }
            const double p = eval.truncated(order).value;
            if (p < 1e-3) continue;
            const McEstimate mc = mc_outage(cfg, 100000, 20260818);
            check(std::abs(p - mc.value) <=
                      std::max(4.0 * mc.std_error, 2e-3),
                  "cell K=" + std::to_string(k) + " m=" + std::to_string(m) +
                      " rho=" + num(rho) + " R=" + num(rate) + " snr_db=" +
                      num(snr_db) + ": " + num(p) + " vs " + num(mc.value));
          }
}

void majorization_check() {
  const counter_rng rng(97531u, 3u);
  int done = 0;
  for (std::uint64_t draw = 0; done < 10; ++draw) {
    const int k = 2 + int(draw % 2);
    const double cap = k == 2 ? 0.8 : 0.5;
    std::vector<double> l1(k), l2(k);
    for (int i = 0; i < k; ++i) {
      const auto u = rng.uniform_pair(draw, static_cast<std::uint32_t>(i));
      l2[i] = cap * u[0];
      l1[i] = l2[i] * u[1];
    }
    HarqConfig c2 = eq_config(k, 1, 0.0, 12.0, 1.0);
    c2.lambda = l2;
    HarqConfig c1 = c2;
    c1.lambda = l1;
    OutageEvaluator e1(c1), e2(c2);
    int n1 = 40, n2 = 40;
    try {
      n1 = e1.min_order(1e-4, 40);
    } catch (const truncation_cap_error&) {
    }
    try {
      n2 = e2.min_order(1e-4, 40);
    } catch (const truncation_cap_error&) {
    }
    const auto r1 = e1.truncated(n1);
    const auto r2 = e2.truncated(n2);
    const double slack =
        r1.error_bound.value_or(0.0) + r2.error_bound.value_or(0.0);
    check(r1.value <= r2.value + slack,
          "monotonicity failed on pair " + std::to_string(done));
    ++done;
  }
}

void rate_convexity_selfcheck() {
  std::vector<double> grid;
  for (int i = 0; i <= 8; ++i) grid.push_back(0.5 + 3.5 * i / 8.0);
  for (int m : {1, 2}) {
    const auto rep = rate_convexity_check(m, 2, grid, {}, 5);
    check(rep.pass, "rate grid check failed for shape " + std::to_string(m) +
                        " (max residual " + num(rep.max_residual) + ")");
  }
}

void quasi_static_mc_check() {
  const HarqConfig cfg = eq_config(4, 1, 0.0, 10.0, 1.0);
  const double p = outage_quasi_static(cfg).value;
  const McEstimate mc = mc_outage_quasi_static(cfg, 1000000, 11);
  check(std::abs(p - mc.value) <= 4.0 * mc.std_error,
        "frozen-channel Monte Carlo at n=1e6: " + num(p) + " vs " +
            num(mc.value));
}

void sweep_relationship_check() {
  ScenarioConfig sc;
  sc.rounds = 2;
  sc.shape = 1;
  sc.correlation = CorrelationForm::equicorrelated;
  sc.rho = 0.5;
  sc.gamma = 100.0;
  sc.rate = 2.0;
  sc.truncation_epsilon = 1e-6;
  sc.mc_samples = 20000;

  {
    SweepRequest req;
    req.spec = {SweepVariable::gamma_db, 0.0, 30.0, 7, false};
    req.threads = 2;
    const SweepTable t = compute_sweep(sc, req);
    check(t.rows.size() == 7, "gamma sweep row count");
    for (std::size_t i = 1; i < t.rows.size(); ++i)
      check(*t.rows[i][1] < *t.rows[i - 1][1],
            "outage not decreasing in snr");
  }
  {
    SweepRequest req;
    req.spec = {SweepVariable::rho, 0.0, 0.9, 7, false};
    req.with_truncated = false;
    req.with_asymptotic = true;
    const SweepTable t = compute_sweep(sc, req);
    double prev = 0.0;
    for (const auto& row : t.rows) {
      const double eq = *row[2], ex = *row[3];
      check(ex <= eq * (1.0 + 1e-12), "varrho_exp above varrho_eq");
      check(eq >= prev - 1e-12, "varrho_eq not nondecreasing");
      prev = eq;
    }
  }
  {
    SweepRequest req;
    req.spec = {SweepVariable::rate, 0.5, 6.0, 6, false};
    req.with_truncated = false;
    req.with_asymptotic = true;
    const SweepTable t = compute_sweep(sc, req);
    double prev = 1e300;
    for (const auto& row : t.rows) {
      const double corr = *row[2], qs = *row[3];
      check(corr < prev, "coding gain not decreasing in rate");
      check(qs >= corr, "frozen-channel gain below the correlated one");
      prev = corr;
    }
  }
  {
    SweepRequest req;
    req.spec = {SweepVariable::rounds, 1.0, 5.0, 0, false};
    req.with_truncated = false;
    req.with_asymptotic = true;
    ScenarioConfig sk = sc;
    sk.rho = 0.6;
    sk.rate = 1.0;
    const SweepTable t = compute_sweep(sk, req);
    double prev = 0.0;
    for (const auto& row : t.rows) {
      check(*row[2] >= prev - 1e-12, "varrho not nondecreasing in rounds");
      prev = *row[2];
    }
  }
  {
    SweepRequest req;
    req.spec = {SweepVariable::epsilon, 0.05, 0.8, 4, false};
    ScenarioConfig se = sc;
    se.gamma = 10.0;
    se.optimize.backend = OutageBackend::asymptotic;
    const SweepTable t = compute_sweep(se, req);
    double prev = 0.0;
    for (const auto& row : t.rows) {
      check(*row[2] >= prev * (1.0 - 1e-6),
            "throughput not nondecreasing in the outage cap");
      prev = *row[2];
    }
  }
  {
    SweepRequest req;
    req.spec = {SweepVariable::budget, 1.0, 3.0, 3, false};
    ScenarioConfig sb = sc;
    sb.gamma = 10.0;
    sb.optimize.backend = OutageBackend::asymptotic;
    const SweepTable t = compute_sweep(sb, req);
    for (const auto& row : t.rows)
      check(*row[1] <= *row[2] * (1.0 + 1e-9),
            "unequal allocation lost to the equal one in a sweep");
  }
}

int run(bool full) {
  Runner r;
  r("log-gamma and incomplete gamma", gamma_checks);
  r("incomplete gamma recurrence", incomplete_gamma_recurrence);
  r("hypergeometric identities", hypergeometric_checks);
  r("tricomi psi identities", tricomi_checks);
  r("step and polynomial Mellin pairs", mellin_step_checks);
  r("kernel shift and inversion identities", [] { kernel_identity_checks(5); });
  r("gamma-product CDF references", cdf_reference_checks);
  r("region moments against closed forms", region_moment_checks);
  r("series, bound, and Monte Carlo agree", series_bound_mc_check);
  r("frozen-channel closed form", quasi_static_check);
  r("asymptote matches the series at high SNR", asymptote_check);
  r("power and rate optimizers", optimizer_check);
  if (full) {
    r("series vs Monte Carlo on a parameter grid", grid_mc_check);
    r("correlation majorization on random pairs", majorization_check);
    r("rate grid monotone and convex", rate_convexity_selfcheck);
    r("frozen-channel Monte Carlo at n=1e6", quasi_static_mc_check);
    r("sweep relationship suite", sweep_relationship_check);
  }
  if (r.failed) std::printf("%d check(s) failed\n", r.failed);
  return r.failed ? 1 : 0;
}

int run_specialfun() {
  Runner r;
  r("log-gamma and incomplete gamma", gamma_checks);
  r("incomplete gamma recurrence", incomplete_gamma_recurrence);
  r("hypergeometric identities", hypergeometric_checks);
  r("tricomi psi identities", tricomi_checks);
  r("step and polynomial Mellin pairs", mellin_step_checks);
  r("kernel shift and inversion identities",
    [] { kernel_identity_checks(20); });
  r("region moments against closed forms", region_moment_checks);
  if (r.failed) std::printf("%d check(s) failed\n", r.failed);
  return r.failed ? 1 : 0;
}

}  // namespace selftest

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Outage analysis for incremental-redundancy HARQ over time-correlated "
      "Nakagami-m fading"};
  app.require_subcommand(1);

  GlobalArgs g;
  std::string method_list;
  std::string replot_from;
  std::string level = "quick";

  app.add_option("--config", g.config_path, "scenario file (JSON)");
  app.add_option("--output", g.output_path,
                 "write CSV output here instead of stdout");
  app.add_option("--threads", g.threads, "worker thread cap")
      ->check(CLI::PositiveNumber);
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value,
                                  "override the scenario Monte-Carlo seed");
  auto* method_opt =
      app.add_option("--method", method_list,
                     "comma list of sweep columns: truncated,asymptotic,mc");
  app.add_flag("--quasi-static", g.quasi_static,
               "one channel realization is shared by every round");

  auto* c_outage =
      app.add_subcommand("outage", "truncated-series outage probability");
  auto* c_asy = app.add_subcommand("asymptotic", "high-SNR factorization");
  auto* c_mc = app.add_subcommand("mc", "Monte-Carlo outage estimate");
  auto* c_sweep =
      app.add_subcommand("sweep", "CSV sweep over one scenario variable");
  auto* c_opow = app.add_subcommand("optimize-power",
                                    "outage-minimal power allocation");
  auto* c_orate = app.add_subcommand(
      "optimize-rate", "throughput-maximal rate under an outage cap");
  auto* c_self =
      app.add_subcommand("selftest", "run the built-in invariant suite");
  auto* c_selfsf = app.add_subcommand("selftest-specialfun",
                                      "run the special-function suite");
  for (auto* sub : {c_outage, c_asy, c_mc, c_sweep, c_opow, c_orate, c_self,
                    c_selfsf})
    sub->fallthrough();
  c_self->add_option("level", level, "quick or full")
      ->check(CLI::IsMember({"quick", "full"}));
  c_sweep->add_option("--replot-from", replot_from,
                      "re-emit an existing CSV unchanged");

  CLI11_PARSE(app, argc, argv);

  if (seed_opt->count()) g.seed = seed_value;
  if (method_opt->count()) g.methods = split_list(method_list, ',');

  try {
    if (app.got_subcommand(c_outage)) return run_outage(g);
    if (app.got_subcommand(c_asy)) return run_asymptotic(g);
    if (app.got_subcommand(c_mc)) return run_mc(g);
    if (app.got_subcommand(c_sweep)) return run_sweep(g, replot_from);
    if (app.got_subcommand(c_opow)) return run_optimize_power(g);
    if (app.got_subcommand(c_orate)) return run_optimize_rate(g);
    if (app.got_subcommand(c_self)) return selftest::run(level == "full");
    if (app.got_subcommand(c_selfsf)) return selftest::run_specialfun();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
