#pragma once

// Time-correlated Nakagami-m block-fading channel and Monte-Carlo
// estimators for HARQ-IR outage quantities.
//
// The fading amplitude of round k is built from m complex Gaussian
// components shared with a common anchor vector:
//
//   h_k = sqrt(sigma2_k / m) * || sqrt(1 - lambda_k^2) v_k + lambda_k v_0 ||
//
// where v_0, v_1, ..., v_K are i.i.d. standard complex Gaussian vectors of
// length m.  This makes |h_k|^2 marginally Gamma(m, sigma2_k/m) while the
// squared envelopes of two rounds have correlation lambda_l^2 lambda_k^2.
// The received SNR of round k is gamma_k = snr * theta_k * |h_k|^2.

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "harqir/common.hpp"
#include "harqir/rng.hpp"
#include "harqir/specfun.hpp"

namespace harqir {

// Complete parameter set of one HARQ-IR session.
struct HarqConfig {
  int rounds = 0;               // K, maximum number of transmission rounds
  int shape = 1;                // m, Nakagami shape (positive integer)
  std::vector<double> lambda;   // per-round correlation coefficient, in [0, 1)
  std::vector<double> sigma2;   // per-round average channel power
  std::vector<double> theta;    // per-round transmit power weight
  double snr = 0.0;             // average SNR (linear scale)
  double rate = 0.0;            // initial code rate R in bits per channel use

  void validate() const {
    require(rounds >= 1, "rounds must be at least 1");
    require(shape >= 1, "shape must be a positive integer");
    const auto k = static_cast<std::size_t>(rounds);
    require(lambda.size() == k, "lambda must have one entry per round");
    require(sigma2.size() == k, "sigma2 must have one entry per round");
    require(theta.size() == k, "theta must have one entry per round");
    for (double l : lambda) {
      require(l >= 0.0, "lambda must be non-negative");
      require(l < 1.0,
              "lambda = 1 is a fully correlated channel; "
              "use the quasi-static model instead");
    }
    for (double s : sigma2) require(s > 0.0, "sigma2 must be positive");
    for (double t : theta) require(t > 0.0, "theta must be positive");
    require(snr > 0.0 && std::isfinite(snr), "snr must be positive");
    require(rate >= 0.0 && std::isfinite(rate), "rate must be non-negative");
  }

  // Gamma scale u_k of the unconditional per-round SNR gamma_k.
  double snr_scale(int k) const {
    return snr * theta[static_cast<std::size_t>(k)] *
           sigma2[static_cast<std::size_t>(k)] / shape;
  }

  // Omega_k, the scale of the anchor-independent part of gamma_k.
  double residual_scale(int k) const {
    const double l = lambda[static_cast<std::size_t>(k)];
    return snr_scale(k) * (1.0 - l * l);
  }
};

// Point estimate with its standard error.
struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::int64_t samples = 0;
};

// Accumulated mutual information of one decoding attempt,
// sum_k log2(1 + gamma_k).
inline double accumulated_information(std::span<const double> snrs) {
  double total = 0.0;
  for (double g : snrs) total += std::log2(1.0 + g);
  return total;
}

// Deterministic counter-keyed sampler: realization `draw` is a pure
// function of (seed, stream, draw), so results do not depend on how draws
// are partitioned across threads.
class ChannelSampler {
 public:
  ChannelSampler(const HarqConfig& cfg, std::uint64_t seed,
                 std::uint32_t stream = 0)
      : cfg_(cfg), rng_(seed, stream) {
    cfg_.validate();
  }

  const HarqConfig& config() const { return cfg_; }

  // Squared norm of the anchor vector; distributed Gamma(m, 1).
  double anchor_norm2(std::uint64_t draw) const {
    double acc = 0.0;
    for (int l = 0; l < cfg_.shape; ++l)
      acc += std::norm(rng_.complex_normal(draw, anchor_slot(l)));
    return acc;
  }

  // Fills gammas[k] with the received SNR of round k for this realization.
  void snrs(std::uint64_t draw, std::vector<double>& gammas) const {
    const int m = cfg_.shape;
    gammas.assign(static_cast<std::size_t>(cfg_.rounds), 0.0);
    std::vector<cdouble> anchor(static_cast<std::size_t>(m));
    for (int l = 0; l < m; ++l)
      anchor[static_cast<std::size_t>(l)] =
          rng_.complex_normal(draw, anchor_slot(l));
    for (int k = 0; k < cfg_.rounds; ++k) {
      const double lam = cfg_.lambda[static_cast<std::size_t>(k)];
      const double mix = std::sqrt(1.0 - lam * lam);
      double acc = 0.0;
      for (int l = 0; l < m; ++l) {
        const cdouble fresh = rng_.complex_normal(draw, round_slot(k, l));
        acc += std::norm(mix * fresh + lam * anchor[static_cast<std::size_t>(l)]);
      }
      gammas[static_cast<std::size_t>(k)] =
          cfg_.snr * cfg_.theta[static_cast<std::size_t>(k)] *
          cfg_.sigma2[static_cast<std::size_t>(k)] / m * acc;
    }
  }

  // SNR of round k with the anchor pinned to squared norm t.  The
  // conditional law depends on the anchor only through its norm, so the
  // anchor is fixed to (sqrt(t), 0, ..., 0) without loss of generality.
  double snr_given_anchor_norm2(std::uint64_t draw, int k, double t) const {
    const int m = cfg_.shape;
    const double lam = cfg_.lambda[static_cast<std::size_t>(k)];
    const double mix = std::sqrt(1.0 - lam * lam);
    double acc = 0.0;
    for (int l = 0; l < m; ++l) {
      cdouble z = mix * rng_.complex_normal(draw, round_slot(k, l));
      if (l == 0) z += lam * std::sqrt(t);
      acc += std::norm(z);
    }
    return cfg_.snr * cfg_.theta[static_cast<std::size_t>(k)] *
           cfg_.sigma2[static_cast<std::size_t>(k)] / m * acc;
  }

  // Single shared realization reused by every round (quasi-static case).
  // The channel power is taken from sigma2[0]; lambda is irrelevant here.
  void snrs_quasi_static(std::uint64_t draw, std::vector<double>& gammas) const {
    const double h2 = cfg_.sigma2[0] / cfg_.shape * anchor_norm2(draw);
    gammas.assign(static_cast<std::size_t>(cfg_.rounds), 0.0);
    for (int k = 0; k < cfg_.rounds; ++k)
      gammas[static_cast<std::size_t>(k)] =
          cfg_.snr * cfg_.theta[static_cast<std::size_t>(k)] * h2;
  }

 private:
  static std::uint32_t anchor_slot(int l) {
    return static_cast<std::uint32_t>(l);
  }
  std::uint32_t round_slot(int k, int l) const {
    return static_cast<std::uint32_t>(cfg_.shape + k * cfg_.shape + l);
  }

  HarqConfig cfg_;
  counter_rng rng_;
};

namespace detail {

// Runs body(first, last, worker_index) over a partition of [0, n).
template <class Body>
void run_partitioned(std::int64_t n, int threads, Body&& body) {
  if (threads < 1) threads = 1;
  const auto max_workers =
      static_cast<int>(std::min<std::int64_t>(n, 256));
  if (threads > max_workers) threads = max_workers;
  if (threads <= 1) {
    body(std::int64_t{0}, n, 0);
    return;
  }
  const std::int64_t chunk = (n + threads - 1) / threads;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    const std::int64_t first = t * chunk;
    const std::int64_t last = std::min<std::int64_t>(first + chunk, n);
    if (first >= last) break;
    pool.emplace_back([&body, first, last, t] { body(first, last, t); });
  }
  for (auto& th : pool) th.join();
}

inline McEstimate binomial_estimate(std::int64_t hits, std::int64_t samples) {
  const double p =
      static_cast<double>(hits) / static_cast<double>(samples);
  const double se =
      std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(samples));
  return {p, se, samples};
}

}  // namespace detail

// Probability that the information accumulated over all `rounds`
// transmissions stays below the initial rate.
inline McEstimate mc_outage(const HarqConfig& cfg, std::int64_t samples,
                            std::uint64_t seed, int threads = 1) {
  require(samples > 0, "samples must be positive");
  const ChannelSampler sampler(cfg, seed);
  std::vector<std::int64_t> hits(256, 0);
  detail::run_partitioned(
      samples, threads,
      [&](std::int64_t first, std::int64_t last, int worker) {
        std::vector<double> g;
        std::int64_t local = 0;
        for (std::int64_t i = first; i < last; ++i) {
          sampler.snrs(static_cast<std::uint64_t>(i), g);
          if (accumulated_information(g) < cfg.rate) ++local;
        }
        hits[static_cast<std::size_t>(worker)] = local;
      });
  std::int64_t total = 0;
  for (std::int64_t h : hits) total += h;
  return detail::binomial_estimate(total, samples);
}

// Outage probability after each prefix of rounds.  Entry k is the
// probability that the first k transmissions do not accumulate the rate;
// entry 0 is 1 by convention (nothing has been sent yet).
inline std::vector<McEstimate> mc_outage_sequence(const HarqConfig& cfg,
                                                  std::int64_t samples,
                                                  std::uint64_t seed,
                                                  int threads = 1) {
  require(samples > 0, "samples must be positive");
  const ChannelSampler sampler(cfg, seed);
  const auto k1 = static_cast<std::size_t>(cfg.rounds) + 1;
  std::vector<std::vector<std::int64_t>> hits(
      256, std::vector<std::int64_t>(k1, 0));
  detail::run_partitioned(
      samples, threads,
      [&](std::int64_t first, std::int64_t last, int worker) {
        std::vector<double> g;
        auto& local = hits[static_cast<std::size_t>(worker)];
        for (std::int64_t i = first; i < last; ++i) {
          sampler.snrs(static_cast<std::uint64_t>(i), g);
          double acc = 0.0;
          local[0] += 1;
          for (int k = 0; k < cfg.rounds; ++k) {
            acc += std::log2(1.0 + g[static_cast<std::size_t>(k)]);
            if (acc < cfg.rate) local[static_cast<std::size_t>(k) + 1] += 1;
          }
        }
      });
  std::vector<McEstimate> out(k1);
  for (std::size_t k = 0; k < k1; ++k) {
    std::int64_t total = 0;
    for (const auto& local : hits) total += local[k];
    out[k] = detail::binomial_estimate(total, samples);
  }
  return out;
}

// Outage probability when one channel realization persists across all
// rounds.  Requires a common channel power, i.e. equal sigma2 entries.
inline McEstimate mc_outage_quasi_static(const HarqConfig& cfg,
                                         std::int64_t samples,
                                         std::uint64_t seed,
                                         int threads = 1) {
  require(samples > 0, "samples must be positive");
  for (double s : cfg.sigma2)
    require(s == cfg.sigma2[0],
            "quasi-static channel requires equal sigma2 across rounds");
  const ChannelSampler sampler(cfg, seed);
  std::vector<std::int64_t> hits(256, 0);
  detail::run_partitioned(
      samples, threads,
      [&](std::int64_t first, std::int64_t last, int worker) {
        std::vector<double> g;
        std::int64_t local = 0;
        for (std::int64_t i = first; i < last; ++i) {
          sampler.snrs_quasi_static(static_cast<std::uint64_t>(i), g);
          if (accumulated_information(g) < cfg.rate) ++local;
        }
        hits[static_cast<std::size_t>(worker)] = local;
      });
  std::int64_t total = 0;
  for (std::int64_t h : hits) total += h;
  return detail::binomial_estimate(total, samples);
}

// Sample Pearson correlation between the squared envelopes of rounds l and
// k; the model value is lambda_l^2 * lambda_k^2.
inline McEstimate mc_cross_correlation(const HarqConfig& cfg, int l, int k,
                                       std::int64_t samples,
                                       std::uint64_t seed, int threads = 1) {
  require(samples > 1, "samples must exceed 1");
  require(l >= 0 && l < cfg.rounds && k >= 0 && k < cfg.rounds,
          "round indices out of range");
  const ChannelSampler sampler(cfg, seed);
  struct Moments {
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  };
  std::vector<Moments> acc(256);
  detail::run_partitioned(
      samples, threads,
      [&](std::int64_t first, std::int64_t last, int worker) {
        std::vector<double> g;
        Moments m;
        for (std::int64_t i = first; i < last; ++i) {
          sampler.snrs(static_cast<std::uint64_t>(i), g);
          const double x = g[static_cast<std::size_t>(l)];
          const double y = g[static_cast<std::size_t>(k)];
          m.sx += x;
          m.sy += y;
          m.sxx += x * x;
          m.syy += y * y;
          m.sxy += x * y;
        }
        acc[static_cast<std::size_t>(worker)] = m;
      });
  Moments m;
  for (const auto& a : acc) {
    m.sx += a.sx;
    m.sy += a.sy;
    m.sxx += a.sxx;
    m.syy += a.syy;
    m.sxy += a.sxy;
  }
  const double n = static_cast<double>(samples);
  const double cxy = m.sxy / n - (m.sx / n) * (m.sy / n);
  const double vx = m.sxx / n - (m.sx / n) * (m.sx / n);
  const double vy = m.syy / n - (m.sy / n) * (m.sy / n);
  const double r = cxy / std::sqrt(vx * vy);
  // Fisher-approximate standard error of a correlation estimate.
  const double se = (1.0 - r * r) / std::sqrt(n - 3.0);
  return {r, se, samples};
}

// Density of gamma_k conditioned on the anchor squared norm T = t:
//
//   f(x | t) = x^(m-1) / (Gamma(m) Omega_k^m)
//              * exp(-(u_k lambda_k^2 t + x) / Omega_k)
//              * 0F1(; m; u_k lambda_k^2 t x / Omega_k^2)
//
// which is a scaled noncentral chi-square with 2m degrees of freedom.
inline double conditional_snr_pdf(const HarqConfig& cfg, int k, double x,
                                  double t) {
  cfg.validate();
  require(k >= 0 && k < cfg.rounds, "round index out of range");
  require(t >= 0.0, "anchor norm must be non-negative");
  if (x <= 0.0) return 0.0;
  const double u = cfg.snr_scale(k);
  const double omega = cfg.residual_scale(k);
  const double lam = cfg.lambda[static_cast<std::size_t>(k)];
  const double mu = u * lam * lam * t;
  const double log_head = (cfg.shape - 1) * std::log(x) -
                          cfg.shape * std::log(omega) -
                          log_gamma(static_cast<double>(cfg.shape)) -
                          (mu + x) / omega;
  return std::exp(log_head) * hyp_0f1(cfg.shape, mu * x / (omega * omega));
}

// Marginal CDF of gamma_k, the regularized lower incomplete gamma function
// with shape m and scale u_k.
inline double marginal_snr_cdf(const HarqConfig& cfg, int k, double x) {
  require(k >= 0 && k < cfg.rounds, "round index out of range");
  if (x <= 0.0) return 0.0;
  return regularized_lower_gamma(static_cast<double>(cfg.shape),
                                 x / cfg.snr_scale(k));
}

}  // namespace harqir
