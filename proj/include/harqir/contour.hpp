#ifndef HARQIR_CONTOUR_HPP
#define HARQIR_CONTOUR_HPP

// Numerical inverse Mellin transform
//
//   I(x) = (1/(2 pi i)) Int_{c - i inf}^{c + i inf} k(s) x^{-s} ds
//
// for kernels satisfying k(conj s) = conj k(s), so that
//
//   I(x) = (x^{-c} / pi) Re Int_0^inf k(c + i v) e^{-i theta v} dv,  theta = ln x.
//
// The half-line integral is evaluated by the trapezoid rule.  Convergence is
// driven in two phases: the tail is extended by doubling the truncation point
// at a fixed step (previously computed nodes stay valid), then the step is
// halved on the fixed window (midpoint refinement).  Once theta V is
// appreciable the oscillatory remainder is absorbed by a second-order
// endpoint correction from integration by parts,
//
//   Int_V^inf k e^{-i theta v} dv ~ e^{-i theta V} (-i k(V)/theta - k'(V)/theta^2).

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>

#include "harqir/common.hpp"

namespace harqir {

struct ContourSpec {
  double abscissa = std::numeric_limits<double>::quiet_NaN();  // NaN: caller default
  double half_extent = 32.0;  // initial truncation of the Im(s) half-line
  int nodes = 256;            // initial node count on (0, half_extent]
  double refinement = 1e-9;   // relative convergence target
  long max_nodes = 1L << 20;  // kernel evaluation budget
};

struct MellinResult {
  double value = 0.0;
  double imag_residue = 0.0;  // |Im k(c)| / |k(c)| at the real axis
  long nodes_used = 0;
  double half_extent_used = 0.0;
  bool converged = false;
};

namespace detail {

// complex trapezoid accumulator with compensated real/imag parts plus an L1
// tally used as the floor of the convergence scale
struct contour_accum {
  compensated_sum re, im, l1;
  void add(cdouble g) {
    re.add(g.real());
    im.add(g.imag());
    l1.add(std::abs(g));
  }
  cdouble sum() const { return {re.value(), im.value()}; }
};

}  // namespace detail

template <class Kernel>
MellinResult mellin_inverse(Kernel&& kernel, double x, const ContourSpec& spec) {
  require(x > 0.0, "mellin_inverse: argument must be positive");
  require(std::isfinite(spec.abscissa), "mellin_inverse: contour abscissa must be set");
  require(spec.nodes >= 8, "mellin_inverse: need at least 8 initial nodes");
  require(spec.half_extent > 0.0, "mellin_inverse: half_extent must be positive");

  const double c = spec.abscissa;
  const double theta = std::log(x);

  MellinResult out;

  const cdouble k0 = kernel(cdouble(c, 0.0));
  out.nodes_used = 1;
  out.imag_residue = std::abs(k0.imag()) / std::max(std::abs(k0), 1e-300);
  if (out.imag_residue > 1e-8)
    throw contour_error("mellin_inverse: kernel is not real on the real axis");

#ifndef NDEBUG
  {
    std::uint64_t state = 0x9e3779b97f4a7c15ull;
    for (int i = 0; i < 100; ++i) {
      state = state * 6364136223846793005ull + 1442695040888963407ull;
      const double v = spec.half_extent * (double(state >> 11) * 0x1p-53);
      const cdouble up = kernel(cdouble(c, v));
      const cdouble dn = kernel(cdouble(c, -v));
      if (std::abs(up - std::conj(dn)) > 1e-9 * std::max(1e-300, std::abs(up)))
        throw contour_error("mellin_inverse: kernel breaks conjugate symmetry");
    }
  }
#endif

  double h = spec.half_extent / spec.nodes;
  long count = spec.nodes;  // nodes beyond v = 0

  detail::contour_accum acc;
  acc.add(0.5 * k0);  // theta * 0 phase
  cdouble k_first = k0;  // node at v = h
  cdouble k_prev = k0;   // node at v = V - h
  cdouble k_end = k0;    // node at v = V
  for (long j = 1; j <= count; ++j) {
    k_prev = k_end;
    k_end = kernel(cdouble(c, j * h));
    if (j == 1) k_first = k_end;
    acc.add(k_end * std::polar(1.0, -theta * j * h));
  }
  out.nodes_used += count;
  double V = count * h;

  // Estimate = trapezoid on [0, V] (endpoint restored to half weight), minus
  // the Euler-Maclaurin h^2 endpoint terms (central derivative at V; at 0 the
  // conjugate symmetry of the full-line integrand gives g'(0) = i Im g(h)/h),
  // plus the oscillatory remainder of the tail.
  auto assemble = [&](double step) {
    const cdouble g_end = k_end * std::polar(1.0, -theta * V);
    const cdouble g_prev = k_prev * std::polar(1.0, -theta * (V - step));
    const cdouble g_first = k_first * std::polar(1.0, -theta * step);
    const cdouble k_plus = kernel(cdouble(c, V + step));
    ++out.nodes_used;
    const cdouble g_plus = k_plus * std::polar(1.0, -theta * (V + step));

    cdouble half = step * (acc.sum() - 0.5 * g_end);
    const cdouble dg_zero(0.0, g_first.imag() / step);
    const cdouble dg_end = (g_plus - g_prev) / (2.0 * step);
    half -= (step * step / 12.0) * (dg_end - dg_zero);
    if (std::abs(theta) * V > 4.0) {
      const cdouble kp = (k_plus - k_prev) / (2.0 * step);
      half += std::polar(1.0, -theta * V) *
              (cdouble(0.0, -1.0) * k_end / theta - kp / (theta * theta));
    }
    return half;
  };
  auto scale_of = [&](cdouble half, double step) {
    return std::max(std::abs(half.real()), step * acc.l1.value() / 100.0);
  };

  cdouble half = assemble(h);
  double prev = half.real();
  double prev_diff = std::numeric_limits<double>::infinity();
  bool tail_ok = false;

  while (!tail_ok) {
    if (out.nodes_used + count > spec.max_nodes)
      throw convergence_error("mellin_inverse: node budget exhausted extending the tail");
    for (long j = count + 1; j <= 2 * count; ++j) {
      k_prev = k_end;
      k_end = kernel(cdouble(c, j * h));
      acc.add(k_end * std::polar(1.0, -theta * j * h));
    }
    out.nodes_used += count;
    count *= 2;
    V = count * h;
    half = assemble(h);
    const double cur = half.real();
    const double diff = std::abs(cur - prev);
    const double thr = spec.refinement * scale_of(half, h);
    tail_ok = diff <= thr && prev_diff <= 4.0 * thr;
    prev_diff = diff;
    prev = cur;
  }

  prev_diff = std::numeric_limits<double>::infinity();
  bool step_ok = false;
  while (!step_ok) {
    if (out.nodes_used + count > spec.max_nodes)
      throw convergence_error("mellin_inverse: node budget exhausted refining the step");
    for (long j = 0; j < count; ++j) {
      const double v = (j + 0.5) * h;
      const cdouble kv = kernel(cdouble(c, v));
      if (j == 0) k_first = kv;          // becomes the node at the new spacing
      if (j == count - 1) k_prev = kv;   // new neighbor of the endpoint
      acc.add(kv * std::polar(1.0, -theta * v));
    }
    out.nodes_used += count;
    count *= 2;
    h *= 0.5;
    half = assemble(h);
    const double cur = half.real();
    const double diff = std::abs(cur - prev);
    const double thr = spec.refinement * scale_of(half, h);
    step_ok = diff <= thr && prev_diff <= 4.0 * thr;
    prev_diff = diff;
    prev = cur;
  }

  out.value = std::exp(-theta * c) / M_PI * half.real();
  out.half_extent_used = V;
  out.converged = true;
  return out;
}

}  // namespace harqir

#endif
