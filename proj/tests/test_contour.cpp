#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "harqir/contour.hpp"
#include "harqir/specfun.hpp"

using namespace harqir;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
ContourSpec at(double c) {
  ContourSpec spec;
  spec.abscissa = c;
  return spec;
}
}  // namespace

TEST_CASE("gamma kernel inverts to the exponential", "[contour]") {
  auto kernel = [](cdouble s) { return std::exp(log_gamma(s)); };
  for (double x : {0.1, 1.0, 5.0}) {
    const auto r = mellin_inverse(kernel, x, at(1.5));
    INFO("x = " << x << ", nodes " << r.nodes_used);
    CHECK(r.converged);
    CHECK_THAT(r.value, WithinRel(std::exp(-x), 1e-8));
    CHECK(r.imag_residue < 1e-12);
  }
}

TEST_CASE("reciprocal kernel inverts to the unit step", "[contour]") {
  auto kernel = [](cdouble s) { return 1.0 / s; };
  const auto lo = mellin_inverse(kernel, 0.5, at(0.5));
  CHECK_THAT(lo.value, WithinAbs(1.0, 1e-6));
  const auto hi = mellin_inverse(kernel, 2.0, at(0.5));
  CHECK_THAT(hi.value, WithinAbs(0.0, 1e-6));
}

TEST_CASE("beta-type kernel inverts to 1/(1+x)", "[contour]") {
  auto kernel = [](cdouble s) {
    if (std::abs(s.imag()) * M_PI > 700.0) return cdouble(0.0);
    return M_PI / std::sin(M_PI * s);
  };
  for (double x : {0.3, 2.0}) {
    const auto r = mellin_inverse(kernel, x, at(0.5));
    CHECK_THAT(r.value, WithinRel(1.0 / (1.0 + x), 1e-8));
  }
}

TEST_CASE("node budget exhaustion raises", "[contour]") {
  // nearly non-oscillatory slow kernel: the tail cannot settle within budget
  auto kernel = [](cdouble s) { return 1.0 / s; };
  ContourSpec spec = at(0.5);
  spec.max_nodes = 1L << 16;
  CHECK_THROWS_AS(mellin_inverse(kernel, 1.0 + 1e-7, spec), convergence_error);
}

TEST_CASE("contour input validation", "[contour]") {
  auto kernel = [](cdouble s) { return 1.0 / s; };
  CHECK_THROWS_AS(mellin_inverse(kernel, -1.0, at(0.5)), std::invalid_argument);
  ContourSpec unset;
  CHECK_THROWS_AS(mellin_inverse(kernel, 2.0, unset), std::invalid_argument);
  // kernel that is not real on the real axis trips the symmetry guard
  auto skew = [](cdouble s) { return cdouble(0.0, 1.0) / s; };
  CHECK_THROWS_AS(mellin_inverse(skew, 2.0, at(0.5)), contour_error);
}
