#ifndef HARQIR_COMMON_HPP
#define HARQIR_COMMON_HPP

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace harqir {

using cdouble = std::complex<double>;

// Thrown when an iterative scheme fails to reach its stopping rule within
// its configured budget (series term caps, quadrature node caps, ...).
class convergence_error : public std::runtime_error {
 public:
  explicit convergence_error(const std::string& what) : std::runtime_error(what) {}
};

// Thrown for an unusable Mellin-Barnes contour (abscissa on a pole of the
// integrand, non-finite abscissa, malformed node counts).
class contour_error : public std::runtime_error {
 public:
  explicit contour_error(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when a truncation-order search exceeds its cap.
class truncation_cap_error : public std::runtime_error {
 public:
  explicit truncation_cap_error(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when an optimization problem has no feasible point.
class feasibility_error : public std::runtime_error {
 public:
  explicit feasibility_error(const std::string& what) : std::runtime_error(what) {}
};

inline double sq(double x) { return x * x; }

// Neumaier-compensated accumulator; summation order fixed by the caller.
struct compensated_sum {
  double sum = 0.0;
  double comp = 0.0;

  void add(double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v))
      comp += (sum - t) + v;
    else
      comp += (v - t) + sum;
    sum = t;
  }
  double value() const { return sum + comp; }
};

inline void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace harqir

#endif
