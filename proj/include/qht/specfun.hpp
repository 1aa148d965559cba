#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <boost/math/special_functions/bessel.hpp>

namespace qht::specfun {

inline constexpr double pi = 3.14159265358979323846;
// pi^{-1/4}
inline constexpr double inv_pi_quarter = 0.75112554446494248286;

// Fills out[k] = psi_k(x) for k < out.size(), the L2-normalised Hermite
// functions psi_k = (2^k k! sqrt(pi))^{-1/2} H_k(x) e^{-x^2/2}.
//
// The normalised three-term recurrence runs on values stripped of the
// Gaussian factor; that factor is carried as a separate exponent and the
// running values are rescaled by 2^-512 whenever they grow past 2^512, so
// neither overflow (large k) nor premature underflow (large |x|) occurs.
inline void hermite_functions(double x, std::span<double> out) {
  if (out.empty())
    return;
  constexpr double big = 0x1p512;
  constexpr double shrink = 0x1p-512;
  constexpr double shrink_log = -512.0 * 0.69314718055994530942;
  double exponent = -0.5 * x * x;
  auto emit = [&exponent](double v) {
    if (v == 0.0)
      return 0.0;
    if (exponent > -700.0)
      return v * std::exp(exponent);
    return std::copysign(std::exp(std::log(std::abs(v)) + exponent), v);
  };
  double prev = 0.0;
  double cur = inv_pi_quarter;
  out[0] = emit(cur);
  for (std::size_t k = 0; k + 1 < out.size(); ++k) {
    const double kk = static_cast<double>(k);
    const double next = std::sqrt(2.0 / (kk + 1.0)) * x * cur -
                        std::sqrt(kk / (kk + 1.0)) * prev;
    prev = cur;
    cur = next;
    if (std::abs(cur) > big) {
      cur *= shrink;
      prev *= shrink;
      exponent -= shrink_log;
    }
    out[k + 1] = emit(cur);
  }
}

inline std::vector<double> hermite_functions(double x, std::size_t k_max) {
  std::vector<double> out(k_max + 1);
  hermite_functions(x, out);
  return out;
}

inline double hermite_function(std::size_t k, double x) {
  return hermite_functions(x, k).back();
}

// Generalised Laguerre polynomial L_k^{(a)}(x) by the upward recurrence.
inline double laguerre_generalized(std::size_t k, double a, double x) {
  double prev = 1.0;
  if (k == 0)
    return prev;
  double cur = 1.0 + a - x;
  for (std::size_t n = 1; n < k; ++n) {
    const double nn = static_cast<double>(n);
    const double next = ((2.0 * nn + 1.0 + a - x) * cur - (nn + a) * prev) / (nn + 1.0);
    prev = cur;
    cur = next;
  }
  return cur;
}

inline double laguerre(std::size_t k, double x) {
  return laguerre_generalized(k, 0.0, x);
}

struct LaguerreJet {
  double value;
  double d1;
  double d2;
};

// L_k and its first two derivatives via L_k' = -L_{k-1}^{(1)},
// L_k'' = L_{k-2}^{(2)}.
inline LaguerreJet laguerre_jet(std::size_t k, double x) {
  LaguerreJet j{laguerre(k, x), 0.0, 0.0};
  if (k >= 1)
    j.d1 = -laguerre_generalized(k - 1, 1.0, x);
  if (k >= 2)
    j.d2 = laguerre_generalized(k - 2, 2.0, x);
  return j;
}

// out[k] = e^{-x/2} L_k(x), x >= 0. Same recurrence as L_k; starting from
// the damped seeds keeps every term representable for x up to ~1400.
inline void laguerre_functions(double x, std::span<double> out) {
  if (out.empty())
    return;
  const double damp = std::exp(-0.5 * x);
  double prev = damp;
  out[0] = prev;
  if (out.size() == 1)
    return;
  double cur = (1.0 - x) * damp;
  out[1] = cur;
  for (std::size_t n = 1; n + 1 < out.size(); ++n) {
    const double nn = static_cast<double>(n);
    const double next = ((2.0 * nn + 1.0 - x) * cur - nn * prev) / (nn + 1.0);
    prev = cur;
    cur = next;
    out[n + 1] = cur;
  }
}

inline double bessel_j0(double x) { return boost::math::cyl_bessel_j(0, x); }

} // namespace qht::specfun
