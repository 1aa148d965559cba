#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "qht/error.hpp"
#include "qht/homodyne.hpp"
#include "qht/parallel.hpp"
#include "qht/specfun.hpp"
#include "qht/wigner.hpp"

namespace qht {

struct Bandwidth {
  enum class Origin { rule, manual };

  double delta = 1.0;
  double cutoff = 1.0;
  Origin origin = Origin::manual;

  static Bandwidth manual(double delta) {
    if (!(delta > 0.0) || !std::isfinite(delta))
      throw DomainError("bandwidth: delta must be positive");
    return {delta, 1.0 / delta, Origin::manual};
  }
};

struct SmoothnessClass {
  double beta = 1.0;
  double L = 1.0;
  std::optional<double> alpha_floor;

  void validate() const {
    if (!(beta > 0.0) || !std::isfinite(beta))
      throw DomainError("smoothness class: beta must be positive");
    if (!(L > 0.0))
      throw DomainError("smoothness class: L must be positive");
    if (alpha_floor && !(*alpha_floor > 0.0))
      throw DomainError("smoothness class: alpha_floor must be positive");
  }
};

// delta = 2 beta / log n
inline Bandwidth bandwidth_rule(std::size_t n, const SmoothnessClass& cls) {
  cls.validate();
  if (n < 2) {
    std::ostringstream msg;
    msg << "bandwidth_rule: n must be at least 2, got " << n;
    throw DomainError(msg.str());
  }
  const double delta = 2.0 * cls.beta / std::log(static_cast<double>(n));
  return {delta, 1.0 / delta, Bandwidth::Origin::rule};
}

// K(u) = (1/4 pi) int_{-c}^{c} |r| e^{iru} dr with c = 1/delta
//      = (1/2 pi) [c sin(cu)/u + (cos(cu) - 1)/u^2].
inline double kernel(const Bandwidth& bw, double u) {
  const double c = bw.cutoff;
  const double x = c * u;
  if (std::abs(u) < 1e-4 * bw.delta) {
    const double x2 = x * x;
    return c * c / (4.0 * specfun::pi) * (1.0 - x2 / 4.0 + x2 * x2 / 72.0);
  }
  const double s = std::sin(0.5 * x);
  return (c * std::sin(x) / u - 2.0 * s * s / (u * u)) / (2.0 * specfun::pi);
}

// int K(u) e^{-iut} du by quadrature on |u| <= U plus the exact tails of the
// three oscillatory terms of K beyond U. Should equal |t|/2 for |t| < 1/delta
// and 0 for |t| > 1/delta.
inline double kernel_fourier_numeric(const Bandwidth& bw, double t) {
  const double c = bw.cutoff;
  t = std::abs(t);
  const double U = 40.0 * specfun::pi / c;
  auto f = [&](double u) { return kernel(bw, u) * std::cos(t * u); };
  const double body =
      quad::integrate(f, quad::oscillatory(0.0, U, c + t, 1e-13 * c * c, 1e-12)).value;
  auto tail = [&](double omega, double power) {
    return omega == 0.0 && power <= 1.0 ? std::complex<double>(0.0)
                                        : quad::oscillatory_tail(omega, power, U);
  };
  const double sines = 0.5 * c * (tail(c + t, 1).imag() + tail(c - t, 1).imag());
  const double cosines =
      0.5 * (tail(c + t, 2).real() + tail(c - t, 2).real()) - tail(t, 2).real();
  return 2.0 * (body + (sines + cosines) / (2.0 * specfun::pi));
}

namespace detail {

// Neumaier's compensated sum, in a fixed order.
struct CompensatedSum {
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

} // namespace detail

// (1/n) sum_i K([z, phi_i] - x_i)
inline double estimate_point(const SampleSet& data, const Bandwidth& bw, double q, double p) {
  if (data.samples.empty())
    throw InsufficientData("estimate_point: no samples");
  detail::CompensatedSum acc;
  for (const auto& s : data.samples)
    acc.add(kernel(bw, q * std::cos(s.phi) + p * std::sin(s.phi) - s.x));
  return acc.value() / static_cast<double>(data.samples.size());
}

// Values in write_grid_csv order (p outer, q inner).
inline std::vector<double> estimate_grid(const SampleSet& data, const Bandwidth& bw,
                                         const GridSpec& grid) {
  grid.validate();
  if (data.samples.empty())
    throw InsufficientData("estimate_grid: no samples");
  const std::size_t n = data.samples.size();
  std::vector<double> c(n), s(n);
  for (std::size_t i = 0; i < n; ++i) {
    c[i] = std::cos(data.samples[i].phi);
    s[i] = std::sin(data.samples[i].phi);
  }
  std::vector<double> out(grid.size());
  parallel::parallel_for(grid.size(), [&](std::size_t idx) {
    const double q = grid.q(idx % grid.steps);
    const double p = grid.p(idx / grid.steps);
    detail::CompensatedSum acc;
    for (std::size_t i = 0; i < n; ++i)
      acc.add(kernel(bw, q * c[i] + p * s[i] - data.samples[i].x));
    out[idx] = acc.value() / static_cast<double>(n);
  });
  return out;
}

inline nlohmann::json grid_json(const GridSpec& g) {
  return {{"q_min", g.q_min}, {"q_max", g.q_max}, {"p_min", g.p_min},
          {"p_max", g.p_max}, {"steps", g.steps}};
}

inline nlohmann::json estimate_metadata(std::size_t n, const Bandwidth& bw, double beta,
                                        const GridSpec& g, double runtime_ms) {
  return {{"n", n},
          {"delta", bw.delta},
          {"beta", beta},
          {"bandwidth", bw.origin == Bandwidth::Origin::rule ? "rule" : "manual"},
          {"grid", grid_json(g)},
          {"runtime_ms", runtime_ms}};
}

} // namespace qht
