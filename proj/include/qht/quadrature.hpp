#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <queue>
#include <span>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "qht/error.hpp"

namespace qht::quad {

enum class RuleKind {
  finite,        // adaptive Gauss-Kronrod on [lower, upper]
  semi_infinite, // [lower, inf), integrand decaying (mapped onto [0, 1))
  oscillatory,   // split at half periods of `frequency`; upper may be inf
  fixed          // explicit abscissae/weights, no error estimate
};

struct QuadratureRule {
  RuleKind kind = RuleKind::finite;
  double lower = 0.0;
  double upper = 1.0;
  double frequency = 0.0;
  double abs_tol = 1e-12;
  double rel_tol = 1e-10;
  std::size_t max_intervals = 20000;
  std::vector<double> abscissae;
  std::vector<double> weights;
};

template <class T = double>
struct Estimate {
  T value{};
  double error = 0.0;
  std::size_t evaluations = 0;
};

inline QuadratureRule finite(double a, double b, double abs_tol = 1e-12,
                             double rel_tol = 1e-10) {
  QuadratureRule r;
  r.kind = RuleKind::finite;
  r.lower = a;
  r.upper = b;
  r.abs_tol = abs_tol;
  r.rel_tol = rel_tol;
  return r;
}

inline QuadratureRule semi_infinite(double a, double abs_tol = 1e-12,
                                    double rel_tol = 1e-10) {
  QuadratureRule r = finite(a, std::numeric_limits<double>::infinity(),
                            abs_tol, rel_tol);
  r.kind = RuleKind::semi_infinite;
  return r;
}

inline QuadratureRule oscillatory(double a, double b, double omega,
                                  double abs_tol = 1e-12,
                                  double rel_tol = 1e-10) {
  QuadratureRule r = finite(a, b, abs_tol, rel_tol);
  r.kind = RuleKind::oscillatory;
  r.frequency = std::abs(omega);
  return r;
}

// Composite 20-point Gauss-Legendre over equal panels of [a, b].
inline QuadratureRule gauss_legendre(double a, double b, std::size_t panels) {
  using GL = boost::math::quadrature::gauss<double, 20>;
  QuadratureRule r;
  r.kind = RuleKind::fixed;
  r.lower = a;
  r.upper = b;
  const auto& x = GL::abscissa();
  const auto& w = GL::weights();
  panels = std::max<std::size_t>(panels, 1);
  const double width = (b - a) / static_cast<double>(panels);
  r.abscissae.reserve(20 * panels);
  r.weights.reserve(20 * panels);
  for (std::size_t p = 0; p < panels; ++p) {
    const double lo = a + width * static_cast<double>(p);
    const double c = lo + 0.5 * width;
    const double h = 0.5 * width;
    for (std::size_t i = x.size(); i-- > 0;) {
      r.abscissae.push_back(c - h * x[i]);
      r.weights.push_back(h * w[i]);
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
      r.abscissae.push_back(c + h * x[i]);
      r.weights.push_back(h * w[i]);
    }
  }
  return r;
}

namespace detail {

inline double magnitude(double v) { return std::abs(v); }
inline double magnitude(const std::complex<double>& v) { return std::abs(v); }

template <class T>
struct Segment {
  double a = 0.0;
  double b = 0.0;
  T value{};
  double error = 0.0;
  bool operator<(const Segment& o) const { return error < o.error; }
};

// One 21-point Kronrod / 10-point Gauss pair with the QUADPACK error
// heuristic.
template <class T, class F>
Segment<T> gk21(F& f, double a, double b) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 21>;
  using G = boost::math::quadrature::gauss<double, 10>;
  const auto& x = GK::abscissa();
  const auto& wk = GK::weights();
  const auto& wg = G::weights();
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);

  std::array<T, 21> fv{};
  fv[0] = f(c);
  T resk = fv[0] * wk[0];
  T resg{};
  double resabs = magnitude(fv[0]) * wk[0];
  for (std::size_t i = 1; i < x.size(); ++i) {
    const T fp = f(c + h * x[i]);
    const T fm = f(c - h * x[i]);
    fv[2 * i - 1] = fp;
    fv[2 * i] = fm;
    resk += (fp + fm) * wk[i];
    resabs += (magnitude(fp) + magnitude(fm)) * wk[i];
    if (i % 2 == 1)
      resg += (fp + fm) * wg[i / 2];
  }
  const T reskh = resk * 0.5;
  double resasc = magnitude(fv[0] - reskh) * wk[0];
  for (std::size_t i = 1; i < x.size(); ++i)
    resasc += (magnitude(fv[2 * i - 1] - reskh) + magnitude(fv[2 * i] - reskh)) * wk[i];

  const double ah = std::abs(h);
  resabs *= ah;
  resasc *= ah;
  double err = magnitude((resk - resg) * h);
  if (resasc != 0.0 && err != 0.0)
    err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  constexpr double eps = std::numeric_limits<double>::epsilon();
  if (resabs > std::numeric_limits<double>::min() / (50.0 * eps))
    err = std::max(50.0 * eps * resabs, err);
  return {a, b, resk * h, err};
}

// Globally adaptive bisection starting from the given partition.
template <class T, class F>
Estimate<T> adaptive(F& f, std::span<const double> breaks, double abs_tol,
                     double rel_tol, std::size_t max_intervals,
                     const char* what) {
  std::priority_queue<Segment<T>> heap;
  std::vector<Segment<T>> frozen;
  std::size_t evals = 0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    heap.push(gk21<T>(f, breaks[i], breaks[i + 1]));
    evals += 21;
  }
  auto totals = [&] {
    T v{};
    double e = 0.0;
    auto copy = heap;
    while (!copy.empty()) {
      v += copy.top().value;
      e += copy.top().error;
      copy.pop();
    }
    for (const auto& s : frozen) {
      v += s.value;
      e += s.error;
    }
    return std::pair<T, double>{v, e};
  };
  T value{};
  double error = 0.0;
  {
    auto [v, e] = totals();
    value = v;
    error = e;
  }
  constexpr double eps = std::numeric_limits<double>::epsilon();
  std::size_t count = heap.size();
  while (!heap.empty()) {
    const double tol = std::max(abs_tol, rel_tol * magnitude(value));
    if (error <= tol)
      break;
    Segment<T> worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    const double scale = std::max(std::abs(worst.a), std::abs(worst.b));
    if (std::abs(worst.b - worst.a) <= 1e3 * eps * scale || mid == worst.a ||
        mid == worst.b) {
      frozen.push_back(worst);
      continue;
    }
    if (count >= max_intervals) {
      heap.push(worst);
      std::ostringstream msg;
      msg << what << ": quadrature did not converge (estimate " << magnitude(value)
          << ", error " << error << ", tolerance " << tol << ")";
      throw NonConvergence(msg.str());
    }
    Segment<T> left = gk21<T>(f, worst.a, mid);
    Segment<T> right = gk21<T>(f, mid, worst.b);
    evals += 42;
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++count;
    // Periodic resummation keeps the running totals honest.
    if (count % 64 == 0) {
      auto [v, e] = totals();
      value = v;
      error = e;
    }
  }
  auto [v, e] = totals();
  const double tol = std::max(abs_tol, rel_tol * magnitude(v));
  if (e > tol) {
    // Only intervals at machine resolution remain; accept when they are
    // the sole contributors to the residual error.
    double frozen_err = 0.0;
    for (const auto& s : frozen)
      frozen_err += s.error;
    if (e - frozen_err > tol) {
      std::ostringstream msg;
      msg << what << ": quadrature did not converge (error " << e
          << ", tolerance " << tol << ")";
      throw NonConvergence(msg.str());
    }
  }
  return {v, e, evals};
}

} // namespace detail

// Wynn's epsilon algorithm applied to a sequence of partial sums; returns
// the highest-order even-column extrapolation.
inline double wynn_epsilon(std::span<const double> sums) {
  const std::size_t n = sums.size();
  if (n == 0)
    return 0.0;
  if (n < 3)
    return sums[n - 1];
  std::vector<double> prev(n + 1, 0.0);
  std::vector<double> cur(sums.begin(), sums.end());
  double best = sums[n - 1];
  for (std::size_t col = 1; cur.size() > 1; ++col) {
    std::vector<double> next(cur.size() - 1);
    for (std::size_t i = 0; i + 1 < cur.size(); ++i) {
      const double d = cur[i + 1] - cur[i];
      const double base = prev[i + 1];
      if (d == 0.0)
        return cur[i + 1];
      next[i] = base + 1.0 / d;
    }
    prev.assign(cur.begin(), cur.end());
    cur = std::move(next);
    if (col % 2 == 0 && !cur.empty())
      best = cur.back();
  }
  return best;
}

template <class F>
auto integrate(F&& f, const QuadratureRule& rule)
    -> Estimate<std::decay_t<std::invoke_result_t<F&, double>>> {
  using T = std::decay_t<std::invoke_result_t<F&, double>>;
  switch (rule.kind) {
  case RuleKind::fixed: {
    T sum{};
    for (std::size_t i = 0; i < rule.abscissae.size(); ++i)
      sum += f(rule.abscissae[i]) * rule.weights[i];
    return {sum, 0.0, rule.abscissae.size()};
  }
  case RuleKind::finite: {
    if (rule.lower == rule.upper)
      return {};
    const double br[2] = {rule.lower, rule.upper};
    return detail::adaptive<T>(f, br, rule.abs_tol, rule.rel_tol,
                               rule.max_intervals, "finite integral");
  }
  case RuleKind::semi_infinite: {
    const double a = rule.lower;
    auto mapped = [&f, a](double t) -> T {
      const double s = 1.0 - t;
      const T v = f(a + t / s);
      return v * (1.0 / (s * s));
    };
    // Start from a mild partition so a decaying integrand near the origin
    // is resolved before the compressed tail.
    const double br[5] = {0.0, 0.25, 0.5, 0.75, 1.0};
    return detail::adaptive<T>(mapped, br, rule.abs_tol, rule.rel_tol,
                               rule.max_intervals, "semi-infinite integral");
  }
  case RuleKind::oscillatory: {
    const double a = rule.lower;
    const double omega = rule.frequency;
    const double half = omega > 0.0 ? M_PI / omega : 1.0;
    if (std::isfinite(rule.upper)) {
      const std::size_t panels = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::ceil((rule.upper - a) / half)));
      std::vector<double> br(panels + 1);
      for (std::size_t i = 0; i <= panels; ++i)
        br[i] = a + (rule.upper - a) * static_cast<double>(i) /
                        static_cast<double>(panels);
      return detail::adaptive<T>(f, br, rule.abs_tol, rule.rel_tol,
                                 std::max(rule.max_intervals, 4 * panels),
                                 "oscillatory integral");
    }
    if constexpr (std::is_same_v<T, double>) {
      std::vector<double> sums;
      double total = 0.0;
      double err = 0.0;
      std::size_t evals = 0;
      std::size_t quiet = 0;
      double last_extrap = std::numeric_limits<double>::quiet_NaN();
      for (std::size_t m = 0; m < 20000; ++m) {
        const double br[2] = {a + half * static_cast<double>(m),
                              a + half * static_cast<double>(m + 1)};
        auto seg = detail::adaptive<double>(f, br, 0.1 * rule.abs_tol,
                                            rule.rel_tol, rule.max_intervals,
                                            "oscillatory panel");
        total += seg.value;
        err += seg.error;
        evals += seg.evaluations;
        sums.push_back(total);
        const double tol = std::max(rule.abs_tol, rule.rel_tol * std::abs(total));
        quiet = std::abs(seg.value) <= 0.1 * tol ? quiet + 1 : 0;
        if (quiet >= 4)
          return {total, err, evals};
        if (sums.size() >= 10 && sums.size() % 2 == 0) {
          const std::size_t take = std::min<std::size_t>(sums.size(), 24);
          const double ex = wynn_epsilon(
              std::span<const double>(sums).subspan(sums.size() - take));
          if (std::isfinite(last_extrap) && std::abs(ex - last_extrap) <= tol)
            return {ex, err + std::abs(ex - last_extrap), evals};
          last_extrap = ex;
        }
      }
      throw NonConvergence("oscillatory integral: no convergence over 20000 panels");
    } else {
      throw DomainError("oscillatory infinite-range rule supports real integrands only");
    }
  }
  }
  return {};
}

// Integral of e^{i omega x} x^{-power} over [from, inf), from > 0, evaluated
// along the steepest-descent ray x = from + i*s/omega.
inline std::complex<double> oscillatory_tail(double omega, double power,
                                             double from) {
  if (from <= 0.0)
    throw DomainError("oscillatory_tail: lower limit must be positive");
  if (omega == 0.0) {
    if (power <= 1.0)
      throw DomainError("oscillatory_tail: divergent for omega = 0, power <= 1");
    return {std::pow(from, 1.0 - power) / (power - 1.0), 0.0};
  }
  const double w = std::abs(omega);
  const std::complex<double> I(0.0, 1.0);
  auto ray = [&](double s) -> std::complex<double> {
    return std::exp(-s) * std::pow(std::complex<double>(from, s / w), -power);
  };
  auto est = integrate(ray, semi_infinite(0.0, 1e-16, 1e-13));
  std::complex<double> v = I * std::exp(I * (w * from)) * est.value / w;
  return omega > 0.0 ? v : std::conj(v);
}

} // namespace qht::quad
