#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <sstream>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "qht/error.hpp"
#include "qht/parallel.hpp"
#include "qht/quadrature.hpp"
#include "qht/specfun.hpp"
#include "qht/state.hpp"

namespace qht::minimax {

using specfun::pi;

// C* = pi / (3 (4 pi beta)^3)
inline double c_star(double beta) { return pi / (3.0 * std::pow(4.0 * pi * beta, 3)); }

inline void check_scale(double a, double beta, const char* where) {
  if (!(a > 1.0) || !(beta > 0.0) || !std::isfinite(a) || !std::isfinite(beta)) {
    std::ostringstream msg;
    msg << where << ": need a > 1 and beta > 0, got a = " << a << ", beta = " << beta;
    throw DomainError(msg.str());
  }
}

// (1 + sinh^2(beta r) / a)^{-1}, written through e^{-2 beta r} so it neither
// overflows nor cancels.
inline double damping(double a, double beta, double r) {
  const double x = beta * std::abs(r);
  const double e = std::exp(-2.0 * x);
  const double m = std::expm1(-2.0 * x);
  const double num = 4.0 * a * e;
  return num / (num + m * m);
}

// Smallest R with 4a R^power e^{-2 beta R} < tol.
inline double envelope_cutoff(double a, double beta, double power, double tol) {
  const double L = std::log(4.0 * a / tol);
  double R = L / (2.0 * beta);
  for (int i = 0; i < 60; ++i)
    R = (L + power * std::log(std::max(R, 1.0))) / (2.0 * beta);
  return std::max(R, 1.0);
}

// int_0^1 f(w) dw for an f whose mass may sit in [0, scale] with scale << 1:
// geometric pieces so the adaptive rule cannot step over it.
template <class F>
double integrate_unit(F&& f, double scale, double rel_tol = 1e-13) {
  double lo = 0.0, hi = std::min(1.0, scale), total = 0.0;
  for (;;) {
    total += quad::integrate(f, quad::finite(lo, hi, 1e-300, rel_tol)).value;
    if (hi >= 1.0)
      return total;
    lo = hi;
    hi = std::min(1.0, 4.0 * hi);
  }
}

// ---- the alpha family ----

// z-form p_alpha(x) = (alpha / sqrt(pi)) int_0^1 (1-z)^{alpha-1/2} (1+z)^{-1/2}
// e^{-x^2 (1-z)/(1+z)} dz, with w = (1-z)^{alpha+1/2}.
inline double p_alpha(double alpha, double x) {
  check_alpha(alpha, "p_alpha");
  const double x2 = x * x;
  const double e = 1.0 / (alpha + 0.5);
  auto f = [&](double w) {
    const double omz = std::pow(w, e);
    const double z = 1.0 - omz;
    return std::exp(-x2 * omz / (1.0 + z)) / std::sqrt(1.0 + z);
  };
  // the mass sits at 1 - z of order 1/x^2
  const double I = integrate_unit(f, x2 > 1.0 ? std::pow(1.0 / x2, alpha + 0.5) : 1.0);
  return alpha * e * I / std::sqrt(pi);
}

// u-form (alpha 2^{alpha+1} x / sqrt(pi)) int_0^x u^{2 alpha} (u^2+x^2)^{-(alpha+1)} e^{-u^2} du
// with u = v^{1/(2 alpha + 1)}.
inline double p_alpha_u(double alpha, double x) {
  check_alpha(alpha, "p_alpha_u");
  x = std::abs(x);
  if (x == 0.0)
    return p_alpha(alpha, 0.0);
  const double s = 2.0 * alpha + 1.0;
  const double x2 = x * x;
  auto f = [&](double v) {
    const double u = std::pow(v, 1.0 / s);
    return std::exp(-u * u - (alpha + 1.0) * std::log(u * u + x2));
  };
  const double top = std::pow(std::min(x, 40.0), s);
  const double I = quad::integrate(f, quad::finite(0.0, top, 1e-300, 1e-13)).value / s;
  return alpha * std::pow(2.0, alpha + 1.0) * x * I / std::sqrt(pi);
}

// Leading tail coefficient A with p_alpha(x) ~ A x^{-(1+2 alpha)}.
inline double p_alpha_tail_coefficient(double alpha) {
  return alpha * std::pow(2.0, alpha) * std::tgamma(alpha + 0.5) / std::sqrt(pi);
}

// W~_alpha(r) = int_0^1 exp(-r^2 (1+z) / (4 (1-z))) dw with w = (1-z)^alpha.
inline double charfn_alpha(double alpha, double r) {
  check_alpha(alpha, "charfn_alpha");
  if (r == 0.0)
    return 1.0;
  const double r2 = r * r;
  auto f = [&](double w) {
    if (w <= 0.0)
      return 0.0;
    const double omz = std::pow(w, 1.0 / alpha);
    if (omz <= 0.0)
      return 0.0;
    return std::exp(-r2 * (2.0 - omz) / (4.0 * omz));
  };
  return quad::integrate(f, quad::finite(0.0, 1.0, 1e-15, 1e-13)).value;
}

// W_alpha(r) = int_0^1 alpha (1-z)^alpha / (pi (1+z)) e^{-r^2 (1-z)/(1+z)} dz,
// summing the Laguerre generating function against f_alpha.
inline double wigner_alpha(double alpha, double r) {
  check_alpha(alpha, "wigner_alpha");
  const double r2 = r * r;
  const double e = 1.0 / (alpha + 1.0);
  auto f = [&](double w) {
    const double omz = std::pow(w, e);
    const double z = 1.0 - omz;
    return std::exp(-r2 * omz / (1.0 + z)) / (1.0 + z);
  };
  const double I = integrate_unit(f, r2 > 1.0 ? std::pow(1.0 / r2, alpha + 1.0) : 1.0);
  return alpha * e * I / pi;
}

// R_0 = 2 sqrt(pi) alpha int_0^1 (1-z)^{alpha-1/2} (1+z)^{-1/2} dz
inline double r0(double alpha) { return 2.0 * pi * p_alpha(alpha, 0.0); }

inline double mehler_rhs(double z, double x) {
  return std::exp(-x * x * (1.0 - z) / (1.0 + z)) / std::sqrt(pi * (1.0 - z * z));
}

inline double mehler_partial_sum(double z, double x, std::size_t K) {
  const auto psi = specfun::hermite_functions(x, K - 1);
  double s = 0.0, zk = 1.0;
  for (std::size_t k = 0; k < K; ++k, zk *= z)
    s += zk * psi[k] * psi[k];
  return s;
}

// ---- the perturbation ----

// H_a(s) = (1/4 pi^2) int_0^inf r G(r) cos(s r) dr
inline double h_a(double a, double beta, double s) {
  check_scale(a, beta, "h_a");
  const double R = envelope_cutoff(a, beta, 1.0, 1e-14);
  s = std::abs(s);
  auto f = [&](double r) { return r * damping(a, beta, r) * std::cos(s * r); };
  const auto rule = s == 0.0 ? quad::finite(0.0, R, 1e-13, 1e-12)
                             : quad::oscillatory(0.0, R, s, 1e-12, 1e-11);
  return quad::integrate(f, rule).value / (4.0 * pi * pi);
}

// g_a(z) = (1 / 8 pi^2) int_0^inf r^2 G(r) J0(r |z|) dr
inline double g_a_point(double a, double beta, double q, double p) {
  check_scale(a, beta, "g_a_point");
  const double rho = std::hypot(q, p);
  const double R = envelope_cutoff(a, beta, 2.0, 1e-14);
  auto f = [&](double r) { return r * r * damping(a, beta, r) * specfun::bessel_j0(r * rho); };
  const auto rule = rho == 0.0 ? quad::finite(0.0, R, 1e-13, 1e-12)
                               : quad::oscillatory(0.0, R, rho, 1e-12, 1e-11);
  return quad::integrate(f, rule).value / (8.0 * pi * pi);
}

// int H_a^2 via Parseval: (1 / 16 pi^3) int_0^inf r^2 G^2 dr.
inline double int_ha2_parseval(double a, double beta) {
  check_scale(a, beta, "int_ha2_parseval");
  const double R = envelope_cutoff(a, beta, 2.0, 1e-16);
  auto f = [&](double r) {
    const double g = damping(a, beta, r);
    return r * r * g * g;
  };
  return quad::integrate(f, quad::finite(0.0, R, 1e-13, 1e-12)).value / (16.0 * pi * pi * pi);
}

// int H_a^2 by direct quadrature in u, with the tail from H_a(u) ~ -1/(4 pi^2 u^2).
inline double int_ha2(double a, double beta, double U = 40.0) {
  auto f = [&](double u) {
    const double h = h_a(a, beta, u);
    return h * h;
  };
  const double body = quad::integrate(f, quad::finite(0.0, U, 1e-14, 1e-10)).value;
  const double tail = 1.0 / (16.0 * std::pow(pi, 4) * 3.0 * U * U * U);
  return 2.0 * (body + tail);
}

// tau_k = (1/4 pi) int_0^inf e^{-t^2/4} L_k(t^2/2) t^2 G(t) dt for k = 0..k_max,
// on a fixed composite Gauss-Legendre rule fine enough for L_{k_max}.
inline std::vector<double> tau_diagonals(double a, double beta, std::size_t k_max) {
  check_scale(a, beta, "tau_diagonals");
  const double R = envelope_cutoff(a, beta, 2.0, 1e-17);
  const double T = std::min(R, std::sqrt(8.0 * static_cast<double>(k_max) + 4.0) + 20.0);
  const double width = std::min(0.1, 1.0 / std::sqrt(2.0 * static_cast<double>(k_max) + 1.0));
  const auto rule = quad::gauss_legendre(0.0, T, static_cast<std::size_t>(std::ceil(T / width)));
  std::vector<double> tau(k_max + 1, 0.0), ell(k_max + 1);
  for (std::size_t i = 0; i < rule.abscissae.size(); ++i) {
    const double t = rule.abscissae[i];
    specfun::laguerre_functions(0.5 * t * t, ell);
    const double w = rule.weights[i] * t * t * damping(a, beta, t);
    for (std::size_t k = 0; k <= k_max; ++k)
      tau[k] += w * ell[k];
  }
  for (double& v : tau)
    v /= 4.0 * pi;
  return tau;
}

// Single entry by adaptive quadrature, split at the oscillatory region.
inline double tau_diag(double a, double beta, std::size_t k) {
  check_scale(a, beta, "tau_diag");
  const double R = envelope_cutoff(a, beta, 2.0, 1e-17);
  const double T = std::min(R, std::sqrt(8.0 * static_cast<double>(k) + 4.0) + 20.0);
  auto f = [&](double t) {
    const double x = 0.5 * t * t;
    return t * t * damping(a, beta, t) * std::exp(-0.5 * x) * specfun::laguerre(k, x);
  };
  return quad::integrate(f, quad::finite(0.0, T, 1e-13, 1e-10)).value / (4.0 * pi);
}

// ---- the hardest family ----

inline double c_a(double a, double q_small) {
  return q_small / (std::sqrt(a) * std::pow(std::log(a), 1.5));
}

struct PositivityScan {
  bool ok = true;
  std::optional<std::size_t> first_violation_k;
  std::vector<double> diagonal;
};

inline PositivityScan positivity_scan(double alpha, double a, double beta, double c,
                                      std::size_t dim) {
  PositivityScan s;
  s.diagonal = alpha_diagonals(alpha, dim);
  if (c != 0.0 && dim > 0) {
    const auto tau = tau_diagonals(a, beta, dim - 1);
    for (std::size_t k = 0; k < dim; ++k)
      s.diagonal[k] += c * tau[k];
  }
  for (std::size_t k = 0; k < dim; ++k)
    if (s.diagonal[k] < 0.0) {
      s.ok = false;
      s.first_violation_k = k;
      break;
    }
  return s;
}

struct HardestFamily {
  double alpha = 0.2;
  double beta = 1.0;
  double a = 1e6;
  double q_small = 0.1;
  double c = 0.0;
  std::size_t dim = 500;
  std::vector<double> diagonal;

  HardestFamily() = default;
  HardestFamily(double alpha_, double beta_, double a_, double q_, double c_, std::size_t dim_)
      : alpha(alpha_), beta(beta_), a(a_), q_small(q_), c(c_), dim(dim_) {
    if (!(alpha > 0.0 && alpha < 0.25))
      throw DomainError("HardestFamily: alpha must lie in (0, 1/4)");
    check_scale(a, beta, "HardestFamily");
    if (!(q_small > 0.0))
      throw DomainError("HardestFamily: q_small must be positive");
    if (std::abs(c) > C() * (1.0 + 1e-12))
      throw DomainError("HardestFamily: |c| exceeds C_a");
    auto scan = positivity_scan(alpha, a, beta, c, dim);
    if (!scan.ok)
      throw PositivityViolation("HardestFamily: negative diagonal entry", *scan.first_violation_k);
    diagonal = std::move(scan.diagonal);
  }

  double C() const { return c_a(a, q_small); }
};

inline double hardest_diag(const HardestFamily& f, std::size_t k) {
  if (k < f.diagonal.size())
    return f.diagonal[k];
  return alpha_diagonal(f.alpha, k) + f.c * tau_diag(f.a, f.beta, k);
}

// ---- Fisher information ----

// H_a and p_alpha tabulated on a composite Gauss-Legendre rule over [0, U];
// I(c) = int_R H_a^2 / (p_alpha + c H_a) then costs one pass over the nodes.
// Beyond U, H_a is replaced by -1/(4 pi^2 u^2) (the next term is O(a^{-1} u^{-4})
// and the oscillating part decays like e^{-pi u / (2 beta)}).
class FisherTable {
public:
  FisherTable(double alpha, double a, double beta, double U = 30.0, double width = 0.25)
      : alpha_(alpha), U_(U) {
    check_alpha(alpha, "FisherTable");
    check_scale(a, beta, "FisherTable");
    rule_ = quad::gauss_legendre(0.0, U, static_cast<std::size_t>(std::ceil(U / width)));
    const std::size_t m = rule_.abscissae.size();
    h_.resize(m);
    p_.resize(m);
    parallel::parallel_for(m, [&](std::size_t i) {
      h_[i] = h_a(a, beta, rule_.abscissae[i]);
      p_[i] = p_alpha(alpha, rule_.abscissae[i]);
    });
  }

  double operator()(double c) const {
    double s = 0.0;
    for (std::size_t i = 0; i < h_.size(); ++i) {
      const double d = p_[i] + c * h_[i];
      if (!(d > 0.0)) {
        std::ostringstream msg;
        msg << "fisher_info: density p_c is not positive at u = " << rule_.abscissae[i];
        throw NonpositiveDensity(msg.str());
      }
      s += rule_.weights[i] * h_[i] * h_[i] / d;
    }
    return 2.0 * (s + tail(c));
  }

  const std::vector<double>& nodes() const { return rule_.abscissae; }
  const std::vector<double>& h() const { return h_; }
  const std::vector<double>& p() const { return p_; }
  double cutoff() const { return U_; }

private:
  // u = U / v on (0, 1]; p_alpha switches to its x^{-(1+2 alpha)} asymptote
  // once the O(u^{-2}) correction is below rounding.
  double tail(double c) const {
    const double A = p_alpha_tail_coefficient(alpha_);
    auto f = [&](double v) {
      if (v <= 0.0)
        return 0.0;
      const double u = U_ / v;
      const double h = -1.0 / (4.0 * pi * pi * u * u);
      const double p = u > 1e8 ? A * std::pow(u, -(1.0 + 2.0 * alpha_)) : p_alpha(alpha_, u);
      const double d = p + c * h;
      if (!(d > 0.0))
        throw NonpositiveDensity("fisher_info: density p_c is not positive in the tail");
      return h * h / d * U_ / (v * v);
    };
    return quad::integrate(f, quad::finite(0.0, 1.0, 1e-18, 1e-10)).value;
  }

  double alpha_;
  double U_;
  quad::QuadratureRule rule_;
  std::vector<double> h_, p_;
};

inline double fisher_info(const HardestFamily& f) {
  return FisherTable(f.alpha, f.a, f.beta)(f.c);
}

// ---- Van Trees ----

struct VanTreesConfig {
  double eta = 0.9;
  double n = 1e6;
  std::function<double(double)> prior = [](double c) {
    const double v = std::cos(0.5 * pi * c);
    return v * v;
  };
  std::function<double(double)> prior_derivative = [](double c) {
    return -0.5 * pi * std::sin(pi * c);
  };
  double prior_fisher = pi * pi;

  void validate() const {
    if (!(eta > 0.0 && eta < 1.0))
      throw DomainError("VanTreesConfig: eta must lie in (0, 1)");
    if (!(n >= 2.0))
      throw DomainError("VanTreesConfig: n must be at least 2");
    const double mass = quad::integrate(prior, quad::finite(-1.0, 1.0, 1e-14, 1e-13)).value;
    if (std::abs(mass - 1.0) > 1e-10)
      throw InvalidSpec("VanTreesConfig: prior does not integrate to one");
    if (std::abs(prior_fisher_numeric() - prior_fisher) > 1e-8)
      throw InvalidSpec("VanTreesConfig: prior_fisher does not match the prior");
  }

  double prior_fisher_numeric() const {
    auto f = [&](double c) {
      const double l = prior(c);
      const double d = prior_derivative(c);
      return l > 0.0 ? d * d / l : 0.0;
    };
    return quad::integrate(f, quad::finite(-1.0, 1.0, 1e-14, 1e-13)).value;
  }
};

struct VanTreesReport {
  double a = 0.0;
  double C_a = 0.0;
  double numerator = 0.0;
  double fisher_term = 0.0;
  double prior_term = 0.0;
  double bound = 0.0;
  double r_n_sq = 0.0;
  double ratio = 0.0;
};

inline double default_alpha_n(double n) { return std::pow(std::log(n), -1.0 / 6.0); }

inline VanTreesReport van_trees_report(double alpha, double beta, double q_small,
                                       const VanTreesConfig& cfg,
                                       const FisherTable* table = nullptr) {
  cfg.validate();
  VanTreesReport r;
  r.a = std::pow(cfg.n, cfg.eta);
  r.C_a = c_a(r.a, q_small);
  std::optional<FisherTable> own;
  if (!table)
    table = &own.emplace(alpha, r.a, beta);
  const double g0 = g_a_point(r.a, beta, 0.0, 0.0);
  r.numerator = g0 * g0;
  const auto gl = quad::gauss_legendre(-1.0, 1.0, 1);
  double avg = 0.0;
  for (std::size_t i = 0; i < gl.abscissae.size(); ++i)
    avg += gl.weights[i] * cfg.prior(gl.abscissae[i]) * (*table)(r.C_a * gl.abscissae[i]);
  r.fisher_term = cfg.n * avg;
  r.prior_term = cfg.prior_fisher / (r.C_a * r.C_a);
  r.bound = r.numerator / (r.fisher_term + r.prior_term);
  const double L = std::log(cfg.n);
  r.r_n_sq = c_star(beta) * r0(alpha) * L * L * L / cfg.n;
  r.ratio = r.bound / r.r_n_sq;
  return r;
}

// ---- class membership ----

// (1/4 pi^2) int_{R^2} |W~_alpha|^2 e^{2 beta |w|} dw
inline double class_energy(double alpha, double beta) {
  auto f = [&](double r) {
    const double v = charfn_alpha(alpha, r);
    return r * v * v * std::exp(2.0 * beta * r);
  };
  const double R = 2.0 * beta * 4.0 + 60.0;
  return quad::integrate(f, quad::finite(0.0, R, 1e-300, 1e-9)).value / (2.0 * pi);
}

// (C_a^2 / 4 pi^2) int_{R^2} |g~_a|^2 e^{2 beta |w|} dw with g~_a = |w| G / (4 pi)
inline double perturbation_energy(double a, double beta, double q_small) {
  check_scale(a, beta, "perturbation_energy");
  const double R = envelope_cutoff(a, beta, 3.0, 1e-14) * 2.0;
  auto f = [&](double r) {
    const double g = damping(a, beta, r);
    return r * r * r * g * g * std::exp(2.0 * beta * r);
  };
  const double I = quad::integrate(f, quad::finite(0.0, R, 1e-300, 1e-10)).value;
  const double C = c_a(a, q_small);
  return C * C * I / (16.0 * pi * pi * 2.0 * pi);
}

} // namespace qht::minimax
