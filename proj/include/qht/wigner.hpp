#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "qht/error.hpp"
#include "qht/homodyne.hpp"
#include "qht/io.hpp"
#include "qht/parallel.hpp"
#include "qht/quadrature.hpp"
#include "qht/specfun.hpp"
#include "qht/state.hpp"

namespace qht {

struct GridSpec {
  double q_min = -4.0;
  double q_max = 4.0;
  double p_min = -4.0;
  double p_max = 4.0;
  std::size_t steps = 81;

  void validate() const {
    if (!(q_min < q_max) || !(p_min < p_max) || steps < 2 || !std::isfinite(q_min) ||
        !std::isfinite(q_max) || !std::isfinite(p_min) || !std::isfinite(p_max))
      throw DomainError("grid: need q_min < q_max, p_min < p_max and steps >= 2");
  }
  double q(std::size_t i) const {
    return q_min + (q_max - q_min) * static_cast<double>(i) / static_cast<double>(steps - 1);
  }
  double p(std::size_t j) const {
    return p_min + (p_max - p_min) * static_cast<double>(j) / static_cast<double>(steps - 1);
  }
  std::size_t size() const { return steps * steps; }
  double max_radius() const {
    const double q = std::max(std::abs(q_min), std::abs(q_max));
    const double p = std::max(std::abs(p_min), std::abs(p_max));
    return std::hypot(q, p);
  }

  static GridSpec square(double radius, std::size_t steps) {
    return {-radius, radius, -radius, radius, steps};
  }

  // "qmin,qmax,pmin,pmax,steps"
  static GridSpec parse(const std::string& text) {
    GridSpec g;
    std::istringstream in(text);
    std::string field;
    std::vector<std::string> parts;
    while (std::getline(in, field, ','))
      parts.push_back(field);
    if (parts.size() != 5)
      throw DomainError("grid: expected qmin,qmax,pmin,pmax,steps");
    try {
      std::size_t used = 0;
      auto num = [&](const std::string& s) {
        const double v = std::stod(s, &used);
        if (used != s.size())
          throw std::invalid_argument(s);
        return v;
      };
      g.q_min = num(parts[0]);
      g.q_max = num(parts[1]);
      g.p_min = num(parts[2]);
      g.p_max = num(parts[3]);
      const long long steps = std::stoll(parts[4], &used);
      if (used != parts[4].size() || steps < 2)
        throw std::invalid_argument(parts[4]);
      g.steps = static_cast<std::size_t>(steps);
    } catch (const std::logic_error&) {
      throw DomainError("grid: cannot parse \"" + text + "\"");
    }
    g.validate();
    return g;
  }

  bool operator<(const GridSpec& o) const {
    return std::tie(q_min, q_max, p_min, p_max, steps) <
           std::tie(o.q_min, o.q_max, o.p_min, o.p_max, o.steps);
  }
};

// Row-major over p (outer) then q; header "q,p,<name>".
inline void write_grid_csv(const GridSpec& g, const std::vector<double>& values,
                           std::ostream& out, const std::string& name = "w") {
  out << "q,p," << name << '\n';
  for (std::size_t j = 0; j < g.steps; ++j)
    for (std::size_t i = 0; i < g.steps; ++i)
      out << io::g17(g.q(i)) << ',' << io::g17(g.p(j)) << ',' << io::g17(values[j * g.steps + i])
          << '\n';
}

// Hermitian operator in the Fock basis without the state invariants, so
// that differences of states can be evaluated too.
struct FockOperator {
  bool diagonal = true;
  std::vector<double> diag;
  Eigen::MatrixXcd dense;

  std::size_t dim() const { return diagonal ? diag.size() : static_cast<std::size_t>(dense.rows()); }
  cplx operator()(std::size_t j, std::size_t k) const {
    if (diagonal)
      return j == k ? cplx(diag[j], 0.0) : cplx(0.0, 0.0);
    return dense(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k));
  }

  static FockOperator of(const DensityMatrix& rho) {
    FockOperator op;
    op.diagonal = rho.is_diagonal();
    if (op.diagonal) {
      op.diag = rho.diagonal();
      std::size_t n = op.diag.size();
      while (n > 1 && op.diag[n - 1] == 0.0)
        --n;
      op.diag.resize(n);
    } else {
      op.dense = rho.to_dense();
    }
    return op;
  }

  static FockOperator difference(const DensityMatrix& a, const DensityMatrix& b) {
    FockOperator op;
    const std::size_t n = std::max(a.dim(), b.dim());
    op.diagonal = a.is_diagonal() && b.is_diagonal();
    auto entry = [n](const DensityMatrix& m, std::size_t j, std::size_t k) {
      return j < m.dim() && k < m.dim() ? m(j, k) : cplx(0.0, 0.0);
    };
    if (op.diagonal) {
      op.diag.resize(n);
      for (std::size_t k = 0; k < n; ++k)
        op.diag[k] = entry(a, k, k).real() - entry(b, k, k).real();
    } else {
      op.dense.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k)
          op.dense(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) =
              entry(a, j, k) - entry(b, j, k);
    }
    return op;
  }
};

namespace detail {

// Normalised generalised Laguerre functions
//   G_n^{(m)}(x) = sqrt(n!/(n+m)!) x^{m/2} e^{-x/2} L_n^{(m)}(x),  n < out.size(),
// so that int psi_{n+m} psi_n e^{-ixt} dx = (-i sgn t)^m G_n^{(m)}(t^2/2).
inline void laguerre_normalized(std::size_t m, double x, std::span<double> out) {
  if (out.empty())
    return;
  const double mm = static_cast<double>(m);
  double g0;
  if (x == 0.0)
    g0 = m == 0 ? 1.0 : 0.0;
  else
    g0 = std::exp(0.5 * mm * std::log(x) - 0.5 * x - 0.5 * std::lgamma(mm + 1.0));
  out[0] = g0;
  if (out.size() == 1)
    return;
  double prev = g0;
  double cur = std::sqrt(1.0 / (1.0 + mm)) * (1.0 + mm - x) * g0;
  out[1] = cur;
  for (std::size_t n = 1; n + 1 < out.size(); ++n) {
    const double nn = static_cast<double>(n);
    const double r_next = std::sqrt((nn + 1.0) / (nn + 1.0 + mm));
    const double r_cur = std::sqrt(nn / (nn + mm));
    const double next =
        ((2.0 * nn + 1.0 + mm - x) * r_next * cur - (nn + mm) * r_next * r_cur * prev) / (nn + 1.0);
    prev = cur;
    cur = next;
    out[n + 1] = cur;
  }
}

// Mode coefficients of the characteristic function at radius |t|:
// W~(t, phi) = sum_m (-i sgn t)^m [e^{-i m phi} lower[m] + e^{i m phi} upper[m]]
// with upper[0] = 0.
struct ModeCoefficients {
  std::vector<cplx> lower;
  std::vector<cplx> upper;
};

inline ModeCoefficients charfn_modes(const FockOperator& op, double t) {
  const std::size_t K = op.dim();
  const double x = 0.5 * t * t;
  ModeCoefficients c;
  if (op.diagonal) {
    std::vector<double> g(K);
    specfun::laguerre_functions(x, g);
    double s = 0.0;
    for (std::size_t n = 0; n < K; ++n)
      s += op.diag[n] * g[n];
    c.lower = {cplx(s, 0.0)};
    c.upper = {cplx(0.0, 0.0)};
    return c;
  }
  c.lower.assign(K, 0.0);
  c.upper.assign(K, 0.0);
  std::vector<double> g(K);
  for (std::size_t m = 0; m < K; ++m) {
    std::span<double> gm(g.data(), K - m);
    laguerre_normalized(m, x, gm);
    for (std::size_t n = 0; n + m < K; ++n) {
      c.lower[m] += op(n + m, n) * gm[n];
      if (m > 0)
        c.upper[m] += op(n, n + m) * gm[n];
    }
  }
  return c;
}

inline cplx combine_modes(const ModeCoefficients& c, double t, double phi) {
  const cplx unit = t < 0.0 ? cplx(0.0, 1.0) : cplx(0.0, -1.0);
  cplx phase = 1.0;
  cplx s = 0.0;
  for (std::size_t m = 0; m < c.lower.size(); ++m) {
    const cplx e = std::polar(1.0, -static_cast<double>(m) * phi);
    s += phase * (e * c.lower[m] + std::conj(e) * c.upper[m]);
    phase *= unit;
  }
  return s;
}

} // namespace detail

// Characteristic function from the Fock expansion: exact finite sum of
// displaced-number-state matrix elements.
inline cplx charfn_series(const FockOperator& op, double t, double phi) {
  return detail::combine_modes(detail::charfn_modes(op, t), t, phi);
}

// W~(t, phi) = int p(x, phi) e^{-ixt} dx by adaptive quadrature over the
// effective support |x| <= sqrt(2K+1) + 10.
inline cplx charfn_quadrature(const DensityMatrix& rho, double t, double phi) {
  const double K = static_cast<double>(detail::occupied_dim(rho));
  const double X = std::sqrt(2.0 * K + 1.0) + 10.0;
  auto f = [&](double x) { return pdf_unclamped(rho, x, phi) * std::polar(1.0, -x * t); };
  const double omega = std::max(std::abs(t), 1.0);
  return quad::integrate(f, quad::oscillatory(-X, X, omega, 1e-13, 1e-11)).value;
}

// Diagonal states use the closed form sum rho_k e^{-t^2/4} L_k(t^2/2), the
// exact transform of sum rho_k psi_k^2; others integrate the density.
inline cplx charfn(const DensityMatrix& rho, double t, double phi) {
  if (rho.is_diagonal())
    return charfn_series(FockOperator::of(rho), t, phi);
  return charfn_quadrature(rho, t, phi);
}

// sum_k w_k ((-1)^k / pi) L_k(2 r^2) e^{-r^2}
inline double wigner_diagonal_closed_form(std::span<const double> weights, double q, double p) {
  const double x = 2.0 * (q * q + p * p);
  thread_local std::vector<double> ell;
  ell.resize(weights.size());
  specfun::laguerre_functions(x, ell);
  double s = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k)
    s += (k % 2 ? -weights[k] : weights[k]) * ell[k];
  return s / specfun::pi;
}

// Nested quadrature of W(q,p) = (1/4pi^2) int_0^pi int_R |t| W~(t,phi)
// e^{it(q cos phi + p sin phi)} dt dphi for points with |z| <= r_max.
// The characteristic function is tabulated once on the (t, phi) nodes:
// composite 20-point Gauss-Legendre on [0, T] for each sign of t and the
// trapezoid rule in phi, which is spectrally accurate because the inner
// integral is pi-periodic.
class WignerQuadrature {
public:
  WignerQuadrature(const FockOperator& op, double r_max) {
    const double K = static_cast<double>(op.dim());
    const double T = 2.0 * std::sqrt(2.0 * K + 1.0) + 12.0;
    const double freq = r_max + std::sqrt(2.0 * K + 1.0) + 1.0;
    const double width = std::min(1.0, 6.0 / freq);
    const auto rule = quad::gauss_legendre(0.0, T, static_cast<std::size_t>(std::ceil(T / width)));
    t_ = rule.abscissae;
    wt_ = rule.weights;
    nphi_ = static_cast<std::size_t>(std::ceil(0.5 * (T * r_max + K))) + 24;
    const std::size_t nt = t_.size();
    plus_.resize(nt * nphi_);
    minus_.resize(nt * nphi_);
    parallel::parallel_for(nt, [&](std::size_t i) {
      const auto modes = detail::charfn_modes(op, t_[i]);
      for (std::size_t j = 0; j < nphi_; ++j) {
        const double phi = phi_node(j);
        plus_[j * nt + i] = detail::combine_modes(modes, t_[i], phi);
        minus_[j * nt + i] = detail::combine_modes(modes, -t_[i], phi);
      }
    });
  }

  // Complex result; the imaginary part is the quadrature residue.
  cplx evaluate(double q, double p) const {
    const std::size_t nt = t_.size();
    cplx total = 0.0;
    for (std::size_t j = 0; j < nphi_; ++j) {
      const double phi = phi_node(j);
      const double u = q * std::cos(phi) + p * std::sin(phi);
      cplx inner = 0.0;
      for (std::size_t i = 0; i < nt; ++i) {
        const double a = t_[i] * u;
        const cplx e(std::cos(a), std::sin(a));
        inner += (wt_[i] * t_[i]) * (plus_[j * nt + i] * e + minus_[j * nt + i] * std::conj(e));
      }
      total += inner;
    }
    return total * (specfun::pi / static_cast<double>(nphi_)) /
           (4.0 * specfun::pi * specfun::pi);
  }

  double operator()(double q, double p) const {
    const cplx v = evaluate(q, p);
    if (!(std::abs(v.imag()) <= 1e-9)) {
      std::ostringstream msg;
      msg << "wigner_point: imaginary residue " << v.imag() << " at (" << q << ", " << p << ")";
      throw NonConvergence(msg.str());
    }
    return v.real();
  }

private:
  double phi_node(std::size_t j) const {
    return specfun::pi * static_cast<double>(j) / static_cast<double>(nphi_);
  }

  std::vector<double> t_;
  std::vector<double> wt_;
  std::size_t nphi_ = 0;
  std::vector<cplx> plus_;
  std::vector<cplx> minus_;
};

inline double wigner_point(const DensityMatrix& rho, double q, double p) {
  return WignerQuadrature(FockOperator::of(rho), std::hypot(q, p))(q, p);
}

// W evaluator with a per-grid cache. Diagonal operators use the Laguerre
// closed form, everything else the nested quadrature.
class WignerField {
public:
  enum class Method { closed_form, quadrature };

  explicit WignerField(FockOperator op) : op_(std::move(op)) {
    method_ = op_.diagonal ? Method::closed_form : Method::quadrature;
  }
  explicit WignerField(const DensityMatrix& rho) : WignerField(FockOperator::of(rho)) {}

  Method method() const { return method_; }

  double operator()(double q, double p) const {
    if (method_ == Method::closed_form)
      return wigner_diagonal_closed_form(op_.diag, q, p);
    return WignerQuadrature(op_, std::hypot(q, p))(q, p);
  }

  std::vector<double> grid(const GridSpec& g) const {
    g.validate();
    {
      std::lock_guard<std::mutex> lock(*mutex_);
      auto it = cache_->find(g);
      if (it != cache_->end())
        return it->second;
    }
    std::vector<double> values(g.size());
    if (method_ == Method::closed_form) {
      parallel::parallel_for(g.size(), [&](std::size_t n) {
        values[n] = wigner_diagonal_closed_form(op_.diag, g.q(n % g.steps), g.p(n / g.steps));
      });
    } else {
      const WignerQuadrature wq(op_, g.max_radius());
      parallel::parallel_for(g.size(), [&](std::size_t n) {
        values[n] = wq(g.q(n % g.steps), g.p(n / g.steps));
      });
    }
    std::lock_guard<std::mutex> lock(*mutex_);
    cache_->emplace(g, values);
    return values;
  }

private:
  FockOperator op_;
  Method method_;
  std::shared_ptr<std::mutex> mutex_ = std::make_shared<std::mutex>();
  std::shared_ptr<std::map<GridSpec, std::vector<double>>> cache_ =
      std::make_shared<std::map<GridSpec, std::vector<double>>>();
};

// rho_{k,k} = int_0^inf t e^{-t^2/4} L_k(t^2/2) W~(t) dt for a radial
// characteristic function W~(t).
template <class Radial>
double diag_from_charfn(Radial&& charfn_radial, std::size_t k, double abs_tol = 1e-13,
                        double rel_tol = 1e-10) {
  std::vector<double> ell(k + 1);
  auto f = [&](double t) {
    specfun::laguerre_functions(0.5 * t * t, ell);
    const double v = t * ell[k] * charfn_radial(t);
    if (!std::isfinite(v)) {
      std::ostringstream msg;
      msg << "diag_from_charfn: integrand not finite at t = " << t;
      throw DivergentIntegrand(msg.str());
    }
    return v;
  };
  // ell_k oscillates on [0, sqrt(8k+4)]; resolve it before the Gaussian tail.
  const double turn = std::sqrt(8.0 * static_cast<double>(k) + 4.0) + 10.0;
  const double body = quad::integrate(f, quad::finite(0.0, turn, abs_tol, rel_tol)).value;
  const double tail = quad::integrate(f, quad::semi_infinite(turn, abs_tol, rel_tol)).value;
  return body + tail;
}

// Rotation-invariance guard for a two-argument characteristic function.
template <class Charfn>
double diag_from_charfn_2d(Charfn&& charfn2, std::size_t k) {
  for (double t : {0.3, 1.1, 2.7})
    for (double phi : {0.4, 1.3, 2.9}) {
      const cplx a = charfn2(t, 0.0);
      const cplx b = charfn2(t, phi);
      if (std::abs(a - b) > 1e-9 * (1.0 + std::abs(a)))
        throw DomainError("diag_from_charfn: characteristic function is not radially symmetric");
    }
  return diag_from_charfn([&](double t) { return charfn2(t, 0.0).real(); }, k);
}

// Trapezoid estimate of int int |W_rho - W_tau|^2 over the grid.
inline double l2_distance(const DensityMatrix& rho, const DensityMatrix& tau,
                          const GridSpec& g = GridSpec::square(6.0, 241)) {
  g.validate();
  const WignerField field(FockOperator::difference(rho, tau));
  const auto v = field.grid(g);
  const double hq = (g.q_max - g.q_min) / static_cast<double>(g.steps - 1);
  const double hp = (g.p_max - g.p_min) / static_cast<double>(g.steps - 1);
  double s = 0.0;
  for (std::size_t j = 0; j < g.steps; ++j) {
    const double wj = (j == 0 || j + 1 == g.steps) ? 0.5 : 1.0;
    for (std::size_t i = 0; i < g.steps; ++i) {
      const double wi = (i == 0 || i + 1 == g.steps) ? 0.5 : 1.0;
      const double d = v[j * g.steps + i];
      s += wi * wj * d * d;
    }
  }
  return s * hq * hp;
}

} // namespace qht
