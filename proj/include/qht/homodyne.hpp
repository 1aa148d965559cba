#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <nlohmann/json.hpp>

#include "qht/error.hpp"
#include "qht/io.hpp"
#include "qht/parallel.hpp"
#include "qht/quadrature.hpp"
#include "qht/rng.hpp"
#include "qht/specfun.hpp"
#include "qht/state.hpp"

namespace qht {

struct Sample {
  double x = 0.0;
  double phi = 0.0;
};

struct SampleSet {
  std::vector<Sample> samples;
  std::uint64_t seed = 0;
  std::optional<StateSpec> state_spec;
  double tail_mass_bound = 0.0;
  std::string generator_id;
};

namespace detail {

// Highest index carrying weight, so trailing zeros cost nothing.
inline std::size_t occupied_dim(const DensityMatrix& rho) {
  if (!rho.is_diagonal())
    return rho.dim();
  const auto& w = rho.diagonal();
  std::size_t n = w.size();
  while (n > 1 && w[n - 1] == 0.0)
    --n;
  return n;
}

// s_d(x) = sum_k rho_{k+d,k} psi_{k+d}(x) psi_k(x) for d = 0..K-1, written
// into out (size K), given psi_0..psi_{K-1}.
inline void mode_products(const DensityMatrix& rho, std::span<const double> psi,
                          std::span<cplx> out) {
  const std::size_t K = psi.size();
  for (std::size_t d = 0; d < K; ++d) {
    cplx acc = 0.0;
    for (std::size_t k = 0; k + d < K; ++k)
      acc += rho(k + d, k) * (psi[k + d] * psi[k]);
    out[d] = acc;
  }
}

// Reduces phi to [0, pi) using p(x, phi + pi) = p(-x, phi).
inline void fold_angle(double& x, double& phi) {
  constexpr double two_pi = 2.0 * specfun::pi;
  phi = std::fmod(phi, two_pi);
  if (phi < 0.0)
    phi += two_pi;
  if (phi >= specfun::pi) {
    phi -= specfun::pi;
    x = -x;
  }
}

} // namespace detail

// p_rho(x, phi) = sum_{j,k} rho_{j,k} psi_j(x) psi_k(x) e^{-i(j-k) phi},
// without clamping.
inline double pdf_unclamped(const DensityMatrix& rho, double x, double phi) {
  detail::fold_angle(x, phi);
  const std::size_t K = detail::occupied_dim(rho);
  thread_local std::vector<double> psi;
  psi.resize(K);
  specfun::hermite_functions(x, psi);
  if (rho.is_diagonal()) {
    const auto& w = rho.diagonal();
    double s = 0.0;
    for (std::size_t k = 0; k < K; ++k)
      s += w[k] * psi[k] * psi[k];
    return s;
  }
  double s = 0.0;
  const cplx step = std::polar(1.0, -phi);
  cplx rot = 1.0;
  for (std::size_t d = 0; d < K; ++d) {
    cplx acc = 0.0;
    for (std::size_t k = 0; k + d < K; ++k)
      acc += rho(k + d, k) * (psi[k + d] * psi[k]);
    s += (d == 0 ? 1.0 : 2.0) * (rot * acc).real();
    rot *= step;
  }
  return s;
}

// Clamped density: truncated double sums may dip a few ulps below zero.
inline double pdf(const DensityMatrix& rho, double x, double phi) {
  return std::max(0.0, pdf_unclamped(rho, x, phi));
}

// R^# applied to a Radon profile: int_0^{2pi} f(q cos phi + p sin phi, phi) dphi.
template <class Radon>
double dual_radon_profile(Radon&& radon, double q, double p, double abs_tol = 1e-12,
                  double rel_tol = 1e-10) {
  auto f = [&](double phi) { return radon(q * std::cos(phi) + p * std::sin(phi), phi); };
  double total = 0.0;
  for (int half = 0; half < 2; ++half) {
    const double a = half * specfun::pi;
    total += quad::integrate(f, quad::finite(a, a + specfun::pi, abs_tol, rel_tol)).value;
  }
  return total;
}

inline double dual_radon(const DensityMatrix& rho, double q, double p) {
  return dual_radon_profile([&rho](double x, double phi) { return pdf(rho, x, phi); }, q, p);
}

// int_0^pi |p(x, phi) - p(y, phi)| dphi
inline double averaged_radon_lipschitz_check(const DensityMatrix& rho, double x, double y) {
  if (x == y)
    return 0.0;
  auto f = [&](double phi) { return std::abs(pdf(rho, x, phi) - pdf(rho, y, phi)); };
  return quad::integrate(f, quad::finite(0.0, specfun::pi, 1e-13, 1e-9)).value;
}

// ---------------------------------------------------------------------------
// Sampling

// Tabulated conditional CDFs of p(., phi) on a uniform knot grid. For each
// mode d the table keeps the running integral S_d(x_i) and the density
// contribution s_d(x_i), so F(x_i, phi) = sum_d (2 - [d=0]) Re(e^{-i d phi}
// S_d(x_i)) is available for any phi at O(K) cost per knot.
class CdfTable {
public:
  static constexpr std::size_t default_knots = 4096;

  // One table per occupied Fock level (density psi_k^2), sharing each
  // Hermite recurrence across all levels.
  static std::vector<std::optional<CdfTable>> fock_levels(const std::vector<double>& weights,
                                                          double x_max,
                                                          std::size_t knots = default_knots) {
    const std::size_t K = weights.size();
    std::vector<std::optional<CdfTable>> tables(K);
    for (std::size_t k = 0; k < K; ++k)
      if (weights[k] > 0.0)
        tables[k].emplace(CdfTable(x_max, knots, 1));
    const double x_min = -x_max;
    const double h = 2.0 * x_max / static_cast<double>(knots - 1);
    using GL = boost::math::quadrature::gauss<double, 4>;
    const auto& gx = GL::abscissa();
    const auto& gw = GL::weights();
    parallel::parallel_for(knots, [&](std::size_t i) {
      std::vector<double> psi(K);
      specfun::hermite_functions(x_min + h * static_cast<double>(i), psi);
      for (std::size_t k = 0; k < K; ++k)
        if (tables[k])
          tables[k]->den_[i] = psi[k] * psi[k];
      if (i + 1 == knots)
        return;
      const double c = x_min + h * (static_cast<double>(i) + 0.5);
      for (std::size_t g = 0; g < gx.size(); ++g)
        for (int sgn : {-1, 1}) {
          specfun::hermite_functions(c + sgn * 0.5 * h * gx[g], psi);
          for (std::size_t k = 0; k < K; ++k)
            if (tables[k])
              tables[k]->cum_[i + 1] += 0.5 * h * gw[g] * psi[k] * psi[k];
        }
    });
    for (auto& t : tables)
      if (t)
        for (std::size_t i = 1; i < knots; ++i)
          t->cum_[i] += t->cum_[i - 1];
    return tables;
  }

  static CdfTable state(const DensityMatrix& rho, double x_max,
                        std::size_t knots = default_knots) {
    const std::size_t K = detail::occupied_dim(rho);
    CdfTable t(x_max, knots, K);
    std::vector<double> psi(K);
    t.fill([&](double x, std::span<cplx> out) {
      specfun::hermite_functions(x, psi);
      detail::mode_products(rho, psi, out);
    });
    return t;
  }

  double x_min() const { return x_min_; }
  double x_max() const { return x_min_ + h_ * static_cast<double>(knots_ - 1); }

  // Inverse CDF at probability u in [0, 1) for angle phi.
  double invert(double u, double phi) const {
    thread_local std::vector<cplx> rot;
    rot.resize(modes_);
    const cplx step = std::polar(1.0, -phi);
    cplx r = 1.0;
    for (std::size_t d = 0; d < modes_; ++d) {
      rot[d] = r;
      r *= step;
    }
    auto cdf = [&](std::size_t i) { return combine(cum_, i, rot); };
    auto dens = [&](std::size_t i) { return std::max(0.0, combine(den_, i, rot)); };

    const double total = cdf(knots_ - 1);
    const double target = u * total;
    std::size_t lo = 0, hi = knots_ - 1;
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      (cdf(mid) <= target ? lo : hi) = mid;
    }
    const double F0 = cdf(lo);
    const double F1 = cdf(hi);
    const double x0 = x_min_ + h_ * static_cast<double>(lo);
    const double dF = F1 - F0;
    if (!(dF > 0.0))
      return x0 + 0.5 * h_;

    // Fritsch-Carlson limited cubic Hermite interpolant of F on the cell.
    const double slope = dF / h_;
    double m0 = dens(lo) / slope;
    double m1 = dens(hi) / slope;
    const double rr = m0 * m0 + m1 * m1;
    if (rr > 9.0) {
      const double s = 3.0 / std::sqrt(rr);
      m0 *= s;
      m1 *= s;
    }
    const double y = std::clamp((target - F0) / dF, 0.0, 1.0);
    // H(t) = (t^2 (3 - 2t)) + m0 t (1-t)^2 - m1 t^2 (1-t), monotone on [0,1]
    auto H = [&](double t) {
      const double s = 1.0 - t;
      return t * t * (3.0 - 2.0 * t) + m0 * t * s * s - m1 * t * t * s;
    };
    auto dH = [&](double t) {
      const double s = 1.0 - t;
      return 6.0 * t * s + m0 * s * (1.0 - 3.0 * t) - m1 * t * (2.0 - 3.0 * t);
    };
    double a = 0.0, b = 1.0, t = y;
    for (int it = 0; it < 60; ++it) {
      const double g = H(t) - y;
      if (g > 0.0)
        b = t;
      else
        a = t;
      const double d = dH(t);
      double next = d > 0.0 ? t - g / d : 0.5 * (a + b);
      if (!(next > a && next < b))
        next = 0.5 * (a + b);
      if (std::abs(next - t) <= 1e-15)
        break;
      t = next;
    }
    return x0 + h_ * t;
  }

private:
  CdfTable(double x_max, std::size_t knots, std::size_t modes)
      : x_min_(-x_max), h_(2.0 * x_max / static_cast<double>(knots - 1)),
        knots_(knots), modes_(modes), cum_(knots * modes), den_(knots * modes) {}

  template <class Modes>
  void fill(Modes&& modes) {
    using GL = boost::math::quadrature::gauss<double, 4>;
    const auto& gx = GL::abscissa();
    const auto& gw = GL::weights();
    std::vector<cplx> buf(modes_);
    for (std::size_t i = 0; i < knots_; ++i) {
      modes(x_min_ + h_ * static_cast<double>(i), buf);
      std::copy(buf.begin(), buf.end(), den_.begin() + static_cast<std::ptrdiff_t>(i * modes_));
    }
    for (std::size_t d = 0; d < modes_; ++d)
      cum_[d] = 0.0;
    for (std::size_t i = 0; i + 1 < knots_; ++i) {
      const double c = x_min_ + h_ * (static_cast<double>(i) + 0.5);
      std::vector<cplx> cell(modes_, 0.0);
      for (std::size_t g = 0; g < gx.size(); ++g) {
        for (int sgn : {-1, 1}) {
          modes(c + sgn * 0.5 * h_ * gx[g], buf);
          for (std::size_t d = 0; d < modes_; ++d)
            cell[d] += 0.5 * h_ * gw[g] * buf[d];
        }
      }
      for (std::size_t d = 0; d < modes_; ++d)
        cum_[(i + 1) * modes_ + d] = cum_[i * modes_ + d] + cell[d];
    }
  }

  double combine(const std::vector<cplx>& table, std::size_t i,
                 const std::vector<cplx>& rot) const {
    const cplx* row = table.data() + i * modes_;
    double s = row[0].real();
    for (std::size_t d = 1; d < modes_; ++d)
      s += 2.0 * (rot[d] * row[d]).real();
    return s;
  }

  double x_min_;
  double h_;
  std::size_t knots_;
  std::size_t modes_;
  std::vector<cplx> cum_;
  std::vector<cplx> den_;
};

inline constexpr double default_max_tail = 1e-6;

inline double sampler_x_max(std::size_t K) {
  return std::sqrt(2.0 * static_cast<double>(K)) + 5.0;
}

// Draws i.i.d. pairs (X, Phi) with Phi uniform on [0, pi) and X | Phi from
// p_rho(., Phi). Sample i uses counter stream i of the seed, so the output is
// independent of how the work is split across threads. The CDF tables are
// built once and shared by every draw.
class Sampler {
public:
  explicit Sampler(const DensityMatrix& rho, double max_tail = default_max_tail)
      : diagonal_(rho.is_diagonal()), tail_(rho.tail_mass_bound()) {
    if (tail_ > max_tail) {
      std::ostringstream msg;
      msg << "sample: truncation discards mass " << tail_ << " (limit " << max_tail
          << "); raise dim";
      throw TruncationTooSmall(msg.str());
    }
    const std::size_t K = detail::occupied_dim(rho);
    const double x_max = sampler_x_max(rho.dim());
    if (diagonal_) {
      const auto& w = rho.diagonal();
      cum_.resize(K);
      double s = 0.0;
      for (std::size_t k = 0; k < K; ++k)
        cum_[k] = (s += w[k]);
      levels_ = CdfTable::fock_levels(std::vector<double>(w.begin(), w.begin() + K), x_max);
    } else {
      table_.emplace(CdfTable::state(rho, x_max));
    }
  }

  SampleSet draw(std::size_t n, std::uint64_t seed) const {
    if (n == 0)
      throw DomainError("sample: n must be positive");
    SampleSet out;
    out.samples.resize(n);
    out.seed = seed;
    out.tail_mass_bound = tail_;
    out.generator_id = std::string(rng::generator_id) + "/inverse-cdf-4096";
    if (diagonal_) {
      const std::size_t K = cum_.size();
      const double total = cum_.back();
      parallel::parallel_for(n, [&](std::size_t i) {
        rng::Stream st(seed, i);
        const double phi = specfun::pi * st.uniform();
        const double uk = st.uniform() * total;
        std::size_t k = static_cast<std::size_t>(
            std::upper_bound(cum_.begin(), cum_.end(), uk) - cum_.begin());
        k = std::min(k, K - 1);
        while (!levels_[k])
          k = k > 0 ? k - 1 : K - 1;
        out.samples[i] = {levels_[k]->invert(st.uniform(), phi), phi};
      });
      return out;
    }
    parallel::parallel_for(n, [&](std::size_t i) {
      rng::Stream st(seed, i);
      const double phi = specfun::pi * st.uniform();
      st.uniform();
      out.samples[i] = {table_->invert(st.uniform(), phi), phi};
    });
    return out;
  }

private:
  bool diagonal_;
  double tail_;
  std::vector<double> cum_;
  std::vector<std::optional<CdfTable>> levels_;
  std::optional<CdfTable> table_;
};

inline SampleSet sample(const DensityMatrix& rho, std::size_t n, std::uint64_t seed,
                        double max_tail = default_max_tail) {
  if (n == 0)
    throw DomainError("sample: n must be positive");
  return Sampler(rho, max_tail).draw(n, seed);
}

// Exact draws from the rotation-invariant alpha state, bypassing Fock
// truncation: p_alpha is the Gaussian mixture over z with mixing density
// alpha (1-z)^{alpha-1} and variance (1+z) / (2(1-z)).
inline SampleSet sample_alpha_exact(double alpha, std::size_t n, std::uint64_t seed) {
  check_alpha(alpha, "sample");
  if (n == 0)
    throw DomainError("sample: n must be positive");
  SampleSet out;
  out.samples.resize(n);
  out.seed = seed;
  out.tail_mass_bound = 0.0;
  out.generator_id = std::string(rng::generator_id) + "/gaussian-mixture";
  parallel::parallel_for(n, [&](std::size_t i) {
    rng::Stream st(seed, i);
    const double phi = specfun::pi * st.uniform();
    const double one_minus_z = std::pow(st.open_uniform(), 1.0 / alpha);
    const double var = (2.0 - one_minus_z) / (2.0 * one_minus_z);
    out.samples[i] = {std::sqrt(var) * st.normal(), phi};
  });
  return out;
}

// ---------------------------------------------------------------------------
// Files

inline nlohmann::json sidecar_json(const SampleSet& s) {
  nlohmann::json j;
  j["state_spec"] = s.state_spec ? to_json(*s.state_spec) : nlohmann::json(nullptr);
  j["n"] = s.samples.size();
  j["seed"] = s.seed;
  j["tail_mass_bound"] = s.tail_mass_bound;
  j["generator_id"] = s.generator_id;
  return j;
}

inline void write_samples_csv(const SampleSet& s, std::ostream& out) {
  out << "x,phi\n";
  for (const auto& p : s.samples)
    out << io::g17(p.x) << ',' << io::g17(p.phi) << '\n';
}

inline SampleSet read_samples_csv(std::istream& in, const std::string& name = "samples") {
  SampleSet s;
  std::string line;
  if (!std::getline(in, line) || line.rfind("x,phi", 0) != 0)
    throw ValidationError(name + ": expected header x,phi");
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r")
      continue;
    const auto comma = line.find(',');
    char* end1 = nullptr;
    char* end2 = nullptr;
    const double x = std::strtod(line.c_str(), &end1);
    const double phi = comma == std::string::npos ? NAN : std::strtod(line.c_str() + comma + 1, &end2);
    const bool tail_ok = end2 != nullptr && end2 != line.c_str() + comma + 1 &&
                         (*end2 == '\0' || *end2 == '\r');
    if (comma == std::string::npos || end1 != line.c_str() + comma || !tail_ok || !std::isfinite(x) ||
        !std::isfinite(phi) || phi < 0.0 || phi >= specfun::pi) {
      std::ostringstream msg;
      msg << name << ": malformed sample on line " << row;
      throw ValidationError(msg.str());
    }
    s.samples.push_back({x, phi});
  }
  if (s.samples.empty())
    throw InsufficientData(name + ": no samples");
  return s;
}

} // namespace qht
