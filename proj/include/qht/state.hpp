#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/special_functions/beta.hpp>
#include <nlohmann/json.hpp>

#include "qht/error.hpp"

namespace qht {

using cplx = std::complex<double>;

// Truncated Fock-basis density matrix. Diagonal states keep only their
// diagonal, which lets rotation-invariant states run to millions of levels.
class DensityMatrix {
public:
  static constexpr double psd_tolerance = 1e-10;
  static constexpr double trace_slack = 1e-12;

  static DensityMatrix from_diagonal(std::vector<double> weights) {
    if (weights.empty())
      throw InvalidSpec("density matrix: dimension must be positive");
    double sum = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
      if (!(weights[k] >= 0.0) || !std::isfinite(weights[k])) {
        std::ostringstream msg;
        msg << "density matrix: diagonal weight " << k << " is " << weights[k];
        throw InvalidSpec(msg.str());
      }
      sum += weights[k];
    }
    if (sum > 1.0 + trace_slack)
      throw InvalidSpec("density matrix: trace exceeds 1");
    DensityMatrix m;
    m.dim_ = weights.size();
    m.diag_ = std::move(weights);
    m.trace_ = sum;
    m.tail_ = std::max(0.0, 1.0 - sum);
    return m;
  }

  // Validates a raw matrix: Hermitian to 1e-12 (then symmetrised exactly),
  // smallest eigenvalue >= -1e-10, trace <= 1 + 1e-12. Missing trace is
  // recorded as tail mass.
  static DensityMatrix from_matrix(const Eigen::MatrixXcd& raw) {
    if (raw.rows() == 0 || raw.rows() != raw.cols())
      throw InvalidSpec("density matrix: must be square and non-empty");
    const double scale = 1.0 + raw.cwiseAbs().maxCoeff();
    const double asym = (raw - raw.adjoint()).cwiseAbs().maxCoeff();
    if (!(asym <= 1e-12 * scale))
      throw InvalidSpec("density matrix: not Hermitian");
    Eigen::MatrixXcd h = 0.5 * (raw + raw.adjoint());
    for (Eigen::Index i = 0; i < h.rows(); ++i)
      h(i, i) = cplx(h(i, i).real(), 0.0);

    bool diagonal = true;
    for (Eigen::Index j = 0; j < h.rows() && diagonal; ++j)
      for (Eigen::Index k = 0; k < h.cols(); ++k)
        if (j != k && h(j, k) != cplx(0.0, 0.0)) {
          diagonal = false;
          break;
        }
    if (diagonal) {
      std::vector<double> w(static_cast<std::size_t>(h.rows()));
      for (Eigen::Index i = 0; i < h.rows(); ++i)
        w[static_cast<std::size_t>(i)] = h(i, i).real();
      for (double v : w)
        if (v < -psd_tolerance)
          throw InvalidSpec("density matrix: not positive semidefinite");
      for (double& v : w)
        v = std::max(v, 0.0);
      return from_diagonal(std::move(w));
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    if (lo < -psd_tolerance) {
      std::ostringstream msg;
      msg << "density matrix: not positive semidefinite (eigenvalue " << lo << ")";
      throw InvalidSpec(msg.str());
    }
    const double tr = h.trace().real();
    if (tr > 1.0 + trace_slack)
      throw InvalidSpec("density matrix: trace exceeds 1");
    DensityMatrix m;
    m.dim_ = static_cast<std::size_t>(h.rows());
    m.diag_.resize(m.dim_);
    for (std::size_t i = 0; i < m.dim_; ++i)
      m.diag_[i] = h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real();
    m.dense_ = std::move(h);
    m.is_diagonal_ = false;
    m.trace_ = tr;
    m.tail_ = std::max(0.0, 1.0 - tr);
    return m;
  }

  std::size_t dim() const { return dim_; }
  bool is_diagonal() const { return is_diagonal_; }
  double trace() const { return trace_; }
  double tail_mass_bound() const { return tail_; }
  const std::vector<double>& diagonal() const { return diag_; }

  cplx operator()(std::size_t j, std::size_t k) const {
    if (is_diagonal_)
      return j == k ? cplx(diag_[j], 0.0) : cplx(0.0, 0.0);
    return dense_(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k));
  }

  Eigen::MatrixXcd to_dense() const {
    if (!is_diagonal_)
      return dense_;
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(dim_),
                                                static_cast<Eigen::Index>(dim_));
    for (std::size_t i = 0; i < dim_; ++i)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = diag_[i];
    return m;
  }

  double min_eigenvalue() const {
    if (is_diagonal_)
      return *std::min_element(diag_.begin(), diag_.end());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(dense_, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }

private:
  DensityMatrix() = default;

  std::size_t dim_ = 0;
  bool is_diagonal_ = true;
  std::vector<double> diag_;
  Eigen::MatrixXcd dense_;
  double trace_ = 0.0;
  double tail_ = 0.0;
};

// ---------------------------------------------------------------------------
// State specifications

struct NumberState {
  std::size_t k = 0;
  bool operator==(const NumberState&) const = default;
};

struct DiagonalState {
  std::vector<double> weights;
  bool operator==(const DiagonalState&) const = default;
};

struct PureState {
  std::vector<cplx> coeffs;
  bool operator==(const PureState&) const = default;
};

// rho_{k,k} = alpha * B(k+1, alpha+1), truncated to `dim` levels.
struct AlphaState {
  double alpha = 0.25;
  std::size_t dim = 256;
  bool operator==(const AlphaState&) const = default;
};

// rho_{k,k} = alpha-state diagonal + c * tau^a_{k,k}.
struct HardestState {
  double alpha = 0.2;
  double a = 1e6;
  double c = 0.0;
  std::size_t dim = 512;
  double beta = 1.0;
  bool operator==(const HardestState&) const = default;
};

struct MatrixState {
  std::vector<std::vector<double>> re;
  std::vector<std::vector<double>> im;
  bool operator==(const MatrixState&) const = default;
};

using StateSpec =
    std::variant<NumberState, DiagonalState, PureState, AlphaState, HardestState, MatrixState>;

inline void check_alpha(double alpha, const char* where) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    std::ostringstream msg;
    msg << where << ": alpha must lie in (0, 1], got " << alpha;
    throw DomainError(msg.str());
  }
}

// rho^alpha_{k,k} = int_0^1 z^k alpha (1-z)^alpha dz = alpha B(k+1, alpha+1).
inline double alpha_diagonal(double alpha, std::size_t k) {
  check_alpha(alpha, "alpha_diagonal");
  return alpha * boost::math::beta(static_cast<double>(k) + 1.0, alpha + 1.0);
}

// First `dim` entries by the ratio rho_k / rho_{k-1} = k / (k + alpha + 1).
inline std::vector<double> alpha_diagonals(double alpha, std::size_t dim) {
  check_alpha(alpha, "alpha_diagonals");
  std::vector<double> w(dim);
  if (dim == 0)
    return w;
  w[0] = alpha / (alpha + 1.0);
  for (std::size_t k = 1; k < dim; ++k) {
    const double kk = static_cast<double>(k);
    w[k] = w[k - 1] * kk / (kk + alpha + 1.0);
  }
  return w;
}

// Mass beyond the first K levels: sum_{k>=K} alpha B(k+1, alpha+1)
// telescopes to alpha B(K+1, alpha).
inline double diag_tail_mass(double alpha, std::size_t K) {
  check_alpha(alpha, "diag_tail_mass");
  return alpha * boost::math::beta(static_cast<double>(K) + 1.0, alpha);
}

inline double diag_tail_mass(const std::vector<double>& weights, std::size_t K) {
  double s = 0.0;
  for (std::size_t k = 0; k < std::min(K, weights.size()); ++k)
    s += weights[k];
  return std::max(0.0, 1.0 - s);
}

namespace detail {

inline DensityMatrix build_number(const NumberState& s) {
  std::vector<double> w(s.k + 1, 0.0);
  w[s.k] = 1.0;
  return DensityMatrix::from_diagonal(std::move(w));
}

inline DensityMatrix build_pure(const PureState& s) {
  if (s.coeffs.empty())
    throw InvalidSpec("pure state: empty coefficient vector");
  double norm2 = 0.0;
  for (const auto& c : s.coeffs)
    norm2 += std::norm(c);
  if (std::abs(std::sqrt(norm2) - 1.0) > 1e-12)
    throw InvalidSpec("pure state: coefficient vector is not unit norm");
  const auto n = static_cast<Eigen::Index>(s.coeffs.size());
  Eigen::VectorXcd v(n);
  for (Eigen::Index i = 0; i < n; ++i)
    v(i) = s.coeffs[static_cast<std::size_t>(i)];
  Eigen::MatrixXcd m = v * v.adjoint();
  return DensityMatrix::from_matrix(m);
}

inline DensityMatrix build_matrix(const MatrixState& s) {
  const std::size_t n = s.re.size();
  if (n == 0)
    throw InvalidSpec("matrix state: empty");
  if (!s.im.empty() && s.im.size() != n)
    throw InvalidSpec("matrix state: re/im shape mismatch");
  Eigen::MatrixXcd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) {
    if (s.re[j].size() != n || (!s.im.empty() && s.im[j].size() != n))
      throw InvalidSpec("matrix state: rows must be square");
    for (std::size_t k = 0; k < n; ++k)
      m(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) =
          cplx(s.re[j][k], s.im.empty() ? 0.0 : s.im[j][k]);
  }
  return DensityMatrix::from_matrix(m);
}

} // namespace detail

// Every spec except HardestState, whose diagonal needs the minimax module
// (see qht/build.hpp).
inline DensityMatrix build_elementary(const StateSpec& spec) {
  return std::visit(
      [](const auto& s) -> DensityMatrix {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, NumberState>) {
          return detail::build_number(s);
        } else if constexpr (std::is_same_v<S, DiagonalState>) {
          return DensityMatrix::from_diagonal(s.weights);
        } else if constexpr (std::is_same_v<S, PureState>) {
          return detail::build_pure(s);
        } else if constexpr (std::is_same_v<S, AlphaState>) {
          if (s.dim == 0)
            throw InvalidSpec("alpha state: dim must be positive");
          return DensityMatrix::from_diagonal(alpha_diagonals(s.alpha, s.dim));
        } else if constexpr (std::is_same_v<S, MatrixState>) {
          return detail::build_matrix(s);
        } else {
          throw InvalidSpec("hardest state: build through qht::build()");
        }
      },
      spec);
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json to_json(const StateSpec& spec) {
  using nlohmann::json;
  return std::visit(
      [](const auto& s) -> json {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, NumberState>) {
          return {{"type", "number"}, {"k", s.k}};
        } else if constexpr (std::is_same_v<S, DiagonalState>) {
          return {{"type", "diagonal"}, {"weights", s.weights}};
        } else if constexpr (std::is_same_v<S, PureState>) {
          json coeffs = json::array();
          for (const auto& c : s.coeffs)
            coeffs.push_back({c.real(), c.imag()});
          return {{"type", "pure"}, {"coeffs", coeffs}};
        } else if constexpr (std::is_same_v<S, AlphaState>) {
          return {{"type", "alpha"}, {"alpha", s.alpha}, {"dim", s.dim}};
        } else if constexpr (std::is_same_v<S, HardestState>) {
          return {{"type", "hardest"}, {"alpha", s.alpha}, {"a", s.a},
                  {"c", s.c},          {"dim", s.dim},     {"beta", s.beta}};
        } else {
          return {{"type", "matrix"}, {"re", s.re}, {"im", s.im}};
        }
      },
      spec);
}

inline StateSpec state_spec_from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object() || !j.contains("type"))
      throw InvalidSpec("state spec: expected an object with a \"type\" field");
    const std::string type = j.at("type").get<std::string>();
    if (type == "number")
      return NumberState{j.at("k").get<std::size_t>()};
    if (type == "diagonal")
      return DiagonalState{j.at("weights").get<std::vector<double>>()};
    if (type == "pure") {
      PureState p;
      for (const auto& c : j.at("coeffs")) {
        if (c.is_number())
          p.coeffs.emplace_back(c.get<double>(), 0.0);
        else
          p.coeffs.emplace_back(c.at(0).get<double>(), c.at(1).get<double>());
      }
      return p;
    }
    if (type == "alpha")
      return AlphaState{j.at("alpha").get<double>(), j.value("dim", std::size_t{256})};
    if (type == "hardest") {
      HardestState h;
      h.alpha = j.at("alpha").get<double>();
      h.a = j.at("a").get<double>();
      h.c = j.value("c", 0.0);
      h.dim = j.value("dim", std::size_t{512});
      h.beta = j.value("beta", 1.0);
      return h;
    }
    if (type == "matrix") {
      MatrixState m;
      m.re = j.at("re").get<std::vector<std::vector<double>>>();
      if (j.contains("im"))
        m.im = j.at("im").get<std::vector<std::vector<double>>>();
      return m;
    }
    throw InvalidSpec("state spec: unknown type \"" + type + "\"");
  } catch (const nlohmann::json::exception& e) {
    throw InvalidSpec(std::string("state spec: ") + e.what());
  }
}

inline StateSpec parse_state_spec(const std::string& text) {
  try {
    return state_spec_from_json(nlohmann::json::parse(text));
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidSpec(std::string("state spec: ") + e.what());
  }
}

} // namespace qht
