#include <catch_amalgamated.hpp>

#include <random>

#include "qht/quadrature.hpp"
#include "qht/state.hpp"

using namespace qht;
using Catch::Approx;

TEST_CASE("elementary builds") {
  auto one = build_elementary(NumberState{1});
  CHECK(one.dim() == 2);
  CHECK(one(1, 1) == cplx(1.0, 0.0));
  CHECK(one(0, 0) == cplx(0.0, 0.0));
  CHECK(one(0, 1) == cplx(0.0, 0.0));

  auto vac = build_elementary(DiagonalState{{1.0}});
  CHECK(vac.trace() == 1.0);
  CHECK(vac.tail_mass_bound() == 0.0);

  const double h = 1.0 / std::sqrt(2.0);
  auto plus = build_elementary(PureState{{{h, 0.0}, {h, 0.0}}});
  CHECK_FALSE(plus.is_diagonal());
  for (std::size_t j = 0; j < 2; ++j)
    for (std::size_t k = 0; k < 2; ++k)
      CHECK(plus(j, k).real() == Approx(0.5).epsilon(1e-15));
}

TEST_CASE("invalid specs are rejected") {
  CHECK_THROWS_AS(build_elementary(DiagonalState{{0.5, -0.1}}), InvalidSpec);
  CHECK_THROWS_AS(build_elementary(DiagonalState{{0.7, 0.7}}), InvalidSpec);
  CHECK_THROWS_AS(build_elementary(PureState{{{1.0, 0.0}, {0.1, 0.0}}}), InvalidSpec);
  CHECK_THROWS_AS(build_elementary(MatrixState{{{0.5, 0.6}, {0.6, 0.5}}, {}}), InvalidSpec);
  CHECK_THROWS_AS(build_elementary(MatrixState{{{0.5, 0.1}, {0.0, 0.5}}, {}}), InvalidSpec);
  CHECK_THROWS_AS(build_elementary(AlphaState{1.5, 10}), DomainError);
  CHECK_THROWS_AS(parse_state_spec("{\"type\":\"bogus\"}"), InvalidSpec);
  CHECK_THROWS_AS(parse_state_spec("not json"), InvalidSpec);
}

TEST_CASE("matrix construction symmetrises and tolerates eigenvalue noise") {
  Eigen::MatrixXcd m(2, 2);
  m << 0.6, cplx(0.1, 0.2 + 1e-14), cplx(0.1, -0.2), 0.4;
  auto rho = DensityMatrix::from_matrix(m);
  CHECK(rho(0, 1) == std::conj(rho(1, 0)));

  Eigen::MatrixXcd noisy = Eigen::MatrixXcd::Zero(2, 2);
  noisy(0, 0) = 1.0;
  noisy(1, 1) = -1e-11;
  CHECK_NOTHROW(DensityMatrix::from_matrix(noisy));
  noisy(1, 1) = -1e-9;
  CHECK_THROWS_AS(DensityMatrix::from_matrix(noisy), InvalidSpec);
}

TEST_CASE("dense random states satisfy the invariants") {
  std::mt19937_64 gen(11);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 20; ++trial) {
    const int K = 2 + trial;
    Eigen::MatrixXcd a(K, K);
    for (int i = 0; i < K; ++i)
      for (int j = 0; j < K; ++j)
        a(i, j) = cplx(g(gen), g(gen));
    Eigen::MatrixXcd m = a * a.adjoint();
    m /= m.trace().real();
    auto rho = DensityMatrix::from_matrix(m);
    CHECK(rho.min_eigenvalue() >= -1e-10);
    CHECK(rho.trace() <= 1.0 + 1e-12);
    CHECK(rho.trace() >= 1.0 - rho.tail_mass_bound() - 1e-15);
    for (std::size_t j = 0; j < rho.dim(); ++j)
      for (std::size_t k = 0; k < rho.dim(); ++k)
        CHECK(rho(j, k) == std::conj(rho(k, j)));
  }
}

TEST_CASE("alpha diagonal closed form") {
  for (double a : {0.05, 0.25, 0.7, 1.0})
    CHECK(alpha_diagonal(a, 0) == Approx(a / (a + 1.0)).epsilon(1e-14));
  CHECK(alpha_diagonal(1.0, 1) == Approx(1.0 / 6.0).epsilon(1e-14));

  const double alpha = 0.2;
  const int k = 50;
  auto f = [&](double z) { return std::pow(z, k) * alpha * std::pow(1.0 - z, alpha); };
  const double q = quad::integrate(f, quad::finite(0.0, 1.0, 1e-15, 1e-13)).value;
  CHECK(std::abs(alpha_diagonal(alpha, k) - q) <= 1e-12);

  const auto w = alpha_diagonals(0.3, 400);
  for (std::size_t i = 0; i < w.size(); i += 37)
    CHECK(w[i] == Approx(alpha_diagonal(0.3, i)).epsilon(1e-12));
  CHECK_THROWS_AS(alpha_diagonal(0.0, 1), DomainError);
}

TEST_CASE("tail mass") {
  CHECK(diag_tail_mass(std::vector<double>{1.0}, 1) == 0.0);
  CHECK(diag_tail_mass(1.0, 2) == Approx(1.0 / 3.0).epsilon(1e-14));
  double prev = 1.0;
  for (std::size_t K : {10u, 100u, 1000u, 10000u}) {
    const double t = diag_tail_mass(0.25, K);
    CHECK(t > 0.0);
    CHECK(t < prev);
    prev = t;
    // agrees with one minus the partial sum
    const auto w = alpha_diagonals(0.25, K);
    double s = 0.0;
    for (double v : w)
      s += v;
    CHECK(t == Approx(1.0 - s).epsilon(1e-10));
  }
}

TEST_CASE("alpha weights decay like k^-(1+alpha)") {
  for (double alpha : {0.1, 0.25, 0.5}) {
    double lo = INFINITY, hi = 0.0;
    for (std::size_t k = 200; k <= 2000; k += 10) {
      const double v = std::pow(static_cast<double>(k), 1.0 + alpha) * alpha_diagonal(alpha, k);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    CHECK((hi - lo) / hi <= 0.10);
  }
}

TEST_CASE("json round trip") {
  std::vector<StateSpec> specs = {
      NumberState{3},
      DiagonalState{{0.25, 0.5, 0.125, 0.1 + 1e-17}},
      PureState{{{0.6, 0.0}, {0.0, 0.8}}},
      AlphaState{0.25, 256},
      HardestState{0.2, 1e6, 1.2345678901234567e-7, 512, 1.0},
      MatrixState{{{0.5, 0.1}, {0.1, 0.5}}, {{0.0, 0.3}, {-0.3, 0.0}}},
  };
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 20; ++i) {
    std::vector<double> w(1 + i % 7);
    double s = 0.0;
    for (double& v : w)
      s += (v = u(gen));
    for (double& v : w)
      v /= s * (1.0 + 1e-3);
    specs.push_back(DiagonalState{w});
  }
  for (const auto& spec : specs) {
    const std::string text = to_json(spec).dump();
    const StateSpec back = parse_state_spec(text);
    CHECK(back == spec);
    CHECK(to_json(back).dump() == text);
  }
}
