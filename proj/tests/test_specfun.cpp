#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

#include "qht/quadrature.hpp"
#include "qht/specfun.hpp"

using namespace qht;
using Catch::Approx;

namespace {

// Physicists' Hermite coefficients by the integer recurrence
// H_{k+1} = 2x H_k - 2k H_{k-1}; exact in int64 up to k = 20.
std::vector<std::vector<std::int64_t>> hermite_coefficients(int kmax) {
  std::vector<std::vector<std::int64_t>> h(kmax + 1);
  h[0] = {1};
  if (kmax >= 1)
    h[1] = {0, 2};
  for (int k = 1; k < kmax; ++k) {
    h[k + 1].assign(k + 2, 0);
    for (int m = 0; m <= k; ++m)
      h[k + 1][m + 1] += 2 * h[k][m];
    for (int m = 0; m <= k - 1; ++m)
      h[k + 1][m] -= 2 * k * h[k - 1][m];
  }
  return h;
}

long double hermite_function_oracle(const std::vector<std::int64_t>& c, int k,
                                    long double x) {
  long double poly = 0.0L;
  for (int m = static_cast<int>(c.size()) - 1; m >= 0; --m)
    poly = poly * x + static_cast<long double>(c[m]);
  long double norm = std::sqrt(std::sqrt(3.14159265358979323846264338327950288L));
  for (int i = 1; i <= k; ++i)
    norm *= std::sqrt(2.0L * i);
  return poly * std::exp(-x * x / 2.0L) / norm;
}

long double laguerre_oracle(int k, long double x) {
  // sum_m (-1)^m C(k,m) x^m / m!
  long double sum = 0.0L;
  long double binom = 1.0L;
  long double xm_over_mfact = 1.0L;
  for (int m = 0; m <= k; ++m) {
    sum += ((m % 2) ? -1.0L : 1.0L) * binom * xm_over_mfact;
    binom = binom * (k - m) / (m + 1);
    xm_over_mfact = xm_over_mfact * x / (m + 1);
  }
  return sum;
}

long double j0_series(long double x, int terms = 40) {
  long double term = 1.0L;
  long double sum = 1.0L;
  const long double q = x * x / 4.0L;
  for (int m = 1; m < terms; ++m) {
    term *= -q / (static_cast<long double>(m) * m);
    sum += term;
  }
  return sum;
}

} // namespace

TEST_CASE("hermite functions at the origin") {
  auto v = specfun::hermite_functions(0.0, 1);
  REQUIRE(v.size() == 2);
  CHECK(v[0] == Approx(std::pow(M_PI, -0.25)).epsilon(1e-15));
  CHECK(v[1] == 0.0);
  CHECK(specfun::hermite_functions(0.0, 3)[3] == 0.0);
}

TEST_CASE("hermite functions match explicit polynomials up to k = 20") {
  const auto coeffs = hermite_coefficients(20);
  for (double x : {1.0, -0.37, 2.5, 4.1}) {
    const auto psi = specfun::hermite_functions(x, 20);
    for (int k = 0; k <= 20; ++k) {
      const double want = static_cast<double>(hermite_function_oracle(coeffs[k], k, x));
      CHECK(psi[k] == Approx(want).epsilon(1e-12).margin(1e-15));
    }
  }
}

TEST_CASE("hermite functions are orthonormal") {
  for (std::size_t j = 0; j <= 25; j += 5) {
    for (std::size_t k = j; k <= 25; ++k) {
      auto f = [&](double x) {
        const auto psi = specfun::hermite_functions(x, 25);
        return psi[j] * psi[k];
      };
      const double v = quad::integrate(f, quad::finite(-14.0, 14.0, 1e-13, 1e-12)).value;
      CHECK(std::abs(v - (j == k ? 1.0 : 0.0)) <= 1e-8);
    }
  }
}

TEST_CASE("hermite functions stay below 1.1 in sup norm") {
  double worst = 0.0;
  for (double x = -25.0; x <= 25.0; x += 0.002) {
    const auto psi = specfun::hermite_functions(x, 200);
    for (double v : psi)
      worst = std::max(worst, std::abs(v));
  }
  CHECK(worst <= 1.10);
  CHECK(worst >= std::pow(M_PI, -0.25) - 1e-12);
}

TEST_CASE("hermite recurrence survives large order and argument") {
  const auto psi = specfun::hermite_functions(40.0, 2000);
  for (double v : psi)
    CHECK(std::isfinite(v));
  const auto psi0 = specfun::hermite_functions(0.0, 4000);
  // psi_{2m}(0)^2 = (2m)! / (4^m (m!)^2 sqrt(pi))
  const double m = 2000.0;
  const double want = std::exp(std::lgamma(2 * m + 1) - m * std::log(4.0) -
                               2 * std::lgamma(m + 1) - 0.5 * std::log(M_PI));
  CHECK(psi0[4000] * psi0[4000] == Approx(want).epsilon(1e-10));
}

TEST_CASE("laguerre polynomials") {
  CHECK(specfun::laguerre(0, 5.3) == 1.0);
  CHECK(specfun::laguerre(1, 2.0) == -1.0);
  for (int k = 0; k <= 15; ++k)
    for (double x : {0.0, 0.3, 1.5, 4.0, 9.0}) {
      const double want = static_cast<double>(laguerre_oracle(k, x));
      CHECK(specfun::laguerre(k, x) == Approx(want).epsilon(1e-12).margin(1e-12));
    }
  CHECK(specfun::laguerre(10, 1.5) ==
        Approx(static_cast<double>(laguerre_oracle(10, 1.5L))).epsilon(1e-13));
}

TEST_CASE("laguerre differential equation residual") {
  for (std::size_t n = 0; n <= 30; ++n)
    for (double x = 0.0; x <= 10.0; x += 0.25) {
      const auto j = specfun::laguerre_jet(n, x);
      const double residual = static_cast<double>(n) * j.value - ((x - 1.0) * j.d1 - x * j.d2);
      const double scale = 1.0 + std::abs(n * j.value) + std::abs(x * j.d2);
      CHECK(std::abs(residual) <= 1e-7 * scale);
    }
}

TEST_CASE("laguerre functions agree with damped polynomials") {
  std::vector<double> out(40);
  for (double x : {0.0, 0.5, 3.0, 20.0}) {
    specfun::laguerre_functions(x, out);
    for (std::size_t k = 0; k < out.size(); ++k)
      CHECK(out[k] == Approx(std::exp(-x / 2) * specfun::laguerre(k, x)).epsilon(1e-12).margin(1e-14));
  }
}

TEST_CASE("bessel J0") {
  CHECK(specfun::bessel_j0(0.0) == 1.0);
  CHECK(specfun::bessel_j0(1.0) == Approx(static_cast<double>(j0_series(1.0L))).epsilon(1e-15));

  long double lo = 2.0L, hi = 3.0L;
  for (int i = 0; i < 80; ++i) {
    const long double mid = 0.5L * (lo + hi);
    (j0_series(mid) > 0 ? lo : hi) = mid;
  }
  CHECK(std::abs(static_cast<double>(lo) - 2.404825557695773) <= 1e-10);
  CHECK(std::abs(specfun::bessel_j0(2.404825557695773)) <= 1e-10);

  for (double x = -10.0; x <= 10.0; x += 0.37)
    CHECK(specfun::bessel_j0(x) ==
          Approx(static_cast<double>(j0_series(x, 80))).epsilon(1e-12).margin(1e-14));
  // J0(x) = (1/pi) int_0^pi cos(x sin t) dt for the remaining range
  for (double x = 10.5; x <= 100.0; x += 7.3) {
    auto f = [x](double t) { return std::cos(x * std::sin(t)); };
    const double want = quad::integrate(f, quad::finite(0.0, M_PI, 1e-14, 4e-13)).value / M_PI;
    CHECK(specfun::bessel_j0(x) == Approx(want).epsilon(1e-12).margin(1e-13));
  }
}

TEST_CASE("quadrature basics") {
  auto one = [](double) { return 1.0; };
  CHECK(quad::integrate(one, quad::finite(0.0, 1.0)).value == Approx(1.0).epsilon(1e-14));
  CHECK(quad::integrate(one, quad::finite(-2.0, 5.5)).value == Approx(7.5).epsilon(1e-10));

  auto gl = quad::gauss_legendre(-1.0, 3.0, 7);
  double wsum = 0.0;
  for (double w : gl.weights) {
    CHECK(w > 0.0);
    wsum += w;
  }
  CHECK(wsum == Approx(4.0).epsilon(1e-13));
  CHECK(quad::integrate(one, gl).value == Approx(4.0).epsilon(1e-13));

  auto gauss = [](double r) { return r * std::exp(-r * r); };
  CHECK(quad::integrate(gauss, quad::semi_infinite(0.0)).value == Approx(0.5).epsilon(1e-11));
}

TEST_CASE("quadrature against dense trapezoid oracle") {
  const double a = 1e4;
  auto f = [a](double r) {
    const double s = std::sinh(r);
    const double d = 1.0 + s * s / a;
    return r * r * r / (d * d);
  };
  // Trapezoid on [0, 40] with h = 1e-3 converges spectrally for this smooth,
  // decaying integrand (f'(0) = 0 to high order); tail beyond 40 is
  // bounded by int_40^inf 16 a^2 r^3 e^{-4r} dr < 1e-55.
  const double h = 1e-3;
  double trap = 0.5 * (f(0.0) + f(40.0));
  for (int i = 1; i < 40000; ++i)
    trap += f(i * h);
  trap *= h;
  const double got = quad::integrate(f, quad::semi_infinite(0.0)).value;
  CHECK(got == Approx(trap).epsilon(1e-9));
}

TEST_CASE("quadrature reports non-convergence") {
  auto bad = [](double x) { return 1.0 / x; };
  auto rule = quad::finite(0.0, 1.0);
  rule.max_intervals = 200;
  CHECK_THROWS_AS(quad::integrate(bad, rule), NonConvergence);
}

TEST_CASE("complex integrands and oscillatory tails") {
  auto f = [](double x) { return std::exp(std::complex<double>(0.0, 3.0 * x)) / (x * x); };
  const auto direct = quad::integrate(f, quad::finite(1.0, 5.0, 1e-14, 1e-13)).value;
  const auto tails = quad::oscillatory_tail(3.0, 2.0, 1.0) - quad::oscillatory_tail(3.0, 2.0, 5.0);
  CHECK(std::abs(direct - tails) <= 1e-12);
  const auto neg = quad::oscillatory_tail(-3.0, 2.0, 1.0);
  CHECK(std::abs(neg - std::conj(quad::oscillatory_tail(3.0, 2.0, 1.0))) <= 1e-15);
  CHECK(quad::oscillatory_tail(0.0, 2.0, 2.0).real() == Approx(0.5));
}

TEST_CASE("oscillatory infinite rule") {
  // int_0^inf sin(x)/x dx = pi/2, int_0^inf cos(2x) e^{-x/5} dx = (1/5)/(1/25+4)
  auto sinc = [](double x) { return x == 0.0 ? 1.0 : std::sin(x) / x; };
  CHECK(quad::integrate(sinc, quad::oscillatory(0.0, INFINITY, 1.0, 1e-10, 1e-10)).value ==
        Approx(M_PI / 2).epsilon(1e-8));
  auto damped = [](double x) { return std::cos(2 * x) * std::exp(-x / 5); };
  CHECK(quad::integrate(damped, quad::oscillatory(0.0, INFINITY, 2.0)).value ==
        Approx(0.2 / (0.04 + 4.0)).epsilon(1e-9));
}

TEST_CASE("wynn epsilon accelerates an alternating series") {
  std::vector<double> sums;
  double s = 0.0;
  for (int k = 0; k < 20; ++k) {
    s += ((k % 2) ? -1.0 : 1.0) / (k + 1);
    sums.push_back(s);
  }
  CHECK(quad::wynn_epsilon(sums) == Approx(std::log(2.0)).epsilon(1e-10));
}
