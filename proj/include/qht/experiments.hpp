#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qht/build.hpp"
#include "qht/estimator.hpp"
#include "qht/homodyne.hpp"
#include "qht/io.hpp"
#include "qht/minimax.hpp"
#include "qht/parallel.hpp"
#include "qht/rng.hpp"
#include "qht/wigner.hpp"

namespace qht {

struct RiskPoint {
  std::size_t n = 0;
  double delta = 0.0;
  double mse = 0.0;
  double mse_stderr = 0.0;
  double bias_sq = 0.0;
  double variance = 0.0;
  double r_n_sq_theory = 0.0;
  double ratio = 0.0; // NaN when the theoretical rate vanishes
};

struct RiskReport {
  StateSpec state_spec;
  double q = 0.0;
  double p = 0.0;
  double beta = 1.0;
  std::vector<std::size_t> n_values;
  std::size_t reps = 0;
  double delta_scale = 1.0;
  double oracle = 0.0;
  double dual_radon = 0.0;
  std::vector<RiskPoint> per_n;
  std::optional<double> slope_fit;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> warnings;
};

// Everything mc_risk needs about the state: exact W(z), R^#R[W](z) and a
// sampler. The alpha family skips Fock truncation altogether.
struct RiskTarget {
  double oracle = 0.0;
  double dual_radon = 0.0;
  std::function<SampleSet(std::size_t, std::uint64_t)> draw;
};

inline RiskTarget risk_target(const StateSpec& spec, double q, double p) {
  RiskTarget t;
  if (const auto* a = std::get_if<AlphaState>(&spec)) {
    const double alpha = a->alpha;
    check_alpha(alpha, "risk");
    t.oracle = minimax::wigner_alpha(alpha, std::hypot(q, p));
    t.dual_radon = dual_radon_profile(
        [alpha](double x, double) { return minimax::p_alpha(alpha, x); }, q, p);
    t.draw = [alpha](std::size_t n, std::uint64_t seed) {
      return sample_alpha_exact(alpha, n, seed);
    };
    return t;
  }
  const DensityMatrix rho = build(spec);
  t.oracle = WignerField(rho)(q, p);
  t.dual_radon = dual_radon(rho, q, p);
  auto sampler = std::make_shared<Sampler>(rho);
  t.draw = [sampler](std::size_t n, std::uint64_t seed) { return sampler->draw(n, seed); };
  return t;
}

inline std::uint64_t replicate_seed(std::uint64_t seed, std::size_t n_index, std::size_t rep) {
  return rng::bits(seed, 0x7269736bULL + n_index, rep);
}

// Least-squares slope of log(mse) against log((log n)^3 / n).
inline double rate_fit(const std::vector<std::size_t>& n_values, const std::vector<double>& mse) {
  if (n_values.size() != mse.size() || n_values.size() < 3)
    throw InsufficientData("rate_fit: need at least 3 sample sizes");
  double lo = INFINITY, hi = 0.0;
  for (std::size_t n : n_values) {
    lo = std::min(lo, static_cast<double>(n));
    hi = std::max(hi, static_cast<double>(n));
  }
  if (hi / lo < 100.0 * (1.0 - 1e-12))
    throw InsufficientData("rate_fit: sample sizes must span two decades");
  const std::size_t m = mse.size();
  double sx = 0.0, sy = 0.0;
  std::vector<double> x(m), y(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (!(mse[i] > 0.0))
      throw InsufficientData("rate_fit: mse must be positive");
    const double L = std::log(static_cast<double>(n_values[i]));
    x[i] = std::log(L * L * L / static_cast<double>(n_values[i]));
    y[i] = std::log(mse[i]);
    sx += x[i];
    sy += y[i];
  }
  sx /= static_cast<double>(m);
  sy /= static_cast<double>(m);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxy += (x[i] - sx) * (y[i] - sy);
    sxx += (x[i] - sx) * (x[i] - sx);
  }
  return sxy / sxx;
}

inline double rate_fit(const RiskReport& r) {
  std::vector<double> mse;
  for (const auto& pt : r.per_n)
    mse.push_back(pt.mse);
  return rate_fit(r.n_values, mse);
}

inline RiskReport mc_risk(const StateSpec& spec, double q, double p, const SmoothnessClass& cls,
                          const std::vector<std::size_t>& n_values, std::size_t reps,
                          std::uint64_t seed, double delta_scale = 1.0) {
  cls.validate();
  if (n_values.empty())
    throw InsufficientData("mc_risk: no sample sizes");
  if (reps < 2)
    throw InsufficientData("mc_risk: need at least two replicates");
  if (!(delta_scale > 0.0))
    throw DomainError("mc_risk: delta_scale must be positive");

  RiskReport r;
  r.state_spec = spec;
  r.q = q;
  r.p = p;
  r.beta = cls.beta;
  r.n_values = n_values;
  r.reps = reps;
  r.delta_scale = delta_scale;
  const RiskTarget target = risk_target(spec, q, p);
  r.oracle = target.oracle;
  r.dual_radon = target.dual_radon;
  if (!(r.dual_radon > 1e-12))
    r.warnings.push_back("dual Radon transform vanishes at z; the rate constant is zero");
  if (reps < 30)
    r.warnings.push_back("fewer than 30 replicates; stderr is unreliable");

  const double cs = minimax::c_star(cls.beta);
  for (std::size_t ni = 0; ni < n_values.size(); ++ni) {
    const std::size_t n = n_values[ni];
    Bandwidth bw = bandwidth_rule(n, cls);
    if (delta_scale != 1.0)
      bw = Bandwidth::manual(bw.delta * delta_scale);
    std::vector<double> est(reps);
    std::vector<std::uint64_t> seeds(reps);
    for (std::size_t k = 0; k < reps; ++k)
      seeds[k] = replicate_seed(seed, ni, k);
    parallel::parallel_for(reps, [&](std::size_t k) {
      const SampleSet data = target.draw(n, seeds[k]);
      est[k] = estimate_point(data, bw, q, p);
    });
    r.seeds.insert(r.seeds.end(), seeds.begin(), seeds.end());

    RiskPoint pt;
    pt.n = n;
    pt.delta = bw.delta;
    detail::CompensatedSum mean, sq;
    for (double e : est)
      mean.add(e);
    const double m = mean.value() / static_cast<double>(reps);
    std::vector<double> err2(reps);
    for (std::size_t k = 0; k < reps; ++k) {
      err2[k] = (est[k] - r.oracle) * (est[k] - r.oracle);
      sq.add(err2[k]);
    }
    pt.mse = sq.value() / static_cast<double>(reps);
    detail::CompensatedSum var, var2;
    for (std::size_t k = 0; k < reps; ++k) {
      var.add((est[k] - m) * (est[k] - m));
      var2.add((err2[k] - pt.mse) * (err2[k] - pt.mse));
    }
    pt.variance = var.value() / static_cast<double>(reps - 1);
    pt.mse_stderr = std::sqrt(var2.value() / static_cast<double>(reps - 1) /
                              static_cast<double>(reps));
    pt.bias_sq = (m - r.oracle) * (m - r.oracle);
    const double L = std::log(static_cast<double>(n));
    pt.r_n_sq_theory = cs * r.dual_radon * L * L * L / static_cast<double>(n);
    pt.ratio = pt.r_n_sq_theory > 0.0 ? pt.mse / pt.r_n_sq_theory
                                      : std::numeric_limits<double>::quiet_NaN();
    r.per_n.push_back(pt);
  }
  try {
    r.slope_fit = rate_fit(r);
  } catch (const InsufficientData&) {
  }
  return r;
}

struct BiasVariance {
  double bias_sq = 0.0;
  double variance = 0.0;
};

inline BiasVariance bias_variance(const StateSpec& spec, double q, double p, std::size_t n,
                                  std::size_t reps, std::uint64_t seed, const SmoothnessClass& cls,
                                  double delta_scale = 1.0) {
  const auto r = mc_risk(spec, q, p, cls, {n}, reps, seed, delta_scale);
  return {r.per_n[0].bias_sq, r.per_n[0].variance};
}

// Slope of log(mse / r_n^2) against log n; near zero when the rate holds.
inline double ratio_drift(const RiskReport& r) {
  const std::size_t m = r.per_n.size();
  if (m < 2)
    throw InsufficientData("ratio_drift: need at least two sample sizes");
  double sx = 0.0, sy = 0.0;
  for (const auto& pt : r.per_n) {
    sx += std::log(static_cast<double>(pt.n));
    sy += std::log(pt.ratio);
  }
  sx /= static_cast<double>(m);
  sy /= static_cast<double>(m);
  double sxy = 0.0, sxx = 0.0;
  for (const auto& pt : r.per_n) {
    const double x = std::log(static_cast<double>(pt.n)) - sx;
    sxy += x * (std::log(pt.ratio) - sy);
    sxx += x * x;
  }
  return sxy / sxx;
}

inline nlohmann::json finite_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

inline nlohmann::json to_json(const RiskReport& r) {
  nlohmann::json per = nlohmann::json::array();
  for (const auto& pt : r.per_n)
    per.push_back({{"n", pt.n},
                   {"delta", pt.delta},
                   {"mse", pt.mse},
                   {"mse_stderr", pt.mse_stderr},
                   {"bias_sq", pt.bias_sq},
                   {"variance", pt.variance},
                   {"r_n_sq_theory", pt.r_n_sq_theory},
                   {"ratio", finite_or_null(pt.ratio)}});
  nlohmann::json j;
  j["state_spec"] = to_json(r.state_spec);
  j["z"] = {r.q, r.p};
  j["beta"] = r.beta;
  j["n_values"] = r.n_values;
  j["reps"] = r.reps;
  j["delta_scale"] = r.delta_scale;
  j["oracle_w"] = r.oracle;
  j["dual_radon"] = r.dual_radon;
  j["c_star"] = minimax::c_star(r.beta);
  j["per_n"] = per;
  j["slope_fit"] = r.slope_fit ? finite_or_null(*r.slope_fit) : nlohmann::json(nullptr);
  j["seeds"] = r.seeds;
  j["warnings"] = r.warnings;
  j["brackets"] = {{"ratio", {0.05, 20.0}}, {"slope", {0.75, 1.25}}};
  return j;
}

inline void write_plot_data(const RiskReport& r, std::ostream& out) {
  out << "n,mse,stderr,r_n_sq\n";
  for (const auto& pt : r.per_n)
    out << pt.n << ',' << io::g17(pt.mse) << ',' << io::g17(pt.mse_stderr) << ','
        << io::g17(pt.r_n_sq_theory) << '\n';
}

} // namespace qht
