#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "qht/build.hpp"
#include "qht/estimator.hpp"
#include "qht/experiments.hpp"
#include "qht/homodyne.hpp"
#include "qht/io.hpp"
#include "qht/minimax.hpp"
#include "qht/parallel.hpp"
#include "qht/wigner.hpp"

namespace qht::cli {

inline constexpr const char* version = "0.1.0";

enum Exit : int { ok = 0, usage = 1, validation = 2, nonconvergence = 3, verify_failed = 4 };

// `--state` takes inline JSON or a path to a JSON file.
inline StateSpec load_state(const std::string& arg) {
  const auto first = arg.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && arg[first] == '{')
    return parse_state_spec(arg);
  auto in = io::open_input(arg);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_state_spec(buf.str());
}

inline std::vector<std::size_t> parse_sizes(const std::string& text) {
  std::vector<std::size_t> out;
  std::istringstream in(text);
  std::string field;
  while (std::getline(in, field, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(field, &used);
    } catch (const std::logic_error&) {
      used = 0;
    }
    if (used != field.size() || !(v >= 1.0) || v != std::floor(v))
      throw DomainError("--n-values: cannot parse \"" + text + "\"");
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty())
    throw DomainError("--n-values: empty list");
  return out;
}

inline void write_json(const std::string& path, const nlohmann::json& j) {
  auto out = io::open_output(path);
  out << j.dump(2) << '\n';
}

inline nlohmann::json manifest(const std::string& sub, const nlohmann::json& config) {
  return {{"tool", "qht"}, {"version", version}, {"subcommand", sub}, {"config", config}};
}

// ---------------------------------------------------------------------------

struct Simulate {
  std::string state;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::string out;
  double max_tail = default_max_tail;

  int run() const {
    const StateSpec spec = load_state(state);
    SampleSet s;
    if (const auto* a = std::get_if<AlphaState>(&spec))
      s = sample_alpha_exact(a->alpha, n, seed);
    else
      s = sample(build(spec), n, seed, max_tail);
    s.state_spec = spec;
    {
      auto f = io::open_output(out);
      write_samples_csv(s, f);
    }
    write_json(out + ".json", sidecar_json(s));
    write_json(out + ".manifest.json",
               manifest("simulate", {{"state", to_json(spec)},
                                     {"n", n},
                                     {"seed", seed},
                                     {"max_tail", max_tail},
                                     {"out", out},
                                     {"generator_id", s.generator_id}}));
    return Exit::ok;
  }
};

struct Estimate {
  std::string samples;
  double beta = 1.0;
  double delta = 0.0;
  std::string grid = "-4,4,-4,4,81";
  std::string out;

  int run() const {
    const auto t0 = std::chrono::steady_clock::now();
    const GridSpec g = GridSpec::parse(grid);
    SampleSet data;
    {
      auto in = io::open_input(samples);
      data = read_samples_csv(in, samples);
    }
    const SmoothnessClass cls{beta, 1.0, {}};
    cls.validate();
    const Bandwidth bw = delta > 0.0 ? Bandwidth::manual(delta)
                                     : bandwidth_rule(data.samples.size(), cls);
    const auto values = estimate_grid(data, bw, g);
    {
      auto f = io::open_output(out);
      write_grid_csv(g, values, f, "w_est");
    }
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    write_json(out + ".json", estimate_metadata(data.samples.size(), bw, beta, g, ms));
    write_json(out + ".manifest.json",
               manifest("estimate", {{"samples", samples},
                                     {"beta", beta},
                                     {"delta", delta > 0.0 ? nlohmann::json(delta) : nlohmann::json()},
                                     {"grid", grid_json(g)},
                                     {"out", out}}));
    return Exit::ok;
  }
};

struct Risk {
  std::string state;
  double q = 0.0;
  double p = 0.0;
  double beta = 1.0;
  std::string n_values = "1000,10000,100000";
  std::size_t reps = 100;
  std::uint64_t seed = 0;
  double delta_scale = 1.0;
  std::string out;
  std::string plot_data;

  int run() const {
    const StateSpec spec = load_state(state);
    const auto ns = parse_sizes(n_values);
    const auto r = mc_risk(spec, q, p, SmoothnessClass{beta, 1.0, {}}, ns, reps, seed, delta_scale);
    write_json(out, to_json(r));
    if (!plot_data.empty()) {
      auto f = io::open_output(plot_data);
      write_plot_data(r, f);
    }
    write_json(out + ".manifest.json",
               manifest("risk", {{"state", to_json(spec)},
                                 {"z", {q, p}},
                                 {"beta", beta},
                                 {"n_values", ns},
                                 {"reps", reps},
                                 {"seed", seed},
                                 {"delta_scale", delta_scale},
                                 {"out", out},
                                 {"plot_data", plot_data}}));
    return Exit::ok;
  }
};

struct Hardest {
  double alpha = 0.2;
  double beta = 1.0;
  double a = 0.0;
  double n = 1e6;
  double eta = 0.9;
  double q_small = 0.1;
  std::size_t dim = 500;
  std::string out;

  nlohmann::json report() const {
    minimax::VanTreesConfig cfg;
    cfg.n = n;
    cfg.eta = eta;
    cfg.validate();
    const double scale = a > 0.0 ? a : std::pow(n, eta);
    minimax::check_scale(scale, beta, "hardest");
    if (!(alpha > 0.0 && alpha < 0.25))
      throw DomainError("--alpha must lie in (0, 1/4)");
    const double C = minimax::c_a(scale, q_small);
    const auto up = minimax::positivity_scan(alpha, scale, beta, C, dim);
    const auto down = minimax::positivity_scan(alpha, scale, beta, -C, dim);
    nlohmann::json first = nullptr;
    if (!up.ok || !down.ok)
      first = std::min(up.first_violation_k.value_or(dim), down.first_violation_k.value_or(dim));

    const double L = std::log(scale);
    const double cs = minimax::c_star(beta);
    const minimax::FisherTable table(alpha, scale, beta);
    const double i0 = table(0.0);
    const double R0 = minimax::r0(alpha);
    const double asym = cs * L * L * L / R0;
    const auto vt = minimax::van_trees_report(alpha, beta, q_small, cfg,
                                              a > 0.0 ? nullptr : &table);
    return {{"alpha", alpha},
            {"beta", beta},
            {"a", scale},
            {"n", n},
            {"eta", eta},
            {"q_small", q_small},
            {"C_a", C},
            {"dim", dim},
            {"positivity", {{"ok", up.ok && down.ok}, {"first_violation_k", first}}},
            {"g_a_0", minimax::g_a_point(scale, beta, 0.0, 0.0)},
            {"int_Ha2", minimax::int_ha2(scale, beta)},
            {"R0", R0},
            {"fisher", {{"I0_numeric", i0}, {"asymptote", asym}, {"ratio", i0 / asym}}},
            {"van_trees",
             {{"bound", vt.bound},
              {"r_n_sq", vt.r_n_sq},
              {"ratio", vt.ratio},
              {"numerator", vt.numerator},
              {"fisher_term", vt.fisher_term},
              {"prior_term", vt.prior_term}}}};
  }

  int run(std::ostream& stdout_) const {
    const auto j = report();
    if (out.empty()) {
      stdout_ << j.dump(2) << '\n';
    } else {
      write_json(out, j);
      write_json(out + ".manifest.json",
                 manifest("hardest", {{"alpha", alpha},
                                      {"beta", beta},
                                      {"a", a > 0.0 ? nlohmann::json(a) : nlohmann::json()},
                                      {"n", n},
                                      {"eta", eta},
                                      {"q_small", q_small},
                                      {"dim", dim},
                                      {"out", out}}));
    }
    return Exit::ok;
  }
};

struct Truth {
  std::string state;
  std::string grid = "-4,4,-4,4,81";
  std::string out;

  int run() const {
    const StateSpec spec = load_state(state);
    const GridSpec g = GridSpec::parse(grid);
    std::vector<double> values;
    if (const auto* a = std::get_if<AlphaState>(&spec)) {
      const double alpha = a->alpha;
      values.resize(g.size());
      parallel::parallel_for(g.size(), [&](std::size_t k) {
        values[k] = minimax::wigner_alpha(alpha, std::hypot(g.q(k % g.steps), g.p(k / g.steps)));
      });
    } else {
      values = WignerField(build(spec)).grid(g);
    }
    {
      auto f = io::open_output(out);
      write_grid_csv(g, values, f, "w");
    }
    write_json(out + ".manifest.json",
               manifest("truth", {{"state", to_json(spec)}, {"grid", grid_json(g)}, {"out", out}}));
    return Exit::ok;
  }
};

// ---------------------------------------------------------------------------
// verify: quick invariant suites

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

inline std::vector<Check> suite_specfun() {
  std::vector<Check> out;
  double worst = 0.0;
  for (double z : {0.3, 0.6, 0.9})
    for (double x : {0.0, 1.0, 2.0})
      worst = std::max(worst, std::abs(minimax::mehler_partial_sum(z, x, 300) - minimax::mehler_rhs(z, x)));
  out.push_back({"mehler identity", worst <= 1e-8, "max error " + io::g17(worst)});
  double sup = 0.0;
  for (double x = -20.0; x <= 20.0; x += 0.01)
    for (double v : specfun::hermite_functions(x, 100))
      sup = std::max(sup, std::abs(v));
  out.push_back({"hermite sup norm", sup <= 1.1, "sup " + io::g17(sup)});
  const double l = specfun::laguerre(3, 2.0); // 1 - 3x + 3x^2/2 - x^3/6 at x = 2
  out.push_back({"laguerre L3(2)", std::abs(l - (1.0 - 6.0 + 6.0 - 8.0 / 6.0)) <= 1e-14, io::g17(l)});
  return out;
}

inline std::vector<Check> suite_wigner() {
  std::vector<Check> out;
  const auto one = build(NumberState{1});
  double worst = 0.0;
  for (double q = -2.0; q <= 2.0; q += 1.0)
    for (double p = -2.0; p <= 2.0; p += 1.0) {
      const double r2 = q * q + p * p;
      worst = std::max(worst, std::abs(wigner_point(one, q, p) - (2 * r2 - 1) * std::exp(-r2) / specfun::pi));
    }
  out.push_back({"number(1) wigner", worst <= 1e-8, "max error " + io::g17(worst)});
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double peak = 0.0;
  for (int t = 0; t < 3; ++t) {
    std::vector<double> w(12);
    double s = 0.0;
    for (double& v : w)
      s += (v = u(gen));
    for (double& v : w)
      v /= s;
    for (double v : WignerField(DensityMatrix::from_diagonal(w)).grid(GridSpec::square(6.0, 25)))
      peak = std::max(peak, std::abs(v));
  }
  out.push_back({"wigner 1/pi bound", peak <= 1.0 / specfun::pi + 1e-6, "max " + io::g17(peak)});
  return out;
}

inline std::vector<Check> suite_homodyne() {
  std::vector<Check> out;
  const auto rho = build(DiagonalState{{0.5, 0.3, 0.2}});
  const double mass =
      quad::integrate([&](double x) { return pdf(rho, x, 0.7); }, quad::finite(-12.0, 12.0)).value;
  out.push_back({"pdf normalization", std::abs(mass - 1.0) <= 1e-10, io::g17(mass)});
  const auto s = sample(build(NumberState{0}), 20000, 1);
  double m2 = 0.0;
  for (const auto& v : s.samples)
    m2 += v.x * v.x;
  m2 /= static_cast<double>(s.samples.size());
  out.push_back({"vacuum second moment", std::abs(m2 - 0.5) <= 0.03, io::g17(m2)});
  return out;
}

inline std::vector<Check> suite_estimator() {
  std::vector<Check> out;
  double worst = 0.0;
  const auto bw = Bandwidth::manual(1.0);
  for (double t : {0.0, 0.3, 0.9})
    worst = std::max(worst, std::abs(kernel_fourier_numeric(bw, t) - t / 2));
  for (double t : {1.1, 2.0})
    worst = std::max(worst, std::abs(kernel_fourier_numeric(bw, t)));
  out.push_back({"kernel fourier transform", worst <= 1e-6, "max error " + io::g17(worst)});
  out.push_back({"kernel at origin", std::abs(kernel(bw, 0.0) - 1.0 / (4 * specfun::pi)) <= 1e-15, ""});
  return out;
}

inline std::vector<Check> suite_minimax() {
  std::vector<Check> out;
  double worst = 0.0;
  for (double x : {0.0, 0.5, 3.0, 10.0})
    worst = std::max(worst, std::abs(minimax::p_alpha(0.25, x) - minimax::p_alpha_u(0.25, x)));
  out.push_back({"p_alpha representations", worst <= 1e-9, "max difference " + io::g17(worst)});
  const double want = 2 * std::sqrt(specfun::pi) * (specfun::pi / 2 - 1);
  out.push_back({"R0 at alpha = 1", std::abs(minimax::r0(1.0) - want) <= 1e-10, io::g17(minimax::r0(1.0))});
  const double C = minimax::c_a(1e6, 0.1);
  const bool pos = minimax::positivity_scan(0.2, 1e6, 1.0, C, 500).ok &&
                   minimax::positivity_scan(0.2, 1e6, 1.0, -C, 500).ok;
  out.push_back({"hardest family positivity", pos, ""});
  return out;
}

inline int verify(const std::string& suite, std::ostream& os) {
  std::vector<std::pair<std::string, std::vector<Check> (*)()>> suites = {
      {"specfun", suite_specfun},   {"wigner", suite_wigner},   {"homodyne", suite_homodyne},
      {"estimator", suite_estimator}, {"minimax", suite_minimax}};
  bool known = suite == "all";
  bool all_pass = true;
  for (const auto& [name, fn] : suites) {
    if (suite != "all" && suite != name)
      continue;
    known = true;
    for (const auto& c : fn()) {
      os << (c.pass ? "PASS " : "FAIL ") << name << ": " << c.name;
      if (!c.detail.empty())
        os << " (" << c.detail << ')';
      os << '\n';
      all_pass = all_pass && c.pass;
    }
  }
  if (!known)
    throw DomainError("verify: unknown suite \"" + suite + "\"");
  return all_pass ? Exit::ok : Exit::verify_failed;
}

// ---------------------------------------------------------------------------

inline int run(int argc, const char* const* argv, std::ostream& os = std::cout,
               std::ostream& es = std::cerr) {
  CLI::App app{"Homodyne tomography: sampling, Wigner estimation and risk experiments", "qht"};
  app.set_version_flag("--version", version);
  app.require_subcommand(1);
  std::size_t threads = 0;
  app.add_option("--threads", threads, "worker cap (0 = QHT_THREADS or all cores)");

  Simulate sim;
  auto* s = app.add_subcommand("simulate", "draw homodyne samples from a state");
  s->add_option("--state", sim.state, "state spec: inline JSON or a file")->required();
  s->add_option("--n", sim.n, "number of samples")->required()->check(CLI::PositiveNumber);
  s->add_option("--seed", sim.seed, "random seed")->required();
  s->add_option("--out", sim.out, "samples CSV")->required();
  s->add_option("--max-tail", sim.max_tail, "largest discarded Fock mass");
  s->add_option("--threads", threads, "worker cap");

  Estimate est;
  auto* e = app.add_subcommand("estimate", "kernel estimate of the Wigner function on a grid");
  e->add_option("--samples", est.samples, "samples CSV")->required();
  e->add_option("--beta", est.beta, "smoothness parameter for the bandwidth rule");
  e->add_option("--delta", est.delta, "manual bandwidth (overrides the rule)");
  e->add_option("--grid", est.grid, "qmin,qmax,pmin,pmax,steps");
  e->add_option("--out", est.out, "grid CSV")->required();
  e->add_option("--threads", threads, "worker cap");

  Risk risk;
  auto* r = app.add_subcommand("risk", "Monte Carlo pointwise risk");
  r->add_option("--state", risk.state, "state spec: inline JSON or a file")->required();
  std::vector<double> z;
  auto* zq = r->add_option("--q", risk.q, "point z, first coordinate");
  auto* zp = r->add_option("--p", risk.p, "point z, second coordinate");
  r->add_option("--z", z, "point z as q,p")->delimiter(',')->expected(2)->excludes(zq)->excludes(zp);
  r->add_option("--beta", risk.beta, "smoothness parameter");
  r->add_option("--n-values", risk.n_values, "comma-separated sample sizes");
  r->add_option("--reps", risk.reps, "replicates per sample size");
  r->add_option("--seed", risk.seed, "random seed")->required();
  r->add_option("--delta-scale", risk.delta_scale, "multiplier on the rule bandwidth");
  r->add_option("--out", risk.out, "report JSON")->required();
  r->add_option("--plot-data", risk.plot_data, "also write n,mse,stderr,r_n_sq CSV");
  r->add_option("--threads", threads, "worker cap");

  Hardest hard;
  auto* h = app.add_subcommand("hardest", "hardest-family and Van Trees report");
  h->add_option("--alpha", hard.alpha, "alpha in (0, 1/4)");
  h->add_option("--beta", hard.beta, "smoothness parameter");
  h->add_option("--a", hard.a, "perturbation scale (default n^eta)");
  h->add_option("--n", hard.n, "sample size");
  h->add_option("--eta", hard.eta, "a = n^eta");
  h->add_option("--q-small", hard.q_small, "constant q in C_a");
  h->add_option("--dim", hard.dim, "levels checked for positivity");
  h->add_option("--out", hard.out, "report JSON (stdout if omitted)");
  h->add_option("--threads", threads, "worker cap");

  std::string suite = "all";
  auto* v = app.add_subcommand("verify", "run invariant checks");
  v->add_option("--suite", suite, "all, specfun, wigner, homodyne, estimator or minimax");
  v->add_option("--threads", threads, "worker cap");

  Truth truth;
  auto* t = app.add_subcommand("truth", "exact Wigner function of a state on a grid");
  t->add_option("--state", truth.state, "state spec: inline JSON or a file")->required();
  t->add_option("--grid", truth.grid, "qmin,qmax,pmin,pmax,steps");
  t->add_option("--out", truth.out, "grid CSV")->required();
  t->add_option("--threads", threads, "worker cap");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err, os, es);
  } catch (const CLI::CallForAllHelp& err) {
    return app.exit(err, os, es);
  } catch (const CLI::CallForVersion& err) {
    return app.exit(err, os, es);
  } catch (const CLI::ParseError& err) {
    const auto subs = app.get_subcommands();
    es << "qht" << (subs.empty() ? "" : " " + subs.front()->get_name()) << ": " << err.what()
       << "\nRun with --help for more information.\n";
    return Exit::usage;
  }

  const std::string sub = app.get_subcommands().front()->get_name();
  if (z.size() == 2) {
    risk.q = z[0];
    risk.p = z[1];
  }
  parallel::set_thread_cap(threads);
  try {
    if (sub == "simulate")
      return sim.run();
    if (sub == "estimate")
      return est.run();
    if (sub == "risk")
      return risk.run();
    if (sub == "hardest")
      return hard.run(os);
    if (sub == "verify")
      return verify(suite, os);
    return truth.run();
  } catch (const ValidationError& err) {
    es << "qht " << sub << ": " << err.what() << '\n';
    return Exit::validation;
  } catch (const NonConvergence& err) {
    es << "qht " << sub << ": " << err.what() << '\n';
    return Exit::nonconvergence;
  }
}

} // namespace qht::cli
