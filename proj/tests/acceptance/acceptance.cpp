// End-to-end acceptance checks: each criterion prints one [PASS]/[FAIL]
// line with its measured quantities and pinned tolerances.  The binary
// exits with the number of failed criteria.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include "core/harness.hpp"
#include "core/losses.hpp"
#include "core/network.hpp"
#include "core/penalty.hpp"
#include "core/processes.hpp"
#include "core/rng.hpp"
#include "core/theory.hpp"
#include "core/trainer.hpp"

using namespace spdnn;
using nlohmann::json;

namespace {

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch())
      .count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

/* ---- 1: exact prox vs. dense grid search ------------------------------- */

Outcome check_prox_grid() {
  Rng rng(101);
  const PenaltyFamily fams[3] = {PenaltyFamily::clipped_l1,
                                 PenaltyFamily::scad, PenaltyFamily::mcp};
  const double grid_step = 1e-5;
  double max_gap = 0.0;
  double t0 = now_seconds();
  for (int it = 0; it < 1000; ++it) {
    PenaltySpec spec = PenaltySpec::make(fams[rng.below(3)],
                                         rng.uniform(0.01, 10.0),
                                         rng.uniform(1e-4, 1.0));
    double eta = rng.uniform(1e-3, 1.0);
    double x = rng.uniform(-5.0, 5.0);
    double z = prox(spec, x, eta);
    double obj = 0.5 * (z - x) * (z - x) + eta * spec.pi(std::fabs(z));

    // the minimizer shares x's sign and |z| <= |x|, so the grid covers [0, x]
    double lo = std::fmin(0.0, x);
    double hi = std::fmax(0.0, x);
    long long steps = static_cast<long long>(std::ceil((hi - lo) / grid_step));
    double best = INFINITY;
    for (long long k = 0; k <= steps; ++k) {
      double g = lo + grid_step * static_cast<double>(k);
      if (g > hi) g = hi;
      double o = 0.5 * (g - x) * (g - x) + eta * spec.pi(std::fabs(g));
      if (o < best) best = o;
    }
    max_gap = std::fmax(max_gap, obj - best);
  }
  double secs = now_seconds() - t0;
  bool pass = max_gap <= 1e-8 && secs < 30.0;
  return {pass, fmt("max objective gap %.3g over 1000 draws, tol 1e-8; "
                    "grid step 1e-5; %.1fs (limit 30s)",
                    max_gap, secs)};
}

/* ---- 2: analytic gradients vs. central differences --------------------- */

Outcome check_gradient_fd() {
  Rng rng(202);
  const LossSpec losses[3] = {LossSpec::parse("l1"), LossSpec::parse("huber"),
                              LossSpec::parse("logistic")};
  const double h = 1e-5;
  const std::size_t points = 8;
  double max_rel = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;
  double t0 = now_seconds();

  for (int net = 0; net < 50; ++net) {
    Architecture arch;
    std::size_t d = 1 + rng.below(3);
    std::size_t depth = rng.below(4);
    arch.widths.push_back(d);
    for (std::size_t l = 0; l < depth; ++l) {
      arch.widths.push_back(1 + rng.below(8));
    }
    arch.widths.push_back(1);
    arch.B = 5.0;
    arch.F = 3.0;
    std::vector<double> theta = init_params(arch, seed_split(777, net));

    std::vector<double> xs(points * d);
    for (double& v : xs) v = rng.uniform(0.0, 1.0);

    for (const LossSpec& loss : losses) {
      std::vector<double> ys(points);
      std::vector<double> preds;
      forward_batch(arch, Activation::relu(), theta, xs.data(), points, true,
                    &preds);
      for (std::size_t i = 0; i < points; ++i) {
        if (loss.kind == LossKind::logistic) {
          ys[i] = rng.below(2) ? 1.0 : -1.0;
        } else {
          double off = rng.uniform(0.5, 1.5);
          ys[i] = preds[i] + (rng.below(2) ? off : -off);
        }
      }
      auto risk_at = [&](const std::vector<double>& th) {
        std::vector<double> p;
        forward_batch(arch, Activation::relu(), th, xs.data(), points, true,
                      &p);
        return empirical_risk(loss, p, ys);
      };
      std::vector<double> grad = risk_gradient(
          arch, Activation::relu(), theta, loss, xs.data(), ys.data(), points);

      std::vector<double> th = theta;
      for (std::size_t i = 0; i < theta.size(); ++i) {
        auto central = [&](double step) {
          th[i] = theta[i] + step;
          double up = risk_at(th);
          th[i] = theta[i] - step;
          double dn = risk_at(th);
          th[i] = theta[i];
          return (up - dn) / (2.0 * step);
        };
        double fd1 = central(h);
        double fd2 = central(2.0 * h);
        // two-step disagreement flags a kink inside the stencil; those
        // components are excluded, and their fraction is capped below
        if (std::fabs(fd1 - fd2) > 1e-6 * std::fmax(1.0, std::fabs(fd1))) {
          ++skipped;
          continue;
        }
        double rel = std::fabs(grad[i] - fd1) /
                     std::fmax(1e-2, std::fmax(std::fabs(fd1),
                                               std::fabs(grad[i])));
        max_rel = std::fmax(max_rel, rel);
        ++checked;
      }
    }
  }
  double secs = now_seconds() - t0;
  double skip_frac =
      static_cast<double>(skipped) / static_cast<double>(checked + skipped);
  bool pass = max_rel < 1e-5 && skip_frac < 0.02 && secs < 60.0;
  return {pass, fmt("max relative error %.3g over %zu components, tol 1e-5; "
                    "%zu kink-adjacent skipped (%.2f%%, cap 2%%); "
                    "%.1fs (limit 60s)",
                    max_rel, checked, skipped, 100.0 * skip_frac, secs)};
}

/* ---- 3: penalty contract audit ----------------------------------------- */

Outcome check_penalty_contract() {
  const PenaltyFamily fams[3] = {PenaltyFamily::clipped_l1,
                                 PenaltyFamily::scad, PenaltyFamily::mcp};
  double worst = 0.0;
  for (PenaltyFamily fam : fams) {
    Rng rng(303);
    for (int draw = 0; draw < 100; ++draw) {
      double lambda = rng.uniform(1e-3, 20.0);
      double tau = rng.uniform(1e-6, 2.0);
      double shape = 0.0;
      if (fam == PenaltyFamily::scad) shape = rng.uniform(2.01, 8.0);
      if (fam == PenaltyFamily::mcp) shape = rng.uniform(1.01, 6.0);
      PenaltySpec spec = PenaltySpec::make(fam, lambda, tau, shape);

      if (spec.pi(0.0) != 0.0) {
        return {false, fmt("pi(0) = %.3g != 0 (%s, draw %d)", spec.pi(0.0),
                           spec.family_name().c_str(), draw)};
      }
      double prev = 0.0;
      for (int k = 1; k <= 400; ++k) {
        double x = 3.0 * tau * static_cast<double>(k) / 400.0;
        double v = spec.pi(x);
        if (v + 1e-12 * std::fmax(1.0, lambda) < prev) {
          return {false, fmt("pi decreases at x=%.6g (%s, draw %d)", x,
                             spec.family_name().c_str(), draw)};
        }
        prev = v;
      }
      for (double mult : {1.000001, 1.5, 4.0, 100.0}) {
        double gap = std::fabs(spec.pi(mult * tau) - lambda);
        worst = std::fmax(worst, gap / std::fmax(1.0, lambda));
        if (gap > 1e-12 * std::fmax(1.0, lambda)) {
          return {false,
                  fmt("pi(%.2f tau) - lambda = %.3g (%s, draw %d)", mult, gap,
                      spec.family_name().c_str(), draw)};
        }
      }
    }
  }
  return {true, fmt("100 draws/family: pi(0)=0, non-decreasing on [0,3tau], "
                    "flat at lambda beyond tau (worst rel gap %.3g, "
                    "tol 1e-12)",
                    worst)};
}

/* ---- 4: effective sample size and rate formulas ------------------------ */

Outcome check_rate_formulas() {
  if (n_alpha(100, 1.0, 1.0) != 3 || n_alpha(1000, 8.0, 1.0) != 31) {
    return {false, fmt("n_alpha(100,1,1)=%lld (want 3), "
                       "n_alpha(1000,8,1)=%lld (want 31)",
                       n_alpha(100, 1.0, 1.0), n_alpha(1000, 8.0, 1.0))};
  }
  auto holder = theory::effective_smoothness(0, {1}, {1}, {2.0});
  double p = theory::phi(holder, 1024.0);
  if (p != 0.00390625) {
    return {false, fmt("phi(beta=2, t=1, n=1024) = %.17g, want 2^-8 exactly",
                       p)};
  }
  double worst = 0.0;
  for (double beta : {0.5, 1.0, 2.0}) {
    for (std::size_t d : {std::size_t{1}, std::size_t{2}, std::size_t{4}}) {
      auto s = theory::effective_smoothness(
          1, {d, d}, {1, d}, {beta, std::fmax(beta, 1.0) * d});
      double want = 2.0 * beta / (2.0 * beta + 1.0);
      double rel = std::fabs(theory::phi_exponent(s) - want) / want;
      worst = std::fmax(worst, rel);
      if (rel > 1e-12) {
        return {false, fmt("scalar-AR composition exponent off: beta=%.1f "
                           "d=%zu got %.17g want %.17g",
                           beta, d, theory::phi_exponent(s), want)};
      }
    }
  }
  return {true, fmt("n_alpha frozen values exact; phi = 2^-8 bit-exact; "
                    "composition exponent = 2b/(2b+1) for b in {0.5,1,2} "
                    "(worst rel err %.3g, tol 1e-12)",
                    worst)};
}

/* ---- 5: packing separation and KL budget ------------------------------- */

Outcome check_lower_bound() {
  double t0 = now_seconds();
  auto smooth = theory::effective_smoothness(0, {1}, {1}, {1.0});
  auto hc = theory::build_hypercube(smooth, 10000, 1);
  auto rep = theory::verify_lemma1(hc, 10000, 64);
  double secs = now_seconds() - t0;
  bool quad_ok = rep.max_rel_err_bump_norm <= 1e-6 &&
                 rep.max_rel_err_pair <= 1e-6;
  bool pass = rep.pass_i && rep.pass_ii && quad_ok &&
              rep.min_pair_l2 >= rep.kappa * std::sqrt(rep.phi_n) &&
              rep.kl_budget <= rep.log_m_over_9 && secs < 120.0;
  return {pass, fmt("min pairwise L2 %.6g >= kappa sqrt(phi) %.6g; KL budget "
                    "%.4g <= log(M)/9 = %.4g; quadrature rel errs %.2g/%.2g "
                    "(tol 1e-6); M=%zu words; %.1fs (limit 120s)",
                    rep.min_pair_l2, rep.kappa * std::sqrt(rep.phi_n),
                    rep.kl_budget, rep.log_m_over_9, rep.max_rel_err_bump_norm,
                    rep.max_rel_err_pair, rep.m_words, secs)};
}

/* ---- 6: stability vs. two independent root oracles ---------------------- */

// eigenvalues of the bottom-row companion matrix of
// z^d - a_1 z^{d-1} - ... - a_d
std::vector<std::complex<double>> companion_roots(
    const std::vector<double>& a) {
  auto d = static_cast<Eigen::Index>(a.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index i = 0; i + 1 < d; ++i) m(i, i + 1) = 1.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    m(d - 1, i) = a[a.size() - 1 - static_cast<std::size_t>(i)];
  }
  Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
  std::vector<std::complex<double>> roots(a.size());
  for (Eigen::Index i = 0; i < d; ++i) {
    roots[static_cast<std::size_t>(i)] = es.eigenvalues()(i);
  }
  return roots;
}

// zeros of z^d - sum_i a_i z^{d-i} inside the unit circle, by the winding
// number of the boundary image
int winding_zero_count(const std::vector<double>& a) {
  std::size_t d = a.size();
  auto eval = [&](std::complex<double> z) {
    std::complex<double> v = 1.0;
    for (std::size_t i = 0; i < d; ++i) v = v * z - a[i];
    return v;
  };
  const int samples = 1 << 15;
  double total = 0.0;
  std::complex<double> prev = eval({1.0, 0.0});
  for (int k = 1; k <= samples; ++k) {
    double th = 2.0 * M_PI * static_cast<double>(k) / samples;
    std::complex<double> cur = eval({std::cos(th), std::sin(th)});
    total += std::arg(cur / prev);
    prev = cur;
  }
  return static_cast<int>(std::lround(total / (2.0 * M_PI)));
}

Outcome check_stability_oracles() {
  proc::GexparParams worked;
  worked.c = {0.3, 0.2};
  worked.pi = {0.1, 0.1};
  worked.z = {0.0, 0.0};
  auto rep = proc::gexpar_stability(worked);
  auto roots = companion_roots({0.4, 0.3});
  double pos = 0.0, neg = 0.0;
  for (const auto& r : roots) {
    if (std::fabs(r.imag()) > 1e-12) {
      return {false, "worked order-2 envelope produced complex roots"};
    }
    (r.real() > 0 ? pos : neg) = r.real();
  }
  if (!rep.stable || std::fabs(pos - 0.783) > 5e-4 ||
      std::fabs(neg + 0.383) > 5e-4 ||
      std::fabs(rep.radius - std::fabs(pos)) > 1e-9) {
    return {false, fmt("worked example: stable=%d roots %.6f/%.6f "
                       "(want ~0.783/-0.383), radius %.6f",
                       rep.stable, pos, neg, rep.radius)};
  }

  Rng rng(606);
  int accepted = 0, stable_count = 0;
  double max_radius_gap = 0.0;
  while (accepted < 100) {
    std::size_t d = 1 + rng.below(5);
    proc::GexparParams p;
    p.c.resize(d);
    p.pi.resize(d);
    p.z.assign(d, 0.0);
    std::vector<double> env(d);
    for (std::size_t i = 0; i < d; ++i) {
      p.c[i] = rng.uniform(-0.6, 0.6);
      p.pi[i] = rng.uniform(-0.3, 0.3);
      env[i] = std::fabs(p.c[i]) + std::fabs(p.pi[i]);
    }
    auto eig = companion_roots(env);
    double radius = 0.0;
    bool near_circle = false;
    for (const auto& r : eig) {
      radius = std::fmax(radius, std::abs(r));
      if (std::fabs(std::abs(r) - 1.0) < 1e-3) near_circle = true;
    }
    if (near_circle) continue;  // winding is ill-conditioned on the boundary
    ++accepted;

    auto lib = proc::gexpar_stability(p);
    bool eig_stable = radius < 1.0;
    bool wind_stable = winding_zero_count(env) == static_cast<int>(d);
    max_radius_gap = std::fmax(max_radius_gap, std::fabs(lib.radius - radius));
    if (lib.stable != eig_stable || eig_stable != wind_stable) {
      return {false,
              fmt("disagreement at draw %d (d=%zu): lib=%d eigen=%d "
                  "winding=%d",
                  accepted, d, lib.stable, eig_stable, wind_stable)};
    }
    if (std::fabs(lib.radius - radius) > 1e-9) {
      return {false, fmt("radius gap %.3g at draw %d",
                         std::fabs(lib.radius - radius), accepted)};
    }
    stable_count += eig_stable;
  }
  return {true, fmt("worked roots 0.783/-0.383 matched (tol 5e-4); 100 draws "
                    "d<=5 agree with eigenvalue + winding oracles (%d stable, "
                    "%d not; max radius gap %.2g, tol 1e-9)",
                    stable_count, 100 - stable_count, max_radius_gap)};
}

/* ---- 7: regression error decays across the n grid ---------------------- */

Outcome check_regression_rate() {
  json cfg_json = {
      {"process",
       {{"kind", "ar"},
        {"target", {{"kind", "holder-quadratic"}, {"d", 1}, {"K", 1.0}}},
        {"noise", {{"kind", "gaussian"}, {"scale", 0.25}}},
        {"burn_in", 1000}}},
      {"loss", "huber:10"},
      {"regime", "exponential"},
      {"mix_c", 1.0},
      {"mix_gamma", 1.0},
      {"n_grid", {512, 1024, 2048, 4096, 8192}},
      {"replications", 20},
      {"m_test", 50000},
      {"kappa", 2.0},
      {"s", 2.0},
      {"constants",
       {{"c_L", 0.32},
        {"c_N", 2.0},
        {"c_B", 1.0},
        {"nu3", 4.5},
        {"lambda_scale", 2e-4}}},
      {"train",
       {{"epochs", 150}, {"batch_size", 64}, {"step", 0.1}, {"restarts", 2}}},
      {"seed", 20260814}};
  double t0 = now_seconds();
  auto cfg = harness::SweepConfig::parse(cfg_json);
  auto res = harness::rate_sweep(cfg, 1);
  double secs = now_seconds() - t0;

  std::size_t failed_cells = 0;
  for (const auto& c : res.cells) failed_cells += !c.ok;
  int inversions = 0;
  for (std::size_t i = 1; i < res.stats.size(); ++i) {
    inversions += res.stats[i].median > res.stats[i - 1].median;
  }
  double slope = res.slope.slope;
  bool pass = failed_cells == 0 && inversions <= 1 && slope >= -1.2 &&
              slope <= -0.35 && secs < 1800.0;
  std::ostringstream meds;
  for (const auto& s : res.stats) meds << fmt(" %.3g", s.median);
  return {pass, fmt("medians over n{512..8192}:%s; %d inversion(s) (cap 1); "
                    "slope %.3f in [-1.2,-0.35]; %zu/%zu cells failed; "
                    "%.0fs (limit 1800s)",
                    meds.str().c_str(), inversions, slope, failed_cells,
                    res.cells.size(), secs)};
}

/* ---- 8: binary autoregression beats the best constant ------------------ */

Outcome check_classification_gain() {
  json pcfg = {{"kind", "binary"},
               {"f", {{"kind", "linear"}, {"coeffs", {0.4}}}}};
  auto process = harness::ProcessSpec::parse(pcfg);
  LossSpec loss = LossSpec::parse("logistic");
  Architecture arch;
  arch.widths = {1, 8, 1};
  arch.B = 10.0;
  arch.F = 2.0;
  PenaltySpec pen = PenaltySpec::make(PenaltyFamily::clipped_l1, 1e-4, 1e-6);
  train::TrainConfig tc;
  tc.epochs = 60;
  tc.batch_size = 64;
  tc.step = 0.5;
  tc.restarts = 2;

  const std::uint64_t master = 414243;
  double best_const =
      harness::best_constant_excess(process, 50000, seed_split(master, 99));
  std::vector<double> excess;
  for (std::size_t rep = 0; rep < 10; ++rep) {
    std::uint64_t cell = seed_split(master, rep + 1);
    auto data = process.simulate(4096, seed_split(cell, 1));
    tc.seed = seed_split(cell, 2);
    auto fitres = train::fit(arch, pen, loss, data, tc);
    excess.push_back(harness::estimate_excess_risk_classification(
        fitres.model, process, 50000, seed_split(cell, 3)));
  }
  std::sort(excess.begin(), excess.end());
  double med = 0.5 * (excess[4] + excess[5]);
  bool pass = med < 0.5 * best_const;
  return {pass, fmt("median closed-form excess %.3g over 10 fits at n=4096 "
                    "vs best-constant %.3g (need < 0.5x => %.3g)",
                    med, best_const, 0.5 * best_const)};
}

/* ---- 9: local curvature exponent of both losses ------------------------ */

Outcome check_curvature_probe() {
  harness::A4Config reg;
  reg.loss = LossSpec::parse("huber:10");
  reg.process = harness::ProcessSpec::parse(
      json{{"kind", "ar"},
           {"target", {{"kind", "constant"}, {"d", 1}, {"value", 0.0}}},
           {"noise", {{"kind", "gaussian"}, {"scale", 0.25}}}});
  reg.draws = 100000;
  reg.seed = 31;
  auto r1 = harness::a4_probe(reg);

  harness::A4Config cls;
  cls.loss = LossSpec::parse("logistic");
  cls.process = harness::ProcessSpec::parse(
      json{{"kind", "binary"},
           {"f", {{"kind", "linear"}, {"coeffs", {0.4}}}}});
  cls.draws = 100000;
  cls.seed = 32;
  double eta_lo = 1.0, eta_hi = 0.0;
  for (double w : {-1.0, 1.0}) {
    double e = cls.process.eta(&w);
    eta_lo = std::fmin(eta_lo, e);
    eta_hi = std::fmax(eta_hi, e);
  }
  auto r2 = harness::a4_probe(cls);

  bool pass = r1.kappa_hat >= 1.8 && r1.kappa_hat <= 2.2 &&
              r2.kappa_hat >= 1.8 && r2.kappa_hat <= 2.2 && eta_lo >= 0.2 &&
              eta_hi <= 0.8;
  return {pass, fmt("huber+gaussian kappa %.4f, logistic kappa %.4f "
                    "(band [1.8,2.2]); eta range [%.2f,%.2f] inside "
                    "[0.2,0.8]",
                    r1.kappa_hat, r2.kappa_hat, eta_lo, eta_hi)};
}

/* ---- 10: CLI determinism and cell isolation ----------------------------- */

int run_cli(const std::string& args, const std::filesystem::path& log) {
  std::string cmd = std::string(SPDNN_CLI_PATH) + " " + args + " > " +
                    log.string() + " 2>&1";
  int st = std::system(cmd.c_str());
  if (st == -1 || !WIFEXITED(st)) return -1;
  return WEXITSTATUS(st);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool same_bytes(const std::filesystem::path& a,
                const std::filesystem::path& b) {
  std::string sa = slurp(a);
  return !sa.empty() && sa == slurp(b);
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

Outcome check_cli_determinism() {
  namespace fs = std::filesystem;
  fs::path dir = fs::current_path() / "acceptance_scratch";
  fs::remove_all(dir);
  fs::create_directories(dir);
  fs::path log = dir / "cli.log";

  const std::string sim_cfg = R"({
    "process": {
      "kind": "ar",
      "target": {"kind": "holder-quadratic", "d": 1, "K": 1.0},
      "noise": {"kind": "gaussian", "scale": 0.25}
    },
    "n": 200, "seed": 5
  })";
  const std::string train_cfg = R"({
    "process": {
      "kind": "ar",
      "target": {"kind": "holder-quadratic", "d": 1, "K": 1.0},
      "noise": {"kind": "gaussian", "scale": 0.25}
    },
    "n": 256, "loss": "huber:10",
    "arch": {"widths": [1, 6, 1], "B": 5.0, "F": 2.0},
    "penalty": {"family": "clipped_l1", "lambda": 1e-3, "tau": 1e-6},
    "train": {"epochs": 30, "batch_size": 32, "step": 0.2, "restarts": 2},
    "seed": 9
  })";
  const std::string sweep_cfg_head = R"({
    "process": {
      "kind": "ar",
      "target": {"kind": "holder-quadratic", "d": 1, "K": 1.0},
      "noise": {"kind": "gaussian", "scale": 0.25}
    },
    "loss": "huber:10", "regime": "exponential",
    "mix_c": 1.0, "mix_gamma": 1.0,
    "n_grid": [128, 256], "replications": 2, "m_test": 2000,
    "kappa": 2.0, "s": 2.0,
    "constants": {"c_L": 0.32, "c_N": 2.0, "nu3": 4.5, "lambda_scale": 2e-4},
    "train": {"epochs": 25, "batch_size": 32, "step": 0.1, "restarts": 2},
    "seed": 11)";
  const std::string verify_cfg = R"({
    "smoothness": {"dims": [1], "t": [1], "beta": [1.0]},
    "n": 2000, "panels": 64, "seed": 1
  })";
  const std::string probe_cfg = R"({
    "loss": "huber:10",
    "process": {
      "kind": "ar",
      "target": {"kind": "constant", "d": 1, "value": 0.0},
      "noise": {"kind": "gaussian", "scale": 0.25}
    },
    "shifts": [0.1, 0.2], "draws": 5000, "seed": 3
  })";
  const std::string stab_cfg =
      R"({"c": [0.3, 0.2], "pi": [0.1, 0.1], "z": [0.0, 0.0]})";

  write_file(dir / "sim.json", sim_cfg);
  write_file(dir / "train.json", train_cfg);
  write_file(dir / "sweep.json", sweep_cfg_head + "\n}");
  write_file(dir / "sweep_poison.json",
             sweep_cfg_head + ",\n  \"poison\": [[1, 1]]\n}");
  write_file(dir / "verify.json", verify_cfg);
  write_file(dir / "probe.json", probe_cfg);
  write_file(dir / "stab.json", stab_cfg);

  auto cfgp = [&](const char* n) { return (dir / n).string(); };
  struct Run {
    std::string args_a, args_b;
    std::vector<std::string> products_a, products_b;
  };
  std::vector<Run> runs = {
      {"simulate --config " + cfgp("sim.json") + " --out " + cfgp("sim1.csv"),
       "simulate --config " + cfgp("sim.json") + " --out " + cfgp("sim2.csv"),
       {"sim1.csv"},
       {"sim2.csv"}},
      {"train --config " + cfgp("train.json") + " --out " + cfgp("fit1"),
       "train --config " + cfgp("train.json") + " --out " + cfgp("fit2"),
       {"fit1.model.json", "fit1.trace.csv"},
       {"fit2.model.json", "fit2.trace.csv"}},
      {"rate-sweep --config " + cfgp("sweep.json") + " --workers 1 --out " +
           cfgp("sw1"),
       "rate-sweep --config " + cfgp("sweep.json") + " --workers 4 --out " +
           cfgp("sw2"),
       {"sw1.csv", "sw1.json"},
       {"sw2.csv", "sw2.json"}},
      {"verify-lowerbound --config " + cfgp("verify.json") + " --out " +
           cfgp("vb1.json"),
       "verify-lowerbound --config " + cfgp("verify.json") + " --out " +
           cfgp("vb2.json"),
       {"vb1.json"},
       {"vb2.json"}},
      {"a4-probe --config " + cfgp("probe.json") + " --out " +
           cfgp("probe1.json"),
       "a4-probe --config " + cfgp("probe.json") + " --out " +
           cfgp("probe2.json"),
       {"probe1.json"},
       {"probe2.json"}},
      {"stability --config " + cfgp("stab.json") + " --out " +
           cfgp("stab1.json"),
       "stability --config " + cfgp("stab.json") + " --out " +
           cfgp("stab2.json"),
       {"stab1.json"},
       {"stab2.json"}},
  };
  int compared = 0;
  for (const Run& r : runs) {
    if (run_cli(r.args_a, log) != 0 || run_cli(r.args_b, log) != 0) {
      return {false, "subcommand failed: " + r.args_a + " (log: " +
                         slurp(log).substr(0, 160) + ")"};
    }
    for (std::size_t i = 0; i < r.products_a.size(); ++i) {
      if (!same_bytes(dir / r.products_a[i], dir / r.products_b[i])) {
        return {false, "rerun differs: " + r.products_a[i] + " vs " +
                           r.products_b[i]};
      }
      ++compared;
    }
  }

  if (run_cli("rate-sweep --config " + cfgp("sweep_poison.json") +
                  " --workers 1 --out " + cfgp("swp"),
              log) != 0) {
    return {false, "poisoned sweep run failed"};
  }
  std::istringstream clean(slurp(dir / "sw1.csv"));
  std::istringstream poisoned(slurp(dir / "swp.csv"));
  std::string cl, pl;
  std::size_t line = 0, changed = 0;
  bool poisoned_row_ok = false;
  while (std::getline(clean, cl)) {
    if (!std::getline(poisoned, pl)) {
      return {false, "poisoned sweep lost rows"};
    }
    ++line;
    if (cl == pl) continue;
    ++changed;
    // header is n,rep,seed,status,...; cell (n_index 1, rep 1) is n=256 rep=1
    poisoned_row_ok = pl.rfind("256,1,", 0) == 0 &&
                      pl.find("failed") != std::string::npos;
  }
  if (std::getline(poisoned, pl)) {
    return {false, "poisoned sweep gained rows"};
  }
  bool pass = changed == 1 && poisoned_row_ok;
  return {pass, fmt("6 subcommands rerun byte-identical (%d files, workers "
                    "1 vs 4 included); poisoned cell changed %zu row(s) "
                    "(want exactly 1, marked failed) out of %zu",
                    compared, changed, line)};
}

}  // namespace

int main() {
  struct Entry {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Entry> entries = {
      {1, "scalar prox matches a step-1e-5 grid oracle", check_prox_grid},
      {2, "backprop matches central differences on random networks",
       check_gradient_fd},
      {3, "penalty families satisfy the zero/monotone/flat contract",
       check_penalty_contract},
      {4, "effective-sample and rate formulas hit frozen values",
       check_rate_formulas},
      {5, "hypothesis packing separation and KL budget verified by "
          "quadrature",
       check_lower_bound},
      {6, "exponential-AR stability agrees with two root oracles",
       check_stability_oracles},
      {7, "regression error decays across the n grid at a plausible slope",
       check_regression_rate},
      {8, "binary autoregression fit beats the best constant by 2x",
       check_classification_gain},
      {9, "excess-risk curvature exponent is ~2 for both losses",
       check_curvature_probe},
      {10, "CLI reruns are byte-identical and poisoned cells stay isolated",
       check_cli_determinism},
  };

  int failures = 0;
  for (const Entry& e : entries) {
    Outcome o;
    double t0 = now_seconds();
    try {
      o = e.run();
    } catch (const std::exception& ex) {
      o = {false, std::string("threw: ") + ex.what()};
    }
    double secs = now_seconds() - t0;
    std::printf("[%s] criterion %2d: %s — %s [%.1fs]\n",
                o.pass ? "PASS" : "FAIL", e.id, e.name, o.detail.c_str(),
                secs);
    std::fflush(stdout);
    failures += !o.pass;
  }
  if (failures == 0) {
    std::printf("acceptance: all 10 criteria passed\n");
  } else {
    std::printf("acceptance: %d criterion(s) failed\n", failures);
  }
  return failures;
}
