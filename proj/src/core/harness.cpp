#include "core/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "core/errors.hpp"
#include "core/rng.hpp"
#include "version.hpp"

namespace spdnn::harness {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double logistic_phi(double v) {
  return v >= 0.0 ? std::log1p(std::exp(-v)) : -v + std::log1p(std::exp(v));
}

double binary_entropy(double eta) {
  double acc = 0.0;
  if (eta > 0.0) acc -= eta * std::log(eta);
  if (eta < 1.0) acc -= (1.0 - eta) * std::log(1.0 - eta);
  return acc;
}

// conditional logistic risk gap of predicting h when P(Y=1) = eta; the
// optimum is logit(eta), with risk equal to the binary entropy
double conditional_excess(double eta, double h) {
  if (eta <= 0.0) return logistic_phi(-h);
  if (eta >= 1.0) return logistic_phi(h);
  return eta * logistic_phi(h) + (1.0 - eta) * logistic_phi(-h) -
         binary_entropy(eta);
}

double quantile(std::vector<double> v, double p) {
  if (v.empty()) return kNan;
  std::sort(v.begin(), v.end());
  double pos = p * static_cast<double>(v.size() - 1);
  std::size_t lo = static_cast<std::size_t>(pos);
  double frac = pos - static_cast<double>(lo);
  if (lo + 1 >= v.size()) return v.back();
  return v[lo] * (1.0 - frac) + v[lo + 1] * frac;
}

void write_value(std::ostream& out, double v) {
  if (std::isfinite(v)) {
    out << v;
  } else {
    out << "nan";
  }
}

}  // namespace

proc::Dataset ProcessSpec::simulate(std::size_t n, std::uint64_t seed) const {
  switch (kind) {
    case Kind::ar: {
      proc::ARSpec s;
      s.truth = truth;
      s.noise = noise;
      s.burn_in = burn_in;
      s.seed = seed;
      return proc::simulate_ar(s, n);
    }
    case Kind::gexpar:
      return proc::simulate_gexpar(gexpar, n, noise, seed, burn_in);
    case Kind::binary: {
      proc::BinaryARSpec s;
      s.f = truth;
      s.g_offset = g_offset;
      s.burn_in = burn_in;
      s.recode01 = recode01;
      s.seed = seed;
      return proc::simulate_binary(s, n);
    }
  }
  throw ConfigError("unknown process kind");
}

double ProcessSpec::eta(const double* window) const {
  if (kind != Kind::binary) {
    throw ConfigError("eta is only defined for binary processes");
  }
  double v;
  if (recode01) {
    std::vector<double> w(truth.d);
    for (std::size_t i = 0; i < truth.d; ++i) w[i] = 2.0 * window[i] - 1.0;
    v = truth(w.data());
  } else {
    v = truth(window);
  }
  return std::clamp(0.5 * (1.0 + v + g_offset), 0.0, 1.0);
}

ProcessSpec ProcessSpec::parse(const nlohmann::json& cfg) {
  ProcessSpec s;
  try {
    std::string kind = cfg.value("kind", std::string("ar"));
    s.burn_in = cfg.value("burn_in", 1000LL);
    if (kind == "ar") {
      s.kind = Kind::ar;
      s.truth = proc::make_target(cfg.at("target"));
      if (cfg.contains("noise")) s.noise = proc::NoiseSpec::parse(cfg.at("noise"));
    } else if (kind == "gexpar") {
      s.kind = Kind::gexpar;
      s.gexpar.c0 = cfg.value("c0", 0.0);
      s.gexpar.c = cfg.at("c").get<std::vector<double>>();
      s.gexpar.pi = cfg.at("pi").get<std::vector<double>>();
      s.gexpar.lambda = cfg.value("lambda", -1.0);
      s.gexpar.z = cfg.value("z", std::vector<double>(s.gexpar.c.size(), 0.0));
      s.gexpar.allow_lambda_positive =
          cfg.value("allow_lambda_positive", false);
      s.truth = proc::make_gexpar_target(s.gexpar);
      if (cfg.contains("noise")) s.noise = proc::NoiseSpec::parse(cfg.at("noise"));
    } else if (kind == "binary") {
      s.kind = Kind::binary;
      s.truth = proc::make_target(cfg.at("f"));
      s.g_offset = cfg.value("g_offset", 0.0);
      s.recode01 = cfg.value("recode01", false);
    } else {
      throw ConfigError("unknown process kind '" + kind + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad process config: ") + e.what());
  }
  return s;
}

double estimate_l2_error(const Model& model, const proc::Target& truth,
                         const ProcessSpec& process, std::size_t m_test,
                         std::uint64_t seed) {
  if (m_test == 0) throw ConfigError("m_test must be >= 1");
  proc::Dataset held = process.simulate(m_test, seed);
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < held.size(); ++i) {
    const double* w = held.row(i);
    bool inside = true;
    for (std::size_t j = 0; j < held.d; ++j) {
      if (w[j] < 0.0 || w[j] > 1.0) {
        inside = false;
        break;
      }
    }
    if (!inside) continue;
    double diff = model.predict(w) - truth(w);
    acc += diff * diff;
    ++count;
  }
  if (count == 0) {
    throw NumericError("no held-out windows landed in the unit cube");
  }
  return acc / static_cast<double>(count);
}

double estimate_loss_excess(const Model& model, const proc::Target& truth,
                            const LossSpec& loss, const ProcessSpec& process,
                            std::size_t m_test, std::uint64_t seed) {
  if (m_test == 0) throw ConfigError("m_test must be >= 1");
  proc::Dataset held = process.simulate(m_test, seed);
  double acc = 0.0;
  for (std::size_t i = 0; i < held.size(); ++i) {
    const double* w = held.row(i);
    acc += loss.value(model.predict(w), held.y[i]) -
           loss.value(truth(w), held.y[i]);
  }
  return acc / static_cast<double>(held.size());
}

double estimate_excess_risk_classification(const Model& model,
                                           const ProcessSpec& process,
                                           std::size_t m_test,
                                           std::uint64_t seed) {
  if (process.kind != ProcessSpec::Kind::binary) {
    throw ConfigError("classification excess needs a binary process");
  }
  proc::Dataset held = process.simulate(m_test, seed);
  double acc = 0.0;
  for (std::size_t i = 0; i < held.size(); ++i) {
    const double* w = held.row(i);
    acc += conditional_excess(process.eta(w), model.predict(w));
  }
  return acc / static_cast<double>(held.size());
}

double best_constant_excess(const ProcessSpec& process, std::size_t m_test,
                            std::uint64_t seed) {
  if (process.kind != ProcessSpec::Kind::binary) {
    throw ConfigError("classification excess needs a binary process");
  }
  proc::Dataset held = process.simulate(m_test, seed);
  std::vector<double> etas(held.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < held.size(); ++i) {
    etas[i] = process.eta(held.row(i));
    mean += etas[i];
  }
  mean /= static_cast<double>(held.size());
  mean = std::clamp(mean, 1e-12, 1.0 - 1e-12);
  double c = std::log(mean / (1.0 - mean));
  double acc = 0.0;
  for (double e : etas) acc += conditional_excess(e, c);
  return acc / static_cast<double>(etas.size());
}

SlopeFit fit_slope(const std::vector<std::pair<double, double>>& points) {
  SlopeFit f;
  std::vector<double> xs, ys;
  for (const auto& [n, err] : points) {
    if (!(n > 0.0) || !(err > 0.0) || !std::isfinite(err) ||
        !std::isfinite(n)) {
      ++f.dropped;
      continue;
    }
    xs.push_back(std::log(n));
    ys.push_back(std::log(err));
  }
  f.used = xs.size();
  if (f.used < 2) {
    f.slope = kNan;
    f.intercept = kNan;
    f.stderr_slope = kNan;
    return f;
  }
  double k = static_cast<double>(f.used);
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= k;
  my /= k;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) {
    f.slope = kNan;
    f.intercept = kNan;
    f.stderr_slope = kNan;
    return f;
  }
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double r = ys[i] - (f.intercept + f.slope * xs[i]);
    ssr += r * r;
  }
  f.stderr_slope = f.used > 2 ? std::sqrt(ssr / (k - 2.0) / sxx) : 0.0;
  f.ok = true;
  return f;
}

double bootstrap_slope_stderr(
    const std::vector<std::vector<double>>& errors_by_n,
    const std::vector<double>& n_values, std::size_t b, std::uint64_t seed) {
  if (errors_by_n.size() != n_values.size()) {
    throw ConfigError("bootstrap: grids do not match");
  }
  Rng rng(seed);
  std::vector<double> slopes;
  std::vector<double> sample;
  for (std::size_t it = 0; it < b; ++it) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < errors_by_n.size(); ++i) {
      const auto& errs = errors_by_n[i];
      if (errs.empty()) continue;
      sample.resize(errs.size());
      for (std::size_t j = 0; j < errs.size(); ++j) {
        sample[j] = errs[rng.below(errs.size())];
      }
      pts.emplace_back(n_values[i], quantile(sample, 0.5));
    }
    SlopeFit f = fit_slope(pts);
    if (f.ok) slopes.push_back(f.slope);
  }
  if (slopes.size() < 2) return kNan;
  double m = 0.0;
  for (double s : slopes) m += s;
  m /= static_cast<double>(slopes.size());
  double v = 0.0;
  for (double s : slopes) v += (s - m) * (s - m);
  return std::sqrt(v / static_cast<double>(slopes.size() - 1));
}

void SweepConfig::validate() const {
  if (n_grid.empty()) throw ConfigError("sweep: n_grid must be nonempty");
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    if (n_grid[i] < 2) throw ConfigError("sweep: n values must be >= 2");
    if (i > 0 && n_grid[i] <= n_grid[i - 1]) {
      throw ConfigError("sweep: n_grid must be strictly increasing");
    }
  }
  if (replications == 0) throw ConfigError("sweep: replications must be >= 1");
  if (m_test == 0) throw ConfigError("sweep: m_test must be >= 1");
  if (classification && process.kind != ProcessSpec::Kind::binary) {
    throw ConfigError("sweep: classification needs a binary process");
  }
  if (process.kind == ProcessSpec::Kind::binary && !classification) {
    throw ConfigError("sweep: binary processes are classification sweeps");
  }
  for (const auto& [ni, rep] : poison) {
    if (ni >= n_grid.size() || rep >= replications) {
      throw ConfigError("sweep: poison cell out of range");
    }
  }
  train.validate();
}

SweepConfig SweepConfig::parse(const nlohmann::json& cfg) {
  SweepConfig s;
  try {
    s.process = ProcessSpec::parse(cfg.at("process"));
    s.loss = LossSpec::parse(cfg.value("loss", std::string("huber:10")));
    std::string regime = cfg.value("regime", std::string("exponential"));
    if (regime == "exponential") {
      s.regime = Regime::exponential;
    } else if (regime == "subexponential") {
      s.regime = Regime::subexponential;
    } else {
      throw ConfigError("unknown regime '" + regime + "'");
    }
    s.mix_c = cfg.value("mix_c", 1.0);
    s.mix_gamma = cfg.value("mix_gamma", 1.0);
    s.n_grid = cfg.at("n_grid").get<std::vector<long long>>();
    s.replications = cfg.value("replications", std::size_t{1});
    s.m_test = cfg.value("m_test", std::size_t{10000});
    s.classification = cfg.value("classification",
                                 s.process.kind == ProcessSpec::Kind::binary);
    s.kappa = cfg.value("kappa", 2.0);
    s.s = cfg.value("s", 2.0);
    if (cfg.contains("composition")) {
      const auto& c = cfg.at("composition");
      auto dims = c.at("dims").get<std::vector<std::size_t>>();
      auto t = c.at("t").get<std::vector<std::size_t>>();
      auto beta = c.at("beta").get<std::vector<double>>();
      s.composition =
          theory::effective_smoothness(dims.size() - 1, dims, t, beta);
    }
    if (cfg.contains("constants")) {
      const auto& c = cfg.at("constants");
      s.constants.c_L = c.value("c_L", 1.0);
      s.constants.c_N = c.value("c_N", 1.0);
      s.constants.c_B = c.value("c_B", 1.0);
      s.constants.F = c.value("F", 0.0);
      s.constants.K = c.value("K", std::fmax(s.process.truth.K, 1.0));
      s.constants.k_ell = c.value("k_ell", s.loss.lipschitz());
      s.constants.nu3 = c.value("nu3", 5.0);
      s.constants.lambda_scale = c.value("lambda_scale", 1.0);
      s.constants.family = PenaltySpec::parse_family(
          c.value("family", std::string("clipped_l1")));
      s.constants.penalty_shape = c.value("shape", 0.0);
    } else {
      s.constants.K = std::fmax(s.process.truth.K, 1.0);
      s.constants.k_ell = s.loss.lipschitz();
    }
    if (cfg.contains("train")) {
      const auto& t = cfg.at("train");
      s.train.epochs = t.value("epochs", std::size_t{200});
      s.train.batch_size = t.value("batch_size", std::size_t{0});
      s.train.step = t.value("step", 0.1);
      s.train.restarts = t.value("restarts", std::size_t{3});
    }
    s.seed = cfg.value("seed", std::uint64_t{1});
    if (cfg.contains("poison")) {
      for (const auto& p : cfg.at("poison")) {
        s.poison.emplace_back(p.at(0).get<std::size_t>(),
                              p.at(1).get<std::size_t>());
      }
    }
    if (cfg.contains("synthetic")) {
      const auto& sy = cfg.at("synthetic");
      s.synthetic = true;
      s.synthetic_coeff = sy.value("coeff", 1.0);
      s.synthetic_exponent = sy.value("exponent", -0.8);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad sweep config: ") + e.what());
  }
  s.validate();
  return s;
}

namespace {

CellResult run_cell(const SweepConfig& cfg, std::size_t job) {
  CellResult c;
  c.n_index = job / cfg.replications;
  c.rep = job % cfg.replications;
  c.n = cfg.n_grid[c.n_index];
  c.seed = seed_split(seed_split(cfg.seed, c.n_index), c.rep);
  c.error = kNan;
  c.loss_excess = kNan;
  try {
    for (const auto& [ni, rep] : cfg.poison) {
      if (ni == c.n_index && rep == c.rep) {
        throw NumericError("forced divergence (poisoned cell)");
      }
    }
    if (cfg.synthetic) {
      c.error = cfg.synthetic_coeff *
                std::pow(static_cast<double>(c.n), cfg.synthetic_exponent);
      c.m = c.n;
      c.ok = true;
      return c;
    }

    theory::Calibration cal =
        cfg.composition.dims.empty()
            ? theory::calibrate_holder(cfg.regime, c.n, cfg.mix_c,
                                       cfg.mix_gamma, cfg.kappa, cfg.s,
                                       cfg.process.dim(), cfg.constants)
            : theory::calibrate_composition(cfg.regime, c.n, cfg.mix_c,
                                            cfg.mix_gamma, cfg.composition,
                                            cfg.constants);
    c.m = cal.m;
    c.L = cal.arch.depth();
    c.N = cal.arch.max_width();
    c.B = cal.arch.B;
    c.lambda = cal.penalty.lambda;
    c.tau = cal.penalty.tau;

    proc::Dataset data =
        cfg.process.simulate(static_cast<std::size_t>(c.n),
                             seed_split(c.seed, 1));
    train::TrainConfig tc = cfg.train;
    tc.seed = seed_split(c.seed, 2);
    train::FitResult fitres = train::fit(cal.arch, cal.penalty, cfg.loss,
                                         data, tc);
    c.objective = fitres.objective;
    c.l0 = sparsity(fitres.model.theta);

    std::uint64_t test_seed = seed_split(c.seed, 3);
    if (cfg.classification) {
      c.error = estimate_excess_risk_classification(fitres.model, cfg.process,
                                                    cfg.m_test, test_seed);
    } else {
      c.error = estimate_l2_error(fitres.model, cfg.process.truth, cfg.process,
                                  cfg.m_test, test_seed);
      c.loss_excess =
          estimate_loss_excess(fitres.model, cfg.process.truth, cfg.loss,
                               cfg.process, cfg.m_test, seed_split(c.seed, 4));
    }
    c.ok = true;
  } catch (const std::exception& e) {
    c.ok = false;
    c.message = e.what();
    c.error = kNan;
  }
  return c;
}

}  // namespace

SweepResult rate_sweep(const SweepConfig& cfg, std::size_t workers) {
  cfg.validate();
  std::size_t jobs = cfg.n_grid.size() * cfg.replications;
  SweepResult res;
  res.master_seed = cfg.seed;
  res.cells.resize(jobs);

  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (;;) {
      std::size_t job = next.fetch_add(1);
      if (job >= jobs) break;
      res.cells[job] = run_cell(cfg, job);
    }
  };
  workers = std::max<std::size_t>(1, std::min(workers, jobs));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  std::vector<std::vector<double>> errors_by_n(cfg.n_grid.size());
  for (std::size_t i = 0; i < cfg.n_grid.size(); ++i) {
    NStats st;
    st.n = cfg.n_grid[i];
    std::vector<double>& errs = errors_by_n[i];
    for (std::size_t r = 0; r < cfg.replications; ++r) {
      const CellResult& c = res.cells[i * cfg.replications + r];
      if (c.ok) {
        errs.push_back(c.error);
        ++st.ok_count;
      } else {
        ++st.failed;
      }
    }
    st.median = quantile(errs, 0.5);
    st.q25 = quantile(errs, 0.25);
    st.q75 = quantile(errs, 0.75);
    res.stats.push_back(st);
  }

  std::vector<std::pair<double, double>> pts;
  std::vector<double> n_values;
  for (const NStats& st : res.stats) {
    pts.emplace_back(static_cast<double>(st.n), st.median);
    n_values.push_back(static_cast<double>(st.n));
  }
  res.slope = fit_slope(pts);
  res.bootstrap_stderr = bootstrap_slope_stderr(errors_by_n, n_values, 200,
                                                seed_split(cfg.seed, 9999));
  return res;
}

void SweepResult::save_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  out << "n,rep,seed,status,error,loss_excess,l0,objective,m,L,N,B,lambda,tau\n"
      << std::setprecision(17);
  for (const CellResult& c : cells) {
    out << c.n << "," << c.rep << "," << c.seed << ","
        << (c.ok ? "ok" : "failed") << ",";
    write_value(out, c.error);
    out << ",";
    write_value(out, c.loss_excess);
    out << "," << c.l0 << ",";
    write_value(out, c.objective);
    out << "," << c.m << "," << c.L << "," << c.N << ",";
    write_value(out, c.B);
    out << ",";
    write_value(out, c.lambda);
    out << ",";
    write_value(out, c.tau);
    out << "\n";
  }
  if (!out) throw ConfigError("write to '" + path + "' failed");
}

std::string SweepResult::to_json() const {
  nlohmann::ordered_json j;
  j["version"] = kVersion;
  j["revision"] = kRevision;
  j["rng"] = kRngName;
  j["master_seed"] = master_seed;
  j["cells"] = cells.size();
  nlohmann::ordered_json failures = nlohmann::ordered_json::array();
  for (const CellResult& c : cells) {
    if (!c.ok) {
      failures.push_back({{"n", c.n}, {"rep", c.rep}, {"message", c.message}});
    }
  }
  j["failures"] = failures;
  nlohmann::ordered_json stats_j = nlohmann::ordered_json::array();
  for (const NStats& st : stats) {
    nlohmann::ordered_json sj;
    sj["n"] = st.n;
    sj["median"] = std::isfinite(st.median)
                       ? nlohmann::ordered_json(st.median)
                       : nlohmann::ordered_json(nullptr);
    sj["q25"] = std::isfinite(st.q25) ? nlohmann::ordered_json(st.q25)
                                      : nlohmann::ordered_json(nullptr);
    sj["q75"] = std::isfinite(st.q75) ? nlohmann::ordered_json(st.q75)
                                      : nlohmann::ordered_json(nullptr);
    sj["ok"] = st.ok_count;
    sj["failed"] = st.failed;
    stats_j.push_back(sj);
  }
  j["stats"] = stats_j;
  nlohmann::ordered_json slope_j;
  if (slope.ok) {
    slope_j["value"] = slope.slope;
    slope_j["intercept"] = slope.intercept;
    slope_j["stderr"] = slope.stderr_slope;
  } else {
    slope_j["value"] = nullptr;
    slope_j["marker"] = "insufficient-points";
  }
  slope_j["points_used"] = slope.used;
  slope_j["points_dropped"] = slope.dropped;
  j["slope"] = slope_j;
  j["bootstrap_stderr"] = std::isfinite(bootstrap_stderr)
                              ? nlohmann::ordered_json(bootstrap_stderr)
                              : nlohmann::ordered_json(nullptr);
  return j.dump(2) + "\n";
}

void A4Config::validate() const {
  if (shifts.empty()) throw ConfigError("probe: shifts must be nonempty");
  for (double a : shifts) {
    if (!(a > 0.0) || !(a <= 0.3)) {
      throw ConfigError("probe: shifts must lie in (0, 0.3]");
    }
  }
  if (draws < 100) throw ConfigError("probe: draws must be >= 100");
  bool binary = process.kind == ProcessSpec::Kind::binary;
  bool logistic = loss.kind == LossKind::logistic;
  if (binary != logistic) {
    throw ConfigError("probe: logistic loss goes with a binary process");
  }
}

A4Config A4Config::parse(const nlohmann::json& cfg) {
  A4Config c;
  try {
    c.loss = LossSpec::parse(cfg.value("loss", std::string("huber:10")));
    c.process = ProcessSpec::parse(cfg.at("process"));
    if (cfg.contains("shifts")) {
      c.shifts = cfg.at("shifts").get<std::vector<double>>();
    }
    c.draws = cfg.value("draws", std::size_t{100000});
    c.seed = cfg.value("seed", std::uint64_t{1});
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad probe config: ") + e.what());
  }
  c.validate();
  return c;
}

A4Result a4_probe(const A4Config& cfg) {
  cfg.validate();
  A4Result res;

  if (cfg.process.kind == ProcessSpec::Kind::binary) {
    // closed-form conditional excess at h* +/- a, averaged over held-out
    // windows; no label noise enters the estimate
    proc::Dataset held = cfg.process.simulate(cfg.draws,
                                              seed_split(cfg.seed, 1));
    std::vector<double> etas(held.size());
    for (std::size_t i = 0; i < held.size(); ++i) {
      etas[i] = cfg.process.eta(held.row(i));
    }
    for (double a : cfg.shifts) {
      double acc = 0.0;
      std::size_t used = 0;
      for (double e : etas) {
        if (e <= 0.0 || e >= 1.0) continue;  // h* infinite, excess -> 0
        double h = std::log(e / (1.0 - e));
        acc += 0.5 * (conditional_excess(e, h + a) +
                      conditional_excess(e, h - a));
        ++used;
      }
      if (used == 0) {
        throw NumericError("probe failure: eta degenerate on every window");
      }
      res.points.emplace_back(a, acc / static_cast<double>(used));
    }
  } else {
    // constant shifts leave the window marginal out of the excess; Monte
    // Carlo over antithetic noise pairs at +/- each shift
    Rng rng(seed_split(cfg.seed, 2));
    std::vector<double> xi(cfg.draws);
    for (std::size_t i = 0; i < cfg.draws; ++i) {
      double z = cfg.process.noise.kind == proc::NoiseSpec::Kind::gaussian
                     ? rng.normal()
                     : rng.laplace();
      xi[i] = cfg.process.noise.scale * z;
    }
    auto rho = [&](double r) { return cfg.loss.value(0.0, r); };
    for (double a : cfg.shifts) {
      double acc = 0.0;
      for (double z : xi) {
        acc += 0.25 * (rho(z - a) + rho(-z - a) + rho(z + a) + rho(-z + a)) -
               0.5 * (rho(z) + rho(-z));
      }
      res.points.emplace_back(a, acc / static_cast<double>(cfg.draws));
    }
  }

  std::vector<std::pair<double, double>> kept;
  for (const auto& p : res.points) {
    if (p.second > 0.0 && std::isfinite(p.second)) kept.push_back(p);
  }
  res.dropped = res.points.size() - kept.size();
  if (res.dropped * 2 > res.points.size()) {
    throw NumericError("probe failure: most excess estimates were "
                       "nonpositive");
  }
  res.fit = fit_slope(kept);
  if (!res.fit.ok) {
    throw NumericError("probe failure: not enough usable shifts");
  }
  res.kappa_hat = res.fit.slope;
  return res;
}

std::string A4Result::to_json() const {
  nlohmann::ordered_json j;
  j["version"] = kVersion;
  j["revision"] = kRevision;
  j["rng"] = kRngName;
  j["kappa_hat"] = kappa_hat;
  nlohmann::ordered_json pts = nlohmann::ordered_json::array();
  for (const auto& [a, e] : points) {
    pts.push_back({{"shift", a}, {"excess", e}});
  }
  j["points"] = pts;
  j["dropped"] = dropped;
  j["fit"] = {{"slope", fit.slope},
              {"intercept", fit.intercept},
              {"stderr", fit.stderr_slope},
              {"points_used", fit.used}};
  return j.dump(2) + "\n";
}

}  // namespace spdnn::harness
