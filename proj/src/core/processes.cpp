#include "core/processes.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include "core/errors.hpp"
#include "core/rng.hpp"

namespace spdnn::proc {

namespace {

constexpr double kTwoPi = 6.283185307179586;

double choose(std::size_t n, std::size_t k) {
  double v = 1.0;
  for (std::size_t i = 0; i < k; ++i) v = v * (n - i) / (i + 1);
  return v;
}

double window_mean(const double* x, std::size_t d) {
  double s = 0.0;
  for (std::size_t i = 0; i < d; ++i) s += x[i];
  return s / static_cast<double>(d);
}

}  // namespace

Target make_constant(std::size_t d, double value) {
  if (d == 0) throw ConfigError("target needs d >= 1");
  Target t;
  t.name = "constant";
  t.d = d;
  t.K = std::fabs(value);
  t.fn = [value](const double*) { return value; };
  return t;
}

Target make_linear(std::size_t d, std::vector<double> coeffs,
                   double intercept) {
  if (d == 0) throw ConfigError("target needs d >= 1");
  if (coeffs.size() != d) throw ConfigError("linear target needs d coeffs");
  Target t;
  t.name = "linear";
  t.d = d;
  t.K = std::fabs(intercept);
  for (double c : coeffs) t.K += std::fabs(c);
  t.fn = [d, coeffs = std::move(coeffs), intercept](const double* x) {
    double s = intercept;
    for (std::size_t i = 0; i < d; ++i) s += coeffs[i] * x[i];
    return s;
  };
  return t;
}

double sine_holder_multiplier(double s, std::size_t d) {
  if (!(s > 0.0) || d == 0) throw ConfigError("sine target needs s > 0, d >= 1");
  int fl = static_cast<int>(std::floor(s));
  bool integral = std::floor(s) == s;
  double rate = kTwoPi / static_cast<double>(d);
  double m = 0.0;
  int sup_top = integral ? fl - 1 : fl;
  for (int k = 0; k <= sup_top; ++k) {
    m += choose(d + k - 1, k) * std::pow(rate, k);
  }
  double base = std::pow(rate, fl);
  double quot;
  if (integral) {
    quot = 2.0 * base;
  } else {
    double frac = s - fl;
    double lip = std::sqrt(static_cast<double>(d)) * base * rate;
    quot = std::pow(lip, frac) * std::pow(2.0 * base, 1.0 - frac);
  }
  m += choose(d + fl - 1, fl) * quot;
  return m;
}

Target make_holder_sine(std::size_t d, double K, double s) {
  if (!(K > 0.0)) throw ConfigError("target needs K > 0");
  double a = K / sine_holder_multiplier(s, d);
  Target t;
  t.name = "holder-sine";
  t.d = d;
  t.K = a;
  t.fn = [d, a](const double* x) {
    return a * std::sin(kTwoPi * window_mean(x, d));
  };
  return t;
}

Target make_holder_quadratic(std::size_t d, double K) {
  if (d == 0) throw ConfigError("target needs d >= 1");
  if (!(K > 0.0)) throw ConfigError("target needs K > 0");
  double a = 0.8 * K;
  Target t;
  t.name = "holder-quadratic";
  t.d = d;
  t.K = 0.25 * a;
  t.fn = [d, a](const double* x) {
    double u = std::clamp(window_mean(x, d), 0.0, 1.0) - 0.5;
    return a * u * u;
  };
  return t;
}

Target make_composition(const std::vector<std::size_t>& dims,
                        const std::vector<std::size_t>& t,
                        const std::vector<double>& beta, double K) {
  if (dims.empty() || t.size() != dims.size() || beta.size() != dims.size()) {
    throw ConfigError("composition target needs matching dims, t, beta");
  }
  if (!(K > 0.0)) throw ConfigError("target needs K > 0");
  std::size_t q = dims.size() - 1;
  std::vector<double> amp(q + 1);
  for (std::size_t i = 0; i <= q; ++i) {
    if (dims[i] == 0 || t[i] == 0 || t[i] > dims[i]) {
      throw ConfigError("composition target needs 1 <= t_i <= d_i");
    }
    if (!(beta[i] > 0.0)) throw ConfigError("composition beta_i must be > 0");
    amp[i] = std::fmin(0.45, K / sine_holder_multiplier(beta[i], t[i]));
  }

  Target tg;
  tg.name = "composition";
  tg.d = dims[0];
  tg.K = 0.5 + amp[q];
  tg.fn = [dims, t, amp, q](const double* x) {
    std::vector<double> cur(x, x + dims[0]);
    for (std::size_t i = 0; i <= q; ++i) {
      std::size_t out_dim = i < q ? dims[i + 1] : 1;
      std::vector<double> next(out_dim);
      for (std::size_t j = 0; j < out_dim; ++j) {
        double u = 0.0;
        for (std::size_t k = 0; k < t[i]; ++k) {
          u += cur[(j + k) % dims[i]];
        }
        u /= static_cast<double>(t[i]);
        next[j] = 0.5 + amp[i] * std::sin(kTwoPi * u + 0.7 * j);
      }
      cur = std::move(next);
    }
    return cur[0];
  };
  return tg;
}

void GexparParams::validate() const {
  std::size_t d = c.size();
  if (d == 0) throw ConfigError("exponential-AR needs order >= 1");
  if (pi.size() != d || z.size() != d) {
    throw ConfigError("exponential-AR needs c, pi, z of equal length");
  }
  if (lambda > 0.0 && !allow_lambda_positive) {
    throw ConfigError(
        "exponential-AR with lambda > 0 is unbounded; set "
        "allow_lambda_positive to override");
  }
  for (double v : c) {
    if (!std::isfinite(v)) throw ConfigError("exponential-AR c not finite");
  }
  for (double v : pi) {
    if (!std::isfinite(v)) throw ConfigError("exponential-AR pi not finite");
  }
  for (double v : z) {
    if (!std::isfinite(v)) throw ConfigError("exponential-AR z not finite");
  }
  if (!std::isfinite(c0) || !std::isfinite(lambda)) {
    throw ConfigError("exponential-AR parameters not finite");
  }
}

double gexpar_mean(const GexparParams& p, const double* x) {
  double s = p.c0;
  for (std::size_t i = 0; i < p.c.size(); ++i) {
    double dz = x[i] - p.z[i];
    s += (p.c[i] + p.pi[i] * std::exp(p.lambda * dz * dz)) * x[i];
  }
  return s;
}

Target make_gexpar_target(const GexparParams& p) {
  p.validate();
  Target t;
  t.name = "gexpar";
  t.d = p.order();
  t.K = std::fabs(p.c0);
  for (std::size_t i = 0; i < p.c.size(); ++i) {
    t.K += std::fabs(p.c[i]) + std::fabs(p.pi[i]);
  }
  t.fn = [p](const double* x) { return gexpar_mean(p, x); };
  return t;
}

StabilityReport gexpar_stability(const GexparParams& p) {
  p.validate();
  std::size_t d = p.order();
  StabilityReport rep;
  rep.root_moduli.assign(d, 0.0);

  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(d, d);
  bool all_zero = true;
  for (std::size_t i = 0; i < d; ++i) {
    double phi = std::fabs(p.c[i]) + std::fabs(p.pi[i]);
    comp(0, static_cast<Eigen::Index>(i)) = phi;
    if (phi != 0.0) all_zero = false;
  }
  for (std::size_t i = 1; i < d; ++i) {
    comp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i - 1)) = 1.0;
  }
  if (!all_zero) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
    for (std::size_t i = 0; i < d; ++i) {
      rep.root_moduli[i] = std::abs(es.eigenvalues()(static_cast<Eigen::Index>(i)));
    }
    std::sort(rep.root_moduli.rbegin(), rep.root_moduli.rend());
  }
  rep.radius = rep.root_moduli.empty() ? 0.0 : rep.root_moduli.front();
  rep.stable = rep.radius < 1.0 - 1e-12;
  return rep;
}

Target make_target(const nlohmann::json& cfg) {
  try {
    std::string kind = cfg.at("kind").get<std::string>();
    if (kind == "constant") {
      return make_constant(cfg.value("d", std::size_t{1}),
                           cfg.at("value").get<double>());
    }
    if (kind == "linear") {
      auto coeffs = cfg.at("coeffs").get<std::vector<double>>();
      return make_linear(cfg.value("d", coeffs.size()), coeffs,
                         cfg.value("intercept", 0.0));
    }
    if (kind == "holder-sine") {
      return make_holder_sine(cfg.value("d", std::size_t{1}),
                              cfg.value("K", 1.0), cfg.value("s", 2.0));
    }
    if (kind == "holder-quadratic") {
      return make_holder_quadratic(cfg.value("d", std::size_t{1}),
                                   cfg.value("K", 1.0));
    }
    if (kind == "composition") {
      return make_composition(cfg.at("dims").get<std::vector<std::size_t>>(),
                              cfg.at("t").get<std::vector<std::size_t>>(),
                              cfg.at("beta").get<std::vector<double>>(),
                              cfg.value("K", 1.0));
    }
    if (kind == "gexpar") {
      GexparParams p;
      p.c0 = cfg.value("c0", 0.0);
      p.c = cfg.at("c").get<std::vector<double>>();
      p.pi = cfg.at("pi").get<std::vector<double>>();
      p.lambda = cfg.value("lambda", -1.0);
      p.z = cfg.value("z", std::vector<double>(p.c.size(), 0.0));
      p.allow_lambda_positive = cfg.value("allow_lambda_positive", false);
      return make_gexpar_target(p);
    }
    throw ConfigError("unknown target kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad target config: ") + e.what());
  }
}

NoiseSpec NoiseSpec::parse(const nlohmann::json& cfg) {
  NoiseSpec n;
  try {
    std::string kind = cfg.value("kind", std::string("gaussian"));
    if (kind == "gaussian") {
      n.kind = Kind::gaussian;
    } else if (kind == "laplace") {
      n.kind = Kind::laplace;
    } else {
      throw ConfigError("unknown noise kind '" + kind + "'");
    }
    n.scale = cfg.value("scale", 1.0);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad noise config: ") + e.what());
  }
  if (!(n.scale >= 0.0) || !std::isfinite(n.scale)) {
    throw ConfigError("noise scale must be finite and >= 0");
  }
  return n;
}

void Dataset::save_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  out << "t,y";
  for (std::size_t j = 1; j <= d; ++j) out << ",x_" << j;
  out << "\n";
  out << std::setprecision(17);
  for (std::size_t i = 0; i < size(); ++i) {
    out << t[i] << "," << y[i];
    for (std::size_t j = 0; j < d; ++j) out << "," << row(i)[j];
    out << "\n";
  }
  if (!out) throw ConfigError("write to '" + path + "' failed");
}

Dataset Dataset::load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty dataset file");

  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
  };

  auto header = split(line);
  if (header.size() < 3 || header[0] != "t" || header[1] != "y") {
    throw ConfigError("dataset header must be t,y,x_1,...");
  }
  Dataset ds;
  ds.d = header.size() - 2;

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != header.size()) {
      throw ConfigError("dataset row " + std::to_string(line_no) +
                        " has wrong column count");
    }
    try {
      ds.t.push_back(std::stoll(cells[0]));
      ds.y.push_back(std::stod(cells[1]));
      for (std::size_t j = 0; j < ds.d; ++j) {
        ds.x.push_back(std::stod(cells[2 + j]));
      }
    } catch (const std::exception&) {
      throw ConfigError("dataset row " + std::to_string(line_no) +
                        " is not numeric");
    }
  }
  return ds;
}

namespace {

double draw_noise(const NoiseSpec& noise, Rng& rng) {
  switch (noise.kind) {
    case NoiseSpec::Kind::gaussian:
      return noise.scale * rng.normal();
    case NoiseSpec::Kind::laplace:
      return noise.scale * rng.laplace();
  }
  return 0.0;
}

Dataset iterate_ar(const std::function<double(const double*)>& mean,
                   std::size_t d, const NoiseSpec& noise, long long burn_in,
                   std::uint64_t seed, std::size_t n) {
  if (d == 0) throw ConfigError("simulate: lag order must be >= 1");
  if (burn_in < 0) throw ConfigError("simulate: burn_in must be >= 0");
  Rng rng(seed);
  std::vector<double> lags(d, 0.0);  // lags[0] = Y_{t-1}
  Dataset ds;
  ds.d = d;
  ds.t.reserve(n);
  ds.y.reserve(n);
  ds.x.reserve(n * d);
  long long total = burn_in + static_cast<long long>(n);
  for (long long step = 0; step < total; ++step) {
    double yv = mean(lags.data()) + draw_noise(noise, rng);
    if (!std::isfinite(yv) || std::fabs(yv) > 1e12) {
      throw NumericError("simulated path exploded at step " +
                         std::to_string(step));
    }
    if (step >= burn_in) {
      ds.t.push_back(step - burn_in);
      ds.x.insert(ds.x.end(), lags.begin(), lags.end());
      ds.y.push_back(yv);
    }
    for (std::size_t i = d; i-- > 1;) lags[i] = lags[i - 1];
    lags[0] = yv;
  }
  return ds;
}

}  // namespace

Dataset simulate_ar(const ARSpec& spec, std::size_t n) {
  if (!spec.truth.fn) throw ConfigError("simulate: truth function missing");
  return iterate_ar(spec.truth.fn, spec.truth.d, spec.noise, spec.burn_in,
                    spec.seed, n);
}

Dataset simulate_gexpar(const GexparParams& params, std::size_t n,
                        const NoiseSpec& noise, std::uint64_t seed,
                        long long burn_in) {
  StabilityReport rep = gexpar_stability(params);
  if (!rep.stable) {
    throw ConfigError("exponential-AR parameters are unstable (radius " +
                      std::to_string(rep.radius) + ")");
  }
  return iterate_ar([&params](const double* x) { return gexpar_mean(params, x); },
                    params.order(), noise, burn_in, seed, n);
}

void BinaryARSpec::validate() const {
  if (!f.fn) throw ConfigError("binary simulate: f missing");
  std::size_t p = f.d;
  if (p == 0 || p > 20) {
    throw ConfigError("binary simulate: lag order must be in [1, 20]");
  }
  std::vector<double> w(p);
  std::uint64_t patterns = 1ULL << std::min<std::size_t>(p, 16);
  for (std::uint64_t b = 0; b < patterns; ++b) {
    for (std::size_t i = 0; i < p; ++i) {
      w[i] = (b >> (i % 16)) & 1U ? 1.0 : -1.0;
    }
    double v = f(w.data()) + g_offset;
    if (!(v >= -1.0 && v <= 1.0)) {
      throw ConfigError("binary simulate: f + g must lie in [-1, 1] on every "
                        "lag pattern");
    }
  }
}

Dataset simulate_binary(const BinaryARSpec& spec, std::size_t n) {
  spec.validate();
  std::size_t p = spec.f.d;
  Rng rng(spec.seed);
  std::vector<double> lags(p);
  for (std::size_t i = 0; i < p; ++i) {
    lags[i] = rng.uniform() < 0.5 ? -1.0 : 1.0;
  }
  Dataset ds;
  ds.d = p;
  ds.t.reserve(n);
  ds.y.reserve(n);
  ds.x.reserve(n * p);
  long long total = spec.burn_in + static_cast<long long>(n);
  for (long long step = 0; step < total; ++step) {
    double eta = std::clamp(0.5 * (1.0 + spec.f(lags.data()) + spec.g_offset),
                            0.0, 1.0);
    double yv = rng.uniform() < eta ? 1.0 : -1.0;
    if (step >= spec.burn_in) {
      ds.t.push_back(step - spec.burn_in);
      for (double v : lags) ds.x.push_back(spec.recode01 ? 0.5 * (v + 1.0) : v);
      ds.y.push_back(yv);
    }
    for (std::size_t i = p; i-- > 1;) lags[i] = lags[i - 1];
    lags[0] = yv;
  }
  return ds;
}

}  // namespace spdnn::proc
