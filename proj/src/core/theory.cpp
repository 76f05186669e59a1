#include "core/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "core/errors.hpp"
#include "core/rng.hpp"

namespace spdnn::theory {

namespace {

// ceil with a guard against upward floating-point noise at exact integers
long long ceil_ll(double x) {
  return static_cast<long long>(std::ceil(x - 1e-9));
}

}  // namespace

CompositionSmoothness effective_smoothness(std::size_t q,
                                           std::vector<std::size_t> dims,
                                           std::vector<std::size_t> t,
                                           std::vector<double> beta) {
  if (dims.size() != q + 1 || t.size() != q + 1 || beta.size() != q + 1) {
    throw ConfigError("composition smoothness needs q+1 dims, t, beta entries");
  }
  for (std::size_t i = 0; i <= q; ++i) {
    if (dims[i] == 0) throw ConfigError("composition dims must be >= 1");
    if (t[i] == 0 || t[i] > dims[i]) {
      throw ConfigError("composition t_i must satisfy 1 <= t_i <= d_i");
    }
    if (!(beta[i] > 0.0)) throw ConfigError("composition beta_i must be > 0");
  }
  CompositionSmoothness s;
  s.q = q;
  s.dims = std::move(dims);
  s.t = std::move(t);
  s.beta = std::move(beta);
  s.beta_star.resize(q + 1);
  for (std::size_t i = 0; i <= q; ++i) {
    double prod = 1.0;
    for (std::size_t j = i + 1; j <= q; ++j) prod *= std::fmin(s.beta[j], 1.0);
    s.beta_star[i] = s.beta[i] * prod;
  }
  s.i_star = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i <= q; ++i) {
    double r = s.beta_star[i] / (2.0 * s.beta_star[i] + s.t[i]);
    if (r < best - 1e-15) {  // ties keep the smallest i
      best = r;
      s.i_star = i;
    }
  }
  s.beta_ss = s.beta_star[s.i_star];
  s.t_star = s.t[s.i_star];
  s.kernel_power = 1.0;
  for (std::size_t j = s.i_star + 1; j <= s.q; ++j) {
    s.kernel_power *= std::fmin(s.beta[j], 1.0);
  }
  return s;
}

double phi(const CompositionSmoothness& s, double n) {
  if (!(n > 1.0)) throw ConfigError("phi needs n > 1");
  if (s.beta_star.size() != s.beta.size()) {
    throw ConfigError("phi needs derived smoothness (call effective_smoothness)");
  }
  double l2n = std::log2(n);
  double best = 0.0;
  for (std::size_t i = 0; i < s.beta_star.size(); ++i) {
    double r = 2.0 * s.beta_star[i] / (2.0 * s.beta_star[i] + s.t[i]);
    best = std::fmax(best, std::exp2(-r * l2n));
  }
  return best;
}

double phi_exponent(const CompositionSmoothness& s) {
  return 2.0 * s.beta_ss / (2.0 * s.beta_ss + s.t_star);
}

double holder_rate(double kappa, double s, double d, double n) {
  if (!(kappa > 0.0) || !(s > 0.0) || !(d > 0.0)) {
    throw ConfigError("holder_rate needs positive kappa, s, d");
  }
  if (!(n > 1.0)) throw ConfigError("holder_rate needs n > 1");
  double r = kappa * s / (kappa * s + d);
  return std::exp2(-r * std::log2(n));
}

Calibration calibrate_holder(Regime regime, long long n, double mix_c,
                             double mix_gamma, double kappa, double s,
                             std::size_t d, const CalibrationConstants& cc) {
  if (d == 0) throw ConfigError("calibrate: d must be >= 1");
  if (!(kappa > 0.0) || !(s > 0.0)) {
    throw ConfigError("calibrate: kappa and s must be > 0");
  }
  long long m = regime == Regime::subexponential ? n_alpha(n, mix_c, mix_gamma)
                                                 : n;
  if (m < 2) throw NumericError("calibrate: effective sample size < 2");
  double md = static_cast<double>(m);
  double dd = static_cast<double>(d);

  long long L = std::max<long long>(1, ceil_ll(cc.c_L * std::log(md)));
  long long N = std::max<long long>(
      1, ceil_ll(cc.c_N * std::pow(md, dd / (kappa * s + dd))));
  double B = cc.c_B * std::pow(md, 4.0 * (s + dd) / (kappa * s + dd));

  Calibration cal;
  cal.arch.widths.assign(static_cast<std::size_t>(L) + 2,
                         static_cast<std::size_t>(N));
  cal.arch.widths.front() = d;
  cal.arch.widths.back() = 1;
  cal.arch.B = std::fmax(B, 1.0);
  cal.arch.F = cc.F > 0.0 ? cc.F : std::fmax(cc.K, 1.0) + 1.0;
  cal.arch.validate();

  TuneResult t = tune(regime, n, mix_c, mix_gamma, cc.k_ell, cal.arch, cc.nu3,
                      cc.lambda_scale, cc.family, cc.penalty_shape);
  cal.penalty = t.penalty;
  cal.m = t.m;
  return cal;
}

Calibration calibrate_composition(Regime regime, long long n, double mix_c,
                                  double mix_gamma,
                                  const CompositionSmoothness& s,
                                  const CalibrationConstants& cc) {
  CompositionSmoothness sm = effective_smoothness(s.q, s.dims, s.t, s.beta);
  long long m = regime == Regime::subexponential ? n_alpha(n, mix_c, mix_gamma)
                                                 : n;
  if (m < 2) throw NumericError("calibrate: effective sample size < 2");
  double md = static_cast<double>(m);

  long long L = std::max<long long>(1, ceil_ll(cc.c_L * std::log(md)));
  long long N = std::max<long long>(1, ceil_ll(cc.c_N * md * phi(sm, md)));
  if (!(cc.c_B >= 1.0)) {
    throw ConfigError("composition calibration requires a fixed B >= 1");
  }

  Calibration cal;
  cal.arch.widths.assign(static_cast<std::size_t>(L) + 2,
                         static_cast<std::size_t>(N));
  cal.arch.widths.front() = sm.dims[0];
  cal.arch.widths.back() = 1;
  cal.arch.B = cc.c_B;
  cal.arch.F = cc.F > 0.0 ? cc.F : std::fmax(cc.K, 1.0) + 1.0;
  cal.arch.validate();

  TuneResult t = tune(regime, n, mix_c, mix_gamma, cc.k_ell, cal.arch, cc.nu3,
                      cc.lambda_scale, cc.family, cc.penalty_shape);
  cal.penalty = t.penalty;
  cal.m = t.m;
  return cal;
}

// ---- polynomial / kernel ---------------------------------------------------

double Poly::operator()(double x) const {
  double acc = 0.0;
  for (std::size_t k = c.size(); k-- > 0;) acc = acc * x + c[k];
  return acc;
}

Poly Poly::derivative() const {
  Poly d;
  if (c.size() <= 1) {
    d.c = {0.0};
    return d;
  }
  d.c.resize(c.size() - 1);
  for (std::size_t k = 1; k < c.size(); ++k) {
    d.c[k - 1] = c[k] * static_cast<double>(k);
  }
  return d;
}

double holder_norm_poly(const Poly& poly, double beta, int grid_points) {
  if (!(beta > 0.0)) throw ConfigError("holder norm needs beta > 0");
  int fl = static_cast<int>(std::floor(beta));
  bool integral = std::floor(beta) == beta;
  int sup_top = integral ? fl - 1 : fl;
  double frac = beta - fl;

  std::vector<Poly> derivs{poly};
  for (int k = 1; k <= fl; ++k) derivs.push_back(derivs.back().derivative());

  std::vector<double> xs(grid_points);
  for (int i = 0; i < grid_points; ++i) {
    xs[i] = static_cast<double>(i) / (grid_points - 1);
  }

  double norm = 0.0;
  for (int k = 0; k <= sup_top; ++k) {
    double sup = 0.0;
    for (double x : xs) sup = std::fmax(sup, std::fabs(derivs[k](x)));
    norm += sup;
  }

  const Poly& g = derivs[fl];
  if (integral) {
    // degenerate exponent 0: the quotient is the sup of differences
    double mx = -HUGE_VAL, mn = HUGE_VAL;
    for (double x : xs) {
      double v = g(x);
      mx = std::fmax(mx, v);
      mn = std::fmin(mn, v);
    }
    norm += mx - mn;
  } else {
    std::vector<double> gv(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) gv[i] = g(xs[i]);
    double q = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      for (std::size_t j = i + 1; j < xs.size(); ++j) {
        q = std::fmax(q, std::fabs(gv[j] - gv[i]) / std::pow(xs[j] - xs[i], frac));
      }
    }
    norm += q;
  }
  return norm;
}

double Kernel::operator()(double x) const {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  double base = x * (1.0 - x);
  double v = 1.0;
  for (int k = 0; k < p; ++k) v *= base;
  return c_K * v;
}

double Kernel::pow_b(double x, double b) const {
  double v = (*this)(x);
  if (b == 1.0) return v;
  return v <= 0.0 ? 0.0 : std::pow(v, b);
}

Poly Kernel::base_poly() const {
  // (x(1-x))^p = sum_k C(p,k) (-1)^k x^{p+k}
  Poly poly;
  poly.c.assign(2 * p + 1, 0.0);
  double binom = 1.0;
  for (int k = 0; k <= p; ++k) {
    poly.c[p + k] = (k % 2 == 0 ? binom : -binom);
    binom = binom * (p - k) / (k + 1);
  }
  return poly;
}

Kernel make_kernel(double beta_star) {
  if (!(beta_star > 0.0)) throw ConfigError("kernel needs beta* > 0");
  Kernel k;
  k.beta_star = beta_star;
  k.p = static_cast<int>(std::ceil(beta_star - 1e-12)) + 1;
  k.c_K = 1.0;
  double norm = holder_norm_poly(k.base_poly(), beta_star);
  if (!(norm > 0.0)) throw NumericError("kernel norm audit failed");
  k.c_K = 1.0 / norm;
  return k;
}

double simpson(const std::function<double(double)>& f, double a, double b,
               int panels) {
  if (panels < 2) panels = 2;
  if (panels % 2 == 1) ++panels;
  double h = (b - a) / panels;
  double acc = f(a) + f(b);
  for (int i = 1; i < panels; ++i) {
    acc += f(a + h * i) * (i % 2 == 1 ? 4.0 : 2.0);
  }
  return acc * h / 3.0;
}

double kernel_l2_pow(const Kernel& k, double b, int panels) {
  double i2 = simpson([&](double x) { return k.pow_b(x, 2.0 * b); }, 0.0, 1.0,
                      panels);
  return std::sqrt(std::fmax(i2, 0.0));
}

// ---- packing ---------------------------------------------------------------

std::size_t hamming(const std::vector<std::uint8_t>& a,
                    const std::vector<std::uint8_t>& b) {
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
  return d;
}

std::vector<std::vector<std::uint8_t>> vg_packing(std::size_t m_bits,
                                                  std::size_t min_count,
                                                  std::size_t min_ham,
                                                  std::uint64_t seed,
                                                  std::size_t budget) {
  if (m_bits == 0) throw ConfigError("packing needs m_bits >= 1");
  if (min_ham == 0) min_ham = 1;
  if (min_count >= 2 && min_ham > m_bits) {
    throw NumericError("packing infeasible: min_ham exceeds word length");
  }

  std::vector<std::vector<std::uint8_t>> words;
  words.emplace_back(m_bits, std::uint8_t{0});  // all-zero word first

  auto admissible = [&](const std::vector<std::uint8_t>& w) {
    for (const auto& v : words) {
      if (hamming(v, w) < min_ham) return false;
    }
    return true;
  };

  if (m_bits <= 20) {
    // exhaustive scan in numeric order
    std::uint64_t total = 1ULL << m_bits;
    std::vector<std::uint8_t> w(m_bits);
    for (std::uint64_t v = 1; v < total && words.size() < min_count; ++v) {
      for (std::size_t i = 0; i < m_bits; ++i) w[i] = (v >> i) & 1U;
      if (admissible(w)) words.push_back(w);
    }
  } else {
    Rng rng(seed);
    std::vector<std::uint8_t> w(m_bits);
    for (std::size_t it = 0; it < budget && words.size() < min_count; ++it) {
      std::uint64_t bitsrc = 0;
      int have = 0;
      for (std::size_t i = 0; i < m_bits; ++i) {
        if (have == 0) {
          bitsrc = rng.next_u64();
          have = 64;
        }
        w[i] = bitsrc & 1U;
        bitsrc >>= 1;
        --have;
      }
      if (admissible(w)) words.push_back(w);
    }
  }

  if (words.size() < min_count) {
    throw NumericError("packing search exhausted its budget at " +
                       std::to_string(words.size()) + "/" +
                       std::to_string(min_count) + " words");
  }
  return words;
}

// ---- hypercube construction ------------------------------------------------

std::size_t HypercubeConstruction::cell_index(const double* x) const {
  std::size_t idx = 0;
  for (std::size_t i = 0; i < smooth.t_star; ++i) {
    double xi = x[i];
    long long j = static_cast<long long>(std::floor(xi * m_n));
    j = std::clamp<long long>(j, 0, m_n - 1);
    idx = idx * static_cast<std::size_t>(m_n) + static_cast<std::size_t>(j);
  }
  return idx;
}

double HypercubeConstruction::psi_pow_b(const double* x) const {
  double beta_layer = smooth.beta[smooth.i_star];
  double v = std::pow(h_n, beta_layer * b_exp);
  for (std::size_t i = 0; i < smooth.t_star; ++i) {
    long long j = static_cast<long long>(std::floor(x[i] * m_n));
    j = std::clamp<long long>(j, 0, m_n - 1);
    double z = x[i] * m_n - static_cast<double>(j);
    v *= kernel.pow_b(z, b_exp);
    if (v == 0.0) return 0.0;
  }
  return v;
}

double HypercubeConstruction::h_w(std::size_t w, const double* x) const {
  if (w >= words.size()) throw ConfigError("hypercube word index out of range");
  std::size_t idx = cell_index(x);
  if (!words[w][idx]) return 0.0;
  return psi_pow_b(x);
}

HypercubeConstruction build_hypercube(const CompositionSmoothness& s,
                                      long long n, std::uint64_t seed) {
  if (n < 2) throw ConfigError("build_hypercube needs n >= 2");
  HypercubeConstruction c;
  c.smooth = effective_smoothness(s.q, s.dims, s.t, s.beta);
  c.n = n;
  c.b_exp = c.smooth.kernel_power;
  c.kernel = make_kernel(c.smooth.beta[c.smooth.i_star]);
  c.norm_kb = kernel_l2_pow(c.kernel, c.b_exp, 8192);

  double bss = c.smooth.beta_ss;
  double ts = static_cast<double>(c.smooth.t_star);
  double nd = static_cast<double>(n);
  double root = std::pow(nd, 1.0 / (2.0 * bss + ts));
  double bound = std::log(2.0) / (72.0 * std::pow(c.norm_kb, 2.0 * ts));

  bool found = false;
  for (int k = 0; k <= 40; ++k) {
    double rho = std::exp2(-k);
    long long m = static_cast<long long>(std::floor(rho * root));
    if (m < 2) break;
    double h = 1.0 / static_cast<double>(m);
    if (nd * std::pow(h, 2.0 * bss + ts) <= bound) {
      c.rho = rho;
      c.m_n = m;
      c.h_n = h;
      found = true;
      break;
    }
  }
  if (!found) {
    throw NumericError(
        "hypercube construction is degenerate at n=" + std::to_string(n) +
        ": no grid rho satisfies the separation/KL budget condition");
  }

  double bits_d = std::pow(static_cast<double>(c.m_n), ts);
  if (bits_d > 4096.0) {
    throw NumericError("hypercube construction needs " +
                       std::to_string(bits_d) +
                       " bumps; packing would be infeasible");
  }
  c.bits = static_cast<std::size_t>(std::llround(bits_d));
  c.min_ham = (c.bits + 7) / 8;
  double count_d = std::exp2(static_cast<double>(c.bits) / 8.0);
  if (count_d > 100000.0) {
    throw NumericError("hypercube packing size is infeasible");
  }
  std::size_t min_count =
      static_cast<std::size_t>(std::ceil(count_d - 1e-9));
  if (min_count < 2) min_count = 2;
  c.words = vg_packing(c.bits, min_count, c.min_ham, seed);
  return c;
}

// ---- verification ----------------------------------------------------------

namespace {

// tensor-product composite Simpson of f over the cell with the given flat
// index, `panels` panels per axis
double cell_tensor_quad(const HypercubeConstruction& c, std::size_t cell,
                        int panels,
                        const std::function<double(const double*)>& f) {
  std::size_t ts = c.smooth.t_star;
  // decode the cell into per-axis offsets (axis 0 most significant)
  std::vector<std::size_t> jidx(ts);
  std::size_t rem = cell;
  for (std::size_t i = ts; i-- > 0;) {
    jidx[i] = rem % static_cast<std::size_t>(c.m_n);
    rem /= static_cast<std::size_t>(c.m_n);
  }
  if (panels % 2 == 1) ++panels;
  int pts = panels + 1;

  auto weight = [&](int i) {
    if (i == 0 || i == panels) return 1.0;
    return i % 2 == 1 ? 4.0 : 2.0;
  };

  std::vector<int> digit(ts, 0);
  std::vector<double> x(ts);
  double acc = 0.0;
  while (true) {
    double w = 1.0;
    for (std::size_t i = 0; i < ts; ++i) {
      // clamp interior so cell_index stays inside this cell at the edges
      double xi = (jidx[i] + static_cast<double>(digit[i]) / panels) * c.h_n;
      double lo = jidx[i] * c.h_n;
      x[i] = std::clamp(xi, lo, lo + c.h_n);
      w *= weight(digit[i]);
    }
    acc += w * f(x.data());
    std::size_t i = 0;
    for (; i < ts; ++i) {
      if (++digit[i] < pts) break;
      digit[i] = 0;
    }
    if (i == ts) break;
  }
  double scale = 1.0;
  for (std::size_t i = 0; i < ts; ++i) scale *= (c.h_n / panels) / 3.0;
  return acc * scale;
}

}  // namespace

double laplace_kl_budget(const HypercubeConstruction& c, long long n) {
  if (c.words.size() < 2) return 0.0;
  double ts = static_cast<double>(c.smooth.t_star);
  double cell_l2_sq = std::pow(c.h_n, 2.0 * c.smooth.beta_ss + ts) *
                      std::pow(c.norm_kb, 2.0 * ts);
  double acc = 0.0;
  std::size_t m_words = c.words.size() - 1;
  for (std::size_t j = 1; j < c.words.size(); ++j) {
    double d2 = static_cast<double>(hamming(c.words[j], c.words[0])) * cell_l2_sq;
    acc += static_cast<double>(n) * d2;
  }
  return acc / static_cast<double>(m_words);
}

LowerBoundReport verify_lemma1(const HypercubeConstruction& c, long long n,
                               int panels_per_cell) {
  LowerBoundReport rep;
  rep.m_n = c.m_n;
  rep.rho = c.rho;
  rep.h_n = c.h_n;
  rep.m_words = c.words.size() - 1;

  double ts = static_cast<double>(c.smooth.t_star);
  double a_pow = std::pow(c.norm_kb, ts);
  rep.kappa = a_pow / std::sqrt(8.0 * std::pow(c.rho, c.smooth.beta_ss));
  rep.phi_n = phi(c.smooth, static_cast<double>(n));

  // bump norm by tensor quadrature vs the closed form h^{beta** + t*/2} A^{t*}
  double cell_int = cell_tensor_quad(
      c, 0, panels_per_cell,
      [&](const double* x) { double v = c.psi_pow_b(x); return v * v; });
  double bump_quad = std::sqrt(std::fmax(cell_int, 0.0));
  double bump_closed = std::pow(c.h_n, c.smooth.beta_ss + ts / 2.0) * a_pow;
  rep.max_rel_err_bump_norm =
      std::fabs(bump_quad - bump_closed) / bump_closed;

  // pairwise L2 distances: integrate (h_W - h_W')^2 cell by cell
  std::size_t nw = c.words.size();
  bool full_quad = nw <= 48;
  double min_pair = HUGE_VAL;
  double max_rel = 0.0;
  std::vector<double> dist0(nw, 0.0);
  for (std::size_t a = 0; a < nw; ++a) {
    for (std::size_t b = a + 1; b < nw; ++b) {
      std::size_t ham = hamming(c.words[a], c.words[b]);
      double d2;
      if (full_quad) {
        d2 = 0.0;
        for (std::size_t cell = 0; cell < c.bits; ++cell) {
          if (c.words[a][cell] == c.words[b][cell]) continue;
          d2 += cell_tensor_quad(c, cell, panels_per_cell,
                                 [&](const double* x) {
                                   double v = c.psi_pow_b(x);
                                   return v * v;
                                 });
        }
      } else {
        d2 = static_cast<double>(ham) * cell_int;
      }
      double dist = std::sqrt(std::fmax(d2, 0.0));
      double closed = std::sqrt(static_cast<double>(ham)) * bump_closed;
      if (ham > 0) {
        max_rel = std::fmax(max_rel, std::fabs(dist - closed) / closed);
      }
      min_pair = std::fmin(min_pair, dist);
      if (a == 0) dist0[b] = dist;
    }
  }
  rep.min_pair_l2 = min_pair;
  rep.max_rel_err_pair = max_rel;
  rep.pass_i = min_pair >= rep.kappa * std::sqrt(rep.phi_n);

  double budget = 0.0;
  double budget_first = 0.0;
  for (std::size_t j = 1; j < nw; ++j) {
    budget += static_cast<double>(n) * dist0[j] * dist0[j];
    budget_first += static_cast<double>(n) * dist0[j];
  }
  budget /= static_cast<double>(rep.m_words);
  budget_first /= static_cast<double>(rep.m_words);
  rep.kl_budget = budget;
  rep.kl_budget_first_power = budget_first;
  rep.log_m_over_9 = std::log(static_cast<double>(rep.m_words)) / 9.0;
  rep.pass_ii = budget <= rep.log_m_over_9;
  return rep;
}

std::string LowerBoundReport::to_json() const {
  nlohmann::ordered_json j;
  j["kappa"] = kappa;
  j["phi_n"] = phi_n;
  j["min_pair_l2"] = min_pair_l2;
  j["kl_budget"] = kl_budget;
  j["log_M_over_9"] = log_m_over_9;
  j["pass_i"] = pass_i;
  j["pass_ii"] = pass_ii;
  j["kl_budget_first_power"] = kl_budget_first_power;
  j["max_rel_err_bump_norm"] = max_rel_err_bump_norm;
  j["max_rel_err_pair"] = max_rel_err_pair;
  j["M"] = m_words;
  j["m_n"] = m_n;
  j["rho"] = rho;
  j["h_n"] = h_n;
  return j.dump(2) + "\n";
}

}  // namespace spdnn::theory
