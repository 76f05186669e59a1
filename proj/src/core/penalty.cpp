#include "core/penalty.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>

#include "core/errors.hpp"

namespace spdnn {

void PenaltySpec::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ConfigError("penalty lambda must be >= 0");
  }
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw ConfigError("penalty tau must be > 0");
  }
  if (family == PenaltyFamily::scad && !(shape > 2.0)) {
    throw ConfigError("scad shape parameter must be > 2");
  }
  if (family == PenaltyFamily::mcp && !(shape > 1.0)) {
    throw ConfigError("mcp shape parameter must be > 1");
  }
}

PenaltySpec PenaltySpec::make(PenaltyFamily family, double lambda, double tau,
                              double shape) {
  PenaltySpec s;
  s.family = family;
  s.lambda = lambda;
  s.tau = tau;
  if (shape == 0.0) {
    shape = family == PenaltyFamily::scad ? 3.7
            : family == PenaltyFamily::mcp ? 3.0
                                           : 0.0;
  }
  s.shape = shape;
  s.validate();
  return s;
}

PenaltyFamily PenaltySpec::parse_family(const std::string& text) {
  if (text == "clipped_l1") return PenaltyFamily::clipped_l1;
  if (text == "scad") return PenaltyFamily::scad;
  if (text == "mcp") return PenaltyFamily::mcp;
  throw ConfigError("unknown penalty family '" + text + "'");
}

std::string PenaltySpec::family_name() const {
  switch (family) {
    case PenaltyFamily::clipped_l1:
      return "clipped_l1";
    case PenaltyFamily::scad:
      return "scad";
    case PenaltyFamily::mcp:
      return "mcp";
  }
  return "?";
}

double PenaltySpec::pi(double x) const {
  if (x < 0.0) throw ConfigError("penalty argument must be >= 0");
  if (x >= tau) return lambda;
  switch (family) {
    case PenaltyFamily::clipped_l1:
      return lambda * (x / tau);
    case PenaltyFamily::scad: {
      // unit-lambda scad shape p(u): u on [0,1], quadratic on [1,a], flat
      // (a+1)/2 beyond; evaluated at u = a x / tau and scaled to peak lambda
      double a = shape;
      double u = a * x / tau;
      double p;
      if (u <= 1.0) {
        p = u;
      } else if (u <= a) {
        p = (2.0 * a * u - u * u - 1.0) / (2.0 * (a - 1.0));
      } else {
        p = 0.5 * (a + 1.0);
      }
      return lambda * p / (0.5 * (a + 1.0));
    }
    case PenaltyFamily::mcp: {
      // unit-lambda mcp shape p(u) = u - u^2/(2 gamma) up to u = gamma,
      // flat gamma/2 beyond; evaluated at u = gamma x / tau
      double g = shape;
      double u = g * x / tau;
      double p = u <= g ? u - u * u / (2.0 * g) : 0.5 * g;
      return lambda * p / (0.5 * g);
    }
  }
  return 0.0;
}

double PenaltySpec::total(const std::vector<double>& theta) const {
  double acc = 0.0;
  for (double t : theta) acc += pi(std::fabs(t));
  return acc;
}

namespace {

// pi restricted to [lo, hi] equals q2 z^2 + q1 z + const
struct Piece {
  double lo, hi, q2, q1;
};

int pieces_for(const PenaltySpec& s, Piece out[3]) {
  switch (s.family) {
    case PenaltyFamily::clipped_l1:
      out[0] = {0.0, s.tau, 0.0, s.lambda / s.tau};
      return 1;
    case PenaltyFamily::scad: {
      double a = s.shape;
      double c = a / s.tau;
      double k = s.lambda / (0.5 * (a + 1.0));
      out[0] = {0.0, s.tau / a, 0.0, k * c};
      out[1] = {s.tau / a, s.tau, -k * c * c / (2.0 * (a - 1.0)),
                k * a * c / (a - 1.0)};
      return 2;
    }
    case PenaltyFamily::mcp: {
      double g = s.shape;
      double c = g / s.tau;
      double k = s.lambda / (0.5 * g);
      out[0] = {0.0, s.tau, -k * c * c / (2.0 * g), k * c};
      return 1;
    }
  }
  return 0;
}

}  // namespace

double prox(const PenaltySpec& spec, double x, double eta) {
  spec.validate();
  if (!(eta >= 0.0) || !std::isfinite(eta)) {
    throw ConfigError("prox step must be >= 0");
  }
  double w = std::fabs(x);
  double sign = x < 0.0 ? -1.0 : 1.0;

  Piece pieces[3];
  int np = pieces_for(spec, pieces);

  // candidates over z >= 0: piece endpoints, per-piece stationary points,
  // and the flat-region minimizer max(w, tau)
  double cand[12];
  int nc = 0;
  cand[nc++] = 0.0;
  cand[nc++] = spec.tau;
  cand[nc++] = std::fmax(w, spec.tau);
  for (int i = 0; i < np; ++i) {
    const Piece& p = pieces[i];
    cand[nc++] = p.lo;
    cand[nc++] = p.hi;
    double denom = 1.0 + 2.0 * eta * p.q2;
    if (denom > 0.0) {
      double z = (w - eta * p.q1) / denom;
      if (z > p.lo && z < p.hi) cand[nc++] = z;
    }
  }
  std::sort(cand, cand + nc);

  double best_z = 0.0;
  double best_g = HUGE_VAL;
  for (int i = 0; i < nc; ++i) {
    double z = cand[i];
    if (z < 0.0) continue;
    double g = 0.5 * (z - w) * (z - w) + eta * spec.pi(z);
    if (g < best_g) {  // ascending candidates: ties keep the smaller |z|
      best_g = g;
      best_z = z;
    }
  }
  return sign * best_z;
}

long long n_alpha(long long n, double c, double gamma) {
  if (n < 1) throw ConfigError("n_alpha: n must be >= 1");
  if (!(c > 0.0)) throw ConfigError("n_alpha: c must be > 0");
  if (!(gamma > 0.0)) throw ConfigError("n_alpha: gamma must be > 0");
  double target = 8.0 * static_cast<double>(n) / c;
  double e = gamma + 1.0;
  long long k = static_cast<long long>(std::ceil(std::pow(target, 1.0 / e)));
  if (k < 1) k = 1;
  // correct floating-point noise: k is the smallest integer with k^e >= target
  while (std::pow(static_cast<double>(k), e) < target * (1.0 - 1e-12)) ++k;
  while (k > 1 &&
         std::pow(static_cast<double>(k - 1), e) >= target * (1.0 - 1e-12)) {
    --k;
  }
  return n / k;
}

double lambda_rate(double m, double nu3, double scale) {
  if (!(m > 1.0)) throw NumericError("lambda_rate: effective sample size <= 1");
  return scale * std::pow(std::log(m), nu3) / m;
}

double tau_bound(double k_ell, const Architecture& arch, double m) {
  if (!(k_ell > 0.0)) throw ConfigError("tau_bound: loss constant must be > 0");
  if (!(m > 0.0)) throw NumericError("tau_bound: effective sample size <= 0");
  double L = static_cast<double>(arch.depth());
  double N = static_cast<double>(arch.max_width());
  // log tau = -log(16 K (L+1) ((N+1) B)^{L+1} m), evaluated in log space so
  // huge calibrated B does not overflow
  double log_tau = -(std::log(16.0) + std::log(k_ell) + std::log(L + 1.0) +
                     (L + 1.0) * (std::log(N + 1.0) + std::log(arch.B)) +
                     std::log(m));
  double t = std::exp(log_tau);
  return std::fmax(t, DBL_MIN);  // 2^-1022 floor
}

TuneResult tune(Regime regime, long long n, double mix_c, double mix_gamma,
                double k_ell, const Architecture& arch, double nu3,
                double lambda_scale, PenaltyFamily family, double shape) {
  arch.validate();
  if (arch.B < 1.0) throw ConfigError("tune requires B >= 1");
  if (!(lambda_scale > 0.0)) throw ConfigError("lambda_scale must be > 0");
  long long m;
  if (regime == Regime::subexponential) {
    if (!(nu3 > 2.0)) {
      throw ConfigError("subexponential regime requires nu3 > 2");
    }
    m = n_alpha(n, mix_c, mix_gamma);
  } else {
    if (!(mix_gamma >= 1.0)) {
      throw ConfigError("exponential regime requires gamma >= 1");
    }
    if (!(nu3 > 4.0)) {
      throw ConfigError("exponential regime requires nu3 > 4");
    }
    m = n;
  }
  if (m < 2) {
    throw NumericError("degenerate tuning: effective sample size " +
                       std::to_string(m) + " is < 2");
  }
  double md = static_cast<double>(m);
  TuneResult r;
  r.m = m;
  r.penalty =
      PenaltySpec::make(family, lambda_rate(md, nu3, lambda_scale),
                        tau_bound(k_ell, arch, md), shape);
  return r;
}

}  // namespace spdnn
