#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/network.hpp"

namespace spdnn {

enum class PenaltyFamily { clipped_l1, scad, mcp };

// sparsity penalty pi(x) on x >= 0: pi(0) = 0, non-decreasing, continuous,
// and flat at lambda for x > tau.  scad/mcp are the standard shapes
// reparameterized so the flat region starts exactly at tau with value lambda.
struct PenaltySpec {
  PenaltyFamily family = PenaltyFamily::clipped_l1;
  double lambda = 0.0;
  double tau = 1.0;
  double shape = 0.0;  // scad: a > 2 (default 3.7); mcp: gamma > 1 (default 3.0)

  double pi(double x) const;  // throws ConfigError for x < 0
  double total(const std::vector<double>& theta) const;  // J(theta)
  void validate() const;
  std::string family_name() const;

  static PenaltySpec make(PenaltyFamily family, double lambda, double tau,
                          double shape = 0.0);
  static PenaltyFamily parse_family(const std::string& text);
};

// exact scalar prox: argmin_z 0.5 (z - x)^2 + eta * pi(|z|), by objective
// comparison over the finite candidate set (piece endpoints and per-piece
// stationary points); ties broken toward smaller |z|
double prox(const PenaltySpec& spec, double x, double eta);

// effective sample size floor(n / ceil((8 n / c)^{1/(gamma+1)}))
long long n_alpha(long long n, double c, double gamma);

enum class Regime { subexponential, exponential };

// rate pieces, usable with a real-valued effective sample size
double lambda_rate(double m, double nu3, double scale);
double tau_bound(double k_ell, const Architecture& arch, double m);

struct TuneResult {
  PenaltySpec penalty;
  long long m = 0;  // effective sample size used (n_alpha or n)
};

// theorem-driven (lambda, tau) for a given architecture and mixing regime
TuneResult tune(Regime regime, long long n, double mix_c, double mix_gamma,
                double k_ell, const Architecture& arch, double nu3,
                double lambda_scale,
                PenaltyFamily family = PenaltyFamily::clipped_l1,
                double shape = 0.0);

}  // namespace spdnn
