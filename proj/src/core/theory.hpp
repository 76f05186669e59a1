#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "core/network.hpp"
#include "core/penalty.hpp"

namespace spdnn::theory {

// composition structure: q+1 layers, layer i maps [0,1]^{d_i} -> [0,1]^{d_{i+1}}
// with components depending on t_i coordinates and Holder smoothness beta_i;
// the final layer is scalar.  q = 0 is a plain Holder function on [0,1]^{d_0}.
struct CompositionSmoothness {
  std::size_t q = 0;
  std::vector<std::size_t> dims;  // d_0 .. d_q
  std::vector<std::size_t> t;     // t_0 .. t_q
  std::vector<double> beta;       // beta_0 .. beta_q

  // derived by effective_smoothness
  std::vector<double> beta_star;  // beta*_i = beta_i prod_{j>i} (beta_j ^ 1)
  std::size_t i_star = 0;         // argmin beta*_i / (2 beta*_i + t_i), ties low
  double beta_ss = 0.0;           // beta*_{i_star}
  std::size_t t_star = 0;         // t_{i_star}
  double kernel_power = 1.0;      // prod_{j > i_star} (beta_j ^ 1)
};

CompositionSmoothness effective_smoothness(std::size_t q,
                                           std::vector<std::size_t> dims,
                                           std::vector<std::size_t> t,
                                           std::vector<double> beta);

// minimax rate phi_n = max_i n^{-2 beta*_i/(2 beta*_i + t_i)}
double phi(const CompositionSmoothness& s, double n);
double phi_exponent(const CompositionSmoothness& s);  // 2 beta** / (2 beta** + t*)

// Holder-class rate n^{-kappa s / (kappa s + d)}
double holder_rate(double kappa, double s, double d, double n);

// ---- calibration ----------------------------------------------------------

struct CalibrationConstants {
  double c_L = 1.0;
  double c_N = 1.0;
  double c_B = 1.0;
  double F = 0.0;    // <= 0 means auto: max(K, 1) + 1
  double K = 1.0;    // class radius, used for the auto F
  double k_ell = 10.0;
  double nu3 = 5.0;
  double lambda_scale = 1.0;
  PenaltyFamily family = PenaltyFamily::clipped_l1;
  double penalty_shape = 0.0;
};

struct Calibration {
  Architecture arch;
  PenaltySpec penalty;
  long long m = 0;  // effective sample size used for the tuning
};

// width/depth/bound growth for a Holder target of smoothness s on [0,1]^d
// with loss curvature kappa, plus the matching penalty tuning
Calibration calibrate_holder(Regime regime, long long n, double mix_c,
                             double mix_gamma, double kappa, double s,
                             std::size_t d, const CalibrationConstants& cc);

// composition-class calibration: N grows like m * phi_m, B fixed >= 1
Calibration calibrate_composition(Regime regime, long long n, double mix_c,
                                  double mix_gamma,
                                  const CompositionSmoothness& s,
                                  const CalibrationConstants& cc);

// ---- hypercube construction for the minimax lower bound -------------------

// polynomial with coefficients c[k] on x^k; closed-form derivatives keep the
// Holder-norm audit exact up to grid resolution
struct Poly {
  std::vector<double> c;
  double operator()(double x) const;
  Poly derivative() const;
};

// bump kernel K(x) = c_K (x(1-x))^p on [0,1], zero outside; c_K normalizes
// the Holder norm of smoothness beta_star to <= 1 (grid audit)
struct Kernel {
  int p = 2;
  double c_K = 1.0;
  double beta_star = 1.0;

  double operator()(double x) const;
  double pow_b(double x, double b) const;  // K(x)^b
  Poly base_poly() const;                  // (x(1-x))^p without c_K
};

// Holder-ball norm of a polynomial on [0,1]: derivative sup-norms of orders
// < beta plus the quotient of order floor(beta) with exponent beta-floor(beta)
// (sup of differences when beta is an integer), audited on a uniform grid
double holder_norm_poly(const Poly& poly, double beta, int grid_points = 1001);

Kernel make_kernel(double beta_star);

// composite Simpson with `panels` subintervals (panels made even internally)
double simpson(const std::function<double(double)>& f, double a, double b,
               int panels);

// ||K^b||_2 over [0,1] by quadrature
double kernel_l2_pow(const Kernel& k, double b, int panels = 4096);

// binary packing: words of m_bits bits, pairwise Hamming >= min_ham, at least
// min_count words, word 0 all-zero; exhaustive scan for m_bits <= 20, seeded
// random greedy with `budget` candidates otherwise
std::vector<std::vector<std::uint8_t>> vg_packing(std::size_t m_bits,
                                                  std::size_t min_count,
                                                  std::size_t min_ham,
                                                  std::uint64_t seed,
                                                  std::size_t budget = 100000);

std::size_t hamming(const std::vector<std::uint8_t>& a,
                    const std::vector<std::uint8_t>& b);

struct HypercubeConstruction {
  CompositionSmoothness smooth;
  Kernel kernel;
  double rho = 1.0;
  long long m_n = 0;       // bumps per axis
  double h_n = 1.0;        // 1 / m_n
  double b_exp = 1.0;      // kernel power B
  double norm_kb = 0.0;    // ||K^B||_2 on [0,1]
  std::size_t bits = 0;    // m_n^{t*}
  std::size_t min_ham = 0; // ceil(bits / 8)
  long long n = 0;         // sample size the construction was built for
  std::vector<std::vector<std::uint8_t>> words;  // words[0] is all-zero

  // evaluate h_W for word `w` at x in [0,1]^{t*}; bumps have disjoint
  // supports so only the containing cell contributes
  double h_w(std::size_t w, const double* x) const;
  double psi_pow_b(const double* x) const;  // psi_u(x)^B for the containing cell
  std::size_t cell_index(const double* x) const;
};

// builds the packing-of-bumps family: kernel from beta*, m_n = floor(rho *
// n^{1/(2 beta** + t*)}) with rho the largest grid value {2^-k, k=0..40}
// satisfying n h^{2 beta** + t*} <= log(2) / (72 ||K^B||_2^{2 t*}), then a
// binary packing of size >= ceil(2^{bits/8}) at Hamming >= ceil(bits/8)
HypercubeConstruction build_hypercube(const CompositionSmoothness& s,
                                      long long n, std::uint64_t seed = 1);

struct LowerBoundReport {
  double kappa = 0.0;
  double phi_n = 0.0;
  double min_pair_l2 = 0.0;
  double kl_budget = 0.0;        // (1/M) sum_j n ||h_j - h_0||_2^2
  double log_m_over_9 = 0.0;
  bool pass_i = false;
  bool pass_ii = false;
  double kl_budget_first_power = 0.0;  // (1/M) sum_j n ||h_j - h_0||_2
  double max_rel_err_bump_norm = 0.0;  // quadrature vs closed-form bump norm
  double max_rel_err_pair = 0.0;       // quadrature vs sqrt(Ham) closed form
  std::size_t m_words = 0;             // M (packing size minus the zero word)
  long long m_n = 0;
  double rho = 0.0;
  double h_n = 0.0;

  std::string to_json() const;
};

// checks (i) every pairwise L2 distance >= kappa sqrt(phi_n) with
// kappa = ||K^B||_2^{t*} / sqrt(8 rho^{beta**}), and (ii) the averaged
// Kullback-Leibler budget against log(M)/9; distances by per-cell tensor
// Simpson quadrature with >= panels_per_cell panels per axis
LowerBoundReport verify_lemma1(const HypercubeConstruction& c, long long n,
                               int panels_per_cell = 64);

// the budget quantity used by verify_lemma1 (squared-norm form)
double laplace_kl_budget(const HypercubeConstruction& c, long long n);

}  // namespace spdnn::theory
