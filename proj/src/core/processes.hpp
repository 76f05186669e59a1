#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace spdnn::proc {

// real-valued function on R^d used as the conditional-mean truth of a
// simulated process and as the reference when measuring estimation error
struct Target {
  std::string name;
  std::size_t d = 1;
  double K = 1.0;  // sup bound on [0,1]^d, drives the output-clamp default
  std::function<double(const double*)> fn;

  double operator()(const double* x) const { return fn(x); }
};

Target make_constant(std::size_t d, double value);
Target make_linear(std::size_t d, std::vector<double> coeffs, double intercept);

// a * sin(2*pi*mean(x)): amplitude chosen so the smoothness-s ball of radius
// K contains it (closed-form multiplier, audited in tests)
Target make_holder_sine(std::size_t d, double K, double s);
double sine_holder_multiplier(double s, std::size_t d);

// a * (clamp(mean(x)) - 1/2)^2 with a = 0.8*K; smoothness-2 norm is 1.25*a
Target make_holder_quadratic(std::size_t d, double K);

// layered target: layer i maps its t_i-coordinate means through sine bumps
// 1/2 + a_i * sin(2*pi*u + 0.7*j); amplitudes keep every layer inside the
// radius-K smoothness ball and every intermediate value inside [0,1]
Target make_composition(const std::vector<std::size_t>& dims,
                        const std::vector<std::size_t>& t,
                        const std::vector<double>& beta, double K);

// exponential-autoregression conditional mean
// c0 + sum_i (c_i + pi_i * e^{lambda (x_i - z_i)^2}) x_i
struct GexparParams {
  double c0 = 0.0;
  std::vector<double> c;
  std::vector<double> pi;
  double lambda = -1.0;
  std::vector<double> z;
  bool allow_lambda_positive = false;

  std::size_t order() const { return c.size(); }
  void validate() const;
};

double gexpar_mean(const GexparParams& p, const double* x);
Target make_gexpar_target(const GexparParams& p);

struct StabilityReport {
  bool stable = false;
  double radius = 0.0;
  std::vector<double> root_moduli;  // descending
};

// companion-matrix check of the worst-case linear envelope |c_i| + |pi_i|
StabilityReport gexpar_stability(const GexparParams& p);

Target make_target(const nlohmann::json& cfg);

struct NoiseSpec {
  enum class Kind { gaussian, laplace } kind = Kind::gaussian;
  double scale = 1.0;

  static NoiseSpec parse(const nlohmann::json& cfg);
};

struct Dataset {
  std::size_t d = 0;
  std::vector<long long> t;
  std::vector<double> x;  // row-major, n x d windows
  std::vector<double> y;

  std::size_t size() const { return y.size(); }
  const double* row(std::size_t i) const { return x.data() + i * d; }

  void save_csv(const std::string& path) const;
  static Dataset load_csv(const std::string& path);
};

struct ARSpec {
  Target truth;
  NoiseSpec noise;
  long long burn_in = 1000;
  std::uint64_t seed = 1;
};

// iterates Y_t = truth(Y_{t-1..t-d}) + noise from zero initial lags,
// discards burn_in steps, and emits windows X_t = (Y_{t-1},...,Y_{t-d})
Dataset simulate_ar(const ARSpec& spec, std::size_t n);

Dataset simulate_gexpar(const GexparParams& params, std::size_t n,
                        const NoiseSpec& noise, std::uint64_t seed,
                        long long burn_in = 1000);

struct BinaryARSpec {
  Target f;              // on the +/-1 lag window
  double g_offset = 0.0;  // exogenous contribution, constant
  long long burn_in = 1000;
  bool recode01 = false;  // emit {0,1} windows instead of {-1,1}
  std::uint64_t seed = 1;

  void validate() const;  // |f + g| <= 1 on every lag pattern
};

// draws Y_t in {-1,1} with P(Y_t = 1 | past) = (1 + f(window) + g)/2,
// fair-coin initial lags
Dataset simulate_binary(const BinaryARSpec& spec, std::size_t n);

}  // namespace spdnn::proc
