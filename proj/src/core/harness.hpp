#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "core/losses.hpp"
#include "core/network.hpp"
#include "core/penalty.hpp"
#include "core/processes.hpp"
#include "core/theory.hpp"
#include "core/trainer.hpp"

namespace spdnn::harness {

// tagged data-generating process: nonlinear AR, exponential AR, or binary AR
struct ProcessSpec {
  enum class Kind { ar, gexpar, binary } kind = Kind::ar;
  proc::Target truth;  // conditional mean; for binary, the f in the link
  proc::NoiseSpec noise;
  proc::GexparParams gexpar;
  double g_offset = 0.0;
  bool recode01 = false;
  long long burn_in = 1000;

  std::size_t dim() const { return truth.d; }
  proc::Dataset simulate(std::size_t n, std::uint64_t seed) const;
  // P(Y=1 | window) for binary processes; the window uses the emitted coding
  double eta(const double* window) const;

  static ProcessSpec parse(const nlohmann::json& cfg);
};

// mean of (model(X) - truth(X))^2 over held-out windows that land in
// [0,1]^d; the truth is the unit-cube restriction of the conditional mean
double estimate_l2_error(const Model& model, const proc::Target& truth,
                         const ProcessSpec& process, std::size_t m_test,
                         std::uint64_t seed);

// held-out empirical risk gap: mean loss(model) - mean loss(truth), over all
// windows of a fresh trajectory
double estimate_loss_excess(const Model& model, const proc::Target& truth,
                            const LossSpec& loss, const ProcessSpec& process,
                            std::size_t m_test, std::uint64_t seed);

// conditional closed-form logistic excess risk of `predict` against the
// process's eta, averaged over a fresh trajectory; no label noise enters
double estimate_excess_risk_classification(const Model& model,
                                           const ProcessSpec& process,
                                           std::size_t m_test,
                                           std::uint64_t seed);

// excess risk of the best constant predictor (logit of the mean eta)
double best_constant_excess(const ProcessSpec& process, std::size_t m_test,
                            std::uint64_t seed);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
  std::size_t used = 0;
  std::size_t dropped = 0;
  bool ok = false;  // false = insufficient points after drops
};

// least squares of log(error) on log(n); nonpositive errors are dropped
SlopeFit fit_slope(const std::vector<std::pair<double, double>>& points);

// spread of the slope across B resampled replication sets (per-n medians)
double bootstrap_slope_stderr(
    const std::vector<std::vector<double>>& errors_by_n,
    const std::vector<double>& n_values, std::size_t b, std::uint64_t seed);

struct SweepConfig {
  ProcessSpec process;
  LossSpec loss;
  Regime regime = Regime::exponential;
  double mix_c = 1.0;
  double mix_gamma = 1.0;
  std::vector<long long> n_grid;
  std::size_t replications = 1;
  std::size_t m_test = 10000;
  bool classification = false;
  // holder calibration inputs; composition used instead when q+1 > 0 entries
  double kappa = 2.0;
  double s = 2.0;
  theory::CompositionSmoothness composition;  // dims empty = holder mode
  theory::CalibrationConstants constants;
  train::TrainConfig train;
  std::uint64_t seed = 1;
  // test hooks: cells (n_index, rep) forced to fail; synthetic errors skip
  // simulation and training entirely
  std::vector<std::pair<std::size_t, std::size_t>> poison;
  bool synthetic = false;
  double synthetic_coeff = 1.0;
  double synthetic_exponent = -0.8;

  void validate() const;
  static SweepConfig parse(const nlohmann::json& cfg);
};

struct CellResult {
  std::size_t n_index = 0;
  long long n = 0;
  std::size_t rep = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string message;           // failure reason
  double error = 0.0;            // squared L2 or excess risk
  double loss_excess = 0.0;      // held-out risk gap (regression only)
  std::size_t l0 = 0;
  double objective = 0.0;
  long long m = 0;               // effective sample size
  std::size_t L = 0;
  std::size_t N = 0;
  double B = 0.0;
  double lambda = 0.0;
  double tau = 0.0;
};

struct NStats {
  long long n = 0;
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  std::size_t ok_count = 0;
  std::size_t failed = 0;
};

struct SweepResult {
  std::vector<CellResult> cells;  // row-major over (n_index, rep)
  std::vector<NStats> stats;
  SlopeFit slope;                 // on (n, median error)
  double bootstrap_stderr = 0.0;
  std::uint64_t master_seed = 0;

  void save_csv(const std::string& path) const;
  std::string to_json() const;
};

// runs every (n, replication) cell in a worker pool; cells are individually
// seeded and write disjoint slots, so results do not depend on the worker
// count; per-cell failures are recorded and the sweep continues
SweepResult rate_sweep(const SweepConfig& cfg, std::size_t workers);

struct A4Config {
  LossSpec loss;
  ProcessSpec process;
  std::vector<double> shifts{0.05, 0.1, 0.15, 0.2, 0.25, 0.3};
  std::size_t draws = 100000;
  std::uint64_t seed = 1;

  void validate() const;
  static A4Config parse(const nlohmann::json& cfg);
};

struct A4Result {
  double kappa_hat = 0.0;
  SlopeFit fit;
  std::vector<std::pair<double, double>> points;  // (|shift|, excess)
  std::size_t dropped = 0;

  std::string to_json() const;
};

// perturbs the truth by constant shifts +/-a and measures the excess risk:
// closed-form conditional logistic risk for binary processes, antithetic
// noise-draw Monte Carlo otherwise; returns the log-log exponent
A4Result a4_probe(const A4Config& cfg);

}  // namespace spdnn::harness
