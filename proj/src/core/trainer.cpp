#include "core/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

#include "core/rng.hpp"

namespace spdnn::train {

void TrainConfig::validate() const {
  if (epochs == 0) throw ConfigError("train: epochs must be >= 1");
  if (!(step > 0.0) || !std::isfinite(step)) {
    throw ConfigError("train: step must be finite and > 0");
  }
  if (restarts == 0) throw ConfigError("train: restarts must be >= 1");
}

void TrainTrace::save_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  out << "epoch,objective,risk,penalty,l0,linf\n" << std::setprecision(17);
  for (std::size_t e = 0; e < rows.size(); ++e) {
    const TraceRow& r = rows[e];
    out << e << "," << r.objective << "," << r.risk << "," << r.penalty << ","
        << r.l0 << "," << r.linf << "\n";
  }
  if (!out) throw ConfigError("write to '" + path + "' failed");
}

namespace {

struct Problem {
  const Architecture& arch;
  const PenaltySpec& penalty;
  const LossSpec& loss;
  const proc::Dataset& data;
  const Activation& act = Activation::relu();

  double risk(const std::vector<double>& theta) const {
    std::vector<double> preds;
    forward_batch(arch, act, theta, data.x.data(), data.size(), true, &preds);
    return empirical_risk(loss, preds, data.y);
  }

  TraceRow eval(const std::vector<double>& theta) const {
    TraceRow r;
    r.risk = risk(theta);
    r.penalty = penalty.total(theta);
    r.objective = r.risk + r.penalty;
    r.l0 = sparsity(theta);
    r.linf = sup_norm(theta);
    return r;
  }

  // one proximal step at learning rate eta from theta along grad
  std::vector<double> step_from(const std::vector<double>& theta,
                                const std::vector<double>& grad,
                                double eta) const {
    std::vector<double> next(theta.size());
    for (std::size_t j = 0; j < theta.size(); ++j) {
      next[j] = prox(penalty, theta[j] - eta * grad[j], eta);
    }
    project_sup_ball(&next, arch.B);
    return next;
  }
};

struct RestartOutcome {
  std::vector<double> theta;
  TrainTrace trace;
  double objective = std::numeric_limits<double>::infinity();
  bool diverged = false;
};

RestartOutcome run_restart(const Problem& prob, const TrainConfig& cfg,
                           std::uint64_t seed) {
  RestartOutcome out;
  out.theta = init_params(prob.arch, seed);
  project_sup_ball(&out.theta, prob.arch.B);

  TraceRow row = prob.eval(out.theta);
  out.trace.rows.push_back(row);
  if (!std::isfinite(row.objective)) {
    out.diverged = true;
    return out;
  }
  double prev = row.objective;

  std::size_t n = prob.data.size();
  std::size_t batch = cfg.batch_size;
  bool full = batch == 0 || batch >= n;
  Rng rng(detail::mix64(seed ^ 0x6a09e667f3bcc909ULL));
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  std::vector<double> bx, by;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    constexpr double kPi = 3.141592653589793;
    double eta = cfg.step * 0.5 *
                 (1.0 + std::cos(kPi * static_cast<double>(epoch) /
                                 static_cast<double>(cfg.epochs)));
    if (full) {
      std::vector<double> grad =
          risk_gradient(prob.arch, prob.act, out.theta, prob.loss,
                        prob.data.x.data(), prob.data.y.data(), n);
      for (int tries = 0; tries <= 60; ++tries) {
        std::vector<double> cand = prob.step_from(out.theta, grad, eta);
        double cand_obj = prob.risk(cand) + prob.penalty.total(cand);
        if (cand_obj <= prev + 1e-12) {
          out.theta = std::move(cand);
          prev = cand_obj;
          break;
        }
        eta *= 0.5;
      }
    } else {
      for (std::size_t i = n; i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.below(i));
        std::swap(perm[i - 1], perm[j]);
      }
      std::size_t d = prob.data.d;
      for (std::size_t start = 0; start < n; start += batch) {
        std::size_t count = std::min(batch, n - start);
        bx.resize(count * d);
        by.resize(count);
        for (std::size_t i = 0; i < count; ++i) {
          const double* src = prob.data.row(perm[start + i]);
          std::copy(src, src + d, bx.begin() + i * d);
          by[i] = prob.data.y[perm[start + i]];
        }
        std::vector<double> grad = risk_gradient(
            prob.arch, prob.act, out.theta, prob.loss, bx.data(), by.data(),
            count);
        out.theta = prob.step_from(out.theta, grad, eta);
      }
      prev = prob.risk(out.theta) + prob.penalty.total(out.theta);
    }

    row = prob.eval(out.theta);
    out.trace.rows.push_back(row);
    if (!std::isfinite(row.objective)) {
      out.diverged = true;
      return out;
    }
    prev = row.objective;
  }

  out.objective = out.trace.rows.back().objective;
  return out;
}

}  // namespace

FitResult fit(const Architecture& arch, const PenaltySpec& penalty,
              const LossSpec& loss, const proc::Dataset& data,
              const TrainConfig& cfg) {
  arch.validate();
  penalty.validate();
  cfg.validate();
  if (data.size() == 0) throw ConfigError("train: dataset is empty");
  if (data.d != arch.input_dim()) {
    throw ConfigError("train: dataset has " + std::to_string(data.d) +
                      " columns but the network expects " +
                      std::to_string(arch.input_dim()));
  }

  Problem prob{arch, penalty, loss, data};
  FitResult res;
  res.restart_objectives.assign(cfg.restarts,
                                std::numeric_limits<double>::infinity());
  bool have_winner = false;
  TrainTrace last_diverged;

  for (std::size_t r = 0; r < cfg.restarts; ++r) {
    RestartOutcome out = run_restart(prob, cfg, seed_split(cfg.seed, r));
    if (out.diverged) {
      last_diverged = std::move(out.trace);
      continue;
    }
    res.restart_objectives[r] = out.objective;
    if (!have_winner || out.objective < res.objective) {
      have_winner = true;
      res.objective = out.objective;
      res.best_restart = r;
      res.model.arch = arch;
      res.model.theta = std::move(out.theta);
      res.trace = std::move(out.trace);
    }
  }
  if (!have_winner) {
    throw DivergenceError("train: every restart diverged",
                          std::move(last_diverged));
  }
  return res;
}

}  // namespace spdnn::train
