#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/errors.hpp"
#include "core/losses.hpp"
#include "core/network.hpp"
#include "core/penalty.hpp"
#include "core/processes.hpp"

namespace spdnn::train {

struct TrainConfig {
  std::size_t epochs = 200;
  std::size_t batch_size = 0;  // 0 = full batch with backtracking line search
  double step = 0.1;
  std::size_t restarts = 3;
  std::uint64_t seed = 1;

  void validate() const;
};

struct TraceRow {
  double objective = 0.0;
  double risk = 0.0;
  double penalty = 0.0;
  std::size_t l0 = 0;  // nonzero parameters at tolerance 1e-8
  double linf = 0.0;
};

struct TrainTrace {
  std::vector<TraceRow> rows;  // epochs + 1 rows, row 0 is the init

  void save_csv(const std::string& path) const;
};

struct FitResult {
  Model model;
  TrainTrace trace;           // winning restart
  double objective = 0.0;     // final full-sample objective of the winner
  std::size_t best_restart = 0;
  std::vector<double> restart_objectives;  // +inf marks a diverged restart
};

struct DivergenceError : NumericError {
  TrainTrace trace;

  DivergenceError(const std::string& what, TrainTrace t)
      : NumericError(what), trace(std::move(t)) {}
};

// proximal gradient descent on risk + penalty over the clamped network class:
// gradient step, exact componentwise prox, then sup-ball projection; cosine
// step decay across epochs; several restarts from independent inits, keeping
// the lowest final objective.  Full-batch mode backtracks (halving the step
// up to 60 times) until the objective stops increasing; minibatch mode
// shuffles each epoch and applies the scheduled step directly.
FitResult fit(const Architecture& arch, const PenaltySpec& penalty,
              const LossSpec& loss, const proc::Dataset& data,
              const TrainConfig& cfg);

}  // namespace spdnn::train
