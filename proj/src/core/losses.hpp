#pragma once

#include <string>
#include <vector>

namespace spdnn {

enum class LossKind { l1, huber, logistic };

// pointwise loss l(pred, y) with derivative in pred; subgradients at kinks
// are fixed to 0
struct LossSpec {
  LossKind kind = LossKind::huber;
  double delta = 10.0;  // huber threshold

  double value(double pred, double y) const;
  double dpred(double pred, double y) const;
  double lipschitz() const;  // Lipschitz constant in the prediction argument
  std::string name() const;

  // accepts "l1", "logistic", "huber:<delta>" (bare "huber" keeps delta=10)
  static LossSpec parse(const std::string& text);
};

double empirical_risk(const LossSpec& loss, const std::vector<double>& preds,
                      const std::vector<double>& ys);

}  // namespace spdnn
