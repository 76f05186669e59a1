#include "core/losses.hpp"

#include <cmath>
#include <cstdlib>

#include "core/errors.hpp"

namespace spdnn {

namespace {

void check_label(double y) {
  if (y != 1.0 && y != -1.0) {
    throw ConfigError("logistic loss requires labels in {-1, +1}, got " +
                      std::to_string(y));
  }
}

}  // namespace

double LossSpec::value(double pred, double y) const {
  switch (kind) {
    case LossKind::l1:
      return std::fabs(pred - y);
    case LossKind::huber: {
      double r = pred - y;
      double a = std::fabs(r);
      if (a <= delta) return 0.5 * r * r;
      return delta * a - 0.5 * delta * delta;
    }
    case LossKind::logistic: {
      check_label(y);
      double m = y * pred;
      // log(1 + exp(-m)) without overflow for large |m|
      return std::log1p(std::exp(-std::fabs(m))) + std::fmax(-m, 0.0);
    }
  }
  std::abort();
}

double LossSpec::dpred(double pred, double y) const {
  switch (kind) {
    case LossKind::l1: {
      double r = pred - y;
      if (r > 0.0) return 1.0;
      if (r < 0.0) return -1.0;
      return 0.0;
    }
    case LossKind::huber: {
      double r = pred - y;
      if (r > delta) return delta;
      if (r < -delta) return -delta;
      return r;
    }
    case LossKind::logistic: {
      check_label(y);
      double m = y * pred;
      double s = m >= 0.0 ? std::exp(-m) / (1.0 + std::exp(-m))
                          : 1.0 / (1.0 + std::exp(m));
      return -y * s;
    }
  }
  std::abort();
}

double LossSpec::lipschitz() const {
  switch (kind) {
    case LossKind::l1:
      return 1.0;
    case LossKind::huber:
      return delta;
    case LossKind::logistic:
      return 1.0;
  }
  std::abort();
}

std::string LossSpec::name() const {
  switch (kind) {
    case LossKind::l1:
      return "l1";
    case LossKind::huber:
      return "huber:" + std::to_string(delta);
    case LossKind::logistic:
      return "logistic";
  }
  std::abort();
}

LossSpec LossSpec::parse(const std::string& text) {
  LossSpec spec;
  if (text == "l1") {
    spec.kind = LossKind::l1;
    return spec;
  }
  if (text == "logistic") {
    spec.kind = LossKind::logistic;
    return spec;
  }
  if (text == "huber") {
    spec.kind = LossKind::huber;
    return spec;
  }
  if (text.rfind("huber:", 0) == 0) {
    spec.kind = LossKind::huber;
    char* end = nullptr;
    spec.delta = std::strtod(text.c_str() + 6, &end);
    if (end == text.c_str() + 6 || *end != '\0' || !(spec.delta > 0.0)) {
      throw ConfigError("bad huber delta in loss spec '" + text + "'");
    }
    return spec;
  }
  throw ConfigError("unknown loss '" + text +
                    "' (expected l1, huber:<delta>, logistic)");
}

double empirical_risk(const LossSpec& loss, const std::vector<double>& preds,
                      const std::vector<double>& ys) {
  if (preds.size() != ys.size()) {
    throw ConfigError("empirical_risk: prediction/label size mismatch");
  }
  if (preds.empty()) throw ConfigError("empirical_risk: empty sample");
  double acc = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    acc += loss.value(preds[i], ys[i]);
  }
  return acc / static_cast<double>(preds.size());
}

}  // namespace spdnn
