#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "core/losses.hpp"

namespace spdnn {

// pointwise activation with derivative; relu fixes relu'(0) = 0
struct Activation {
  const char* name;
  double (*f)(double);
  double (*df)(double);
  double lipschitz;

  static const Activation& relu();
};

// fully connected feed-forward network class: widths = (p_0, ..., p_{L+1}),
// sup-norm parameter bound B, output clamped to [-F, F]
struct Architecture {
  std::vector<std::size_t> widths;
  double B = 1.0;
  double F = 1.0;

  std::size_t depth() const { return widths.size() - 2; }  // hidden layers L
  std::size_t input_dim() const { return widths.front(); }
  std::size_t output_dim() const { return widths.back(); }
  std::size_t max_width() const;   // N, over hidden layers
  std::size_t param_count() const; // P
  void validate() const;           // throws ConfigError
};

// dense layer view; W is rows x cols stored column-major, so the flat layout
// per layer is (vec(W), b)
struct Layer {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> W;
  std::vector<double> b;
};

std::vector<Layer> unflatten(const Architecture& arch,
                             const std::vector<double>& theta);
std::vector<double> flatten(const Architecture& arch,
                            const std::vector<Layer>& layers);

// single forward pass; clamp applies the [-F, F] output clamp
double forward(const Architecture& arch, const Activation& act,
               const std::vector<double>& theta, const double* x,
               bool clamp = true);

void forward_batch(const Architecture& arch, const Activation& act,
                   const std::vector<double>& theta, const double* xs,
                   std::size_t count, bool clamp, std::vector<double>* preds);

// gradient of (1/count) sum_i loss(h(x_i), y_i) in theta, reverse mode;
// examples with a saturated output clamp (|raw| >= F) contribute zero
std::vector<double> risk_gradient(const Architecture& arch,
                                  const Activation& act,
                                  const std::vector<double>& theta,
                                  const LossSpec& loss, const double* xs,
                                  const double* ys, std::size_t count,
                                  bool clamp = true);

void project_sup_ball(std::vector<double>* theta, double B);
std::size_t sparsity(const std::vector<double>& theta, double tol = 1e-8);
double sup_norm(const std::vector<double>& theta);

// uniform init on [-r, r] per layer with r = min(B, 1/sqrt(fan_in))
std::vector<double> init_params(const Architecture& arch, std::uint64_t seed);

struct Model {
  Architecture arch;
  std::vector<double> theta;

  double predict(const double* x, bool clamp = true) const;
};

std::string model_to_json(const Model& model);
Model model_from_json(const std::string& text);
void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

}  // namespace spdnn
