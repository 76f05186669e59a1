#include "core/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "core/errors.hpp"
#include "core/rng.hpp"

namespace spdnn {

namespace {

double relu_f(double z) { return z > 0.0 ? z : 0.0; }
double relu_df(double z) { return z > 0.0 ? 1.0 : 0.0; }

const Activation kRelu{"relu", relu_f, relu_df, 1.0};

}  // namespace

const Activation& Activation::relu() { return kRelu; }

std::size_t Architecture::max_width() const {
  std::size_t n = 0;
  for (std::size_t j = 1; j + 1 < widths.size(); ++j) n = std::max(n, widths[j]);
  return n;
}

std::size_t Architecture::param_count() const {
  std::size_t p = 0;
  for (std::size_t j = 1; j < widths.size(); ++j) {
    p += widths[j] * (widths[j - 1] + 1);
  }
  return p;
}

void Architecture::validate() const {
  if (widths.size() < 2) throw ConfigError("architecture needs >= 2 widths");
  for (std::size_t w : widths) {
    if (w == 0) throw ConfigError("architecture widths must be >= 1");
  }
  if (widths.back() != 1) throw ConfigError("output width must be 1");
  if (!(B > 0.0) || !std::isfinite(B)) throw ConfigError("B must be positive");
  if (!(F > 0.0) || !std::isfinite(F)) throw ConfigError("F must be positive");
}

std::vector<Layer> unflatten(const Architecture& arch,
                             const std::vector<double>& theta) {
  arch.validate();
  if (theta.size() != arch.param_count()) {
    throw ConfigError("parameter vector has wrong length");
  }
  std::vector<Layer> layers(arch.widths.size() - 1);
  std::size_t off = 0;
  for (std::size_t j = 1; j < arch.widths.size(); ++j) {
    Layer& l = layers[j - 1];
    l.rows = arch.widths[j];
    l.cols = arch.widths[j - 1];
    l.W.assign(theta.begin() + off, theta.begin() + off + l.rows * l.cols);
    off += l.rows * l.cols;
    l.b.assign(theta.begin() + off, theta.begin() + off + l.rows);
    off += l.rows;
  }
  return layers;
}

std::vector<double> flatten(const Architecture& arch,
                            const std::vector<Layer>& layers) {
  arch.validate();
  if (layers.size() != arch.widths.size() - 1) {
    throw ConfigError("flatten: wrong layer count");
  }
  std::vector<double> theta;
  theta.reserve(arch.param_count());
  for (std::size_t j = 0; j < layers.size(); ++j) {
    const Layer& l = layers[j];
    if (l.rows != arch.widths[j + 1] || l.cols != arch.widths[j] ||
        l.W.size() != l.rows * l.cols || l.b.size() != l.rows) {
      throw ConfigError("flatten: layer shape mismatch");
    }
    theta.insert(theta.end(), l.W.begin(), l.W.end());
    theta.insert(theta.end(), l.b.begin(), l.b.end());
  }
  return theta;
}

namespace {

// workspace for one forward/backward pass, reused across examples
struct Tape {
  std::vector<std::vector<double>> pre;   // z_j per layer (length rows)
  std::vector<std::vector<double>> post;  // sigma(z_j), post[0] is the input
};

void ensure_tape(const Architecture& arch, Tape* tape) {
  std::size_t layers = arch.widths.size() - 1;
  if (tape->pre.size() == layers) return;
  tape->pre.assign(layers, {});
  tape->post.assign(layers + 1, {});
  for (std::size_t j = 0; j < layers; ++j) tape->pre[j].resize(arch.widths[j + 1]);
  for (std::size_t j = 0; j <= layers; ++j) tape->post[j].resize(arch.widths[j]);
}

// raw (unclamped) output; fills the tape
double forward_tape(const Architecture& arch, const Activation& act,
                    const std::vector<double>& theta, const double* x,
                    Tape* tape) {
  ensure_tape(arch, tape);
  std::copy(x, x + arch.widths[0], tape->post[0].begin());
  std::size_t off = 0;
  std::size_t layers = arch.widths.size() - 1;
  for (std::size_t j = 0; j < layers; ++j) {
    std::size_t rows = arch.widths[j + 1];
    std::size_t cols = arch.widths[j];
    const double* W = theta.data() + off;
    const double* b = theta.data() + off + rows * cols;
    off += rows * (cols + 1);
    const double* in = tape->post[j].data();
    double* z = tape->pre[j].data();
    for (std::size_t r = 0; r < rows; ++r) z[r] = b[r];
    for (std::size_t c = 0; c < cols; ++c) {
      const double* col = W + c * rows;  // column-major
      double v = in[c];
      for (std::size_t r = 0; r < rows; ++r) z[r] += col[r] * v;
    }
    if (j + 1 < layers) {
      double* out = tape->post[j + 1].data();
      for (std::size_t r = 0; r < rows; ++r) out[r] = act.f(z[r]);
    }
  }
  return tape->pre[layers - 1][0];
}

}  // namespace

double forward(const Architecture& arch, const Activation& act,
               const std::vector<double>& theta, const double* x, bool clamp) {
  arch.validate();
  if (theta.size() != arch.param_count()) {
    throw ConfigError("parameter vector has wrong length");
  }
  Tape tape;
  double raw = forward_tape(arch, act, theta, x, &tape);
  if (!clamp) return raw;
  return std::clamp(raw, -arch.F, arch.F);
}

void forward_batch(const Architecture& arch, const Activation& act,
                   const std::vector<double>& theta, const double* xs,
                   std::size_t count, bool clamp, std::vector<double>* preds) {
  arch.validate();
  if (theta.size() != arch.param_count()) {
    throw ConfigError("parameter vector has wrong length");
  }
  preds->resize(count);
  Tape tape;
  std::size_t d = arch.widths[0];
  for (std::size_t i = 0; i < count; ++i) {
    double raw = forward_tape(arch, act, theta, xs + i * d, &tape);
    (*preds)[i] = clamp ? std::clamp(raw, -arch.F, arch.F) : raw;
  }
}

std::vector<double> risk_gradient(const Architecture& arch,
                                  const Activation& act,
                                  const std::vector<double>& theta,
                                  const LossSpec& loss, const double* xs,
                                  const double* ys, std::size_t count,
                                  bool clamp) {
  arch.validate();
  if (theta.size() != arch.param_count()) {
    throw ConfigError("parameter vector has wrong length");
  }
  if (count == 0) throw ConfigError("risk_gradient: empty batch");

  std::vector<double> grad(theta.size(), 0.0);
  Tape tape;
  std::size_t layers = arch.widths.size() - 1;
  std::size_t d = arch.widths[0];
  std::vector<double> delta_up, delta_dn;

  // per-layer flat offsets
  std::vector<std::size_t> offs(layers);
  {
    std::size_t off = 0;
    for (std::size_t j = 0; j < layers; ++j) {
      offs[j] = off;
      off += arch.widths[j + 1] * (arch.widths[j] + 1);
    }
  }

  for (std::size_t i = 0; i < count; ++i) {
    double raw = forward_tape(arch, act, theta, xs + i * d, &tape);
    double pred = raw;
    double pass = 1.0;
    if (clamp) {
      pred = std::clamp(raw, -arch.F, arch.F);
      // clamp derivative is 0 at and beyond the saturation points
      if (std::fabs(raw) >= arch.F) pass = 0.0;
    }
    double dl = loss.dpred(pred, ys[i]) * pass;
    if (dl == 0.0) continue;

    // reverse pass: delta for the output layer is the scalar dl
    delta_up.assign(1, dl);
    for (std::size_t jj = layers; jj-- > 0;) {
      std::size_t rows = arch.widths[jj + 1];
      std::size_t cols = arch.widths[jj];
      const double* in = tape.post[jj].data();
      double* gW = grad.data() + offs[jj];
      double* gb = gW + rows * cols;
      const double* del = delta_up.data();
      for (std::size_t c = 0; c < cols; ++c) {
        double v = in[c];
        double* gcol = gW + c * rows;
        for (std::size_t r = 0; r < rows; ++r) gcol[r] += del[r] * v;
      }
      for (std::size_t r = 0; r < rows; ++r) gb[r] += del[r];
      if (jj == 0) break;
      // propagate through W_j and the previous activation
      const double* W = theta.data() + offs[jj];
      delta_dn.assign(cols, 0.0);
      for (std::size_t c = 0; c < cols; ++c) {
        const double* col = W + c * rows;
        double acc = 0.0;
        for (std::size_t r = 0; r < rows; ++r) acc += col[r] * del[r];
        delta_dn[c] = acc * act.df(tape.pre[jj - 1][c]);
      }
      delta_up.swap(delta_dn);
    }
  }

  double inv = 1.0 / static_cast<double>(count);
  for (double& g : grad) g *= inv;
  return grad;
}

void project_sup_ball(std::vector<double>* theta, double B) {
  for (double& t : *theta) t = std::clamp(t, -B, B);
}

std::size_t sparsity(const std::vector<double>& theta, double tol) {
  std::size_t k = 0;
  for (double t : theta) {
    if (std::fabs(t) > tol) ++k;
  }
  return k;
}

double sup_norm(const std::vector<double>& theta) {
  double m = 0.0;
  for (double t : theta) m = std::fmax(m, std::fabs(t));
  return m;
}

std::vector<double> init_params(const Architecture& arch, std::uint64_t seed) {
  arch.validate();
  std::vector<double> theta(arch.param_count());
  Rng rng(seed);
  std::size_t off = 0;
  for (std::size_t j = 1; j < arch.widths.size(); ++j) {
    std::size_t rows = arch.widths[j];
    std::size_t cols = arch.widths[j - 1];
    double r = std::fmin(arch.B, 1.0 / std::sqrt(static_cast<double>(cols)));
    for (std::size_t k = 0; k < rows * (cols + 1); ++k) {
      theta[off + k] = rng.uniform(-r, r);
    }
    off += rows * (cols + 1);
  }
  return theta;
}

double Model::predict(const double* x, bool clamp) const {
  return forward(arch, Activation::relu(), theta, x, clamp);
}

std::string model_to_json(const Model& model) {
  model.arch.validate();
  if (model.theta.size() != model.arch.param_count()) {
    throw ConfigError("model parameter vector has wrong length");
  }
  nlohmann::ordered_json j;
  j["widths"] = model.arch.widths;
  j["B"] = model.arch.B;
  j["F"] = model.arch.F;
  j["theta"] = model.theta;
  return j.dump(2) + "\n";
}

Model model_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad model json: ") + e.what());
  }
  Model m;
  try {
    m.arch.widths = j.at("widths").get<std::vector<std::size_t>>();
    m.arch.B = j.at("B").get<double>();
    m.arch.F = j.at("F").get<double>();
    m.theta = j.at("theta").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad model json: ") + e.what());
  }
  m.arch.validate();
  if (m.theta.size() != m.arch.param_count()) {
    throw ConfigError("model json: theta length does not match widths");
  }
  return m;
}

void save_model(const Model& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  out << model_to_json(model);
}

Model load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open model file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace spdnn
