#include "spdnn/spdnn.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "core/errors.hpp"
#include "core/harness.hpp"
#include "core/losses.hpp"
#include "core/network.hpp"
#include "core/penalty.hpp"
#include "core/processes.hpp"
#include "core/rng.hpp"
#include "core/theory.hpp"
#include "core/trainer.hpp"
#include "version.hpp"

using nlohmann::json;
using nlohmann::ordered_json;

struct spdnn_model {
  spdnn::Model m;
};

struct spdnn_dataset {
  spdnn::proc::Dataset d;
};

namespace {

thread_local std::string g_error;

int fail(int code, const std::string& msg) {
  g_error = msg;
  return code;
}

template <typename F>
int guard(F&& body) {
  try {
    return body();
  } catch (const spdnn::ConfigError& e) {
    return fail(SPDNN_ERR_CONFIG, e.what());
  } catch (const spdnn::NumericError& e) {
    return fail(SPDNN_ERR_NUMERIC, e.what());
  } catch (const json::exception& e) {
    return fail(SPDNN_ERR_CONFIG, std::string("bad config: ") + e.what());
  } catch (const std::exception& e) {
    return fail(SPDNN_ERR_UNKNOWN, e.what());
  } catch (...) {
    return fail(SPDNN_ERR_UNKNOWN, "unknown error");
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw spdnn::ConfigError(what);
}

char* dup_string(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

void set_out(char** out, const std::string& s) {
  if (out) *out = dup_string(s);
}

json parse_json(const char* text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw spdnn::ConfigError(std::string("config is not valid JSON: ") +
                             e.what());
  }
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw spdnn::ConfigError("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw spdnn::ConfigError("write to '" + path + "' failed");
}

spdnn::Regime parse_regime(const std::string& text) {
  if (text == "exponential") return spdnn::Regime::exponential;
  if (text == "subexponential") return spdnn::Regime::subexponential;
  throw spdnn::ConfigError("unknown regime '" + text + "'");
}

spdnn::theory::CalibrationConstants parse_constants(const json& c,
                                                    const spdnn::LossSpec& loss,
                                                    double truth_k) {
  spdnn::theory::CalibrationConstants cc;
  cc.c_L = c.value("c_L", 1.0);
  cc.c_N = c.value("c_N", 1.0);
  cc.c_B = c.value("c_B", 1.0);
  cc.F = c.value("F", 0.0);
  cc.K = c.value("K", std::fmax(truth_k, 1.0));
  cc.k_ell = c.value("k_ell", loss.lipschitz());
  cc.nu3 = c.value("nu3", 5.0);
  cc.lambda_scale = c.value("lambda_scale", 1.0);
  cc.family = spdnn::PenaltySpec::parse_family(
      c.value("family", std::string("clipped_l1")));
  cc.penalty_shape = c.value("shape", 0.0);
  return cc;
}

spdnn::theory::CompositionSmoothness parse_smoothness(const json& c) {
  auto dims = c.at("dims").get<std::vector<std::size_t>>();
  auto t = c.at("t").get<std::vector<std::size_t>>();
  auto beta = c.at("beta").get<std::vector<double>>();
  if (dims.empty()) throw spdnn::ConfigError("smoothness dims must be nonempty");
  return spdnn::theory::effective_smoothness(dims.size() - 1, dims, t, beta);
}

spdnn::proc::GexparParams parse_gexpar(const json& cfg) {
  spdnn::proc::GexparParams p;
  p.c0 = cfg.value("c0", 0.0);
  p.c = cfg.at("c").get<std::vector<double>>();
  p.pi = cfg.value("pi", std::vector<double>(p.c.size(), 0.0));
  p.lambda = cfg.value("lambda", -1.0);
  p.z = cfg.value("z", std::vector<double>(p.c.size(), 0.0));
  p.allow_lambda_positive = cfg.value("allow_lambda_positive", false);
  return p;
}

}  // namespace

extern "C" {

const char* spdnn_last_error(void) { return g_error.c_str(); }

const char* spdnn_version(void) { return spdnn::kVersion; }
const char* spdnn_revision(void) { return spdnn::kRevision; }
const char* spdnn_rng_name(void) { return spdnn::kRngName; }

void spdnn_string_free(char* s) { std::free(s); }

/* ---- models ---------------------------------------------------------- */

int spdnn_model_load(const char* path, spdnn_model** out) {
  return guard([&] {
    require(path && out, "null argument");
    auto* h = new spdnn_model{spdnn::load_model(path)};
    *out = h;
    return SPDNN_OK;
  });
}

int spdnn_model_from_json(const char* text, spdnn_model** out) {
  return guard([&] {
    require(text && out, "null argument");
    auto* h = new spdnn_model{spdnn::model_from_json(text)};
    *out = h;
    return SPDNN_OK;
  });
}

int spdnn_model_save(const spdnn_model* model, const char* path) {
  return guard([&] {
    require(model && path, "null argument");
    spdnn::save_model(model->m, path);
    return SPDNN_OK;
  });
}

int spdnn_model_to_json(const spdnn_model* model, char** out) {
  return guard([&] {
    require(model && out, "null argument");
    set_out(out, spdnn::model_to_json(model->m));
    return SPDNN_OK;
  });
}

int spdnn_model_predict(const spdnn_model* model, const double* x, size_t d,
                        double* out) {
  return guard([&] {
    require(model && x && out, "null argument");
    require(d == model->m.arch.input_dim(),
            "input length does not match the model dimension");
    *out = model->m.predict(x);
    return SPDNN_OK;
  });
}

int spdnn_model_input_dim(const spdnn_model* model, size_t* out) {
  return guard([&] {
    require(model && out, "null argument");
    *out = model->m.arch.input_dim();
    return SPDNN_OK;
  });
}

int spdnn_model_param_count(const spdnn_model* model, size_t* out) {
  return guard([&] {
    require(model && out, "null argument");
    *out = model->m.arch.param_count();
    return SPDNN_OK;
  });
}

int spdnn_model_nonzeros(const spdnn_model* model, double tol, size_t* out) {
  return guard([&] {
    require(model && out, "null argument");
    *out = spdnn::sparsity(model->m.theta, tol);
    return SPDNN_OK;
  });
}

void spdnn_model_free(spdnn_model* model) { delete model; }

/* ---- datasets -------------------------------------------------------- */

int spdnn_dataset_load_csv(const char* path, spdnn_dataset** out) {
  return guard([&] {
    require(path && out, "null argument");
    auto* h = new spdnn_dataset{spdnn::proc::Dataset::load_csv(path)};
    *out = h;
    return SPDNN_OK;
  });
}

int spdnn_dataset_save_csv(const spdnn_dataset* data, const char* path) {
  return guard([&] {
    require(data && path, "null argument");
    data->d.save_csv(path);
    return SPDNN_OK;
  });
}

int spdnn_dataset_size(const spdnn_dataset* data, size_t* out) {
  return guard([&] {
    require(data && out, "null argument");
    *out = data->d.size();
    return SPDNN_OK;
  });
}

int spdnn_dataset_dim(const spdnn_dataset* data, size_t* out) {
  return guard([&] {
    require(data && out, "null argument");
    *out = data->d.d;
    return SPDNN_OK;
  });
}

int spdnn_dataset_row(const spdnn_dataset* data, size_t i, double* x,
                      double* y) {
  return guard([&] {
    require(data && x && y, "null argument");
    require(i < data->d.size(), "row index out of range");
    const double* row = data->d.row(i);
    std::memcpy(x, row, data->d.d * sizeof(double));
    *y = data->d.y[i];
    return SPDNN_OK;
  });
}

void spdnn_dataset_free(spdnn_dataset* data) { delete data; }

/* ---- small numeric entry points -------------------------------------- */

int spdnn_prox(const char* family, double lambda, double tau, double shape,
               double x, double eta, double* out) {
  return guard([&] {
    require(family && out, "null argument");
    auto spec = spdnn::PenaltySpec::make(spdnn::PenaltySpec::parse_family(family),
                                         lambda, tau, shape);
    *out = spdnn::prox(spec, x, eta);
    return SPDNN_OK;
  });
}

int spdnn_penalty_value(const char* family, double lambda, double tau,
                        double shape, double x, double* out) {
  return guard([&] {
    require(family && out, "null argument");
    auto spec = spdnn::PenaltySpec::make(spdnn::PenaltySpec::parse_family(family),
                                         lambda, tau, shape);
    *out = spec.pi(x);
    return SPDNN_OK;
  });
}

int spdnn_n_alpha(long long n, double c, double gamma, long long* out) {
  return guard([&] {
    require(out != nullptr, "null argument");
    *out = spdnn::n_alpha(n, c, gamma);
    return SPDNN_OK;
  });
}

uint64_t spdnn_seed_split(uint64_t seed, uint64_t stream) {
  return spdnn::seed_split(seed, stream);
}

/* ---- run-level entry points ------------------------------------------ */

int spdnn_run_simulate(const char* config_json, int use_seed, uint64_t seed,
                       const char* out_csv) {
  return guard([&] {
    require(config_json && out_csv, "null argument");
    json cfg = parse_json(config_json);
    auto ps = spdnn::harness::ProcessSpec::parse(cfg.at("process"));
    std::size_t n = cfg.at("n").get<std::size_t>();
    std::uint64_t master =
        use_seed ? seed : cfg.value("seed", std::uint64_t{1});
    ps.simulate(n, master).save_csv(out_csv);
    return SPDNN_OK;
  });
}

int spdnn_run_train(const char* config_json, int use_seed, uint64_t seed,
                    const char* out_prefix, char** summary_json) {
  return guard([&] {
    require(config_json && out_prefix, "null argument");
    json cfg = parse_json(config_json);
    std::uint64_t master =
        use_seed ? seed : cfg.value("seed", std::uint64_t{1});
    auto loss =
        spdnn::LossSpec::parse(cfg.value("loss", std::string("huber:10")));

    spdnn::proc::Dataset data;
    double truth_k = 1.0;
    if (cfg.contains("dataset")) {
      data = spdnn::proc::Dataset::load_csv(
          cfg.at("dataset").get<std::string>());
    } else {
      auto ps = spdnn::harness::ProcessSpec::parse(cfg.at("process"));
      truth_k = ps.truth.K;
      data = ps.simulate(cfg.at("n").get<std::size_t>(),
                         spdnn::seed_split(master, 1));
    }
    long long n = static_cast<long long>(data.size());

    auto regime = parse_regime(cfg.value("regime", std::string("exponential")));
    double mix_c = cfg.value("mix_c", 1.0);
    double mix_gamma = cfg.value("mix_gamma", 1.0);

    spdnn::Architecture arch;
    spdnn::PenaltySpec penalty;
    bool have_penalty = false;
    long long m = n;
    if (cfg.contains("penalty")) {
      const json& p = cfg.at("penalty");
      penalty = spdnn::PenaltySpec::make(
          spdnn::PenaltySpec::parse_family(p.at("family").get<std::string>()),
          p.at("lambda").get<double>(), p.at("tau").get<double>(),
          p.value("shape", 0.0));
      have_penalty = true;
    }
    if (cfg.contains("arch")) {
      const json& a = cfg.at("arch");
      arch.widths = a.at("widths").get<std::vector<std::size_t>>();
      arch.B = a.value("B", 1.0);
      arch.F = a.value("F", 1.0);
      arch.validate();
      if (!have_penalty) {
        auto cc = parse_constants(cfg.value("constants", json::object()),
                                  loss, truth_k);
        auto tuned = spdnn::tune(regime, n, mix_c, mix_gamma, cc.k_ell, arch,
                                 cc.nu3, cc.lambda_scale, cc.family,
                                 cc.penalty_shape);
        penalty = tuned.penalty;
        m = tuned.m;
      }
    } else if (cfg.contains("calibration")) {
      const json& cal = cfg.at("calibration");
      auto cc = parse_constants(cal.value("constants", json::object()), loss,
                                truth_k);
      spdnn::theory::Calibration c =
          cal.contains("composition")
              ? spdnn::theory::calibrate_composition(
                    regime, n, mix_c, mix_gamma,
                    parse_smoothness(cal.at("composition")), cc)
              : spdnn::theory::calibrate_holder(
                    regime, n, mix_c, mix_gamma, cal.value("kappa", 2.0),
                    cal.value("s", 2.0), data.d, cc);
      arch = c.arch;
      m = c.m;
      if (!have_penalty) penalty = c.penalty;
    } else {
      throw spdnn::ConfigError("train config needs 'arch' or 'calibration'");
    }

    spdnn::train::TrainConfig tc;
    if (cfg.contains("train")) {
      const json& t = cfg.at("train");
      tc.epochs = t.value("epochs", std::size_t{200});
      tc.batch_size = t.value("batch_size", std::size_t{0});
      tc.step = t.value("step", 0.1);
      tc.restarts = t.value("restarts", std::size_t{3});
    }
    tc.seed = spdnn::seed_split(master, 2);

    auto res = spdnn::train::fit(arch, penalty, loss, data, tc);
    std::string prefix(out_prefix);
    spdnn::save_model(res.model, prefix + ".model.json");
    res.trace.save_csv(prefix + ".trace.csv");

    ordered_json s;
    s["version"] = spdnn::kVersion;
    s["revision"] = spdnn::kRevision;
    s["rng"] = spdnn::kRngName;
    s["seed"] = master;
    s["n"] = n;
    s["m"] = m;
    s["arch"] = {{"widths", arch.widths}, {"B", arch.B}, {"F", arch.F},
                 {"params", arch.param_count()}};
    s["penalty"] = {{"family", penalty.family_name()},
                    {"lambda", penalty.lambda},
                    {"tau", penalty.tau},
                    {"shape", penalty.shape}};
    s["loss"] = loss.name();
    s["objective"] = res.objective;
    s["risk"] = res.trace.rows.back().risk;
    s["penalty_total"] = res.trace.rows.back().penalty;
    s["l0"] = res.trace.rows.back().l0;
    s["linf"] = res.trace.rows.back().linf;
    s["best_restart"] = res.best_restart;
    ordered_json robjs = ordered_json::array();
    for (double o : res.restart_objectives) {
      robjs.push_back(std::isfinite(o) ? ordered_json(o)
                                       : ordered_json(nullptr));
    }
    s["restart_objectives"] = robjs;
    set_out(summary_json, s.dump(2) + "\n");
    return SPDNN_OK;
  });
}

int spdnn_run_rate_sweep(const char* config_json, int use_seed, uint64_t seed,
                         size_t workers, const char* out_prefix,
                         char** summary_json) {
  return guard([&] {
    require(config_json && out_prefix, "null argument");
    json cfg = parse_json(config_json);
    if (use_seed) cfg["seed"] = seed;
    auto sc = spdnn::harness::SweepConfig::parse(cfg);
    std::size_t w = workers ? workers : cfg.value("workers", std::size_t{1});
    auto res = spdnn::harness::rate_sweep(sc, w);
    std::string prefix(out_prefix);
    res.save_csv(prefix + ".csv");
    std::string js = res.to_json();
    write_text(prefix + ".json", js);
    set_out(summary_json, js);
    return SPDNN_OK;
  });
}

int spdnn_run_verify_lowerbound(const char* config_json, int use_seed,
                                uint64_t seed, const char* out_path,
                                char** report_json) {
  return guard([&] {
    require(config_json != nullptr, "null argument");
    json cfg = parse_json(config_json);
    auto smooth = parse_smoothness(cfg.at("smoothness"));
    long long n = cfg.at("n").get<long long>();
    int panels = cfg.value("panels", 64);
    std::uint64_t sd = use_seed ? seed : cfg.value("seed", std::uint64_t{1});
    auto hc = spdnn::theory::build_hypercube(smooth, n, sd);
    auto rep = spdnn::theory::verify_lemma1(hc, n, panels);
    std::string js = rep.to_json();
    if (out_path) write_text(out_path, js);
    set_out(report_json, js);
    if (!rep.pass_i || !rep.pass_ii) {
      return fail(SPDNN_ERR_CHECK_FAILED,
                  "lower-bound separation/budget conditions failed");
    }
    return SPDNN_OK;
  });
}

int spdnn_run_a4_probe(const char* config_json, int use_seed, uint64_t seed,
                       const char* out_path, char** report_json) {
  return guard([&] {
    require(config_json != nullptr, "null argument");
    json cfg = parse_json(config_json);
    if (use_seed) cfg["seed"] = seed;
    auto pc = spdnn::harness::A4Config::parse(cfg);
    auto res = spdnn::harness::a4_probe(pc);
    std::string js = res.to_json();
    if (out_path) write_text(out_path, js);
    set_out(report_json, js);
    return SPDNN_OK;
  });
}

int spdnn_run_stability(const char* config_json, const char* out_path,
                        char** report_json) {
  return guard([&] {
    require(config_json != nullptr, "null argument");
    json cfg = parse_json(config_json);
    auto params = parse_gexpar(cfg);
    auto rep = spdnn::proc::gexpar_stability(params);
    ordered_json j;
    j["stable"] = rep.stable;
    j["radius"] = rep.radius;
    j["root_moduli"] = rep.root_moduli;
    std::string js = j.dump(2) + "\n";
    if (out_path) write_text(out_path, js);
    set_out(report_json, js);
    return SPDNN_OK;
  });
}

}  // extern "C"
