#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include <spdnn/spdnn.h>

namespace {

bool read_file(const std::string& path, std::string* out) {
  std::ifstream in(path);
  if (!in) return false;
  std::ostringstream ss;
  ss << in.rdbuf();
  *out = ss.str();
  return true;
}

void print_and_free(char* text) {
  if (text) {
    std::fputs(text, stdout);
    spdnn_string_free(text);
  }
}

int report_status(int status) {
  if (status != SPDNN_OK) {
    std::fprintf(stderr, "error: %s\n", spdnn_last_error());
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparse-penalized deep network estimation for dependent "
               "time series"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::uint64_t seed = 0;
  std::size_t workers = 0;

  auto add_common = [&](CLI::App* sub, bool out_required) {
    sub->add_option("--config", config_path, "JSON config file")
        ->required()
        ->check(CLI::ExistingFile);
    auto* out_opt = sub->add_option("--out", out_path, "output path");
    if (out_required) out_opt->required();
    return sub->add_option("--seed", seed, "seed override");
  };

  auto* sim = app.add_subcommand("simulate", "simulate a trajectory to CSV");
  auto* sim_seed = add_common(sim, true);

  auto* train = app.add_subcommand("train", "fit one model (checkpoint + "
                                            "trace)");
  auto* train_seed = add_common(train, true);

  auto* sweep = app.add_subcommand("rate-sweep", "n-grid error experiment");
  auto* sweep_seed = add_common(sweep, true);
  sweep->add_option("--workers", workers, "worker threads (0 = config)");

  auto* verify = app.add_subcommand("verify-lowerbound",
                                    "packing-of-bumps condition report");
  auto* verify_seed = add_common(verify, false);

  auto* probe = app.add_subcommand("a4-probe", "excess-risk exponent probe");
  auto* probe_seed = add_common(probe, false);

  auto* stab = app.add_subcommand("stability", "exponential-AR stability "
                                               "report");
  add_common(stab, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return SPDNN_ERR_CONFIG;
  }

  std::string config;
  if (!read_file(config_path, &config)) {
    std::fprintf(stderr, "error: cannot read config '%s'\n",
                 config_path.c_str());
    return SPDNN_ERR_CONFIG;
  }

  if (app.got_subcommand(sim)) {
    int use_seed = sim_seed->count() > 0;
    return report_status(
        spdnn_run_simulate(config.c_str(), use_seed, seed, out_path.c_str()));
  }
  if (app.got_subcommand(train)) {
    int use_seed = train_seed->count() > 0;
    char* summary = nullptr;
    int status = spdnn_run_train(config.c_str(), use_seed, seed,
                                 out_path.c_str(), &summary);
    print_and_free(summary);
    return report_status(status);
  }
  if (app.got_subcommand(sweep)) {
    int use_seed = sweep_seed->count() > 0;
    char* summary = nullptr;
    int status = spdnn_run_rate_sweep(config.c_str(), use_seed, seed, workers,
                                      out_path.c_str(), &summary);
    print_and_free(summary);
    return report_status(status);
  }
  if (app.got_subcommand(verify)) {
    int use_seed = verify_seed->count() > 0;
    char* report = nullptr;
    int status = spdnn_run_verify_lowerbound(
        config.c_str(), use_seed, seed,
        out_path.empty() ? nullptr : out_path.c_str(), &report);
    print_and_free(report);
    return report_status(status);
  }
  if (app.got_subcommand(probe)) {
    int use_seed = probe_seed->count() > 0;
    char* report = nullptr;
    int status = spdnn_run_a4_probe(config.c_str(), use_seed, seed,
                                    out_path.empty() ? nullptr
                                                     : out_path.c_str(),
                                    &report);
    print_and_free(report);
    return report_status(status);
  }
  if (app.got_subcommand(stab)) {
    char* report = nullptr;
    int status = spdnn_run_stability(config.c_str(),
                                     out_path.empty() ? nullptr
                                                      : out_path.c_str(),
                                     &report);
    print_and_free(report);
    return report_status(status);
  }
  return SPDNN_ERR_CONFIG;
}
