#include <CLI11.hpp>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "privcal/errors.hpp"
#include "privcal/harness.hpp"
#include "privcal/synthgen.hpp"

namespace {

const std::vector<std::string> kConfigKeys = {
    "mode",        "methods",     "alpha",       "beta_pcp",   "beta_two_staged",
    "n_trials",    "n_samples",   "seed",        "weight_source", "frac_train",
    "frac_valid",  "frac_calib",  "frac_test",   "scarce_mode",   "grid_size",
    "loo_cap",     "n_threads",   "target_corruption_mean",       "fit_lr",
    "fit_epochs",  "fit_patience",
};

struct CommonOpts {
  std::string config_path;
  std::string out_path;
  std::map<std::string, std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool with_out) {
  cmd->add_option("--config", opts.config_path, "flat key=value config file");
  if (with_out) cmd->add_option("--out", opts.out_path, "output CSV path")->required();
  for (const auto& key : kConfigKeys) {
    cmd->add_option_function<std::string>(
        "--" + key, [&opts, key](const std::string& v) { opts.overrides[key] = v; },
        "override config key " + key);
  }
}

privcal::ExperimentConfig build_config(const CommonOpts& opts) {
  privcal::ExperimentConfig cfg;
  if (!opts.config_path.empty()) cfg = privcal::parse_config_file(opts.config_path);
  // scarce_mode first: it installs the preset the other flags may refine.
  const auto scarce = opts.overrides.find("scarce_mode");
  if (scarce != opts.overrides.end()) {
    privcal::apply_config_override(cfg, scarce->first, scarce->second);
  }
  for (const auto& [key, value] : opts.overrides) {
    if (key == "scarce_mode") continue;
    privcal::apply_config_override(cfg, key, value);
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"privcal: prediction sets under corrupted training data"};
  app.require_subcommand(1);

  CommonOpts gen_opts, run_opts, ablate_opts;
  std::string betas_arg;

  CLI::App* cmd_generate =
      app.add_subcommand("generate", "write one synthetic corrupted dataset as CSV");
  add_common(cmd_generate, gen_opts, true);

  CLI::App* cmd_run = app.add_subcommand("run", "run the configured experiment, write report CSV");
  add_common(cmd_run, run_opts, true);

  CLI::App* cmd_ablate = app.add_subcommand("ablate", "sweep beta values with shared seeds");
  add_common(cmd_ablate, ablate_opts, true);
  cmd_ablate->add_option("--betas", betas_arg, "comma-separated beta grid")->required();

  CLI::App* cmd_selfcheck = app.add_subcommand("selfcheck", "run the release-gate property suites");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (cmd_generate->parsed()) {
      const auto cfg = build_config(gen_opts);
      privcal::SynthConfig scfg;
      scfg.n = cfg.n_samples;
      scfg.seed = cfg.seed;
      scfg.target_corruption_mean = cfg.target_corruption_mean;
      scfg.mode = cfg.mode;
      const auto synth = privcal::gen_synthetic(scfg);
      const auto corrupted =
          privcal::apply_corruption(synth.data, synth.probs, cfg.mode, cfg.seed + 1);
      privcal::dump_csv(corrupted, synth.probs, gen_opts.out_path);
      std::cout << "wrote " << corrupted.size() << " samples to " << gen_opts.out_path << "\n";
    } else if (cmd_run->parsed()) {
      const auto cfg = build_config(run_opts);
      const auto rows = privcal::run_experiment(cfg);
      privcal::write_report_csv(rows, run_opts.out_path);
      std::cout << "wrote " << rows.size() << " rows to " << run_opts.out_path << "\n";
    } else if (cmd_ablate->parsed()) {
      const auto cfg = build_config(ablate_opts);
      std::vector<double> betas;
      std::stringstream ss(betas_arg);
      std::string tok;
      while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) betas.push_back(std::stod(tok));
      }
      const auto rows = privcal::ablate_beta(cfg, betas);
      privcal::write_report_csv(rows, ablate_opts.out_path);
      std::cout << "wrote " << rows.size() << " rows to " << ablate_opts.out_path << "\n";
    } else if (cmd_selfcheck->parsed()) {
      return privcal::selfcheck(std::cout) ? 0 : 2;
    }
  } catch (const privcal::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
