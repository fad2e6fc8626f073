#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "paae/cli/commands.hpp"

namespace {

struct Common {
  std::string config;
  paae::Overrides overrides;
  std::string log_level = "info";
};

void add_common(CLI::App* sub, Common& c, bool training_flags) {
  sub->add_option("-c,--config", c.config, "INI experiment config");
  sub->add_option("-o,--output", c.overrides.output, "run directory (default: config, $PAAE_OUTPUT_DIR, ./runs)");
  sub->add_option("--seed", c.overrides.seed, "master seed");
  sub->add_option("--threads", c.overrides.threads, "worker threads; 1 is bit-reproducible");
  sub->add_option("--dataset", c.overrides.dataset, "dataset name used in artifact names");
  sub->add_option("--log-level", c.log_level, "trace, debug, info, warn, error or off");
  if (!training_flags) return;
  sub->add_option("--model", c.overrides.model, "AE, VAE, PAAE or PAVAE");
  sub->add_option("--epochs", c.overrides.epochs, "training epochs");
  sub->add_option("--lr", c.overrides.lr, "Adam learning rate");
  sub->add_option("--batch-size", c.overrides.batch_size, "mini-batch size");
  sub->add_option("--beta", c.overrides.beta, "KL weight for variational models");
  sub->add_option("--schedule", c.overrides.schedule, "none, step or smooth");
  sub->add_option("--space", c.overrides.space, "z, mu or a");
  sub->add_option("--classifier", c.overrides.classifier, "lr or rf");
  sub->add_option("--repeats", c.overrides.repeats, "external validation repeats");
}

paae::ExperimentConfig resolve(const Common& c) {
  paae::ExperimentConfig cfg;
  if (!c.config.empty()) {
    if (!std::filesystem::is_regular_file(c.config))
      throw paae::ConfigError("config file not found: " + c.config);
    cfg = paae::load_config(c.config);
  }
  paae::apply_overrides(cfg, c.overrides);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("paae"));
  spdlog::set_pattern("[%l] %v");

  CLI::App app{"Pathway-constrained autoencoders: train, grid search, validate, interpret"};
  app.require_subcommand(1);

  Common common;
  paae::SynthConfig synth;
  std::string synth_dir = "synthetic";
  std::string checkpoint;

  auto* s = app.add_subcommand("synth", "write a pathway-structured synthetic fixture");
  s->add_option("-o,--output", synth_dir, "directory for the fixture");
  s->add_option("--seed", synth.seed, "generator seed");
  s->add_option("--classes", synth.classes);
  s->add_option("--factors", synth.factors);
  s->add_option("--pathways", synth.pathways);
  s->add_option("--genes", synth.genes);
  s->add_option("--off-pathway", synth.off_pathway, "genes outside every pathway");
  s->add_option("--train", synth.train_samples);
  s->add_option("--test", synth.test_samples);
  s->add_option("--separation", synth.separation);
  s->add_option("--noise", synth.noise);
  s->add_option("--test-scale", synth.test_scale);
  s->add_option("--test-shift", synth.test_shift);
  s->add_option("--survival-effect", synth.survival_effect);
  s->add_option("--log-level", common.log_level);

  auto* train = app.add_subcommand("train", "fit one model and write a checkpoint");
  add_common(train, common, true);
  auto* grid = app.add_subcommand("gridsearch", "k-fold grid search on the training set");
  add_common(grid, common, true);
  auto* validate = app.add_subcommand("validate", "repeated external validation");
  add_common(validate, common, true);
  auto* interpret = app.add_subcommand("interpret", "pathway-space interpretability artifacts");
  add_common(interpret, common, false);
  interpret->add_option("--checkpoint", checkpoint, "pathway model checkpoint")->required();
  auto* survival = app.add_subcommand("survival", "KM/logrank on the top ANPW genes");
  add_common(survival, common, false);
  survival->add_option("--checkpoint", checkpoint, "pathway model checkpoint")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  spdlog::set_level(spdlog::level::from_str(common.log_level));

  try {
    if (*s) {
      paae::cmd_synth(synth, synth_dir);
    } else if (*train) {
      paae::cmd_train(resolve(common));
    } else if (*grid) {
      paae::cmd_gridsearch(resolve(common));
    } else if (*validate) {
      paae::cmd_validate(resolve(common));
    } else if (*interpret) {
      paae::cmd_interpret(resolve(common), checkpoint);
    } else if (*survival) {
      paae::cmd_survival(resolve(common), checkpoint);
    }
  } catch (const paae::Error& e) {
    spdlog::error("{}", e.what());
    return paae::exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
