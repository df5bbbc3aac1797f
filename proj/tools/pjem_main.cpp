#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pjem/commands.hpp"

namespace {

struct CliState {
  pjem::CommandOptions options;
  std::string config_file;
  std::vector<std::string> overrides;
};

void add_config_flags(CLI::App* cmd, CliState& state) {
  cmd->add_option("--config", state.config_file, "JSON config file of flat namespaced keys");
  cmd->add_option("--set", state.overrides, "KEY=VALUE override, highest precedence")->take_all();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pointjem: segmented-embedding self-supervised learning on point clouds"};
  app.require_subcommand(1);

  CliState state;
  std::string probe_mode;
  double label_fraction = -1.0;

  CLI::App* gen = app.add_subcommand("gen", "generate a synthetic shape dataset");
  gen->add_option("--out", state.options.out, "output dataset directory")->required();
  gen->add_option("--classes", state.options.classes, "number of shape classes (max 8)");
  gen->add_option("--per-class", state.options.per_class, "clouds per class");
  gen->add_option("--points", state.options.points, "points per cloud");
  gen->add_option("--seed", state.options.seed, "generation seed");

  CLI::App* pretrain = app.add_subcommand("pretrain", "two-view self-supervised pre-training");
  pretrain->add_option("--data", state.options.data_dir, "dataset directory")->required();
  pretrain->add_option("--out", state.options.checkpoint, "checkpoint output path")->required();
  pretrain->add_option("--log", state.options.log, "training log CSV path")->required();
  add_config_flags(pretrain, state);

  CLI::App* probe = app.add_subcommand("probe", "evaluate frozen representations");
  probe->add_option("--data", state.options.data_dir, "dataset directory")->required();
  probe->add_option("--ckpt", state.options.checkpoint, "checkpoint path")->required();
  probe->add_option("--mode", probe_mode, "linear|knn");
  probe->add_option("--label-fraction", label_fraction, "labeled fraction of the train split, in (0,1]");
  probe->add_option("--out", state.options.out, "probe result JSON path");
  add_config_flags(probe, state);

  CLI::App* diagnose = app.add_subcommand("diagnose", "mutual-information and collapse report");
  diagnose->add_option("--data", state.options.data_dir, "dataset directory")->required();
  diagnose->add_option("--ckpt", state.options.checkpoint, "checkpoint path")->required();
  diagnose->add_option("--out", state.options.out, "report JSON path")->required();
  add_config_flags(diagnose, state);

  CLI::App* embed = app.add_subcommand("embed", "export representations as CSV");
  embed->add_option("--data", state.options.data_dir, "dataset directory")->required();
  embed->add_option("--ckpt", state.options.checkpoint, "checkpoint path")->required();
  embed->add_option("--out", state.options.out, "embedding CSV path")->required();
  add_config_flags(embed, state);

  CLI11_PARSE(app, argc, argv);

  // Dedicated flags outrank --set entries, which outrank the file.
  if (!probe_mode.empty()) state.overrides.push_back("probe.mode=" + probe_mode);
  if (label_fraction >= 0.0) state.overrides.push_back("probe.label_fraction=" + std::to_string(label_fraction));

  pjem::RunConfig config;
  try {
    config = state.config_file.empty() ? pjem::parse_config_text("", state.overrides)
                                       : pjem::parse_config(state.config_file, state.overrides);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return pjem::dispatch(app.get_subcommands().front()->get_name(), state.options, config);
}
