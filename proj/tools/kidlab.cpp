// Experiment driver: deterministic subcommands chaining world generation,
// teacher training, distillation, evaluation and report aggregation.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "kidlab/harness.hpp"

using namespace kidlab;

int main(int argc, char** argv) {
  CLI::App app{"kidlab: knowledge-distillation laboratory for a synthetic "
               "text-to-SQL task"};
  app.require_subcommand(1);

  std::string spec_path;
  std::string run_id;
  std::string target;
  std::string output_dir;
  bool force = false;
  int threads = 1;
  std::optional<uint64_t> seed_override;

  auto add_common = [&](CLI::App* cmd, bool needs_spec) {
    if (needs_spec)
      cmd->add_option("--spec", spec_path, "experiment spec JSON file")
          ->required();
    cmd->add_flag("--force", force, "overwrite existing outputs");
    cmd->add_option("--threads", threads, "worker threads (default 1)");
    cmd->add_option("--seed-override", seed_override,
                    "replace the seed of the addressed stage");
  };

  CLI::App* gen = app.add_subcommand("gen-world", "generate the toy world");
  add_common(gen, true);

  CLI::App* teach =
      app.add_subcommand("train-teacher", "SFT-train and gate the teacher");
  add_common(teach, true);

  CLI::App* distill =
      app.add_subcommand("distill", "execute one distillation run");
  add_common(distill, true);
  distill->add_option("--run", run_id, "run id from the spec")->required();

  CLI::App* eval = app.add_subcommand(
      "evaluate", "evaluate a stored checkpoint on the eval split");
  add_common(eval, true);
  eval->add_option("--target", target, "'teacher' or a run id")->required();

  CLI::App* report =
      app.add_subcommand("report", "aggregate run manifests into reports");
  report->add_option("--output-dir", output_dir, "experiment output directory")
      ->required();

  CLI::App* init = app.add_subcommand(
      "init-spec", "write the reference experiment spec to a file");
  init->add_option("--spec", spec_path, "destination spec path")->required();
  init->add_option("--output-dir", output_dir,
                   "output_dir recorded inside the spec");
  init->add_flag("--force", force, "overwrite an existing spec");

  CLI11_PARSE(app, argc, argv);

  HarnessOptions options;
  options.threads = threads;
  options.force = force;
  options.seed_override = seed_override;

  try {
    if (gen->parsed()) {
      cmd_gen_world(load_spec(spec_path), options);
    } else if (teach->parsed()) {
      cmd_train_teacher(load_spec(spec_path), options);
    } else if (distill->parsed()) {
      cmd_distill(load_spec(spec_path), run_id, options);
    } else if (eval->parsed()) {
      cmd_evaluate(load_spec(spec_path), target, options);
    } else if (report->parsed()) {
      cmd_report(output_dir, options);
    } else if (init->parsed()) {
      if (!force && std::ifstream(spec_path).good())
        throw std::runtime_error(spec_path +
                                 " already exists (use --force to replace)");
      ExperimentSpec spec = default_experiment_spec(
          output_dir.empty() ? "out" : output_dir);
      save_spec(spec, spec_path);
      std::cout << "wrote " << spec_path << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
