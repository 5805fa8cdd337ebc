#pragma once

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "kidlab/distill.hpp"
#include "kidlab/evalx.hpp"
#include "kidlab/model.hpp"
#include "kidlab/toysql.hpp"

namespace kidlab {

struct WorldSpec {
  uint64_t seed = 7;
  int n_train = 2000;
  int n_eval = 300;
};

struct TeacherSpec {
  ModelConfig config;  // vocab_size is patched from the vocabulary
  int steps = 5000;
  int batch_size = 16;
  double lr = 3e-3;
  uint64_t seed = 5;
};

struct EvalSpec {
  int ts_k = 8;
  int exaccerr_horizon = kMaxOutputTokens;
};

// Everything one experiment needs, with all seeds explicit; round-trips
// through its JSON file form.
struct ExperimentSpec {
  WorldSpec world;
  TeacherSpec teacher;
  ModelConfig student;
  std::vector<DistillConfig> runs;
  EvalSpec eval;
  std::string output_dir = "out";
};

ExperimentSpec spec_from_json_text(const std::string& text);
std::string spec_to_json_text(const ExperimentSpec& spec);
ExperimentSpec load_spec(const std::string& path);
void save_spec(const ExperimentSpec& spec, const std::string& path);

// The reference recipe: seeded world, preset teacher and student, the full
// algorithm roster at three student seeds plus the alpha sweep.
ExperimentSpec default_experiment_spec(const std::string& output_dir);
RunSeeds derive_run_seeds(uint64_t student_seed);

struct QualityGateFailedError : std::runtime_error {
  QualityGateFailedError(double achieved, double required)
      : std::runtime_error("teacher quality gate failed: EX " +
                           std::to_string(achieved) + " < " +
                           std::to_string(required)),
        achieved_ex(achieved) {}
  double achieved_ex;
};

struct MissingSftBaselineError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr double kTeacherQualityGate = 0.7;

struct HarnessOptions {
  int threads = 1;
  bool force = false;
  std::optional<uint64_t> seed_override;
  std::ostream* log = &std::cout;
};

// Output layout under spec.output_dir:
//   worlds/world.json, worlds/vocab.json
//   checkpoints/teacher.ckpt, checkpoints/teacher_report.json
//   runs/<id>/{student.ckpt, manifest.json, report.json}
//   reports/{aggregate.csv, table.txt, curves.csv}
std::string world_path(const ExperimentSpec& spec);
std::string teacher_checkpoint_path(const ExperimentSpec& spec);
std::string run_dir(const ExperimentSpec& spec, const std::string& run_id);

// Writes the world and vocabulary files; refuses to overwrite without force.
std::string cmd_gen_world(const ExperimentSpec& spec,
                          const HarnessOptions& options = {});

struct TeacherOutcome {
  std::string checkpoint_path;
  std::string report_path;
  MetricsReport report;
  double wall_seconds = 0.0;
};

// SFT-trains the teacher preset and evaluates it; throws
// QualityGateFailedError (after writing artifacts) below the EX gate.
TeacherOutcome cmd_train_teacher(const ExperimentSpec& spec,
                                 const HarnessOptions& options = {});

struct RunOutcome {
  std::string checkpoint_path;
  std::string manifest_path;
  std::string report_path;
  MetricsReport report;
  LatencyLedger ledger;
  std::vector<EvalPoint> eval_points;
  bool aborted = false;
};

// Executes one named DistillConfig against the stored world and teacher.
RunOutcome cmd_distill(const ExperimentSpec& spec, const std::string& run_id,
                       const HarnessOptions& options = {});

// Evaluates a stored checkpoint ("teacher" or a run id) on the eval split.
MetricsReport cmd_evaluate(const ExperimentSpec& spec,
                           const std::string& target,
                           const HarnessOptions& options = {});

struct ReportOutcome {
  std::string aggregate_csv_path;
  std::string table_path;
  std::string curves_path;
  std::string table_text;
};

// Joins all run manifests/reports into the aggregate CSV, the plain-text
// comparison table and the accuracy-vs-steps curve series.
ReportOutcome cmd_report(const std::string& output_dir,
                         const HarnessOptions& options = {});

uint64_t fnv1a_file(const std::string& path);
std::string file_hash_hex(const std::string& path);

std::string metrics_report_to_json_text(const MetricsReport& report);

}  // namespace kidlab
