#pragma once

#include <functional>
#include <string>
#include <vector>

#include "kidlab/divergence.hpp"
#include "kidlab/imperfect.hpp"
#include "kidlab/model.hpp"
#include "kidlab/tokenizer.hpp"
#include "kidlab/toysql.hpp"

namespace kidlab {

enum class Algorithm { SFT, FKD, RKD, FDistill, ImitKD, GKD, KID };

const char* algorithm_name(Algorithm a);
Algorithm algorithm_from_name(const std::string& name);

// Default algorithm/divergence pairings; GKD stays overridable to FKL/JSD.
DivergenceKind default_divergence(Algorithm a);

struct RunSeeds {
  uint64_t data = 0;
  uint64_t init = 0;
  uint64_t sampling = 0;
};

struct DistillConfig {
  std::string id;
  Algorithm algorithm = Algorithm::SFT;
  DivergenceKind divergence = DivergenceKind::RKL;
  double alpha = kDefaultMaskAlpha;  // KID masking ratio
  double mle_weight = 1.0;           // lambda
  double kd_weight = 1.0;
  int steps = 3000;
  int batch_size = 16;
  double lr = 3e-3;
  RunSeeds seeds;
  MaskStrategy mask_strategy = MaskStrategy::Random;
  bool kid_masking_only = false;  // ablation: skip the fill stage
  int eval_interval = 500;

  static DistillConfig defaults_for(Algorithm a);
};

struct LatencyLedger {
  double wall_seconds = 0.0;
  int64_t forward_passes = 0;
  int64_t generated_tokens = 0;
  double relative_to_sft = 0.0;  // filled by reporting
};

struct EvalPoint {
  int step = 0;
  double ex = 0.0;
};

struct TrainResult {
  ParamStore<float> params;
  LatencyLedger ledger;
  std::vector<double> losses;  // one entry per step
  std::vector<EvalPoint> eval_points;
  bool aborted = false;  // non-finite loss; params hold the last good state
};

// Pre-tokenized training pair.
struct TrainItem {
  TokenSequence prompt;
  TokenSequence gold;
};

TrainItem tokenize_example(const Example& ex, const Schema& schema,
                           const Vocabulary& vocab);
std::vector<TrainItem> tokenize_split(const std::vector<Example>& split,
                                      const std::vector<Schema>& schemas,
                                      const Vocabulary& vocab);

struct TrainOptions {
  int threads = 1;
  // Invoked at every eval_interval and after the last step; its cost is
  // excluded from the wall-clock ledger.
  std::function<double(int step, const ParamStore<float>& params)> eval_hook;
};

// Pure MLE on gold outputs; the latency reference run.
TrainResult train_sft(const ToyWorld& world, const Vocabulary& vocab,
                      const ModelConfig& student_config,
                      const DistillConfig& run,
                      const TrainOptions& options = {});

// FKD / RKD: teacher and student both teacher-forced on (x, y), divergence
// plus the auxiliary MLE loss, teacher distributions fresh every batch.
TrainResult train_fixed_data_kd(const ToyWorld& world, const Vocabulary& vocab,
                                const ParamStore<float>& teacher,
                                const ModelConfig& student_config,
                                const DistillConfig& run,
                                const TrainOptions& options = {});

// GKD / ImitKD / f-distill: model-generated data per Table-1 semantics.
TrainResult train_onpolicy_kd(const ToyWorld& world, const Vocabulary& vocab,
                              const ParamStore<float>& teacher,
                              const ModelConfig& student_config,
                              const DistillConfig& run,
                              const TrainOptions& options = {});

// KID: imperfect data built from the current student each batch; RKL against
// the teacher on (x, y_hat) plus MLE toward gold tokens under the imperfect
// context (one cached student forward serves both losses).
TrainResult train_kid(const ToyWorld& world, const Vocabulary& vocab,
                      const ParamStore<float>& teacher,
                      const ModelConfig& student_config,
                      const DistillConfig& run,
                      const TrainOptions& options = {});

// Dispatch on run.algorithm; teacher may be null only for SFT.
TrainResult run_distill(const ToyWorld& world, const Vocabulary& vocab,
                        const ParamStore<float>* teacher,
                        const ModelConfig& student_config,
                        const DistillConfig& run,
                        const TrainOptions& options = {});

// Deterministic batch sampling and the ImitKD gold/on-policy coin, exposed
// for direct tests.
std::vector<int> batch_indices_for_step(const RunSeeds& seeds, int step,
                                        int batch_size, int train_size);
bool imitkd_uses_gold(const RunSeeds& seeds, int step, int row);

}  // namespace kidlab
