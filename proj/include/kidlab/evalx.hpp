#pragma once

#include <optional>
#include <string>
#include <vector>

#include "kidlab/model.hpp"
#include "kidlab/tokenizer.hpp"
#include "kidlab/toysql.hpp"

namespace kidlab {

struct PerExampleEval {
  int example_index = 0;
  std::string predicted_sql;
  bool parse_ok = false;
  bool ex_ok = false;
  bool ts_ok = false;
};

struct MetricsReport {
  double ex = 0.0;
  double ts = 0.0;
  std::optional<double> exaccerr;  // percent; empty when the teacher-forced
                                   // error rate is zero (degenerate)
  std::vector<PerExampleEval> per_example;
  std::string decode_mode = "greedy";
};

struct EvalOptions {
  int ts_k = 8;                     // databases per example for TS
  int horizon = kMaxOutputTokens;   // ExAccErr scoring horizon
  int threads = 1;
  bool ex_only = false;  // skip TS and ExAccErr (mid-training eval hook)
};

// Greedy-decodes every eval example once and scores EX, TS and ExAccErr from
// that single set of predictions. Model failures score zero, never abort.
MetricsReport evaluate(const ParamStore<float>& params, const ToyWorld& world,
                       const Vocabulary& vocab, const EvalOptions& opts = {});

double eval_ex(const ParamStore<float>& params, const ToyWorld& world,
               const Vocabulary& vocab, const EvalOptions& opts = {});
double eval_ts(const ParamStore<float>& params, const ToyWorld& world,
               const Vocabulary& vocab, const EvalOptions& opts = {});
std::optional<double> eval_exaccerr(const ParamStore<float>& params,
                                    const ToyWorld& world,
                                    const Vocabulary& vocab,
                                    const EvalOptions& opts = {});

// The j-th database seed for test-suite scoring; j = 0 is the example's own
// database so TS can never exceed EX.
uint64_t ts_db_seed(uint64_t db_seed, int j);

// Scores one predicted SQL string against an example's gold query on one
// database. Unparseable or erroring predictions score false.
bool prediction_matches(const std::string& predicted_sql, const Example& ex,
                        const Database& db);

// ExAccErr = 100 * (free_run_rate - teacher_forced_rate) / teacher_forced_rate.
std::optional<double> exaccerr_percent(double teacher_forced_rate,
                                       double free_run_rate);

}  // namespace kidlab
