#include "kidlab/evalx.hpp"

#include <atomic>
#include <mutex>
#include <thread>

namespace kidlab {

namespace {

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  int n_workers = std::min(threads, n);
  for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

struct ExampleScore {
  PerExampleEval detail;
  int64_t tf_errors = 0, tf_positions = 0;
  int64_t fr_errors = 0, fr_positions = 0;
};

}  // namespace

uint64_t ts_db_seed(uint64_t db_seed, int j) {
  return j == 0 ? db_seed : hash_seed(db_seed, uint64_t(j));
}

bool prediction_matches(const std::string& predicted_sql, const Example& ex,
                        const Database& db) {
  auto parsed = parse_sql(predicted_sql);
  if (std::holds_alternative<ParseError>(parsed)) return false;
  auto pred_result = execute(std::get<QueryAst>(parsed), db);
  if (std::holds_alternative<ExecError>(pred_result)) return false;
  auto gold_result = execute(ex.gold_sql, db);
  if (std::holds_alternative<ExecError>(gold_result))
    throw std::logic_error("gold query failed to execute: " + ex.gold_sql_text);
  return result_sets_equal(std::get<ResultSet>(pred_result),
                           std::get<ResultSet>(gold_result));
}

std::optional<double> exaccerr_percent(double teacher_forced_rate,
                                       double free_run_rate) {
  if (teacher_forced_rate <= 0.0) return std::nullopt;
  return 100.0 * (free_run_rate - teacher_forced_rate) / teacher_forced_rate;
}

MetricsReport evaluate(const ParamStore<float>& params, const ToyWorld& world,
                       const Vocabulary& vocab, const EvalOptions& opts) {
  if (world.eval.empty())
    throw std::invalid_argument("eval split is empty");
  if (opts.ts_k < 2) throw std::invalid_argument("ts_k must be >= 2");

  const int n = int(world.eval.size());
  std::vector<ExampleScore> scores(static_cast<size_t>(n));

  parallel_for(n, opts.threads, [&](int i) {
    const Example& ex = world.eval[size_t(i)];
    const Schema& schema = world.schemas[size_t(ex.schema_index)];
    ExampleScore& score = scores[size_t(i)];
    score.detail.example_index = i;

    TokenSequence prompt =
        vocab.encode(serialize_prompt(schema, ex.question), SeqRole::Prompt);
    TokenSequence gold = vocab.encode(ex.gold_sql_text, SeqRole::Output);
    int cap = std::min(kMaxOutputTokens, params.config.max_len - prompt.size());

    TokenSequence predicted =
        generate(params, prompt, GenMode::Greedy(), cap);
    score.detail.predicted_sql = vocab.decode(predicted);
    score.detail.parse_ok = std::holds_alternative<QueryAst>(
        parse_sql(score.detail.predicted_sql));

    Database db0 = build_database(schema, ts_db_seed(ex.db_seed, 0));
    score.detail.ex_ok = prediction_matches(score.detail.predicted_sql, ex, db0);
    score.detail.ts_ok = score.detail.ex_ok;
    if (opts.ex_only) return;
    for (int j = 1; j < opts.ts_k && score.detail.ts_ok; ++j) {
      Database dbj = build_database(schema, ts_db_seed(ex.db_seed, j));
      score.detail.ts_ok = prediction_matches(score.detail.predicted_sql, ex, dbj);
    }

    // Teacher-forced per-token error: argmax under the gold prefix.
    std::vector<StepDistribution> steps = forward(params, prompt, gold);
    int tf_len = std::min(gold.size(), opts.horizon);
    for (int t = 0; t < tf_len; ++t) {
      const std::vector<double>& probs = steps[size_t(t)].probs;
      int arg = 0;
      for (int v = 1; v < int(probs.size()); ++v)
        if (probs[size_t(v)] > probs[size_t(arg)]) arg = v;
      score.tf_errors += arg != gold[t] ? 1 : 0;
    }
    score.tf_positions += tf_len;

    // Free-run per-token error against the aligned gold positions; length
    // mismatch beyond the shorter side counts as errors.
    int fr_len =
        std::min(opts.horizon, std::max(predicted.size(), gold.size()));
    for (int t = 0; t < fr_len; ++t) {
      bool err = t >= predicted.size() || t >= gold.size() ||
                 predicted[t] != gold[t];
      score.fr_errors += err ? 1 : 0;
    }
    score.fr_positions += fr_len;
  });

  MetricsReport report;
  int64_t ex_hits = 0, ts_hits = 0;
  int64_t tf_err = 0, tf_pos = 0, fr_err = 0, fr_pos = 0;
  for (ExampleScore& s : scores) {
    ex_hits += s.detail.ex_ok ? 1 : 0;
    ts_hits += s.detail.ts_ok ? 1 : 0;
    tf_err += s.tf_errors;
    tf_pos += s.tf_positions;
    fr_err += s.fr_errors;
    fr_pos += s.fr_positions;
    report.per_example.push_back(std::move(s.detail));
  }
  report.ex = double(ex_hits) / n;
  report.ts = double(ts_hits) / n;
  double eps = tf_pos > 0 ? double(tf_err) / double(tf_pos) : 0.0;
  double free_rate = fr_pos > 0 ? double(fr_err) / double(fr_pos) : 0.0;
  report.exaccerr = exaccerr_percent(eps, free_rate);
  return report;
}

double eval_ex(const ParamStore<float>& params, const ToyWorld& world,
               const Vocabulary& vocab, const EvalOptions& opts) {
  return evaluate(params, world, vocab, opts).ex;
}

double eval_ts(const ParamStore<float>& params, const ToyWorld& world,
               const Vocabulary& vocab, const EvalOptions& opts) {
  return evaluate(params, world, vocab, opts).ts;
}

std::optional<double> eval_exaccerr(const ParamStore<float>& params,
                                    const ToyWorld& world,
                                    const Vocabulary& vocab,
                                    const EvalOptions& opts) {
  return evaluate(params, world, vocab, opts).exaccerr;
}

}  // namespace kidlab
