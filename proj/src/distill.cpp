#include "kidlab/distill.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

namespace kidlab {

const char* algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::SFT: return "sft";
    case Algorithm::FKD: return "fkd";
    case Algorithm::RKD: return "rkd";
    case Algorithm::FDistill: return "f-distill";
    case Algorithm::ImitKD: return "imitkd";
    case Algorithm::GKD: return "gkd";
    case Algorithm::KID: return "kid";
  }
  return "?";
}

Algorithm algorithm_from_name(const std::string& name) {
  if (name == "sft") return Algorithm::SFT;
  if (name == "fkd") return Algorithm::FKD;
  if (name == "rkd") return Algorithm::RKD;
  if (name == "f-distill" || name == "fdistill") return Algorithm::FDistill;
  if (name == "imitkd") return Algorithm::ImitKD;
  if (name == "gkd") return Algorithm::GKD;
  if (name == "kid") return Algorithm::KID;
  throw std::invalid_argument("unknown algorithm: " + name);
}

DivergenceKind default_divergence(Algorithm a) {
  switch (a) {
    case Algorithm::SFT: return DivergenceKind::RKL;  // unused by SFT
    case Algorithm::FKD: return DivergenceKind::FKL;
    case Algorithm::RKD: return DivergenceKind::RKL;
    case Algorithm::FDistill: return DivergenceKind::TVD;
    case Algorithm::ImitKD: return DivergenceKind::FKL;
    case Algorithm::GKD: return DivergenceKind::RKL;
    case Algorithm::KID: return DivergenceKind::RKL;
  }
  return DivergenceKind::RKL;
}

DistillConfig DistillConfig::defaults_for(Algorithm a) {
  DistillConfig c;
  c.algorithm = a;
  c.divergence = default_divergence(a);
  return c;
}

TrainItem tokenize_example(const Example& ex, const Schema& schema,
                           const Vocabulary& vocab) {
  TrainItem item;
  item.prompt = vocab.encode(serialize_prompt(schema, ex.question),
                             SeqRole::Prompt);
  item.gold = vocab.encode(ex.gold_sql_text, SeqRole::Output);
  return item;
}

std::vector<TrainItem> tokenize_split(const std::vector<Example>& split,
                                      const std::vector<Schema>& schemas,
                                      const Vocabulary& vocab) {
  std::vector<TrainItem> items;
  items.reserve(split.size());
  for (const Example& ex : split)
    items.push_back(
        tokenize_example(ex, schemas[size_t(ex.schema_index)], vocab));
  return items;
}

std::vector<int> batch_indices_for_step(const RunSeeds& seeds, int step,
                                        int batch_size, int train_size) {
  Rng rng(hash_seed(seeds.data, 0xba7c, uint64_t(step)));
  std::vector<int> indices(static_cast<size_t>(batch_size));
  for (int& idx : indices) idx = int(rng.next_below(uint64_t(train_size)));
  return indices;
}

bool imitkd_uses_gold(const RunSeeds& seeds, int step, int row) {
  Rng rng(hash_seed(seeds.data, 0x1517, uint64_t(step), uint64_t(row)));
  return rng.next_bool(0.5);
}

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
  pool.reserve(size_t(n_workers));
  for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// One student row of the packed step: a context sequence with an optional
// divergence attachment and an optional cross-entropy attachment. Gradients
// are accumulated per row and reduced in row order, which keeps training
// bit-identical for any thread count.
struct LossRow {
  std::vector<int> tokens;  // prompt ++ target[:-1]
  int prompt_len = 0;
  int n_out = 0;            // |target|
  bool kd = false;
  std::vector<int> mle_targets;  // size n_out, or empty
  Mat<double> teacher_probs;     // [n_out, V] when kd
  PassCounter counter;
  double loss_kd = 0.0;
  double loss_mle = 0.0;
  Gradients<float> grads;
};

LossRow make_row(const TokenSequence& prompt, const std::vector<int>& target) {
  LossRow row;
  row.prompt_len = prompt.size();
  row.n_out = int(target.size());
  row.tokens = prompt.ids;
  row.tokens.insert(row.tokens.end(), target.begin(), target.end() - 1);
  return row;
}

int generation_cap(const ModelConfig& config, const TokenSequence& prompt) {
  int cap = std::min(kMaxOutputTokens, config.max_len - prompt.size());
  if (cap < 1)
    throw LengthExceededError("prompt leaves no room for generation");
  return cap;
}

struct Engine {
  const ToyWorld& world;
  const Vocabulary& vocab;
  const ParamStore<float>* teacher;
  const DistillConfig& run;
  const TrainOptions& options;

  std::vector<TrainItem> items;
  ParamStore<float> student;
  AdamState<float> adam;
  std::vector<TokenSequence> teacher_samples;  // f-distill, fixed upfront
  TrainResult result;

  Engine(const ToyWorld& world, const Vocabulary& vocab,
         const ParamStore<float>* teacher, const ModelConfig& student_config,
         const DistillConfig& run, const TrainOptions& options)
      : world(world), vocab(vocab), teacher(teacher), run(run), options(options) {
    if (world.train.empty())
      throw std::invalid_argument("world has no training examples");
    if (run.batch_size < 1 || run.steps < 0)
      throw std::invalid_argument("invalid batch size or step count");
    if (run.algorithm != Algorithm::SFT && teacher == nullptr)
      throw std::invalid_argument("distillation requires a teacher");
    items = tokenize_split(world.train, world.schemas, vocab);
    student = init_params<float>(student_config, run.seeds.init);
    adam = AdamState<float>::init(student_config);
  }

  void precompute_teacher_samples() {
    teacher_samples.resize(items.size());
    std::vector<PassCounter> counters(items.size());
    parallel_for(int(items.size()), options.threads, [&](int i) {
      GenMode mode = GenMode::Sample(
          1.0, hash_seed(run.seeds.sampling, 0xfd15, uint64_t(i)));
      teacher_samples[size_t(i)] =
          generate(*teacher, items[size_t(i)].prompt, mode,
                   generation_cap(teacher->config, items[size_t(i)].prompt),
                   &counters[size_t(i)]);
    });
    for (const PassCounter& c : counters) {
      result.ledger.forward_passes += c.forward_passes;
      result.ledger.generated_tokens += c.generated_tokens;
    }
  }

  // Builds the rows for one batch element; appends into rows.
  void build_element_rows(int step, int elem, int example_idx,
                          std::vector<LossRow>& rows) {
    const TrainItem& item = items[size_t(example_idx)];
    switch (run.algorithm) {
      case Algorithm::SFT: {
        LossRow row = make_row(item.prompt, item.gold.ids);
        row.mle_targets = item.gold.ids;
        rows.push_back(std::move(row));
        return;
      }
      case Algorithm::FKD:
      case Algorithm::RKD: {
        LossRow row = make_row(item.prompt, item.gold.ids);
        row.kd = true;
        row.mle_targets = item.gold.ids;
        rows.push_back(std::move(row));
        return;
      }
      case Algorithm::GKD: {
        GenMode mode = GenMode::Sample(
            1.0, hash_seed(run.seeds.sampling, uint64_t(step), uint64_t(elem), 1));
        PassCounter counter;
        TokenSequence sampled =
            generate(student, item.prompt, mode,
                     generation_cap(student.config, item.prompt), &counter);
        LossRow kd_row = make_row(item.prompt, sampled.ids);
        kd_row.kd = true;
        kd_row.counter = counter;
        rows.push_back(std::move(kd_row));
        LossRow mle_row = make_row(item.prompt, item.gold.ids);
        mle_row.mle_targets = item.gold.ids;
        rows.push_back(std::move(mle_row));
        return;
      }
      case Algorithm::ImitKD: {
        if (imitkd_uses_gold(run.seeds, step, elem)) {
          LossRow row = make_row(item.prompt, item.gold.ids);
          row.kd = true;
          row.mle_targets = item.gold.ids;
          rows.push_back(std::move(row));
          return;
        }
        GenMode mode = GenMode::Sample(
            1.0, hash_seed(run.seeds.sampling, uint64_t(step), uint64_t(elem), 2));
        PassCounter counter;
        TokenSequence sampled =
            generate(student, item.prompt, mode,
                     generation_cap(student.config, item.prompt), &counter);
        LossRow kd_row = make_row(item.prompt, sampled.ids);
        kd_row.kd = true;
        kd_row.counter = counter;
        rows.push_back(std::move(kd_row));
        LossRow mle_row = make_row(item.prompt, item.gold.ids);
        mle_row.mle_targets = item.gold.ids;
        rows.push_back(std::move(mle_row));
        return;
      }
      case Algorithm::FDistill: {
        // First half of the batch trains on the fixed teacher samples, the
        // second half on fresh student samples.
        std::vector<int> data;
        PassCounter counter;
        if (elem < run.batch_size / 2) {
          data = teacher_samples[size_t(example_idx)].ids;
        } else {
          GenMode mode = GenMode::Sample(
              1.0,
              hash_seed(run.seeds.sampling, uint64_t(step), uint64_t(elem), 3));
          data = generate(student, item.prompt, mode,
                          generation_cap(student.config, item.prompt), &counter)
                     .ids;
        }
        LossRow kd_row = make_row(item.prompt, data);
        kd_row.kd = true;
        kd_row.counter = counter;
        rows.push_back(std::move(kd_row));
        LossRow mle_row = make_row(item.prompt, item.gold.ids);
        mle_row.mle_targets = item.gold.ids;
        rows.push_back(std::move(mle_row));
        return;
      }
      case Algorithm::KID: {
        uint64_t seed =
            hash_seed(run.seeds.sampling, uint64_t(step), uint64_t(elem), 4);
        PassCounter counter;
        std::vector<int> rewritten;
        if (run.kid_masking_only) {
          std::vector<int> positions = select_mask_positions(
              run.mask_strategy, run.alpha, item.gold, student, item.prompt,
              seed, &counter);
          rewritten = item.gold.ids;
          for (int pos : positions) rewritten[size_t(pos)] = kMaskId;
        } else {
          ImperfectSample sample =
              make_imperfect(run.mask_strategy, run.alpha, student, item.prompt,
                             item.gold, seed, GenMode::Greedy(), &counter);
          rewritten = sample.rewritten.ids;
        }
        // One cached forward serves both losses: divergence on the imperfect
        // context plus cross-entropy toward the gold tokens under it.
        LossRow row = make_row(item.prompt, rewritten);
        row.kd = true;
        row.mle_targets = item.gold.ids;
        row.counter = counter;
        rows.push_back(std::move(row));
        return;
      }
    }
  }

  void process_row(LossRow& row) {
    const int vocab_size = student.config.vocab_size;

    if (row.kd) {
      Mat<float> t_logits = forward_logits<float>(
          *teacher, std::span<const int>(row.tokens), nullptr, &row.counter);
      row.teacher_probs.resize(row.n_out, vocab_size);
      for (int t = 0; t < row.n_out; ++t) {
        int pos = row.prompt_len - 1 + t;
        std::vector<double> z(static_cast<size_t>(vocab_size));
        for (int i = 0; i < vocab_size; ++i) z[size_t(i)] = double(t_logits(pos, i));
        std::vector<double> probs = softmax(z);
        for (int i = 0; i < vocab_size; ++i) row.teacher_probs(t, i) = probs[size_t(i)];
      }
    }

    ForwardCache<float> cache;
    Mat<float> logits = forward_logits<float>(
        student, std::span<const int>(row.tokens), &cache, &row.counter);

    const double kd_scale =
        run.kd_weight / (double(run.batch_size) * row.n_out);
    const double mle_scale =
        run.mle_weight / (double(run.batch_size) * row.n_out);

    Mat<float> dlogits = Mat<float>::Zero(logits.rows(), logits.cols());
    for (int t = 0; t < row.n_out; ++t) {
      int pos = row.prompt_len - 1 + t;
      std::vector<double> z(static_cast<size_t>(vocab_size));
      for (int i = 0; i < vocab_size; ++i) z[size_t(i)] = double(logits(pos, i));
      std::vector<double> q = softmax(z);

      std::vector<double> dz(size_t(vocab_size), 0.0);
      if (row.kd && run.kd_weight != 0.0) {
        std::span<const double> p(row.teacher_probs.data() +
                                      size_t(t) * size_t(vocab_size),
                                  size_t(vocab_size));
        row.loss_kd += pointwise(run.divergence, p, q) / row.n_out;
        std::vector<double> g = divergence_grad(run.divergence, p, z);
        for (int i = 0; i < vocab_size; ++i) dz[size_t(i)] += kd_scale * g[size_t(i)];
      }
      if (!row.mle_targets.empty() && run.mle_weight != 0.0) {
        int target = row.mle_targets[size_t(t)];
        row.loss_mle += -std::log(std::max(q[size_t(target)], 1e-300)) / row.n_out;
        for (int i = 0; i < vocab_size; ++i)
          dz[size_t(i)] += mle_scale * (q[size_t(i)] - (i == target ? 1.0 : 0.0));
      }
      for (int i = 0; i < vocab_size; ++i) dlogits(pos, i) = float(dz[size_t(i)]);
    }

    row.grads = backward(student, cache, dlogits);
  }

  TrainResult train() {
    using Clock = std::chrono::steady_clock;
    const int warmup = std::max(1, int(std::ceil(0.05 * run.steps)));
    double hook_seconds = 0.0;
    auto t_start = Clock::now();

    if (run.algorithm == Algorithm::FDistill) precompute_teacher_samples();

    auto run_hook = [&](int step_done) {
      if (!options.eval_hook) return;
      auto h0 = Clock::now();
      double ex = options.eval_hook(step_done, student);
      hook_seconds += std::chrono::duration<double>(Clock::now() - h0).count();
      result.eval_points.push_back({step_done, ex});
    };

    for (int step = 0; step < run.steps; ++step) {
      std::vector<int> indices = batch_indices_for_step(
          run.seeds, step, run.batch_size, int(items.size()));

      std::vector<std::vector<LossRow>> per_elem(size_t(run.batch_size));
      parallel_for(run.batch_size, options.threads, [&](int e) {
        build_element_rows(step, e, indices[size_t(e)], per_elem[size_t(e)]);
      });
      std::vector<LossRow> rows;
      for (auto& elem_rows : per_elem)
        for (auto& row : elem_rows) rows.push_back(std::move(row));

      parallel_for(int(rows.size()), options.threads,
                   [&](int r) { process_row(rows[size_t(r)]); });

      Gradients<float> grads = ParamTensors<float>::zeros(student.config);
      double loss = 0.0;
      for (LossRow& row : rows) {
        grads.add(row.grads);
        loss += (run.kd_weight * row.loss_kd + run.mle_weight * row.loss_mle) /
                run.batch_size;
        result.ledger.forward_passes += row.counter.forward_passes;
        result.ledger.generated_tokens += row.counter.generated_tokens;
      }
      result.losses.push_back(loss);

      if (!std::isfinite(loss)) {
        result.aborted = true;
        break;
      }
      ParamStore<float> before_step = student;
      try {
        optimizer_step(student, grads, adam, run.lr, warmup);
      } catch (const NonFiniteError&) {
        student = std::move(before_step);
        result.aborted = true;
        break;
      }

      if ((step + 1) % run.eval_interval == 0 && step + 1 != run.steps)
        run_hook(step + 1);
    }
    if (!result.aborted && run.steps > 0) run_hook(run.steps);

    result.ledger.wall_seconds =
        std::chrono::duration<double>(Clock::now() - t_start).count() -
        hook_seconds;
    result.params = std::move(student);
    return std::move(result);
  }
};

void require_algorithm(const DistillConfig& run,
                       std::initializer_list<Algorithm> allowed) {
  for (Algorithm a : allowed)
    if (run.algorithm == a) return;
  throw std::invalid_argument(std::string("algorithm ") +
                              algorithm_name(run.algorithm) +
                              " not valid for this trainer");
}

}  // namespace

TrainResult train_sft(const ToyWorld& world, const Vocabulary& vocab,
                      const ModelConfig& student_config,
                      const DistillConfig& run, const TrainOptions& options) {
  require_algorithm(run, {Algorithm::SFT});
  return Engine(world, vocab, nullptr, student_config, run, options).train();
}

TrainResult train_fixed_data_kd(const ToyWorld& world, const Vocabulary& vocab,
                                const ParamStore<float>& teacher,
                                const ModelConfig& student_config,
                                const DistillConfig& run,
                                const TrainOptions& options) {
  require_algorithm(run, {Algorithm::FKD, Algorithm::RKD});
  return Engine(world, vocab, &teacher, student_config, run, options).train();
}

TrainResult train_onpolicy_kd(const ToyWorld& world, const Vocabulary& vocab,
                              const ParamStore<float>& teacher,
                              const ModelConfig& student_config,
                              const DistillConfig& run,
                              const TrainOptions& options) {
  require_algorithm(run,
                    {Algorithm::GKD, Algorithm::ImitKD, Algorithm::FDistill});
  return Engine(world, vocab, &teacher, student_config, run, options).train();
}

TrainResult train_kid(const ToyWorld& world, const Vocabulary& vocab,
                      const ParamStore<float>& teacher,
                      const ModelConfig& student_config,
                      const DistillConfig& run, const TrainOptions& options) {
  require_algorithm(run, {Algorithm::KID});
  return Engine(world, vocab, &teacher, student_config, run, options).train();
}

TrainResult run_distill(const ToyWorld& world, const Vocabulary& vocab,
                        const ParamStore<float>* teacher,
                        const ModelConfig& student_config,
                        const DistillConfig& run, const TrainOptions& options) {
  switch (run.algorithm) {
    case Algorithm::SFT:
      return train_sft(world, vocab, student_config, run, options);
    case Algorithm::FKD:
    case Algorithm::RKD:
      return train_fixed_data_kd(world, vocab, *teacher, student_config, run,
                                 options);
    case Algorithm::GKD:
    case Algorithm::ImitKD:
    case Algorithm::FDistill:
      return train_onpolicy_kd(world, vocab, *teacher, student_config, run,
                               options);
    case Algorithm::KID:
      return train_kid(world, vocab, *teacher, student_config, run, options);
  }
  throw std::invalid_argument("unknown algorithm");
}

}  // namespace kidlab
