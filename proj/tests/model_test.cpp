#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "kidlab/divergence.hpp"
#include "kidlab/model.hpp"
#include "kidlab/rng.hpp"

using namespace kidlab;

namespace {

ModelConfig micro_config() {
  ModelConfig c;
  c.d_model = 6;
  c.n_heads = 2;
  c.n_layers = 1;
  c.d_ff = 8;
  c.vocab_size = 8;
  c.max_len = 10;
  return c;
}

// What the trainers optimize for one row: mean per-position loss over the
// output span, with the prompt span untouched.
enum class LossKind { MLE, FKL, RKL, JSD, TVD };

struct RowProblem {
  std::vector<int> tokens;
  int prompt_len = 0;
  int n_out = 0;
  std::vector<int> targets;               // MLE
  std::vector<std::vector<double>> teacher;  // KD, one dist per position
};

RowProblem random_problem(Rng& rng, const ModelConfig& cfg) {
  RowProblem p;
  p.prompt_len = 3;
  p.n_out = 4;
  for (int i = 0; i < p.prompt_len + p.n_out - 1; ++i)
    p.tokens.push_back(rng.next_int(0, cfg.vocab_size - 1));
  for (int t = 0; t < p.n_out; ++t) {
    p.targets.push_back(rng.next_int(0, cfg.vocab_size - 1));
    std::vector<double> dist(size_t(cfg.vocab_size));
    double total = 0;
    for (double& x : dist) {
      x = -std::log(std::max(rng.next_real(), 1e-12));
      total += x;
    }
    for (double& x : dist) x /= total;
    p.teacher.push_back(std::move(dist));
  }
  return p;
}

double row_loss(const ParamStore<double>& params, const RowProblem& p,
                LossKind kind, Mat<double>* dlogits_out) {
  Mat<double> logits = forward_logits<double>(
      params, std::span<const int>(p.tokens), nullptr, nullptr, nullptr);
  if (dlogits_out) *dlogits_out = Mat<double>::Zero(logits.rows(), logits.cols());
  double loss = 0.0;
  for (int t = 0; t < p.n_out; ++t) {
    int pos = p.prompt_len - 1 + t;
    std::vector<double> z(size_t(params.config.vocab_size));
    for (int i = 0; i < params.config.vocab_size; ++i)
      z[size_t(i)] = logits(pos, i);
    std::vector<double> q = softmax(z);
    if (kind == LossKind::MLE) {
      int target = p.targets[size_t(t)];
      loss += -std::log(q[size_t(target)]) / p.n_out;
      if (dlogits_out)
        for (int i = 0; i < params.config.vocab_size; ++i)
          (*dlogits_out)(pos, i) +=
              (q[size_t(i)] - (i == target ? 1.0 : 0.0)) / p.n_out;
    } else {
      DivergenceKind dk = kind == LossKind::FKL   ? DivergenceKind::FKL
                          : kind == LossKind::RKL ? DivergenceKind::RKL
                          : kind == LossKind::JSD ? DivergenceKind::JSD
                                                  : DivergenceKind::TVD;
      loss += pointwise(dk, p.teacher[size_t(t)], q) / p.n_out;
      if (dlogits_out) {
        std::vector<double> g = divergence_grad(dk, p.teacher[size_t(t)], z);
        for (int i = 0; i < params.config.vocab_size; ++i)
          (*dlogits_out)(pos, i) += g[size_t(i)] / p.n_out;
      }
    }
  }
  return loss;
}

}  // namespace

TEST_CASE("step distributions are normalized") {
  ModelConfig cfg = micro_config();
  ParamStore<float> params = init_params<float>(cfg, 1);
  TokenSequence prompt{{4, 5, 6}, SeqRole::Prompt};
  TokenSequence out{{7, 4, 2}, SeqRole::Output};
  auto steps = forward(params, prompt, out);
  REQUIRE(steps.size() == 3);
  for (const StepDistribution& s : steps) {
    double total = 0;
    for (double v : s.probs) {
      CHECK(v >= 0.0);
      total += v;
    }
    CHECK(std::abs(total - 1.0) < 1e-6);
  }
}

TEST_CASE("causality: tokens after position t do not affect position t") {
  ModelConfig cfg = micro_config();
  ParamStore<float> params = init_params<float>(cfg, 3);
  TokenSequence prompt{{1, 4, 5}, SeqRole::Prompt};
  TokenSequence a{{6, 7, 4, 5, 2}, SeqRole::Output};
  TokenSequence b{{6, 7, 5, 4, 2}, SeqRole::Output};  // permuted after t=1
  auto sa = forward(params, prompt, a);
  auto sb = forward(params, prompt, b);
  for (int t = 0; t <= 1; ++t)
    for (size_t i = 0; i < sa[size_t(t)].probs.size(); ++i)
      CHECK(std::abs(sa[size_t(t)].probs[i] - sb[size_t(t)].probs[i]) <=
            1e-15);
}

TEST_CASE("untrained model on a 2-token vocab is near uniform") {
  ModelConfig cfg = micro_config();
  cfg.vocab_size = 2;
  ParamStore<float> params = init_params<float>(cfg, 11);
  TokenSequence prompt{{0, 1, 0}, SeqRole::Prompt};
  TokenSequence out{{1, 0, 1, 0}, SeqRole::Output};
  auto steps = forward(params, prompt, out);
  for (const StepDistribution& s : steps)
    for (double v : s.probs) CHECK(std::abs(v - 0.5) < 0.2);
}

TEST_CASE("greedy decoding is deterministic; cold sampling matches it") {
  ModelConfig cfg = micro_config();
  ParamStore<float> params = init_params<float>(cfg, 5);
  TokenSequence prompt{{3, 4}, SeqRole::Prompt};
  TokenSequence g1 = generate(params, prompt, GenMode::Greedy(), 6);
  TokenSequence g2 = generate(params, prompt, GenMode::Greedy(), 6);
  CHECK(g1.ids == g2.ids);

  TokenSequence cold = generate(params, prompt, GenMode::Sample(1e-6, 99), 6);
  CHECK(cold.ids == g1.ids);

  TokenSequence s1 = generate(params, prompt, GenMode::Sample(1.0, 42), 6);
  TokenSequence s2 = generate(params, prompt, GenMode::Sample(1.0, 42), 6);
  CHECK(s1.ids == s2.ids);
}

TEST_CASE("generation respects the pass counter and length limits") {
  ModelConfig cfg = micro_config();
  ParamStore<float> params = init_params<float>(cfg, 5);
  TokenSequence prompt{{3, 4}, SeqRole::Prompt};
  PassCounter counter;
  TokenSequence out = generate(params, prompt, GenMode::Greedy(), 4, &counter);
  CHECK(counter.forward_passes == out.size());
  CHECK(counter.generated_tokens == out.size());
  CHECK(out.size() <= 4);

  CHECK_THROWS_AS(generate(params, prompt, GenMode::Greedy(), 64),
                  LengthExceededError);
  std::vector<int> too_long(size_t(cfg.max_len) + 1, 2);
  CHECK_THROWS_AS(
      forward_logits<float>(params, std::span<const int>(too_long)),
      LengthExceededError);
}

TEST_CASE("analytic gradients match central finite differences") {
  const ModelConfig cfg = micro_config();
  REQUIRE(cfg.param_count() <= 500);
  const double h = 1e-4;
  Rng rng(2024);

  for (LossKind kind : {LossKind::MLE, LossKind::FKL, LossKind::RKL,
                        LossKind::JSD, LossKind::TVD}) {
    for (int draw = 0; draw < 20; ++draw) {
      ParamStore<double> params = init_params<double>(cfg, rng.next_u64());
      // Larger-than-init weights make the check exercise nontrivial regimes.
      for (auto& [name, view] : params.w.named_arrays())
        for (int64_t i = 0; i < view.size(); ++i)
          view(i) += rng.next_normal(0.0, 0.05);
      RowProblem problem = random_problem(rng, cfg);

      Mat<double> dlogits;
      row_loss(params, problem, kind, &dlogits);
      ForwardCache<double> cache;
      forward_logits<double>(params, std::span<const int>(problem.tokens),
                             &cache, nullptr, nullptr);
      Gradients<double> analytic = backward(params, cache, dlogits);

      double max_diff = 0.0, max_norm = 0.0;
      auto arrays = params.w.named_arrays();
      auto grad_arrays = analytic.named_arrays();
      for (size_t a = 0; a < arrays.size(); ++a) {
        for (int64_t i = 0; i < arrays[a].second.size(); ++i) {
          double saved = arrays[a].second(i);
          arrays[a].second(i) = saved + h;
          double up = row_loss(params, problem, kind, nullptr);
          arrays[a].second(i) = saved - h;
          double down = row_loss(params, problem, kind, nullptr);
          arrays[a].second(i) = saved;
          double numeric = (up - down) / (2 * h);
          max_diff = std::max(max_diff,
                              std::abs(numeric - grad_arrays[a].second(i)));
          max_norm = std::max(max_norm, std::abs(numeric));
        }
      }
      CHECK_MESSAGE(max_diff <= 1e-3 * std::max(max_norm, 1e-8),
                    "kind=" << int(kind) << " draw=" << draw
                            << " diff=" << max_diff << " norm=" << max_norm);
    }
  }
}

TEST_CASE("zero logit gradients leave parameters untouched") {
  ModelConfig cfg = micro_config();
  ParamStore<float> params = init_params<float>(cfg, 7);
  ParamStore<float> before = params;
  std::vector<int> tokens = {1, 2, 3, 4};
  ForwardCache<float> cache;
  forward_logits<float>(params, std::span<const int>(tokens), &cache);
  Mat<float> dlogits = Mat<float>::Zero(4, cfg.vocab_size);
  Gradients<float> grads = backward(params, cache, dlogits);
  for (auto& [name, view] : grads.named_arrays())
    for (int64_t i = 0; i < view.size(); ++i) REQUIRE(view(i) == 0.0f);

  AdamState<float> adam = AdamState<float>::init(cfg);
  optimizer_step(params, grads, adam, 1e-2, 10);
  CHECK(params.step == 1);
  auto a = params.w.named_arrays();
  auto b = before.w.named_arrays();
  for (size_t i = 0; i < a.size(); ++i)
    for (int64_t j = 0; j < a[i].second.size(); ++j)
      REQUIRE(a[i].second(j) == b[i].second(j));
}

TEST_CASE("adam on a quadratic and warmup scaling") {
  // Single step on f(x) = x^2 from x = 1 shrinks |x|.
  float x = 1.0f, m = 0.0f, v = 0.0f;
  float g = 2.0f * x;
  adam_update<float>(std::span<float>(&x, 1), std::span<const float>(&g, 1),
                     std::span<float>(&m, 1), std::span<float>(&v, 1), 1,
                     0.1);
  CHECK(std::abs(x) < 1.0f);

  // 50 steps converge near zero.
  for (int t = 2; t <= 50; ++t) {
    g = 2.0f * x;
    adam_update<float>(std::span<float>(&x, 1), std::span<const float>(&g, 1),
                       std::span<float>(&m, 1), std::span<float>(&v, 1), t,
                       0.1);
  }
  CHECK(std::abs(x) < 0.2f);

  // Warmup: the first step uses lr/warmup_steps (Adam normalizes the
  // magnitude, so the parameter delta equals the effective lr).
  ModelConfig cfg = micro_config();
  ParamStore<float> params = init_params<float>(cfg, 9);
  float first = params.w.tok_emb(0, 0);
  Gradients<float> grads = ParamTensors<float>::zeros(cfg);
  grads.tok_emb(0, 0) = 1.0f;
  AdamState<float> adam = AdamState<float>::init(cfg);
  optimizer_step(params, grads, adam, 1e-2, 20);
  CHECK(std::abs(params.w.tok_emb(0, 0) - first) ==
        doctest::Approx(1e-2 / 20).epsilon(1e-3));
}

TEST_CASE("non-finite gradients are rejected") {
  ModelConfig cfg = micro_config();
  ParamStore<float> params = init_params<float>(cfg, 13);
  Gradients<float> grads = ParamTensors<float>::zeros(cfg);
  grads.lnf_g(0) = std::numeric_limits<float>::quiet_NaN();
  AdamState<float> adam = AdamState<float>::init(cfg);
  CHECK_THROWS_AS(optimizer_step(params, grads, adam, 1e-2, 10),
                  NonFiniteError);
}

TEST_CASE("checkpoints round-trip bit-exactly") {
  ModelConfig cfg = micro_config();
  ParamStore<float> params = init_params<float>(cfg, 17);
  params.step = 123;
  std::string path = "model_test_ckpt.bin";
  save_checkpoint(params, path);
  ParamStore<float> loaded = load_checkpoint(path);
  CHECK(loaded.config == params.config);
  CHECK(loaded.init_seed == params.init_seed);
  CHECK(loaded.step == params.step);
  auto a = params.w.named_arrays();
  auto b = loaded.w.named_arrays();
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i)
    for (int64_t j = 0; j < a[i].second.size(); ++j)
      REQUIRE(a[i].second(j) == b[i].second(j));

  // Saving the loaded store reproduces identical bytes.
  std::string path2 = "model_test_ckpt2.bin";
  save_checkpoint(loaded, path2);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  std::string buf1((std::istreambuf_iterator<char>(f1)),
                   std::istreambuf_iterator<char>());
  std::string buf2((std::istreambuf_iterator<char>(f2)),
                   std::istreambuf_iterator<char>());
  CHECK(buf1 == buf2);
  std::remove(path.c_str());
  std::remove(path2.c_str());
}

TEST_CASE("presets match the published size gap") {
  ModelConfig teacher = ModelConfig::teacher_preset(111);
  ModelConfig student = ModelConfig::student_preset(111);
  CHECK(teacher.d_model == 128);
  CHECK(teacher.n_heads == 4);
  CHECK(teacher.n_layers == 4);
  CHECK(student.d_model == 48);
  CHECK(student.n_heads == 2);
  CHECK(student.n_layers == 2);
  CHECK(teacher.param_count() >= 5 * student.param_count());
  CHECK_THROWS_AS(
      [] {
        ModelConfig bad;
        bad.d_model = 10;
        bad.n_heads = 3;
        bad.vocab_size = 8;
        bad.validate();
      }(),
      std::invalid_argument);
}

TEST_CASE("initialization is deterministic per seed") {
  ModelConfig cfg = micro_config();
  ParamStore<float> a = init_params<float>(cfg, 77);
  ParamStore<float> b = init_params<float>(cfg, 77);
  ParamStore<float> c = init_params<float>(cfg, 78);
  auto av = a.w.named_arrays();
  auto bv = b.w.named_arrays();
  bool some_diff = false;
  auto cv = c.w.named_arrays();
  for (size_t i = 0; i < av.size(); ++i)
    for (int64_t j = 0; j < av[i].second.size(); ++j) {
      REQUIRE(av[i].second(j) == bv[i].second(j));
      some_diff = some_diff || av[i].second(j) != cv[i].second(j);
    }
  CHECK(some_diff);
}

TEST_CASE("dropout is seeded and only active in training mode") {
  ModelConfig cfg = micro_config();
  cfg.dropout = 0.5;
  ParamStore<float> params = init_params<float>(cfg, 21);
  std::vector<int> tokens = {1, 2, 3};
  // Inference path (no rng): deterministic, no masking.
  Mat<float> a = forward_logits<float>(params, std::span<const int>(tokens));
  Mat<float> b = forward_logits<float>(params, std::span<const int>(tokens));
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0f);
  // Training path: same rng seed, same masks.
  Rng r1(5), r2(5), r3(6);
  Mat<float> c = forward_logits<float>(params, std::span<const int>(tokens),
                                       nullptr, nullptr, &r1);
  Mat<float> d = forward_logits<float>(params, std::span<const int>(tokens),
                                       nullptr, nullptr, &r2);
  Mat<float> e = forward_logits<float>(params, std::span<const int>(tokens),
                                       nullptr, nullptr, &r3);
  CHECK((c - d).cwiseAbs().maxCoeff() == 0.0f);
  CHECK((c - e).cwiseAbs().maxCoeff() > 0.0f);
}
