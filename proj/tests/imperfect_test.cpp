#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <set>

#include "doctest.h"
#include "json.hpp"
#include "kidlab/imperfect.hpp"
#include "kidlab/rng.hpp"

using namespace kidlab;

namespace {

ModelConfig micro_config(int vocab = 10) {
  ModelConfig c;
  c.d_model = 8;
  c.n_heads = 2;
  c.n_layers = 1;
  c.d_ff = 16;
  c.vocab_size = vocab;
  c.max_len = 16;
  return c;
}

// Plain MLE loop over fixed (tokens, prompt_len) rows; enough to overfit a
// micro model for entropy-shaped tests.
void train_rows(ParamStore<float>& params,
                const std::vector<std::vector<int>>& rows, int prompt_len,
                int steps, double lr) {
  AdamState<float> adam = AdamState<float>::init(params.config);
  for (int step = 0; step < steps; ++step) {
    const std::vector<int>& target = rows[size_t(step) % rows.size()];
    std::vector<int> input(target.begin(), target.end() - 1);
    ForwardCache<float> cache;
    Mat<float> logits =
        forward_logits<float>(params, std::span<const int>(input), &cache);
    Mat<float> dlogits = Mat<float>::Zero(logits.rows(), logits.cols());
    int n_out = int(target.size()) - prompt_len;
    for (int t = 0; t < n_out; ++t) {
      int pos = prompt_len - 1 + t;
      std::vector<double> z(static_cast<size_t>(params.config.vocab_size));
      for (int i = 0; i < params.config.vocab_size; ++i)
        z[size_t(i)] = double(logits(pos, i));
      std::vector<double> q = softmax(z);
      int gold = target[size_t(prompt_len + t)];
      for (int i = 0; i < params.config.vocab_size; ++i)
        dlogits(pos, i) =
            float((q[size_t(i)] - (i == gold ? 1.0 : 0.0)) / n_out);
    }
    Gradients<float> grads = backward(params, cache, dlogits);
    optimizer_step(params, grads, adam, lr, 5);
  }
}

}  // namespace

TEST_CASE("mask counts are exact for every strategy and length") {
  CHECK(mask_count(0.2, 10) == 2);
  CHECK(mask_count(0.1, 3) == 1);   // minimum floor
  CHECK(mask_count(0.9, 3) == 2);   // capped below the EOS
  CHECK(mask_count(0.5, 2) == 1);

  ModelConfig cfg = micro_config();
  ParamStore<float> student = init_params<float>(cfg, 1);
  TokenSequence prompt{{4, 5}, SeqRole::Prompt};
  Rng rng(7);
  for (auto strategy : {MaskStrategy::Random, MaskStrategy::Uniform,
                        MaskStrategy::Easy, MaskStrategy::Hard}) {
    for (int trial = 0; trial < 60; ++trial) {
      int len = rng.next_int(2, 12);
      double alpha = 0.05 + 0.9 * rng.next_real();
      TokenSequence gold;
      for (int i = 0; i < len - 1; ++i)
        gold.ids.push_back(rng.next_int(4, cfg.vocab_size - 1));
      gold.ids.push_back(kEosId);
      auto positions = select_mask_positions(strategy, alpha, gold, student,
                                             prompt, rng.next_u64());
      CHECK(int(positions.size()) == mask_count(alpha, len));
      std::set<int> unique(positions.begin(), positions.end());
      CHECK(unique.size() == positions.size());
      CHECK(std::is_sorted(positions.begin(), positions.end()));
      for (int p : positions) {
        CHECK(p >= 0);
        CHECK(p < len - 1);  // EOS position excluded
      }
    }
  }

  TokenSequence only_eos{{kEosId}, SeqRole::Output};
  CHECK_THROWS_AS(select_mask_positions(MaskStrategy::Random, 0.2, only_eos,
                                        student, prompt, 1),
                  SequenceTooShortError);
}

TEST_CASE("uniform strategy is stride-spaced") {
  ModelConfig cfg = micro_config();
  ParamStore<float> student = init_params<float>(cfg, 1);
  TokenSequence prompt{{4}, SeqRole::Prompt};
  TokenSequence gold;
  for (int i = 0; i < 19; ++i) gold.ids.push_back(4);
  gold.ids.push_back(kEosId);  // len 20, alpha 0.2 -> k=4, stride 5
  auto p0 = select_mask_positions(MaskStrategy::Uniform, 0.2, gold, student,
                                  prompt, 0);
  CHECK(p0 == std::vector<int>{0, 5, 10, 15});
  auto p3 = select_mask_positions(MaskStrategy::Uniform, 0.2, gold, student,
                                  prompt, 3);
  CHECK(p3 == std::vector<int>{3, 8, 13, 18});
}

TEST_CASE("entropy ordering picks hard and easy positions") {
  std::vector<double> entropies = {0.1, 0.5, 0.5, 2.0, 2.0};
  CHECK(select_by_entropy(entropies, 2, true) == std::vector<int>{3, 4});
  CHECK(select_by_entropy(entropies, 2, false) == std::vector<int>{0, 1});
  // Ties break toward the lower index.
  std::vector<double> flat = {1.0, 1.0, 1.0};
  CHECK(select_by_entropy(flat, 2, true) == std::vector<int>{0, 1});
}

TEST_CASE("hard strategy targets the high-entropy position end to end") {
  ModelConfig cfg = micro_config();
  ParamStore<float> student = init_params<float>(cfg, 3);
  // Positions 0..3 are deterministic; position 4 alternates between 1 and 7.
  std::vector<int> prompt_ids = {5, 6};
  std::vector<std::vector<int>> rows = {{5, 6, 4, 7, 7, 7, 8, kEosId},
                                        {5, 6, 4, 7, 7, 7, 9, kEosId}};
  train_rows(student, rows, 2, 400, 1e-2);

  TokenSequence prompt{prompt_ids, SeqRole::Prompt};
  TokenSequence gold{{4, 7, 7, 7, 8, kEosId}, SeqRole::Output};
  auto hard = select_mask_positions(MaskStrategy::Hard, 0.1, gold, student,
                                    prompt, 9);
  REQUIRE(hard.size() == 1);
  CHECK(hard[0] == 4);
  auto easy = select_mask_positions(MaskStrategy::Easy, 0.1, gold, student,
                                    prompt, 9);
  REQUIRE(easy.size() == 1);
  CHECK(easy[0] != 4);

  // A memorizing student fills a deterministic position back with gold.
  TokenSequence masked = gold;
  masked.ids[1] = kMaskId;
  auto fills = fill_masks(student, prompt, masked, GenMode::Greedy());
  REQUIRE(fills.size() == 1);
  CHECK(fills[0].first == 1);
  CHECK(fills[0].second == 7);
}

TEST_CASE("fill_masks contract") {
  ModelConfig cfg = micro_config();
  ParamStore<float> student = init_params<float>(cfg, 5);
  TokenSequence prompt{{5, 6}, SeqRole::Prompt};
  TokenSequence no_masks{{4, 5, kEosId}, SeqRole::Output};
  CHECK_THROWS_AS(fill_masks(student, prompt, no_masks, GenMode::Greedy()),
                  std::invalid_argument);

  TokenSequence masked{{kMaskId, 5, kMaskId, kEosId}, SeqRole::Output};
  auto f1 = fill_masks(student, prompt, masked, GenMode::Greedy());
  auto f2 = fill_masks(student, prompt, masked, GenMode::Greedy());
  CHECK(f1 == f2);
  REQUIRE(f1.size() == 2);
  for (auto [pos, token] : f1) CHECK(token != kMaskId);

  // Sampled fills never produce MASK either.
  Rng rng(31);
  for (int i = 0; i < 200; ++i) {
    auto fs = fill_masks(student, prompt, masked,
                         GenMode::Sample(1.5, rng.next_u64()));
    for (auto [pos, token] : fs) CHECK(token != kMaskId);
  }
}

TEST_CASE("make_imperfect invariants: locality, determinism, cost") {
  ModelConfig cfg = micro_config();
  ParamStore<float> student = init_params<float>(cfg, 7);
  TokenSequence prompt{{5, 6}, SeqRole::Prompt};
  TokenSequence gold{{4, 5, 7, 8, 9, 4, 5, 7, 8, kEosId}, SeqRole::Output};

  for (auto strategy : {MaskStrategy::Random, MaskStrategy::Uniform,
                        MaskStrategy::Easy, MaskStrategy::Hard}) {
    PassCounter counter;
    ImperfectSample s = make_imperfect(strategy, 0.2, student, prompt, gold,
                                       42, GenMode::Greedy(), &counter);
    int expected_passes =
        strategy == MaskStrategy::Easy || strategy == MaskStrategy::Hard ? 2
                                                                         : 1;
    CHECK(counter.forward_passes == expected_passes);
    CHECK(counter.generated_tokens == 0);

    CHECK(s.rewritten.size() == gold.size());
    CHECK(int(s.masked_positions.size()) == mask_count(0.2, gold.size()));
    std::set<int> masked(s.masked_positions.begin(), s.masked_positions.end());
    for (int i = 0; i < gold.size(); ++i) {
      if (masked.count(i)) {
        CHECK(s.rewritten_flag[size_t(i)]);
      } else {
        CHECK(s.rewritten.ids[size_t(i)] == gold.ids[size_t(i)]);
        CHECK(!s.rewritten_flag[size_t(i)]);
      }
    }

    // The pass count does not grow with sequence length.
    TokenSequence longer = gold;
    for (int i = 0; i < 4; ++i)
      longer.ids.insert(longer.ids.begin(), 8);
    PassCounter counter2;
    make_imperfect(strategy, 0.2, student, prompt, longer, 42,
                   GenMode::Greedy(), &counter2);
    CHECK(counter2.forward_passes == expected_passes);
  }

  ImperfectSample a =
      make_imperfect(MaskStrategy::Random, 0.2, student, prompt, gold, 42);
  ImperfectSample b =
      make_imperfect(MaskStrategy::Random, 0.2, student, prompt, gold, 42);
  CHECK(a.rewritten.ids == b.rewritten.ids);
  CHECK(a.masked_positions == b.masked_positions);
}

TEST_CASE("untrained fills rarely reproduce gold tokens") {
  ModelConfig cfg = micro_config(64);
  ParamStore<float> student = init_params<float>(cfg, 11);
  TokenSequence prompt{{5, 6}, SeqRole::Prompt};
  Rng rng(13);
  int rewritten_positions = 0, changed = 0;
  for (int i = 0; i < 1000; ++i) {
    TokenSequence gold;
    for (int t = 0; t < 9; ++t) gold.ids.push_back(rng.next_int(4, 63));
    gold.ids.push_back(kEosId);
    ImperfectSample s = make_imperfect(MaskStrategy::Random, 0.2, student,
                                       prompt, gold, rng.next_u64());
    for (int pos : s.masked_positions) {
      ++rewritten_positions;
      changed += s.rewritten.ids[size_t(pos)] != gold.ids[size_t(pos)] ? 1 : 0;
    }
  }
  CHECK(rewritten_positions == 2000);
  CHECK(double(changed) / rewritten_positions > 0.9);
}

TEST_CASE("debug dump carries the inspection fields") {
  ModelConfig cfg = micro_config();
  ParamStore<float> student = init_params<float>(cfg, 1);
  TokenSequence prompt{{5, 6}, SeqRole::Prompt};
  TokenSequence gold{{4, 5, 6, kEosId}, SeqRole::Output};
  ImperfectSample s =
      make_imperfect(MaskStrategy::Random, 0.2, student, prompt, gold, 3);
  // A reduced vocabulary (ids map into the standard one only by accident) is
  // fine here; the line only needs to be well-formed JSON with the fields.
  auto j = nlohmann::json::parse(
      imperfect_debug_line(s, Vocabulary::standard(), MaskStrategy::Random,
                           0.2));
  CHECK(j.contains("gold_text"));
  CHECK(j.contains("rewritten_text"));
  CHECK(j.contains("masked_positions"));
  CHECK(j.at("strategy") == "random");
  CHECK(j.at("alpha") == 0.2);
}
