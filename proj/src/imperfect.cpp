#include "kidlab/imperfect.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"

namespace kidlab {

const char* mask_strategy_name(MaskStrategy s) {
  switch (s) {
    case MaskStrategy::Random: return "random";
    case MaskStrategy::Uniform: return "uniform";
    case MaskStrategy::Easy: return "easy";
    case MaskStrategy::Hard: return "hard";
  }
  return "?";
}

MaskStrategy mask_strategy_from_name(const std::string& name) {
  if (name == "random") return MaskStrategy::Random;
  if (name == "uniform") return MaskStrategy::Uniform;
  if (name == "easy") return MaskStrategy::Easy;
  if (name == "hard") return MaskStrategy::Hard;
  throw std::invalid_argument("unknown mask strategy: " + name);
}

int mask_count(double alpha, int gold_len) {
  int k = int(std::lround(alpha * gold_len));
  k = std::max(k, 1);
  return std::min(k, gold_len - 1);
}

std::vector<int> select_by_entropy(const std::vector<double>& entropies, int k,
                                   bool highest_first) {
  std::vector<int> order(entropies.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (entropies[size_t(a)] != entropies[size_t(b)])
      return highest_first ? entropies[size_t(a)] > entropies[size_t(b)]
                           : entropies[size_t(a)] < entropies[size_t(b)];
    return a < b;  // ties broken by lower index
  });
  order.resize(size_t(std::min<size_t>(size_t(k), order.size())));
  std::sort(order.begin(), order.end());
  return order;
}

template <typename S>
std::vector<int> select_mask_positions(MaskStrategy strategy, double alpha,
                                       const TokenSequence& gold,
                                       const ParamStore<S>& student,
                                       const TokenSequence& prompt,
                                       uint64_t seed, PassCounter* counter) {
  const int len = gold.size();
  if (len < 2)
    throw SequenceTooShortError("gold output needs at least one maskable token");
  const int maskable = len - 1;  // EOS stays intact
  const int k = mask_count(alpha, len);

  switch (strategy) {
    case MaskStrategy::Random: {
      Rng rng(hash_seed(seed, 0x3a5c));
      std::vector<int> pool(static_cast<size_t>(maskable));
      std::iota(pool.begin(), pool.end(), 0);
      for (int i = 0; i < k; ++i) {
        uint64_t j = uint64_t(i) + rng.next_below(uint64_t(maskable - i));
        std::swap(pool[size_t(i)], pool[size_t(j)]);
      }
      std::vector<int> out(pool.begin(), pool.begin() + k);
      std::sort(out.begin(), out.end());
      return out;
    }
    case MaskStrategy::Uniform: {
      // Every ceil(1/alpha)-th position starting at seed mod stride, then a
      // deterministic cyclic completion/truncation to hit the exact count.
      int stride = int(std::ceil(1.0 / alpha));
      int offset = int(seed % uint64_t(stride));
      std::vector<bool> taken(size_t(maskable), false);
      std::vector<int> out;
      for (int p = offset; p < maskable && int(out.size()) < k; p += stride) {
        out.push_back(p);
        taken[size_t(p)] = true;
      }
      for (int p = 0; p < maskable && int(out.size()) < k; ++p) {
        if (!taken[size_t(p)]) {
          out.push_back(p);
          taken[size_t(p)] = true;
        }
      }
      std::sort(out.begin(), out.end());
      return out;
    }
    case MaskStrategy::Easy:
    case MaskStrategy::Hard: {
      std::vector<StepDistribution> steps =
          forward(student, prompt, gold, 1.0, counter);
      std::vector<double> entropies(static_cast<size_t>(maskable));
      for (int t = 0; t < maskable; ++t) {
        double h = 0.0;
        for (double p : steps[size_t(t)].probs)
          if (p > 0.0) h -= p * std::log(p);
        entropies[size_t(t)] = h;
      }
      return select_by_entropy(entropies, k, strategy == MaskStrategy::Hard);
    }
  }
  return {};
}

template <typename S>
std::vector<std::pair<int, int>> fill_masks(const ParamStore<S>& student,
                                            const TokenSequence& prompt,
                                            const TokenSequence& masked_gold,
                                            const GenMode& mode,
                                            PassCounter* counter) {
  std::vector<int> positions;
  for (int t = 0; t < masked_gold.size(); ++t)
    if (masked_gold[t] == kMaskId) positions.push_back(t);
  if (positions.empty())
    throw std::invalid_argument("fill_masks requires at least one MASK token");

  std::vector<StepDistribution> steps =
      forward(student, prompt, masked_gold, 1.0, counter);
  Rng rng(hash_seed(mode.seed, 0xf111));

  std::vector<std::pair<int, int>> fills;
  for (int pos : positions) {
    const std::vector<double>& probs = steps[size_t(pos)].probs;
    int pick = 0;
    if (mode.greedy) {
      for (int i = 1; i < int(probs.size()); ++i)
        if (i != kMaskId && probs[size_t(i)] > probs[size_t(pick)]) pick = i;
    } else {
      std::vector<double> z(probs.size());
      for (size_t i = 0; i < probs.size(); ++i)
        z[i] = std::log(std::max(probs[i], 1e-300));
      z[kMaskId] = -1e300;
      std::vector<double> tempered = softmax(z, mode.temperature);
      double u = rng.next_real();
      double cum = 0.0;
      pick = int(probs.size()) - 1;
      for (size_t i = 0; i < tempered.size(); ++i) {
        cum += tempered[i];
        if (u < cum) {
          pick = int(i);
          break;
        }
      }
    }
    fills.emplace_back(pos, pick);
  }
  return fills;
}

template <typename S>
ImperfectSample make_imperfect(MaskStrategy strategy, double alpha,
                               const ParamStore<S>& student,
                               const TokenSequence& prompt,
                               const TokenSequence& gold, uint64_t seed,
                               const GenMode& mode, PassCounter* counter) {
  ImperfectSample sample;
  sample.prompt = prompt;
  sample.gold = gold;
  sample.masked_positions = select_mask_positions(strategy, alpha, gold,
                                                  student, prompt, seed, counter);

  TokenSequence masked = gold;
  for (int pos : sample.masked_positions) masked.ids[size_t(pos)] = kMaskId;

  GenMode fill_mode = mode;
  fill_mode.seed = hash_seed(seed, 0x2fed);
  auto fills = fill_masks(student, prompt, masked, fill_mode, counter);

  sample.rewritten = gold;
  sample.rewritten_flag.assign(size_t(gold.size()), false);
  for (auto [pos, token] : fills) {
    sample.rewritten.ids[size_t(pos)] = token;
    sample.rewritten_flag[size_t(pos)] = true;
  }
  return sample;
}

std::string imperfect_debug_line(const ImperfectSample& sample,
                                 const Vocabulary& vocab, MaskStrategy strategy,
                                 double alpha) {
  nlohmann::json j{{"gold_text", vocab.decode(sample.gold)},
                   {"rewritten_text", vocab.decode(sample.rewritten)},
                   {"masked_positions", sample.masked_positions},
                   {"strategy", mask_strategy_name(strategy)},
                   {"alpha", alpha}};
  return j.dump();
}

#define KIDLAB_INSTANTIATE(S)                                               \
  template std::vector<int> select_mask_positions<S>(                       \
      MaskStrategy, double, const TokenSequence&, const ParamStore<S>&,     \
      const TokenSequence&, uint64_t, PassCounter*);                        \
  template std::vector<std::pair<int, int>> fill_masks<S>(                  \
      const ParamStore<S>&, const TokenSequence&, const TokenSequence&,     \
      const GenMode&, PassCounter*);                                        \
  template ImperfectSample make_imperfect<S>(                               \
      MaskStrategy, double, const ParamStore<S>&, const TokenSequence&,     \
      const TokenSequence&, uint64_t, const GenMode&, PassCounter*);

KIDLAB_INSTANTIATE(float)
KIDLAB_INSTANTIATE(double)

#undef KIDLAB_INSTANTIATE

}  // namespace kidlab
