#pragma once

#include <string>
#include <vector>

#include "kidlab/model.hpp"
#include "kidlab/tokenizer.hpp"

namespace kidlab {

enum class MaskStrategy { Random, Uniform, Easy, Hard };

const char* mask_strategy_name(MaskStrategy s);
MaskStrategy mask_strategy_from_name(const std::string& name);

constexpr double kDefaultMaskAlpha = 0.2;

struct SequenceTooShortError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A ground-truth pair with mask positions and the student-rewritten output.
struct ImperfectSample {
  TokenSequence prompt;
  TokenSequence gold;
  std::vector<int> masked_positions;  // sorted, never the EOS position
  TokenSequence rewritten;            // same length as gold
  std::vector<bool> rewritten_flag;   // per position: true = rewritten
};

// Number of positions to mask for a gold sequence of len tokens (EOS
// included in len): max(1, round(alpha * len)), capped at len - 1 so the
// EOS always survives.
int mask_count(double alpha, int gold_len);

// Stage 1: choose positions. Random and Uniform need no model; Easy/Hard run
// one confidence forward over (prompt, gold) and pick the k lowest/highest
// entropy positions, ties broken by lower index.
template <typename S>
std::vector<int> select_mask_positions(MaskStrategy strategy, double alpha,
                                       const TokenSequence& gold,
                                       const ParamStore<S>& student,
                                       const TokenSequence& prompt,
                                       uint64_t seed,
                                       PassCounter* counter = nullptr);

// Position selection given precomputed per-position entropies; exposed so the
// ordering rule is directly testable.
std::vector<int> select_by_entropy(const std::vector<double>& entropies, int k,
                                   bool highest_first);

// Stage 2: one teacher-forced forward over (prompt, masked_gold); each masked
// position draws its fill from the step distribution at that position (which
// sees MASK tokens in its prefix). The fill is never MASK itself.
template <typename S>
std::vector<std::pair<int, int>> fill_masks(const ParamStore<S>& student,
                                            const TokenSequence& prompt,
                                            const TokenSequence& masked_gold,
                                            const GenMode& mode,
                                            PassCounter* counter = nullptr);

// Stages 1-3 composed; exactly one forward pass for Random/Uniform and two
// for Easy/Hard, independent of sequence length.
template <typename S>
ImperfectSample make_imperfect(MaskStrategy strategy, double alpha,
                               const ParamStore<S>& student,
                               const TokenSequence& prompt,
                               const TokenSequence& gold, uint64_t seed,
                               const GenMode& mode = GenMode::Greedy(),
                               PassCounter* counter = nullptr);

// One JSON line for qualitative inspection of the pipeline output.
std::string imperfect_debug_line(const ImperfectSample& sample,
                                 const Vocabulary& vocab, MaskStrategy strategy,
                                 double alpha);

}  // namespace kidlab
