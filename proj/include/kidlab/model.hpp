#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "kidlab/divergence.hpp"
#include "kidlab/rng.hpp"
#include "kidlab/tokenizer.hpp"

namespace kidlab {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

struct LengthExceededError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NonFiniteError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Counts full-network evaluations (one per sequence per pass) and tokens
// produced by autoregressive decoding. Training-latency accounting reads
// these instead of wall clocks.
struct PassCounter {
  int64_t forward_passes = 0;
  int64_t generated_tokens = 0;
};

struct ModelConfig {
  int d_model = 48;
  int n_heads = 2;
  int n_layers = 2;
  int d_ff = 96;
  int vocab_size = 0;
  int max_len = 160;
  double dropout = 0.0;

  static ModelConfig teacher_preset(int vocab_size);
  static ModelConfig student_preset(int vocab_size);

  void validate() const;
  int64_t param_count() const;
  bool operator==(const ModelConfig&) const = default;
};

// Decoder-only pre-norm transformer: learned positional embeddings, GELU
// MLP, weight-tied output head, no linear biases.
template <typename S>
struct LayerTensors {
  Vec<S> ln1_g, ln1_b, ln2_g, ln2_b;
  Mat<S> wq, wk, wv, wo;  // [d, d]
  Mat<S> w1;              // [d, d_ff]
  Mat<S> w2;              // [d_ff, d]
};

template <typename S>
struct ParamTensors {
  Mat<S> tok_emb;  // [V, d]; also the output head (tied)
  Mat<S> pos_emb;  // [max_len, d]
  std::vector<LayerTensors<S>> layers;
  Vec<S> lnf_g, lnf_b;

  static ParamTensors zeros(const ModelConfig& config);
  void set_zero();
  void add(const ParamTensors& other);
  bool all_finite() const;
  int64_t count() const;

  // Fixed-order traversal used by the optimizer and the checkpoint format.
  std::vector<std::pair<std::string, Eigen::Map<Vec<S>>>> named_arrays();
  std::vector<std::pair<std::string, Eigen::Map<const Vec<S>>>> named_arrays()
      const;
};

template <typename S>
using Gradients = ParamTensors<S>;

template <typename S>
struct ParamStore {
  ModelConfig config;
  uint64_t init_seed = 0;
  int64_t step = 0;
  ParamTensors<S> w;
};

template <typename S>
ParamStore<S> init_params(const ModelConfig& config, uint64_t seed);

// Activation record for one sequence, consumed by backward().
template <typename S>
struct LayerCache {
  Mat<S> xhat1, ln1_out, q, k, v;
  Vec<S> rstd1;
  std::vector<Mat<S>> att;  // per head, [T, T] row-softmax probabilities
  Mat<S> att_out, a;
  Mat<S> xhat2, ln2_out;
  Vec<S> rstd2;
  Mat<S> h_pre, h_act;
  Mat<S> drop_attn, drop_mlp;  // empty unless dropout is active
};

template <typename S>
struct ForwardCache {
  std::vector<int> tokens;
  std::vector<LayerCache<S>> layers;
  Mat<S> xhat_f;
  Vec<S> rstd_f;
  Mat<S> h_final;
};

// Teacher-forced evaluation over one token row; returns logits [T, V].
// Passing a cache enables backward(); passing dropout_rng enables dropout
// when config.dropout > 0 (training mode).
template <typename S>
Mat<S> forward_logits(const ParamStore<S>& params, std::span<const int> tokens,
                      ForwardCache<S>* cache = nullptr,
                      PassCounter* counter = nullptr,
                      Rng* dropout_rng = nullptr);

// One StepDistribution per output position t, conditioned on the prompt and
// output_prefix[<t].
template <typename S>
std::vector<StepDistribution> forward(const ParamStore<S>& params,
                                      const TokenSequence& prompt,
                                      const TokenSequence& output_prefix,
                                      double temperature = 1.0,
                                      PassCounter* counter = nullptr);

struct GenMode {
  bool greedy = true;
  double temperature = 1.0;
  uint64_t seed = 0;

  static GenMode Greedy() { return {}; }
  static GenMode Sample(double temperature, uint64_t seed) {
    return {false, temperature, seed};
  }
};

// Autoregressive decoding; stops at EOS or after max_new tokens. The prompt
// is re-encoded each step (no KV cache), so each emitted token costs one
// forward pass.
template <typename S>
TokenSequence generate(const ParamStore<S>& params, const TokenSequence& prompt,
                       const GenMode& mode, int max_new,
                       PassCounter* counter = nullptr);

// Exact reverse-mode gradients for a loss whose logit-gradient is dlogits.
template <typename S>
Gradients<S> backward(const ParamStore<S>& params, const ForwardCache<S>& cache,
                      const Mat<S>& dlogits);

template <typename S>
struct AdamState {
  ParamTensors<S> m, v;
  int64_t steps_done = 0;

  static AdamState init(const ModelConfig& config) {
    return {ParamTensors<S>::zeros(config), ParamTensors<S>::zeros(config), 0};
  }
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

// One Adam update over a flat view; t is 1-based. Exposed for direct tests.
template <typename S>
void adam_update(std::span<S> param, std::span<const S> grad, std::span<S> m,
                 std::span<S> v, int64_t t, double lr);

// Adam with linear warmup over warmup_steps, then constant lr. Increments
// params.step. Throws NonFiniteError on a non-finite gradient or parameter.
template <typename S>
void optimizer_step(ParamStore<S>& params, const Gradients<S>& grads,
                    AdamState<S>& adam, double lr, int warmup_steps);

// Checkpoints: header (format version + config JSON + seed + step) followed
// by named little-endian float32 arrays; round-trips bit-exactly.
void save_checkpoint(const ParamStore<float>& params, const std::string& path);
ParamStore<float> load_checkpoint(const std::string& path);

}  // namespace kidlab
