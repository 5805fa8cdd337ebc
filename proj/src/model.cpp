#include "kidlab/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "json.hpp"

namespace kidlab {

namespace {

constexpr double kLnEps = 1e-5;
constexpr double kInitStd = 0.02;

template <typename S>
S gelu(S x) {
  constexpr double c = 0.7978845608028654;  // sqrt(2/pi)
  double xd = double(x);
  return S(0.5 * xd * (1.0 + std::tanh(c * (xd + 0.044715 * xd * xd * xd))));
}

template <typename S>
S gelu_grad(S x) {
  constexpr double c = 0.7978845608028654;
  double xd = double(x);
  double u = c * (xd + 0.044715 * xd * xd * xd);
  double t = std::tanh(u);
  double du = c * (1.0 + 3.0 * 0.044715 * xd * xd);
  return S(0.5 * (1.0 + t) + 0.5 * xd * (1.0 - t * t) * du);
}

// y = g (x - mu) rstd + b, per row; returns xhat and rstd through out-params.
template <typename S>
void layer_norm(const Mat<S>& x, const Vec<S>& g, const Vec<S>& b, Mat<S>& xhat,
                Vec<S>& rstd, Mat<S>& out) {
  const int T = int(x.rows()), d = int(x.cols());
  xhat.resize(T, d);
  rstd.resize(T);
  out.resize(T, d);
  for (int t = 0; t < T; ++t) {
    S mu = x.row(t).mean();
    S var = (x.row(t).array() - mu).square().mean();
    S r = S(1.0 / std::sqrt(double(var) + kLnEps));
    rstd(t) = r;
    xhat.row(t) = (x.row(t).array() - mu) * r;
    out.row(t) = xhat.row(t).array() * g.transpose().array() +
                 b.transpose().array();
  }
}

// Accumulates parameter gradients and returns dx for dy flowing into the
// normalized output.
template <typename S>
Mat<S> layer_norm_backward(const Mat<S>& dy, const Mat<S>& xhat,
                           const Vec<S>& rstd, const Vec<S>& g, Vec<S>& g_g,
                           Vec<S>& g_b) {
  const int T = int(dy.rows()), d = int(dy.cols());
  Mat<S> dx(T, d);
  for (int t = 0; t < T; ++t) {
    g_g += (dy.row(t).array() * xhat.row(t).array()).matrix().transpose();
    g_b += dy.row(t).transpose();
    Eigen::Array<S, 1, Eigen::Dynamic> dxhat =
        dy.row(t).array() * g.transpose().array();
    S m1 = dxhat.mean();
    S m2 = (dxhat * xhat.row(t).array()).mean();
    dx.row(t) = ((dxhat - m1 - xhat.row(t).array() * m2) * rstd(t)).matrix();
  }
  return dx;
}

template <typename S>
void fill_normal(Mat<S>& m, Rng& rng, double stddev) {
  S* p = m.data();
  for (int64_t i = 0; i < m.size(); ++i) p[i] = S(rng.next_normal(0.0, stddev));
}

}  // namespace

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

ModelConfig ModelConfig::teacher_preset(int vocab_size) {
  return {128, 4, 4, 256, vocab_size, 160, 0.0};
}

ModelConfig ModelConfig::student_preset(int vocab_size) {
  return {48, 2, 2, 96, vocab_size, 160, 0.0};
}

void ModelConfig::validate() const {
  if (d_model <= 0 || n_heads <= 0 || n_layers <= 0 || d_ff <= 0 ||
      vocab_size <= 0 || max_len <= 0)
    throw std::invalid_argument("model dimensions must be positive");
  if (d_model % n_heads != 0)
    throw std::invalid_argument("d_model must be divisible by n_heads");
  if (dropout < 0.0 || dropout >= 1.0)
    throw std::invalid_argument("dropout must be in [0, 1)");
}

int64_t ModelConfig::param_count() const {
  int64_t d = d_model;
  int64_t per_layer = 4 * d * d + 2 * d * d_ff + 4 * d;
  return int64_t(vocab_size) * d + int64_t(max_len) * d +
         n_layers * per_layer + 2 * d;
}

// ---------------------------------------------------------------------------
// Tensors
// ---------------------------------------------------------------------------

template <typename S>
ParamTensors<S> ParamTensors<S>::zeros(const ModelConfig& config) {
  config.validate();
  ParamTensors<S> t;
  t.tok_emb = Mat<S>::Zero(config.vocab_size, config.d_model);
  t.pos_emb = Mat<S>::Zero(config.max_len, config.d_model);
  t.layers.resize(size_t(config.n_layers));
  for (auto& layer : t.layers) {
    layer.ln1_g = Vec<S>::Zero(config.d_model);
    layer.ln1_b = Vec<S>::Zero(config.d_model);
    layer.ln2_g = Vec<S>::Zero(config.d_model);
    layer.ln2_b = Vec<S>::Zero(config.d_model);
    layer.wq = Mat<S>::Zero(config.d_model, config.d_model);
    layer.wk = Mat<S>::Zero(config.d_model, config.d_model);
    layer.wv = Mat<S>::Zero(config.d_model, config.d_model);
    layer.wo = Mat<S>::Zero(config.d_model, config.d_model);
    layer.w1 = Mat<S>::Zero(config.d_model, config.d_ff);
    layer.w2 = Mat<S>::Zero(config.d_ff, config.d_model);
  }
  t.lnf_g = Vec<S>::Zero(config.d_model);
  t.lnf_b = Vec<S>::Zero(config.d_model);
  return t;
}

template <typename S>
void ParamTensors<S>::set_zero() {
  for (auto& [name, view] : named_arrays()) view.setZero();
}

template <typename S>
void ParamTensors<S>::add(const ParamTensors<S>& other) {
  auto mine = named_arrays();
  auto theirs = other.named_arrays();
  for (size_t i = 0; i < mine.size(); ++i) mine[i].second += theirs[i].second;
}

template <typename S>
bool ParamTensors<S>::all_finite() const {
  for (const auto& [name, view] : named_arrays())
    if (!view.allFinite()) return false;
  return true;
}

template <typename S>
int64_t ParamTensors<S>::count() const {
  int64_t n = 0;
  for (const auto& [name, view] : named_arrays()) n += view.size();
  return n;
}

template <typename S>
std::vector<std::pair<std::string, Eigen::Map<Vec<S>>>>
ParamTensors<S>::named_arrays() {
  std::vector<std::pair<std::string, Eigen::Map<Vec<S>>>> out;
  auto push = [&](const std::string& name, auto& m) {
    out.emplace_back(name, Eigen::Map<Vec<S>>(m.data(), m.size()));
  };
  push("tok_emb", tok_emb);
  push("pos_emb", pos_emb);
  for (size_t l = 0; l < layers.size(); ++l) {
    std::string prefix = "layer" + std::to_string(l) + ".";
    push(prefix + "ln1_g", layers[l].ln1_g);
    push(prefix + "ln1_b", layers[l].ln1_b);
    push(prefix + "wq", layers[l].wq);
    push(prefix + "wk", layers[l].wk);
    push(prefix + "wv", layers[l].wv);
    push(prefix + "wo", layers[l].wo);
    push(prefix + "ln2_g", layers[l].ln2_g);
    push(prefix + "ln2_b", layers[l].ln2_b);
    push(prefix + "w1", layers[l].w1);
    push(prefix + "w2", layers[l].w2);
  }
  push("lnf_g", lnf_g);
  push("lnf_b", lnf_b);
  return out;
}

template <typename S>
std::vector<std::pair<std::string, Eigen::Map<const Vec<S>>>>
ParamTensors<S>::named_arrays() const {
  std::vector<std::pair<std::string, Eigen::Map<const Vec<S>>>> out;
  for (auto& [name, view] :
       const_cast<ParamTensors<S>*>(this)->named_arrays())
    out.emplace_back(name, Eigen::Map<const Vec<S>>(view.data(), view.size()));
  return out;
}

template <typename S>
ParamStore<S> init_params(const ModelConfig& config, uint64_t seed) {
  ParamStore<S> params;
  params.config = config;
  params.init_seed = seed;
  params.step = 0;
  params.w = ParamTensors<S>::zeros(config);
  Rng rng(hash_seed(seed, 0x1417));
  fill_normal(params.w.tok_emb, rng, kInitStd);
  fill_normal(params.w.pos_emb, rng, kInitStd);
  for (auto& layer : params.w.layers) {
    layer.ln1_g.setOnes();
    layer.ln2_g.setOnes();
    fill_normal(layer.wq, rng, kInitStd);
    fill_normal(layer.wk, rng, kInitStd);
    fill_normal(layer.wv, rng, kInitStd);
    fill_normal(layer.wo, rng, kInitStd);
    fill_normal(layer.w1, rng, kInitStd);
    fill_normal(layer.w2, rng, kInitStd);
  }
  params.w.lnf_g.setOnes();
  return params;
}

// ---------------------------------------------------------------------------
// Forward
// ---------------------------------------------------------------------------

template <typename S>
Mat<S> forward_logits(const ParamStore<S>& params, std::span<const int> tokens,
                      ForwardCache<S>* cache, PassCounter* counter,
                      Rng* dropout_rng) {
  const ModelConfig& cfg = params.config;
  const int T = int(tokens.size());
  if (T == 0) throw std::invalid_argument("empty token sequence");
  if (T > cfg.max_len)
    throw LengthExceededError("sequence of " + std::to_string(T) +
                              " tokens exceeds max_len " +
                              std::to_string(cfg.max_len));
  if (counter) counter->forward_passes += 1;

  const int d = cfg.d_model, nh = cfg.n_heads, dh = d / nh;
  const S scale = S(1.0 / std::sqrt(double(dh)));
  const bool use_dropout = dropout_rng != nullptr && cfg.dropout > 0.0;
  const S keep_scale = S(1.0 / (1.0 - cfg.dropout));

  if (cache) {
    cache->tokens.assign(tokens.begin(), tokens.end());
    cache->layers.assign(size_t(cfg.n_layers), LayerCache<S>{});
  }

  Mat<S> x(T, d);
  for (int t = 0; t < T; ++t) {
    int id = tokens[size_t(t)];
    if (id < 0 || id >= cfg.vocab_size)
      throw std::invalid_argument("token id out of range: " +
                                  std::to_string(id));
    x.row(t) = params.w.tok_emb.row(id) + params.w.pos_emb.row(t);
  }

  LayerCache<S> scratch;
  for (int l = 0; l < cfg.n_layers; ++l) {
    const LayerTensors<S>& w = params.w.layers[size_t(l)];
    LayerCache<S>& c = cache ? cache->layers[size_t(l)] : scratch;

    layer_norm(x, w.ln1_g, w.ln1_b, c.xhat1, c.rstd1, c.ln1_out);
    c.q.noalias() = c.ln1_out * w.wq;
    c.k.noalias() = c.ln1_out * w.wk;
    c.v.noalias() = c.ln1_out * w.wv;

    c.att.assign(size_t(nh), Mat<S>());
    c.att_out.resize(T, d);
    for (int h = 0; h < nh; ++h) {
      auto qh = c.q.middleCols(h * dh, dh);
      auto kh = c.k.middleCols(h * dh, dh);
      auto vh = c.v.middleCols(h * dh, dh);
      Mat<S>& att = c.att[size_t(h)];
      att = Mat<S>::Zero(T, T);
      for (int i = 0; i < T; ++i) {
        S max_score = std::numeric_limits<S>::lowest();
        for (int j = 0; j <= i; ++j) {
          att(i, j) = qh.row(i).dot(kh.row(j)) * scale;
          max_score = std::max(max_score, att(i, j));
        }
        S total = 0;
        for (int j = 0; j <= i; ++j) {
          att(i, j) = std::exp(att(i, j) - max_score);
          total += att(i, j);
        }
        for (int j = 0; j <= i; ++j) att(i, j) /= total;
      }
      c.att_out.middleCols(h * dh, dh).noalias() = att * vh;
    }

    Mat<S> proj = c.att_out * w.wo;
    if (use_dropout) {
      c.drop_attn.resize(T, d);
      for (int64_t i = 0; i < c.drop_attn.size(); ++i)
        c.drop_attn.data()[i] =
            dropout_rng->next_real() < cfg.dropout ? S(0) : keep_scale;
      proj.array() *= c.drop_attn.array();
    }
    c.a = x + proj;

    layer_norm(c.a, w.ln2_g, w.ln2_b, c.xhat2, c.rstd2, c.ln2_out);
    c.h_pre.noalias() = c.ln2_out * w.w1;
    c.h_act = c.h_pre.unaryExpr([](S v) { return gelu(v); });
    Mat<S> mlp = c.h_act * w.w2;
    if (use_dropout) {
      c.drop_mlp.resize(T, d);
      for (int64_t i = 0; i < c.drop_mlp.size(); ++i)
        c.drop_mlp.data()[i] =
            dropout_rng->next_real() < cfg.dropout ? S(0) : keep_scale;
      mlp.array() *= c.drop_mlp.array();
    }
    x = c.a + mlp;
  }

  Mat<S>& xhat_f = cache ? cache->xhat_f : scratch.xhat1;
  Vec<S>& rstd_f = cache ? cache->rstd_f : scratch.rstd1;
  Mat<S>& h_final = cache ? cache->h_final : scratch.ln1_out;
  layer_norm(x, params.w.lnf_g, params.w.lnf_b, xhat_f, rstd_f, h_final);

  Mat<S> logits(T, cfg.vocab_size);
  logits.noalias() = h_final * params.w.tok_emb.transpose();
  return logits;
}

template <typename S>
std::vector<StepDistribution> forward(const ParamStore<S>& params,
                                      const TokenSequence& prompt,
                                      const TokenSequence& output_prefix,
                                      double temperature,
                                      PassCounter* counter) {
  std::vector<int> row = prompt.ids;
  if (!output_prefix.empty())
    row.insert(row.end(), output_prefix.ids.begin(),
               output_prefix.ids.end() - 1);
  Mat<S> logits = forward_logits<S>(params, std::span<const int>(row), nullptr,
                                    counter, nullptr);
  std::vector<StepDistribution> steps;
  steps.reserve(size_t(output_prefix.size()));
  for (int t = 0; t < output_prefix.size(); ++t) {
    int pos = prompt.size() - 1 + t;
    std::vector<double> z(static_cast<size_t>(params.config.vocab_size));
    for (int i = 0; i < params.config.vocab_size; ++i)
      z[size_t(i)] = double(logits(pos, i));
    steps.push_back({softmax(z, temperature)});
  }
  return steps;
}

template <typename S>
TokenSequence generate(const ParamStore<S>& params, const TokenSequence& prompt,
                       const GenMode& mode, int max_new, PassCounter* counter) {
  if (prompt.size() + max_new > params.config.max_len)
    throw LengthExceededError("prompt does not fit in max_len - max_new");
  Rng rng(hash_seed(mode.seed, 0x9e4));
  std::vector<int> row = prompt.ids;
  TokenSequence out;
  out.role = SeqRole::Output;
  for (int step = 0; step < max_new; ++step) {
    Mat<S> logits =
        forward_logits<S>(params, std::span<const int>(row), nullptr, counter);
    const int V = params.config.vocab_size;
    int pos = int(row.size()) - 1;
    int next = 0;
    if (mode.greedy) {
      for (int i = 1; i < V; ++i)
        if (logits(pos, i) > logits(pos, next)) next = i;
    } else {
      std::vector<double> z(static_cast<size_t>(V));
      for (int i = 0; i < V; ++i) z[size_t(i)] = double(logits(pos, i));
      std::vector<double> probs = softmax(z, mode.temperature);
      double u = rng.next_real();
      double cum = 0.0;
      next = V - 1;
      for (int i = 0; i < V; ++i) {
        cum += probs[size_t(i)];
        if (u < cum) {
          next = i;
          break;
        }
      }
    }
    if (counter) counter->generated_tokens += 1;
    row.push_back(next);
    out.ids.push_back(next);
    if (next == kEosId) break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Backward
// ---------------------------------------------------------------------------

template <typename S>
Gradients<S> backward(const ParamStore<S>& params, const ForwardCache<S>& cache,
                      const Mat<S>& dlogits) {
  const ModelConfig& cfg = params.config;
  const int T = int(cache.tokens.size());
  const int d = cfg.d_model, nh = cfg.n_heads, dh = d / nh;
  const S scale = S(1.0 / std::sqrt(double(dh)));

  Gradients<S> g = ParamTensors<S>::zeros(cfg);

  // Head (tied with the token embedding).
  Mat<S> dh_final(T, d);
  dh_final.noalias() = dlogits * params.w.tok_emb;
  g.tok_emb.noalias() += dlogits.transpose() * cache.h_final;

  Mat<S> dx = layer_norm_backward(dh_final, cache.xhat_f, cache.rstd_f,
                                  params.w.lnf_g, g.lnf_g, g.lnf_b);

  for (int l = cfg.n_layers - 1; l >= 0; --l) {
    const LayerTensors<S>& w = params.w.layers[size_t(l)];
    const LayerCache<S>& c = cache.layers[size_t(l)];
    LayerTensors<S>& gl = g.layers[size_t(l)];

    // x_next = a + mlp
    Mat<S> d_mlp = dx;
    if (c.drop_mlp.size() > 0) d_mlp.array() *= c.drop_mlp.array();
    Mat<S> d_h_act(T, cfg.d_ff);
    d_h_act.noalias() = d_mlp * w.w2.transpose();
    gl.w2.noalias() += c.h_act.transpose() * d_mlp;
    Mat<S> d_h_pre =
        d_h_act.array() *
        c.h_pre.unaryExpr([](S v) { return gelu_grad(v); }).array();
    Mat<S> d_ln2_out(T, d);
    d_ln2_out.noalias() = d_h_pre * w.w1.transpose();
    gl.w1.noalias() += c.ln2_out.transpose() * d_h_pre;
    Mat<S> d_a = dx + layer_norm_backward(d_ln2_out, c.xhat2, c.rstd2, w.ln2_g,
                                          gl.ln2_g, gl.ln2_b);

    // a = x + proj
    Mat<S> d_proj = d_a;
    if (c.drop_attn.size() > 0) d_proj.array() *= c.drop_attn.array();
    Mat<S> d_att_out(T, d);
    d_att_out.noalias() = d_proj * w.wo.transpose();
    gl.wo.noalias() += c.att_out.transpose() * d_proj;

    Mat<S> dq = Mat<S>::Zero(T, d), dk = Mat<S>::Zero(T, d),
           dv = Mat<S>::Zero(T, d);
    for (int h = 0; h < nh; ++h) {
      auto qh = c.q.middleCols(h * dh, dh);
      auto kh = c.k.middleCols(h * dh, dh);
      auto vh = c.v.middleCols(h * dh, dh);
      const Mat<S>& att = c.att[size_t(h)];
      auto d_oh = d_att_out.middleCols(h * dh, dh);

      Mat<S> d_att(T, T);
      d_att.noalias() = d_oh * vh.transpose();
      dv.middleCols(h * dh, dh).noalias() += att.transpose() * d_oh;

      // softmax rows: ds = att * (d_att - rowsum(d_att * att))
      Mat<S> ds(T, T);
      for (int i = 0; i < T; ++i) {
        S dot = 0;
        for (int j = 0; j <= i; ++j) dot += d_att(i, j) * att(i, j);
        for (int j = 0; j < T; ++j)
          ds(i, j) = j <= i ? att(i, j) * (d_att(i, j) - dot) : S(0);
      }
      dq.middleCols(h * dh, dh).noalias() += ds * kh * scale;
      dk.middleCols(h * dh, dh).noalias() += ds.transpose() * qh * scale;
    }

    Mat<S> d_ln1_out(T, d);
    d_ln1_out.noalias() = dq * w.wq.transpose();
    d_ln1_out.noalias() += dk * w.wk.transpose();
    d_ln1_out.noalias() += dv * w.wv.transpose();
    gl.wq.noalias() += c.ln1_out.transpose() * dq;
    gl.wk.noalias() += c.ln1_out.transpose() * dk;
    gl.wv.noalias() += c.ln1_out.transpose() * dv;

    dx = d_a + layer_norm_backward(d_ln1_out, c.xhat1, c.rstd1, w.ln1_g,
                                   gl.ln1_g, gl.ln1_b);
  }

  for (int t = 0; t < T; ++t) {
    g.tok_emb.row(cache.tokens[size_t(t)]) += dx.row(t);
    g.pos_emb.row(t) += dx.row(t);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

template <typename S>
void adam_update(std::span<S> param, std::span<const S> grad, std::span<S> m,
                 std::span<S> v, int64_t t, double lr) {
  const double bc1 = 1.0 - std::pow(kAdamBeta1, double(t));
  const double bc2 = 1.0 - std::pow(kAdamBeta2, double(t));
  for (size_t i = 0; i < param.size(); ++i) {
    double gi = double(grad[i]);
    double mi = kAdamBeta1 * double(m[i]) + (1.0 - kAdamBeta1) * gi;
    double vi = kAdamBeta2 * double(v[i]) + (1.0 - kAdamBeta2) * gi * gi;
    m[i] = S(mi);
    v[i] = S(vi);
    double update = lr * (mi / bc1) / (std::sqrt(vi / bc2) + kAdamEps);
    param[i] = S(double(param[i]) - update);
  }
}

template <typename S>
void optimizer_step(ParamStore<S>& params, const Gradients<S>& grads,
                    AdamState<S>& adam, double lr, int warmup_steps) {
  if (!grads.all_finite()) throw NonFiniteError("non-finite gradient");
  adam.steps_done += 1;
  params.step += 1;
  const int64_t t = adam.steps_done;
  double lr_t = lr;
  if (warmup_steps > 0 && t < warmup_steps)
    lr_t = lr * double(t) / double(warmup_steps);

  auto p = params.w.named_arrays();
  auto gv = grads.named_arrays();
  auto mv = adam.m.named_arrays();
  auto vv = adam.v.named_arrays();
  for (size_t i = 0; i < p.size(); ++i) {
    adam_update<S>(std::span<S>(p[i].second.data(), size_t(p[i].second.size())),
                   std::span<const S>(gv[i].second.data(),
                                      size_t(gv[i].second.size())),
                   std::span<S>(mv[i].second.data(), size_t(mv[i].second.size())),
                   std::span<S>(vv[i].second.data(), size_t(vv[i].second.size())),
                   t, lr_t);
  }
  if (!params.w.all_finite())
    throw NonFiniteError("non-finite parameter after update");
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'K', 'I', 'D', 'L', 'A', 'B', 'C', 'K'};
constexpr uint32_t kCheckpointVersion = 1;

nlohmann::json config_json(const ModelConfig& c) {
  return {{"d_model", c.d_model}, {"n_heads", c.n_heads},
          {"n_layers", c.n_layers}, {"d_ff", c.d_ff},
          {"vocab_size", c.vocab_size}, {"max_len", c.max_len},
          {"dropout", c.dropout}};
}

ModelConfig config_from(const nlohmann::json& j) {
  ModelConfig c;
  c.d_model = j.at("d_model").get<int>();
  c.n_heads = j.at("n_heads").get<int>();
  c.n_layers = j.at("n_layers").get<int>();
  c.d_ff = j.at("d_ff").get<int>();
  c.vocab_size = j.at("vocab_size").get<int>();
  c.max_len = j.at("max_len").get<int>();
  c.dropout = j.at("dropout").get<double>();
  return c;
}

template <typename T>
void write_raw(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("truncated checkpoint");
  return v;
}

}  // namespace

void save_checkpoint(const ParamStore<float>& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(kMagic, sizeof(kMagic));
  write_raw(out, kCheckpointVersion);
  std::string cfg = config_json(params.config).dump();
  write_raw(out, uint32_t(cfg.size()));
  out.write(cfg.data(), std::streamsize(cfg.size()));
  write_raw(out, params.init_seed);
  write_raw(out, params.step);
  auto arrays = params.w.named_arrays();
  write_raw(out, uint32_t(arrays.size()));
  for (const auto& [name, view] : arrays) {
    write_raw(out, uint32_t(name.size()));
    out.write(name.data(), std::streamsize(name.size()));
    write_raw(out, uint64_t(view.size()));
    out.write(reinterpret_cast<const char*>(view.data()),
              std::streamsize(size_t(view.size()) * sizeof(float)));
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

ParamStore<float> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("not a checkpoint file: " + path);
  uint32_t version = read_raw<uint32_t>(in);
  if (version != kCheckpointVersion)
    throw std::runtime_error("unsupported checkpoint version");
  uint32_t cfg_len = read_raw<uint32_t>(in);
  std::string cfg(cfg_len, '\0');
  in.read(cfg.data(), cfg_len);
  ParamStore<float> params;
  params.config = config_from(nlohmann::json::parse(cfg));
  params.init_seed = read_raw<uint64_t>(in);
  params.step = read_raw<int64_t>(in);
  params.w = ParamTensors<float>::zeros(params.config);
  uint32_t n_arrays = read_raw<uint32_t>(in);
  auto arrays = params.w.named_arrays();
  if (n_arrays != arrays.size())
    throw std::runtime_error("checkpoint array count mismatch");
  for (auto& [name, view] : arrays) {
    uint32_t name_len = read_raw<uint32_t>(in);
    std::string stored(name_len, '\0');
    in.read(stored.data(), name_len);
    uint64_t count = read_raw<uint64_t>(in);
    if (stored != name || int64_t(count) != view.size())
      throw std::runtime_error("checkpoint layout mismatch at " + stored);
    in.read(reinterpret_cast<char*>(view.data()),
            std::streamsize(size_t(count) * sizeof(float)));
    if (!in) throw std::runtime_error("truncated checkpoint");
  }
  return params;
}

// ---------------------------------------------------------------------------
// Explicit instantiations
// ---------------------------------------------------------------------------

#define KIDLAB_INSTANTIATE(S)                                                  \
  template struct ParamTensors<S>;                                             \
  template ParamStore<S> init_params<S>(const ModelConfig&, uint64_t);         \
  template Mat<S> forward_logits<S>(const ParamStore<S>&, std::span<const int>,\
                                    ForwardCache<S>*, PassCounter*, Rng*);     \
  template std::vector<StepDistribution> forward<S>(                           \
      const ParamStore<S>&, const TokenSequence&, const TokenSequence&,        \
      double, PassCounter*);                                                   \
  template TokenSequence generate<S>(const ParamStore<S>&,                     \
                                     const TokenSequence&, const GenMode&,     \
                                     int, PassCounter*);                       \
  template Gradients<S> backward<S>(const ParamStore<S>&,                      \
                                    const ForwardCache<S>&, const Mat<S>&);    \
  template void adam_update<S>(std::span<S>, std::span<const S>, std::span<S>, \
                               std::span<S>, int64_t, double);                 \
  template void optimizer_step<S>(ParamStore<S>&, const Gradients<S>&,         \
                                  AdamState<S>&, double, int);

KIDLAB_INSTANTIATE(float)
KIDLAB_INSTANTIATE(double)

#undef KIDLAB_INSTANTIATE

}  // namespace kidlab
