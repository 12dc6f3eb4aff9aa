#include "cipher/model.hpp"

#include <cmath>
#include <random>
#include <string>

namespace cipher::lm {

namespace {

constexpr float kGeluScale = 0.7978845608028654f;  // sqrt(2/pi)

float gelu(float x) {
  const float cube = 0.044715f * x * x * x;
  return 0.5f * x * (1.0f + std::tanh(kGeluScale * (x + cube)));
}

// y = x . W + b for one row; W is [in, out] row-major.
void linear_row(std::span<const float> x, const std::vector<float>& w, const std::vector<float>& b,
                std::span<float> y) {
  const std::size_t in = x.size();
  const std::size_t out = y.size();
  for (std::size_t o = 0; o < out; ++o) y[o] = b.empty() ? 0.0f : b[o];
  for (std::size_t i = 0; i < in; ++i) {
    const float xi = x[i];
    const float* wrow = w.data() + i * out;
    for (std::size_t o = 0; o < out; ++o) y[o] += xi * wrow[o];
  }
}

void layer_norm_row(std::span<const float> x, const std::vector<float>& gamma,
                    const std::vector<float>& beta, float epsilon, std::span<float> y) {
  const std::size_t d = x.size();
  float mean = 0.0f;
  for (float v : x) mean += v;
  mean /= static_cast<float>(d);
  float var = 0.0f;
  for (float v : x) {
    const float c = v - mean;
    var += c * c;
  }
  var /= static_cast<float>(d);
  const float inv = 1.0f / std::sqrt(var + epsilon);
  for (std::size_t i = 0; i < d; ++i) y[i] = (x[i] - mean) * inv * gamma[i] + beta[i];
}

// In-place max-subtracted softmax over the first n entries.
void softmax_inplace(std::span<float> v, std::size_t n) {
  float mx = v[0];
  for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, v[i]);
  float sum = 0.0f;
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = std::exp(v[i] - mx);
    sum += v[i];
  }
  const float inv = 1.0f / sum;
  for (std::size_t i = 0; i < n; ++i) v[i] *= inv;
}

std::vector<float> random_tensor(CountingRng& rng, std::size_t n, float scale) {
  std::vector<float> out(n);
  for (auto& v : out) v = static_cast<float>(rng.next_gaussian()) * scale;
  return out;
}

void check_vec(const std::vector<float>& v, std::size_t expected, const char* name) {
  if (v.size() != expected) {
    throw ShapeError(std::string("transformer weights: tensor '") + name + "' has " +
                     std::to_string(v.size()) + " entries, expected " + std::to_string(expected));
  }
  for (float x : v) {
    if (!std::isfinite(x)) throw NumericError(std::string("transformer weights: non-finite entry in '") + name + "'");
  }
}

}  // namespace

void TransformerConfig::validate() const {
  if (n_layers <= 0 || n_heads <= 0 || d_model <= 0 || d_ff <= 0 || max_seq_len <= 0) {
    throw ConfigError("transformer config: all dimensions must be positive");
  }
  if (d_model % n_heads != 0) {
    throw ConfigError("transformer config: d_model " + std::to_string(d_model) +
                      " not divisible by n_heads " + std::to_string(n_heads));
  }
  if (!(layernorm_epsilon > 0.0f)) {
    throw ConfigError("transformer config: layernorm epsilon must be positive");
  }
}

bool TransformerConfig::same_shape(const TransformerConfig& other) const {
  return n_layers == other.n_layers && n_heads == other.n_heads && d_model == other.d_model &&
         d_ff == other.d_ff && max_seq_len == other.max_seq_len;
}

ModelWeights zero_weights(const TransformerConfig& config, int vocab_size) {
  config.validate();
  const auto d = static_cast<std::size_t>(config.d_model);
  const auto ff = static_cast<std::size_t>(config.d_ff);
  const auto v = static_cast<std::size_t>(vocab_size);

  ModelWeights w;
  w.token_embedding = EmbeddingTable(vocab_size, config.d_model);
  w.position_embedding.assign(static_cast<std::size_t>(config.max_seq_len) * d, 0.0f);
  w.layers.resize(static_cast<std::size_t>(config.n_layers));
  for (auto& layer : w.layers) {
    layer.ln1_gamma.assign(d, 1.0f);
    layer.ln1_beta.assign(d, 0.0f);
    layer.wq.assign(d * d, 0.0f);
    layer.wk.assign(d * d, 0.0f);
    layer.wv.assign(d * d, 0.0f);
    layer.wo.assign(d * d, 0.0f);
    layer.bq.assign(d, 0.0f);
    layer.bk.assign(d, 0.0f);
    layer.bv.assign(d, 0.0f);
    layer.bo.assign(d, 0.0f);
    layer.ln2_gamma.assign(d, 1.0f);
    layer.ln2_beta.assign(d, 0.0f);
    layer.w_ff1.assign(d * ff, 0.0f);
    layer.b_ff1.assign(ff, 0.0f);
    layer.w_ff2.assign(ff * d, 0.0f);
    layer.b_ff2.assign(d, 0.0f);
  }
  w.final_ln_gamma.assign(d, 1.0f);
  w.final_ln_beta.assign(d, 0.0f);
  w.output_projection.assign(d * v, 0.0f);
  w.output_bias.assign(v, 0.0f);
  return w;
}

ModelWeights random_weights(const TransformerConfig& config, int vocab_size, std::uint64_t seed) {
  config.validate();
  CountingRng rng(seed);
  const auto d = static_cast<std::size_t>(config.d_model);
  const auto ff = static_cast<std::size_t>(config.d_ff);
  const auto v = static_cast<std::size_t>(vocab_size);
  const float scale = 0.5f / std::sqrt(static_cast<float>(config.d_model));

  ModelWeights w = zero_weights(config, vocab_size);
  w.token_embedding =
      EmbeddingTable(vocab_size, config.d_model, random_tensor(rng, v * d, 1.0f));
  w.position_embedding = random_tensor(rng, static_cast<std::size_t>(config.max_seq_len) * d, 0.1f);
  for (auto& layer : w.layers) {
    layer.wq = random_tensor(rng, d * d, scale);
    layer.wk = random_tensor(rng, d * d, scale);
    layer.wv = random_tensor(rng, d * d, scale);
    layer.wo = random_tensor(rng, d * d, scale);
    layer.w_ff1 = random_tensor(rng, d * ff, scale);
    layer.w_ff2 = random_tensor(rng, ff * d, scale);
  }
  w.output_projection = random_tensor(rng, d * v, scale);
  return w;
}

TransformerModel::TransformerModel(TransformerConfig config, ModelWeights weights, Vocabulary vocab)
    : config_(config), weights_(std::move(weights)), vocab_(std::move(vocab)) {
  config_.validate();
  const auto d = static_cast<std::size_t>(config_.d_model);
  const auto ff = static_cast<std::size_t>(config_.d_ff);
  const auto v = static_cast<std::size_t>(vocab_.size());

  if (weights_.token_embedding.vocab_size() != vocab_.size()) {
    throw ShapeError("transformer weights: token_embedding rows " +
                     std::to_string(weights_.token_embedding.vocab_size()) + " != vocabulary size " +
                     std::to_string(vocab_.size()));
  }
  if (weights_.token_embedding.dim() != config_.d_model) {
    throw ShapeError("transformer weights: tensor 'token_embedding' has dim " +
                     std::to_string(weights_.token_embedding.dim()) + ", expected d_model " +
                     std::to_string(config_.d_model));
  }
  check_vec(weights_.position_embedding, static_cast<std::size_t>(config_.max_seq_len) * d,
            "position_embedding");
  if (weights_.layers.size() != static_cast<std::size_t>(config_.n_layers)) {
    throw ShapeError("transformer weights: layer count mismatch");
  }
  for (const auto& layer : weights_.layers) {
    check_vec(layer.ln1_gamma, d, "ln1_gamma");
    check_vec(layer.ln1_beta, d, "ln1_beta");
    check_vec(layer.wq, d * d, "wq");
    check_vec(layer.wk, d * d, "wk");
    check_vec(layer.wv, d * d, "wv");
    check_vec(layer.wo, d * d, "wo");
    check_vec(layer.bq, d, "bq");
    check_vec(layer.bk, d, "bk");
    check_vec(layer.bv, d, "bv");
    check_vec(layer.bo, d, "bo");
    check_vec(layer.ln2_gamma, d, "ln2_gamma");
    check_vec(layer.ln2_beta, d, "ln2_beta");
    check_vec(layer.w_ff1, d * ff, "w_ff1");
    check_vec(layer.b_ff1, ff, "b_ff1");
    check_vec(layer.w_ff2, ff * d, "w_ff2");
    check_vec(layer.b_ff2, d, "b_ff2");
  }
  check_vec(weights_.final_ln_gamma, d, "final_ln_gamma");
  check_vec(weights_.final_ln_beta, d, "final_ln_beta");
  check_vec(weights_.output_projection, d * v, "output_projection");
  check_vec(weights_.output_bias, v, "output_bias");
}

LogitVector TransformerModel::forward_logits(const EmbeddingSeq& context) const {
  const std::size_t len = context.size();
  if (len == 0) throw ShapeError("transformer forward: empty context");
  if (len > static_cast<std::size_t>(config_.max_seq_len)) {
    throw ContextOverflowError("transformer forward: context length " + std::to_string(len) +
                                   " exceeds max_seq_len " + std::to_string(config_.max_seq_len),
                               0);
  }
  if (context.dim() != config_.d_model) {
    throw ShapeError("transformer forward: input dim " + std::to_string(context.dim()) +
                     " != d_model " + std::to_string(config_.d_model));
  }

  const std::size_t d = static_cast<std::size_t>(config_.d_model);
  const std::size_t ff = static_cast<std::size_t>(config_.d_ff);
  const int n_heads = config_.n_heads;
  const std::size_t head_dim = static_cast<std::size_t>(config_.head_dim());
  const float att_scale = 1.0f / std::sqrt(static_cast<float>(head_dim));
  const float eps = config_.layernorm_epsilon;

  // Residual stream: input embeddings plus learned position embeddings.
  std::vector<float> x(len * d);
  for (std::size_t t = 0; t < len; ++t) {
    const auto in = context.at(t);
    const float* pos = weights_.position_embedding.data() + t * d;
    for (std::size_t i = 0; i < d; ++i) x[t * d + i] = in[i] + pos[i];
  }

  std::vector<float> normed(len * d), q(len * d), k(len * d), v(len * d), att_out(len * d);
  std::vector<float> scores(len), ffn_in(ff);

  for (const auto& layer : weights_.layers) {
    for (std::size_t t = 0; t < len; ++t) {
      layer_norm_row({x.data() + t * d, d}, layer.ln1_gamma, layer.ln1_beta, eps,
                     {normed.data() + t * d, d});
    }
    for (std::size_t t = 0; t < len; ++t) {
      const std::span<const float> h{normed.data() + t * d, d};
      linear_row(h, layer.wq, layer.bq, {q.data() + t * d, d});
      linear_row(h, layer.wk, layer.bk, {k.data() + t * d, d});
      linear_row(h, layer.wv, layer.bv, {v.data() + t * d, d});
    }
    for (std::size_t t = 0; t < len; ++t) {
      float* out = att_out.data() + t * d;
      for (int h = 0; h < n_heads; ++h) {
        const std::size_t off = static_cast<std::size_t>(h) * head_dim;
        for (std::size_t j = 0; j <= t; ++j) {
          float s = 0.0f;
          const float* qt = q.data() + t * d + off;
          const float* kj = k.data() + j * d + off;
          for (std::size_t i = 0; i < head_dim; ++i) s += qt[i] * kj[i];
          scores[j] = s * att_scale;
        }
        softmax_inplace(scores, t + 1);
        for (std::size_t i = 0; i < head_dim; ++i) {
          float acc = 0.0f;
          for (std::size_t j = 0; j <= t; ++j) acc += scores[j] * v[j * d + off + i];
          out[off + i] = acc;
        }
      }
    }
    for (std::size_t t = 0; t < len; ++t) {
      linear_row({att_out.data() + t * d, d}, layer.wo, layer.bo, {normed.data() + t * d, d});
      for (std::size_t i = 0; i < d; ++i) x[t * d + i] += normed[t * d + i];
    }
    for (std::size_t t = 0; t < len; ++t) {
      layer_norm_row({x.data() + t * d, d}, layer.ln2_gamma, layer.ln2_beta, eps,
                     {normed.data() + t * d, d});
      linear_row({normed.data() + t * d, d}, layer.w_ff1, layer.b_ff1, ffn_in);
      for (auto& u : ffn_in) u = gelu(u);
      linear_row(ffn_in, layer.w_ff2, layer.b_ff2, {normed.data() + t * d, d});
      for (std::size_t i = 0; i < d; ++i) x[t * d + i] += normed[t * d + i];
    }
  }

  std::vector<float> final_h(d);
  layer_norm_row({x.data() + (len - 1) * d, d}, weights_.final_ln_gamma, weights_.final_ln_beta, eps,
                 final_h);
  LogitVector logits(static_cast<std::size_t>(vocab_.size()));
  linear_row(final_h, weights_.output_projection, weights_.output_bias, logits);
  return logits;
}

AttentionHeatmap TransformerModel::attention_heatmap(const EmbeddingSeq& context, int layer,
                                                     int last_n, bool normalize) const {
  const std::size_t len = context.size();
  if (len == 0) throw ShapeError("attention heatmap: empty context");
  if (layer < 0 || layer >= config_.n_layers) {
    throw ConfigError("attention heatmap: layer " + std::to_string(layer) + " out of range [0, " +
                      std::to_string(config_.n_layers) + ")");
  }
  if (last_n < 1 || static_cast<std::size_t>(last_n) > len) {
    throw ConfigError("attention heatmap: last_n " + std::to_string(last_n) +
                      " out of range [1, " + std::to_string(len) + "]");
  }

  const std::size_t d = static_cast<std::size_t>(config_.d_model);
  const std::size_t ff = static_cast<std::size_t>(config_.d_ff);
  const int n_heads = config_.n_heads;
  const std::size_t head_dim = static_cast<std::size_t>(config_.head_dim());
  const float att_scale = 1.0f / std::sqrt(static_cast<float>(head_dim));
  const float eps = config_.layernorm_epsilon;

  // Replays the forward pass up to the requested layer; same code shape as
  // forward_logits so the probed q/k are exactly what generation sees.
  std::vector<float> x(len * d);
  for (std::size_t t = 0; t < len; ++t) {
    const auto in = context.at(t);
    const float* pos = weights_.position_embedding.data() + t * d;
    for (std::size_t i = 0; i < d; ++i) x[t * d + i] = in[i] + pos[i];
  }

  std::vector<float> normed(len * d), q(len * d), k(len * d), v(len * d), att_out(len * d);
  std::vector<float> scores(len), ffn_in(ff);

  for (int li = 0; li <= layer; ++li) {
    const auto& lw = weights_.layers[static_cast<std::size_t>(li)];
    for (std::size_t t = 0; t < len; ++t) {
      layer_norm_row({x.data() + t * d, d}, lw.ln1_gamma, lw.ln1_beta, eps, {normed.data() + t * d, d});
    }
    for (std::size_t t = 0; t < len; ++t) {
      const std::span<const float> h{normed.data() + t * d, d};
      linear_row(h, lw.wq, lw.bq, {q.data() + t * d, d});
      linear_row(h, lw.wk, lw.bk, {k.data() + t * d, d});
      linear_row(h, lw.wv, lw.bv, {v.data() + t * d, d});
    }
    if (li == layer) {
      AttentionHeatmap heat;
      heat.n_heads = n_heads;
      heat.last_n = last_n;
      heat.values.resize(static_cast<std::size_t>(n_heads) * last_n);
      const std::size_t t = len - 1;
      for (int h = 0; h < n_heads; ++h) {
        const std::size_t off = static_cast<std::size_t>(h) * head_dim;
        const float* qt = q.data() + t * d + off;
        for (std::size_t j = 0; j <= t; ++j) {
          float s = 0.0f;
          const float* kj = k.data() + j * d + off;
          for (std::size_t i = 0; i < head_dim; ++i) s += qt[i] * kj[i];
          scores[j] = s * att_scale;
        }
        if (normalize) softmax_inplace(scores, t + 1);
        for (int col = 0; col < last_n; ++col) {
          heat.values[static_cast<std::size_t>(h) * last_n + col] =
              scores[len - static_cast<std::size_t>(last_n) + col];
        }
      }
      return heat;
    }
    for (std::size_t t = 0; t < len; ++t) {
      float* out = att_out.data() + t * d;
      for (int h = 0; h < n_heads; ++h) {
        const std::size_t off = static_cast<std::size_t>(h) * head_dim;
        for (std::size_t j = 0; j <= t; ++j) {
          float s = 0.0f;
          const float* qt = q.data() + t * d + off;
          const float* kj = k.data() + j * d + off;
          for (std::size_t i = 0; i < head_dim; ++i) s += qt[i] * kj[i];
          scores[j] = s * att_scale;
        }
        softmax_inplace(scores, t + 1);
        for (std::size_t i = 0; i < head_dim; ++i) {
          float acc = 0.0f;
          for (std::size_t j = 0; j <= t; ++j) acc += scores[j] * v[j * d + off + i];
          out[off + i] = acc;
        }
      }
    }
    for (std::size_t t = 0; t < len; ++t) {
      linear_row({att_out.data() + t * d, d}, lw.wo, lw.bo, {normed.data() + t * d, d});
      for (std::size_t i = 0; i < d; ++i) x[t * d + i] += normed[t * d + i];
    }
    for (std::size_t t = 0; t < len; ++t) {
      layer_norm_row({x.data() + t * d, d}, lw.ln2_gamma, lw.ln2_beta, eps, {normed.data() + t * d, d});
      linear_row({normed.data() + t * d, d}, lw.w_ff1, lw.b_ff1, ffn_in);
      for (auto& u : ffn_in) u = gelu(u);
      linear_row(ffn_in, lw.w_ff2, lw.b_ff2, {normed.data() + t * d, d});
      for (std::size_t i = 0; i < d; ++i) x[t * d + i] += normed[t * d + i];
    }
  }
  throw Error("attention heatmap: unreachable");
}

}  // namespace cipher::lm
